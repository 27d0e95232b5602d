import json

import pytest
from click.testing import CliRunner

from conftest import FIXTURES
from peptile.cli import main


@pytest.fixture
def run(tmp_path):
    runner = CliRunner()

    def go(*args, env=None):
        return runner.invoke(main, [str(a) for a in args], env=env, catch_exceptions=False)

    return go


def test_digest_fixture(run, tmp_path):
    out = tmp_path / "peps.txt"
    r = run("digest", FIXTURES / "protein1.fasta", "-o", out)
    assert r.exit_code == 0, r.output
    first = out.read_text()
    assert run("digest", FIXTURES / "protein1.fasta", "-o", out).exit_code == 0
    assert out.read_text() == first
    # R,K singletons drop out under min-len 2; the KP site stays uncut
    assert first.split() == [
        "MYNQWR", "EAK", "FVWALTDTDITGGFSFYILLMMLYTTQNGYKPVDVNCAIADLYITR", "TNILFLHFYAR", "EYQVESHLANR",
        "DMR", "YVELWVSNASLR", "MSLNVQHNNCCQHNGEDHTHHR", "YHNININMQYK", "IR", "FAHVCHYYEAQAR", "LR",
        "CQMDVVLYNWYMFR", "MESWFMAEHWYNMMCHYHEF"]


def test_digest_min_len(run, tmp_path):
    fa = tmp_path / "p.fasta"
    fa.write_text(">p\nAAKPAAKAARGK\n")
    assert run("digest", fa, "-o", tmp_path / "a.txt").exit_code == 0
    assert (tmp_path / "a.txt").read_text().split() == ["AAKPAAK", "AAR", "GK"]
    assert run("digest", fa, "-o", tmp_path / "b.txt", "--min-len", "3").exit_code == 0
    assert (tmp_path / "b.txt").read_text().split() == ["AAKPAAK", "AAR"]


def test_digest_empty_fasta(run, tmp_path):
    fa = tmp_path / "empty.fasta"
    fa.write_text("")
    r = run("digest", fa)
    assert r.exit_code == 2 and "EmptyInput" in r.output


def test_pack_all_on_fixture(run, tmp_path):
    r = run("pack", FIXTURES / "pool250.txt", "--strategy", "all", "-o", tmp_path, "--budgets", "200,400")
    assert r.exit_code == 0, r.output
    for s in ("sequential", "fit-scan", "greedy"):
        assert (tmp_path / f"plan_{s}.json").exists()
        assert s in (tmp_path / "report.txt").read_text()
    assert not (tmp_path / "plan_exhaustive.json").exists()
    first = (tmp_path / "plan_greedy.json").read_bytes()
    run("pack", FIXTURES / "pool250.txt", "-o", tmp_path)
    assert (tmp_path / "plan_greedy.json").read_bytes() == first


def test_pack_exhaustive_too_many(run, tmp_path):
    peps = tmp_path / "nine.txt"
    peps.write_text("".join(f"A{c}\n" for c in "CDEFGHIKL"))
    r = run("pack", peps, "--strategy", "exhaustive", "-o", tmp_path)
    assert r.exit_code == 2 and "PoolTooLarge" not in r.output and "exhaustive" in r.output


def test_pack_single_peptide_over_cap(run, tmp_path):
    peps = tmp_path / "p.txt"
    peps.write_text("AC\nKLMNPQRSTVW\n")
    r = run("pack", peps, "--cap", "5", "-o", tmp_path)
    assert r.exit_code == 3 and "KLMNPQRSTVW" in r.output


def test_pack_bad_residue(run, tmp_path):
    peps = tmp_path / "p.txt"
    peps.write_text("ACB\n")
    assert run("pack", peps, "-o", tmp_path).exit_code == 2


def test_emit_inventory_and_manifest(run, tmp_path):
    run("pack", FIXTURES / "tile20.txt", "--cap", "1000", "-o", tmp_path)
    out = tmp_path / "hdl"
    r = run("emit", tmp_path / "plan_greedy.json", "-o", out)
    assert r.exit_code == 0, r.output
    names = sorted(p.name for p in out.iterdir())
    assert len([n for n in names if n.endswith(".vhd")]) == 6
    assert len([n for n in names if n.endswith(".dot")]) == 6
    assert len([n for n in names if n.endswith(".csv")]) == 6
    assert "matcher_top.vhd" not in names
    m1 = json.loads((out / "manifest.json").read_text())
    assert {f["path"] for f in m1["files"]} == set(names) - {"manifest.json"}
    run("emit", tmp_path / "plan_greedy.json", "-o", out)
    m2 = json.loads((out / "manifest.json").read_text())
    assert m1["files"] == m2["files"]


def test_emit_formats_subset_and_env_dir(run, tmp_path):
    run("pack", FIXTURES / "tile3.txt", "-o", tmp_path)
    env_dir = tmp_path / "env"
    r = run("emit", tmp_path / "plan_greedy.json", "--formats", "dot", env={"PEPTILE_OUT_DIR": str(env_dir)})
    assert r.exit_code == 0
    assert sorted(p.suffix for p in env_dir.iterdir()) == [".dot"] * 6 + [".json"]
    assert run("emit", tmp_path / "plan_greedy.json", "--formats", "svg").exit_code == 2


def test_verify_fixture_text(run, tmp_path):
    run("pack", FIXTURES / "tile20.txt", "--cap", "40", "-o", tmp_path)
    r = run("verify", tmp_path / "plan_greedy.json", "--text", FIXTURES / "genome_like.fasta")
    assert r.exit_code == 0, r.output
    assert "1/1 texts agree" in r.output


def test_verify_random_reproducible(run, tmp_path):
    run("pack", FIXTURES / "tile20.txt", "-o", tmp_path)
    a = run("verify", tmp_path / "plan_greedy.json", "--random", "10,10000,42")
    b = run("verify", tmp_path / "plan_greedy.json", "--random", "10,10000,42")
    assert a.exit_code == 0 and a.output == b.output
    assert "10/10" in a.output


def test_verify_corrupted_plan(run, tmp_path):
    bad = tmp_path / "plan.json"
    bad.write_text('{"format": "peptile-plan/1", "tiles": [')
    r = run("verify", bad, "--random", "1,10,0")
    assert r.exit_code == 2 and "PlanFormatError" in r.output
    assert run("verify", tmp_path / "missing.json").exit_code == 2
