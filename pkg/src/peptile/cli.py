"""Command-line pipeline: digest -> pack -> emit -> verify.

Exit codes: 0 success, 1 verification failure, 2 input/IO error,
3 packing infeasible.  ``PEPTILE_OUT_DIR`` overrides the default output
directory of every subcommand.
"""
import hashlib
import json
import os
import statistics
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import __version__, kernels
from .emit import emit_dot, emit_plan_vhdl, emit_report, emit_table
from .errors import PeptileError, PoolTooLarge, SinglePeptideExceedsCap
from .ingest import DigestConfig, build_pool, digest, parse_fasta, read_sequences
from .sim import verify
from .synth import random_sequence
from .tilepack import (CAP_SCOPES, STRATEGIES, EXHAUSTIVE_LIMIT, PackConfig, compare_plans,
                       dump_plan, load_plan, run_strategy)

OUT_ENV = "PEPTILE_OUT_DIR"
FORMATS = ("vhdl", "dot", "table")


class CliError(click.ClickException):
    def __init__(self, message, exit_code=2):
        super().__init__(message)
        self.exit_code = exit_code


def _out_dir(given):
    if given is not None:
        return Path(given)
    return Path(os.environ.get(OUT_ENV, "."))


def _read(path):
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise CliError(f"cannot read {path}: {exc}") from None


def _write(path, text):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}") from None


def _sha256(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@click.group()
@click.version_option(__version__, prog_name="peptile")
def main():
    """Compile peptide sets into tile-packed bit-split Aho-Corasick machines."""


@main.command("digest")
@click.argument("fasta", type=click.Path(dir_okay=False))
@click.option("-o", "--output", type=click.Path(dir_okay=False), help="Peptide list to write.")
@click.option("--missed-cleavages", default=0, show_default=True, type=click.IntRange(0))
@click.option("--min-len", default=2, show_default=True, type=click.IntRange(2))
@click.option("--max-len", default=None, type=click.IntRange(2))
def cmd_digest(fasta, output, missed_cleavages, min_len, max_len):
    """Tryptic in-silico digestion of every protein in FASTA."""
    try:
        cfg = DigestConfig(missed_cleavages, min_len, max_len)
        records = parse_fasta(_read(fasta))
        peptides = []
        for rec in records:
            peptides.extend(digest(rec, cfg))
        pool = build_pool(peptides)
    except (PeptileError, ValueError) as exc:
        raise CliError(f"{type(exc).__name__}: {exc}") from None
    out = Path(output) if output else _out_dir(None) / "peptides.txt"
    _write(out, "".join(f"{s}\n" for s in pool.sequences))
    lengths = [len(s) for s in pool.sequences]
    if lengths:
        click.echo(f"{len(records)} proteins -> {len(lengths)} unique peptides "
                   f"(length min {min(lengths)}, mean {statistics.mean(lengths):.1f}, max {max(lengths)})")
    else:
        click.echo(f"{len(records)} proteins -> 0 peptides")
    click.echo(f"wrote {out}")


def _load_pool(path):
    try:
        return build_pool(read_sequences(_read(path)))
    except (PeptileError, ValueError) as exc:
        raise CliError(f"{type(exc).__name__}: {exc}") from None


def _parse_int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {text!r}") from None


@main.command("pack")
@click.argument("peptides", type=click.Path(dir_okay=False))
@click.option("--strategy", type=click.Choice([*STRATEGIES, "all"]), default="greedy", show_default=True)
@click.option("--cap", "state_cap", default=256, show_default=True, type=click.IntRange(1))
@click.option("--cap-scope", type=click.Choice(CAP_SCOPES), default="per-machine", show_default=True)
@click.option("--max-peptides", type=click.IntRange(1), default=None, help="Peptides per tile limit.")
@click.option("--cost-mode", type=click.Choice(["exact", "trie"]), default="exact", show_default=True)
@click.option("--seed-rule", type=click.Choice(["lexicographic-first", "rng"]), default="lexicographic-first",
              show_default=True)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--budgets", default="", help="Comma-separated state budgets for the admission table.")
@click.option("-o", "--out-dir", type=click.Path(file_okay=False), default=None)
def cmd_pack(peptides, strategy, state_cap, cap_scope, max_peptides, cost_mode, seed_rule, seed, budgets, out_dir):
    """Assign peptides to tiles and write plan_<strategy>.json."""
    pool = _load_pool(peptides)
    cfg = PackConfig(state_cap, cap_scope, max_peptides, cost_mode, seed_rule, seed)
    names = list(STRATEGIES) if strategy == "all" else [strategy]
    if strategy == "all" and len(pool) > EXHAUSTIVE_LIMIT:
        names.remove("exhaustive")
    out = _out_dir(out_dir)
    plans = []
    for name in names:
        try:
            plan = run_strategy(name, pool, cfg)
        except SinglePeptideExceedsCap as exc:
            raise CliError(str(exc), exit_code=3) from None
        except PoolTooLarge as exc:
            raise CliError(str(exc), exit_code=2) from None
        plans.append(plan)
        path = out / f"plan_{name}.json"
        _write(path, dump_plan(plan))
        m = plan.metrics
        click.echo(f"{name}: {m['tile_count']} tiles, {m['total_states']} states, "
                   f"{m['min_peptides_in_tile']}-{m['max_peptides_in_tile']} peptides/tile -> {path}")
    budget_list = _parse_int_list(budgets) if budgets else []
    if len(plans) > 1 or budget_list:
        text, table = emit_report(compare_plans(plans, budget_list))
        _write(out / "report.txt", text)
        _write(out / "report.csv", table)
        click.echo(text, nl=False)


@main.command("emit")
@click.argument("plan_path", type=click.Path(dir_okay=False))
@click.option("--formats", default="vhdl,dot,table", show_default=True)
@click.option("-o", "--out-dir", type=click.Path(file_okay=False), default=None)
def cmd_emit(plan_path, formats, out_dir):
    """Write VHDL, DOT graphs and CSV tables for every tile plus manifest.json."""
    wanted = [f.strip() for f in formats.split(",") if f.strip()]
    bad = sorted(set(wanted) - set(FORMATS))
    if bad:
        raise click.BadParameter(f"unknown formats {bad}; choose from {list(FORMATS)}")
    out = _out_dir(out_dir)
    timings = {}
    t0 = time.perf_counter()
    plan_text = _read(plan_path)
    try:
        plan = load_plan(plan_text)
    except PeptileError as exc:
        raise CliError(f"{type(exc).__name__}: {exc}") from None
    timings["load_and_build_fsms"] = time.perf_counter() - t0

    files = {}
    if "vhdl" in wanted:
        t = time.perf_counter()
        for unit in emit_plan_vhdl(plan):
            files[unit.file_name] = unit.source
        timings["vhdl"] = time.perf_counter() - t
    for fmt, fn, ext in (("dot", emit_dot, "dot"), ("table", emit_table, "csv")):
        if fmt not in wanted:
            continue
        t = time.perf_counter()
        for tile in plan.tiles:
            k = tile.index
            for f in tile.machines.fsms:
                scope = f"tile{k}_bit{f.bit_index}"
                body = fn(f, scope) if fmt == "dot" else fn(f)
                files[f"fsm_{scope}.{ext}"] = body
            scope = f"tile{k}_full"
            body = fn(tile.machines.automaton, scope) if fmt == "dot" else fn(tile.machines.automaton)
            files[f"fsm_{scope}.{ext}"] = body
        timings[fmt] = time.perf_counter() - t

    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create {out}: {exc}") from None
    for name, body in files.items():
        _write(out / name, body)
    timings["total"] = time.perf_counter() - t0

    manifest = {
        "tool": "peptile",
        "version": __version__,
        "backend": kernels.BACKEND,
        "inputs": [{"path": str(plan_path), "sha256": _sha256(plan_text)}],
        "config": {"formats": wanted, "plan": json.loads(plan_text)["config"]},
        "output_dir": str(out),
        "timings_ms": {k: round(v * 1000, 3) for k, v in timings.items()},
        "files": [{"path": name, "sha256": _sha256(body), "bytes": len(body.encode("utf-8"))}
                  for name, body in sorted(files.items())],
    }
    _write(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    click.echo(f"wrote {len(files)} files and manifest.json to {out} in {timings['total'] * 1000:.0f} ms")


def _parse_random(arg):
    parts = _parse_int_list(arg)
    if len(parts) != 3 or parts[0] < 0 or parts[1] < 0:
        raise click.BadParameter("--random expects n,len,seed")
    n, length, seed = parts
    rng = np.random.default_rng(seed)
    return [random_sequence(rng, length) for _ in range(n)]


@main.command("verify")
@click.argument("plan_path", type=click.Path(dir_okay=False))
@click.option("--text", "text_path", type=click.Path(dir_okay=False), default=None,
              help="FASTA file or raw residue text to scan.")
@click.option("--random", "random_arg", default=None, help="n,len,seed random texts.")
def cmd_verify(plan_path, text_path, random_arg):
    """Simulate the plan's tiles and compare against the reference matcher."""
    try:
        plan = load_plan(_read(plan_path))
    except PeptileError as exc:
        raise CliError(f"{type(exc).__name__}: {exc}") from None
    texts = []
    if text_path:
        raw = _read(text_path)
        try:
            if raw.lstrip().startswith(">"):
                texts.extend(r.sequence for r in parse_fasta(raw))
            else:
                texts.append("".join(raw.split()).upper())
        except PeptileError as exc:
            raise CliError(f"{type(exc).__name__}: {exc}") from None
    if random_arg:
        texts.extend(_parse_random(random_arg))
    try:
        report = verify(plan, texts)
    except PeptileError as exc:
        raise CliError(f"{type(exc).__name__}: {exc}") from None
    click.echo(report.summary(), nl=False)
    if not report.passed:
        bad = next(c for c in report.checks if not c.passed)
        click.echo(f"first mismatch: text {bad.index} position {bad.first_divergence}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
