import re
from pathlib import Path

import pytest

from peptile.emit import emit_dot, emit_table, emit_vhdl
from peptile.ingest import build_pool, read_sequences
from peptile.tilepack import PackConfig, pack_sequential

HERE = Path(__file__).parent
FIXTURES = HERE / "fixtures"
GOLDEN = HERE / "golden"


def fixture_pool(name):
    return build_pool(read_sequences((FIXTURES / name).read_text()))


def single_tile(pool):
    """Every peptide of ``pool`` in one tile, in pool order."""
    plan = pack_sequential(list(pool), PackConfig(state_cap=10**9))
    assert plan.tile_count == 1
    return plan.tiles[0]


def tile_artifacts(tile):
    """File name -> text for everything emitted from one tile."""
    files = {u.file_name: u.source for u in emit_vhdl(tile)}
    k = tile.index
    for f in tile.machines.fsms:
        scope = f"tile{k}_bit{f.bit_index}"
        files[f"fsm_{scope}.dot"] = emit_dot(f, scope)
        files[f"fsm_{scope}.csv"] = emit_table(f)
    scope = f"tile{k}_full"
    files[f"fsm_{scope}.dot"] = emit_dot(tile.machines.automaton, scope)
    files[f"fsm_{scope}.csv"] = emit_table(tile.machines.automaton)
    return files


GOLDEN_SETS = {"tile3": "tile3.txt", "tile20": "tile20.txt"}


def golden_artifacts(name):
    return tile_artifacts(single_tile(fixture_pool(GOLDEN_SETS[name])))


# ---------------------------------------------------------------------------
# minimal DOT reader: digraph ID { (node | edge | attr-default | a=b) ; ... }
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r'\s*(?:(->)|([{}\[\];,=])|("(?:[^"\\]|\\.)*")|([A-Za-z_][A-Za-z_0-9]*|-?\d+(?:\.\d+)?))')


class DotSyntaxError(ValueError):
    pass


def _tokens(text):
    pos = 0
    out = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise DotSyntaxError(f"bad token at {pos}: {text[pos:pos + 20]!r}")
        out.append(next(g for g in m.groups() if g is not None))
        pos = m.end()
    return out


def _is_id(tok):
    return tok not in ("->", "{", "}", "[", "]", ";", ",", "=")


def parse_dot(text):
    """Return (name, nodes {id: attrs}, edges [(src, dst, attrs)]) or raise."""
    toks = _tokens(text)
    i = 0

    def expect(t):
        nonlocal i
        if i >= len(toks) or toks[i] != t:
            raise DotSyntaxError(f"expected {t!r} at token {i}, got {toks[i] if i < len(toks) else 'EOF'!r}")
        i += 1

    def ident():
        nonlocal i
        if i >= len(toks) or not _is_id(toks[i]):
            raise DotSyntaxError(f"expected identifier at token {i}")
        i += 1
        tok = toks[i - 1]
        return tok[1:-1] if tok.startswith('"') else tok

    def attrs():
        nonlocal i
        out = {}
        if i < len(toks) and toks[i] == "[":
            i += 1
            while toks[i] != "]":
                k = ident()
                expect("=")
                out[k] = ident()
                if toks[i] == ",":
                    i += 1
            i += 1
        return out

    expect("digraph")
    name = ident()
    expect("{")
    nodes, edges = {}, []
    while toks[i] != "}":
        if toks[i] in ("node", "edge", "graph"):
            i += 1
            attrs()
        else:
            a = ident()
            if toks[i] == "=":
                i += 1
                ident()
            elif toks[i] == "->":
                i += 1
                b = ident()
                edges.append((a, b, attrs()))
            else:
                nodes[a] = attrs()
        expect(";")
    expect("}")
    if i != len(toks):
        raise DotSyntaxError("trailing tokens after graph")
    return name, nodes, edges


@pytest.fixture
def hers_pool():
    return build_pool(["HE", "SHE", "HIS"])
