"""VHDL, Graphviz DOT, CSV transition tables and comparison reports.

All emitters are pure functions of their inputs and produce LF-terminated
UTF-8 text, so repeated runs are byte-identical.
"""
import csv
import io
from dataclasses import dataclass

from .ac_core import AcAutomaton
from .bitsplit import BitSplitFsm
from .ingest import ALPHABET, CODE_BITS


@dataclass(frozen=True)
class VhdlUnit:
    file_name: str
    source: str

    @property
    def entity(self):
        return self.file_name.rsplit(".", 1)[0]


def state_width(n_states):
    """Register width: 8 bits up to 256 states, wider only when needed."""
    return max(8, (n_states - 1).bit_length())


def _pmv_literal(fsm, s, width):
    value = fsm.pmv_int(s)
    return '"' + format(value, f"0{width}b") + '"'


def bit_entity(tile_index, bit_index):
    return f"tile{tile_index}_bit{bit_index}"


def tile_entity(tile_index):
    return f"tile{tile_index}_top"


def _header(lines):
    return "".join(f"-- {ln}\n" if ln else "--\n" for ln in lines)


def emit_bit_vhdl(fsm, tile_index, n_peptides):
    name = bit_entity(tile_index, fsm.bit_index)
    B = fsm.n_states
    w = state_width(B)
    out = io.StringIO()
    out.write(_header([
        f"{name}: bit-split matcher for residue bit {fsm.bit_index} (0 = MSB)",
        f"{B} states, {n_peptides}-bit partial match vector",
        "generated by peptile; do not edit",
    ]))
    out.write(
        "library ieee;\n"
        "use ieee.std_logic_1164.all;\n"
        "use ieee.numeric_std.all;\n\n"
        f"entity {name} is\n"
        "  port (\n"
        "    clk    : in  std_logic;\n"
        "    rst    : in  std_logic;\n"
        "    bit_in : in  std_logic;\n"
        f"    pmv    : out std_logic_vector({n_peptides - 1} downto 0)\n"
        "  );\n"
        f"end entity {name};\n\n"
        f"architecture rtl of {name} is\n"
        f"  type pmv_table_t is array (0 to {B - 1}) of std_logic_vector({n_peptides - 1} downto 0);\n"
        "  constant PMV_TABLE : pmv_table_t := (\n"
    )
    for s in range(B):
        sep = "," if s < B - 1 else ""
        out.write(f"    {s} => {_pmv_literal(fsm, s, n_peptides)}{sep}\n")
    out.write(
        "  );\n"
        f"  signal state : unsigned({w - 1} downto 0) := (others => '0');\n"
        "begin\n"
        "  step : process (clk)\n"
        "  begin\n"
        "    if rising_edge(clk) then\n"
        "      if rst = '1' then\n"
        "        state <= (others => '0');\n"
        "      else\n"
        "        case to_integer(state) is\n"
    )
    for s in range(B):
        n0, n1 = int(fsm.next[s, 0]), int(fsm.next[s, 1])
        out.write(
            f"          when {s} => if bit_in = '0' then state <= to_unsigned({n0}, {w}); "
            f"else state <= to_unsigned({n1}, {w}); end if;\n"
        )
    out.write(
        "          when others => state <= (others => '0');\n"
        "        end case;\n"
        "      end if;\n"
        "    end if;\n"
        "  end process step;\n\n"
        "  pmv <= PMV_TABLE(to_integer(state));\n"
        "end architecture rtl;\n"
    )
    return VhdlUnit(f"{name}.vhd", out.getvalue())


def emit_tile_top(tile_index, peptides):
    name = tile_entity(tile_index)
    n = len(peptides)
    out = io.StringIO()
    lines = [f"{name}: five bit-split machines, match = AND of their PMVs", "match bit -> peptide id: sequence"]
    lines += [f"  {i} -> {p.id}: {p.sequence}" for i, p in enumerate(peptides)]
    lines.append("generated by peptile; do not edit")
    out.write(_header(lines))
    out.write(
        "library ieee;\n"
        "use ieee.std_logic_1164.all;\n\n"
        f"entity {name} is\n"
        "  port (\n"
        "    clk     : in  std_logic;\n"
        "    rst     : in  std_logic;\n"
        f"    residue : in  std_logic_vector({CODE_BITS - 1} downto 0);\n"
        f"    match   : out std_logic_vector({n - 1} downto 0)\n"
        "  );\n"
        f"end entity {name};\n\n"
        f"architecture rtl of {name} is\n"
    )
    for j in range(CODE_BITS):
        out.write(f"  signal pmv{j} : std_logic_vector({n - 1} downto 0);\n")
    out.write("begin\n")
    for j in range(CODE_BITS):
        out.write(
            f"  u_bit{j} : entity work.{bit_entity(tile_index, j)}\n"
            f"    port map (clk => clk, rst => rst, bit_in => residue({CODE_BITS - 1 - j}), pmv => pmv{j});\n"
        )
    out.write("\n  match <= " + " and ".join(f"pmv{j}" for j in range(CODE_BITS)) + ";\n")
    out.write("end architecture rtl;\n")
    return VhdlUnit(f"{name}.vhd", out.getvalue())


def emit_vhdl(tile, tile_index=None):
    """Five bit machines plus the tile wrapper for one packed tile."""
    k = tile.index if tile_index is None else tile_index
    machines = tile.machines
    n = len(machines.peptides)
    units = [emit_bit_vhdl(f, k, n) for f in machines.fsms]
    units.append(emit_tile_top(k, machines.peptides))
    return units


def emit_matcher_top(tiles):
    widths = [len(t.machines.peptides) for t in tiles]
    total = sum(widths)
    out = io.StringIO()
    lines = ["matcher_top: all tiles side by side on one residue stream", "match slice -> tile"]
    lo = 0
    for t, w in zip(tiles, widths):
        lines.append(f"  {lo + w - 1} downto {lo} -> tile {t.index}")
        lo += w
    lines.append("generated by peptile; do not edit")
    out.write(_header(lines))
    out.write(
        "library ieee;\n"
        "use ieee.std_logic_1164.all;\n\n"
        "entity matcher_top is\n"
        "  port (\n"
        "    clk     : in  std_logic;\n"
        "    rst     : in  std_logic;\n"
        f"    residue : in  std_logic_vector({CODE_BITS - 1} downto 0);\n"
        f"    match   : out std_logic_vector({total - 1} downto 0)\n"
        "  );\n"
        "end entity matcher_top;\n\n"
        "architecture rtl of matcher_top is\n"
        "begin\n"
    )
    lo = 0
    for t, w in zip(tiles, widths):
        out.write(
            f"  u_tile{t.index} : entity work.{tile_entity(t.index)}\n"
            f"    port map (clk => clk, rst => rst, residue => residue, match => match({lo + w - 1} downto {lo}));\n"
        )
        lo += w
    out.write("end architecture rtl;\n")
    return VhdlUnit("matcher_top.vhd", out.getvalue())


def emit_plan_vhdl(plan):
    units = []
    for t in plan.tiles:
        units.extend(emit_vhdl(t))
    if len(plan.tiles) > 1:
        units.append(emit_matcher_top(plan.tiles))
    return units


# ---------------------------------------------------------------------------
# DOT
# ---------------------------------------------------------------------------


def _dot_quote(s):
    return '"' + s.replace('"', '\\"') + '"'


def emit_dot(fsm, name="fsm"):
    out = io.StringIO()
    out.write(f"digraph {_dot_quote(name)} {{\n")
    out.write("  rankdir=LR;\n")
    out.write("  node [shape=circle];\n")
    out.write('  __start [shape=point, label=""];\n')
    out.write("  __start -> 0;\n")
    if isinstance(fsm, BitSplitFsm):
        for s in range(fsm.n_states):
            pmv = fsm.pmv_int(s)
            if pmv:
                label = _dot_quote(f"{s}\\npmv=0x{pmv:x}")
                out.write(f"  {s} [shape=doublecircle, label={label}];\n")
            else:
                out.write(f"  {s};\n")
        for s in range(fsm.n_states):
            for b in (0, 1):
                out.write(f'  {s} -> {int(fsm.next[s, b])} [label="{b}"];\n')
    elif isinstance(fsm, AcAutomaton):
        for s in range(fsm.n_states):
            ids = sorted(fsm.output_ids(s))
            if ids:
                label = f"{s}\\n{{{','.join(str(i) for i in ids)}}}"
                out.write(f"  {s} [shape=doublecircle, label={_dot_quote(label)}];\n")
            else:
                out.write(f"  {s};\n")
        for s in range(fsm.n_states):
            for c in range(len(ALPHABET)):
                t = int(fsm.goto[s, c])
                if t >= 0:
                    out.write(f'  {s} -> {t} [label="{ALPHABET[c]}"];\n')
    else:
        raise TypeError(f"cannot draw {type(fsm).__name__}")
    out.write("}\n")
    return out.getvalue()


# ---------------------------------------------------------------------------
# CSV tables
# ---------------------------------------------------------------------------


def _csv_text(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    return buf.getvalue()


def emit_table(fsm):
    if isinstance(fsm, BitSplitFsm):
        rows = [["state", "0", "1", "pmv"]]
        for s in range(fsm.n_states):
            rows.append([s, int(fsm.next[s, 0]), int(fsm.next[s, 1]), f"0x{fsm.pmv_int(s):x}"])
    elif isinstance(fsm, AcAutomaton):
        if fsm.dfa_next is None:
            raise ValueError("automaton has no DFA table")
        rows = [["state", *ALPHABET]]
        for s in range(fsm.n_states):
            rows.append([s, *(int(x) for x in fsm.dfa_next[s])])
    else:
        raise TypeError(f"cannot tabulate {type(fsm).__name__}")
    return _csv_text(rows)


@dataclass(frozen=True)
class TransitionTable:
    symbols: tuple
    next: tuple           # next[state][symbol index]
    pmv: tuple = ()       # hex bitmasks as ints (bit-split tables only)


def parse_table(text):
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][0] != "state":
        raise ValueError("not a transition table")
    header = rows[0][1:]
    has_pmv = header[-1] == "pmv"
    symbols = tuple(header[:-1] if has_pmv else header)
    nxt = []
    pmv = []
    for i, row in enumerate(rows[1:]):
        if int(row[0]) != i:
            raise ValueError(f"row {i} is labelled {row[0]}")
        cells = row[1:1 + len(symbols)]
        nxt.append(tuple(int(c) for c in cells))
        if has_pmv:
            pmv.append(int(row[-1], 16))
    n = len(nxt)
    for r in nxt:
        for c in r:
            if not 0 <= c < n:
                raise ValueError(f"next state {c} out of range")
    return TransitionTable(symbols, tuple(nxt), tuple(pmv))


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def _text_table(header, rows):
    cells = [list(map(str, header))] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = []
    for k, r in enumerate(cells):
        lines.append("  ".join(c.rjust(w) if k and c[:1].isdigit() else c.ljust(w)
                               for c, w in zip(r, widths)).rstrip())
        if k == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def emit_report(cmp):
    """Human-readable text and long-format CSV for a ComparisonReport."""
    parts = ["Packing results\n", _text_table(
        ["strategy", "tiles", "total states", "min peptides/tile", "max peptides/tile"],
        [[r["strategy"], r["tile_count"], r["total_states"], r["min_peptides_in_tile"],
          r["max_peptides_in_tile"]] for r in cmp.rows])]
    if cmp.increments:
        parts += ["\nNo. of tiles\n", _text_table(
            ["from", "to", "tiles (from)", "tiles (to)", "tile increment"],
            [[i["from"], i["to"], i["tiles_from"], i["tiles_to"], i["tile_increment"]]
             for i in cmp.increments])]
    if cmp.admissions:
        parts += ["\nPeptides admitted into one tile\n", _text_table(
            ["total # of states", "alphabetical", "ordered", "pep increment"],
            [[a["budget"], a["alphabetical"], a["ordered"], a["peptide_increment"]]
             for a in cmp.admissions])]
    text = "".join(parts)

    rows = [["section", "label", "metric", "value"]]
    for r in cmp.rows:
        for key in ("tile_count", "total_states", "min_peptides_in_tile", "max_peptides_in_tile"):
            rows.append(["plan", r["strategy"], key, r[key]])
    for i in cmp.increments:
        label = f"{i['from']}->{i['to']}"
        rows.append(["tile_increment", label, "tiles_from", i["tiles_from"]])
        rows.append(["tile_increment", label, "tiles_to", i["tiles_to"]])
        rows.append(["tile_increment", label, "increment", i["tile_increment"]])
    for a in cmp.admissions:
        rows.append(["admission", a["budget"], "alphabetical", a["alphabetical"]])
        rows.append(["admission", a["budget"], "ordered", a["ordered"]])
        rows.append(["admission", a["budget"], "increment", a["peptide_increment"]])
    return text, _csv_text(rows)
