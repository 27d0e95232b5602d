"""Cycle-level simulation of packed tiles.

A :class:`HardwareTile` is the register-transfer view of a tile: five
next-state tables, five PMV lookup tables and the residue-bit wiring.  It
can be taken from built machines or recovered from emitted VHDL, so the
simulator doubles as a check that the generated HDL means what the
machines mean.
"""
import csv
import io
import re
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from . import kernels
from .ac_core import MatchEvent, _text_codes, bitset_members, build_automaton, match_stream
from .ingest import CODE_BITS


class PlanEvent(NamedTuple):
    end_position: int
    peptide_id: int
    tile_index: int


@dataclass(eq=False)
class HardwareTile:
    index: int
    peptide_ids: tuple
    tables: np.ndarray        # (5, B_max, 2)
    pmv: np.ndarray           # (5, B_max, words)
    wiring: np.ndarray        # residue-code bit (0 = LSB) read by each machine
    n_states: tuple = ()

    @classmethod
    def from_machines(cls, machines, index=0):
        fsms = machines.fsms
        bmax = max(f.n_states for f in fsms)
        words = fsms[0].pmv.shape[1]
        tables = np.zeros((CODE_BITS, bmax, 2), np.int32)
        pmv = np.zeros((CODE_BITS, bmax, words), np.uint64)
        for j, f in enumerate(fsms):
            tables[j, :f.n_states] = f.next
            pmv[j, :f.n_states] = f.pmv
        wiring = np.array([CODE_BITS - 1 - f.bit_index for f in fsms], np.int64)
        return cls(index, machines.peptide_ids, tables, pmv, wiring, tuple(f.n_states for f in fsms))

    @classmethod
    def from_tile(cls, tile):
        return cls.from_machines(tile.machines, tile.index)


@dataclass
class SimTrace:
    states: np.ndarray        # (cycles, 5)
    pmv: np.ndarray           # (cycles, 5, words)
    matched: np.ndarray       # (cycles, words)

    def __len__(self):
        return self.states.shape[0]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["cycle", *(f"state{j}" for j in range(CODE_BITS)),
                    *(f"pmv{j}" for j in range(CODE_BITS)), "and"])
        for i in range(len(self)):
            w.writerow([i, *self.states[i].tolist(),
                        *(hex(_words_int(self.pmv[i, j])) for j in range(CODE_BITS)),
                        hex(_words_int(self.matched[i]))])
        return buf.getvalue()


def _words_int(words):
    v = 0
    for k, x in enumerate(words.tolist()):
        v |= int(x) << (64 * k)
    return v


def as_hardware(tile):
    if isinstance(tile, HardwareTile):
        return tile
    if hasattr(tile, "fsms"):
        return HardwareTile.from_machines(tile)
    return HardwareTile.from_tile(tile)


def simulate_tile(tile, text, trace=False):
    hw = as_hardware(tile)
    codes = _text_codes(text)
    words = hw.pmv.shape[2]
    if codes.size == 0:
        states = np.zeros((0, CODE_BITS), np.int32)
        pm = np.zeros((0, CODE_BITS, words), np.uint64)
        anded = np.zeros((0, words), np.uint64)
    else:
        states = kernels.lockstep(hw.tables, hw.wiring, codes)
        pm = np.stack([hw.pmv[j][states[:, j]] for j in range(CODE_BITS)], axis=1)
        anded = np.bitwise_and.reduce(pm, axis=1)
    events = [
        MatchEvent(pos, frozenset(hw.peptide_ids[i] for i in bitset_members(anded[pos])))
        for pos in np.flatnonzero(anded.any(axis=1)).tolist()
    ]
    if trace:
        return events, SimTrace(states, pm, anded)
    return events


def simulate_plan(plan, text, tiles=None):
    """Run every tile on the same text; events sorted by (end, peptide id)."""
    hw_tiles = tiles if tiles is not None else [HardwareTile.from_tile(t) for t in plan.tiles]
    codes = _text_codes(text)
    out = []
    for hw in hw_tiles:
        for ev in simulate_tile(hw, codes):
            out.extend(PlanEvent(ev.end_position, pid, hw.index) for pid in ev.peptide_ids)
    out.sort(key=lambda e: (e.end_position, e.peptide_id))
    return out


@dataclass
class TextCheck:
    index: int
    passed: bool
    events: int
    first_divergence: Optional[int] = None
    detail: str = ""


@dataclass
class VerificationReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    @property
    def n_checks(self):
        return len(self.checks)

    def summary(self):
        lines = []
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            line = f"text {c.index}: {status} ({c.events} matches)"
            if not c.passed:
                line += f" first divergence at position {c.first_divergence}: {c.detail}"
            lines.append(line)
        lines.append(f"{sum(c.passed for c in self.checks)}/{self.n_checks} texts agree with the reference matcher")
        return "\n".join(lines) + "\n"


def verify(plan, texts, tiles=None):
    """Compare the tiled simulation against one automaton over the whole pool."""
    report = VerificationReport()
    if not texts:
        return report
    reference = build_automaton(plan.pool.peptides) if len(plan.pool) else None
    hw_tiles = tiles if tiles is not None else [HardwareTile.from_tile(t) for t in plan.tiles]
    for k, text in enumerate(texts):
        codes = _text_codes(text)
        want = set()
        if reference is not None:
            for ev in match_stream(reference, codes):
                want.update((ev.end_position, pid) for pid in ev.peptide_ids)
        got = {(e.end_position, e.peptide_id) for e in simulate_plan(plan, codes, hw_tiles)}
        if got == want:
            report.checks.append(TextCheck(k, True, len(got)))
            continue
        diff = got ^ want
        pos = min(p for p, _ in diff)
        extra = sorted(pid for p, pid in got - want if p == pos)
        missing = sorted(pid for p, pid in want - got if p == pos)
        report.checks.append(TextCheck(k, False, len(got), pos,
                                       f"spurious ids {extra}, missing ids {missing}"))
    return report


# ---------------------------------------------------------------------------
# reading emitted VHDL back
# ---------------------------------------------------------------------------

_CASE_ARM = re.compile(
    r"when (\d+) => if bit_in = '0' then state <= to_unsigned\((\d+), \d+\); "
    r"else state <= to_unsigned\((\d+), \d+\); end if;")
_PMV_ENTRY = re.compile(r'^\s+(\d+) => "([01]+)",?$', re.M)
_INSTANCE = re.compile(r"u_bit(\d) : entity work\.(\w+)\s+port map \(.*?bit_in => residue\((\d)\)", re.S)
_PEPTIDE_MAP = re.compile(r"^--\s+(\d+) -> (\d+): ([A-Z]+)$", re.M)
_AND = re.compile(r"match <= (pmv\d(?: and pmv\d)*);")


class VhdlReadError(ValueError):
    pass


def _read_bit_machine(source):
    arms = {int(s): (int(a), int(b)) for s, a, b in _CASE_ARM.findall(source)}
    pmv = {int(s): bits for s, bits in _PMV_ENTRY.findall(source)}
    if not arms or set(arms) != set(range(len(arms))) or set(pmv) != set(arms):
        raise VhdlReadError("bit machine has missing or inconsistent states")
    n = len(arms)
    nxt = np.array([arms[s] for s in range(n)], np.int32)
    if nxt.max() >= n:
        raise VhdlReadError("transition to an undeclared state")
    width = len(pmv[0])
    words = kernels.n_words(width)
    table = np.zeros((n, words), np.uint64)
    for s in range(n):
        value = int(pmv[s], 2)
        for w in range(words):
            table[s, w] = (value >> (64 * w)) & ((1 << 64) - 1)
    return nxt, table


def tile_from_vhdl(units, tile_index):
    """Rebuild a HardwareTile from the emitted ``tile{k}_*`` units."""
    sources = {u.entity: u.source for u in units}
    top = sources.get(f"tile{tile_index}_top")
    if top is None:
        raise VhdlReadError(f"no tile{tile_index}_top unit")
    mapping = sorted((int(i), int(pid)) for i, pid, _ in _PEPTIDE_MAP.findall(top))
    if [i for i, _ in mapping] != list(range(len(mapping))):
        raise VhdlReadError("peptide map comment is incomplete")
    anded = _AND.search(top)
    if anded is None or sorted(anded.group(1).split(" and ")) != [f"pmv{j}" for j in range(CODE_BITS)]:
        raise VhdlReadError("tile output is not the AND of all five PMVs")
    instances = _INSTANCE.findall(top)
    if len(instances) != CODE_BITS:
        raise VhdlReadError("tile does not instantiate five bit machines")
    machines = {}
    for j, entity, wire in instances:
        if entity not in sources:
            raise VhdlReadError(f"missing unit {entity}")
        machines[int(j)] = (_read_bit_machine(sources[entity]), int(wire))
    bmax = max(m[0][0].shape[0] for m in machines.values())
    words = machines[0][0][1].shape[1]
    tables = np.zeros((CODE_BITS, bmax, 2), np.int32)
    pmv = np.zeros((CODE_BITS, bmax, words), np.uint64)
    wiring = np.zeros(CODE_BITS, np.int64)
    counts = []
    for j in range(CODE_BITS):
        (nxt, tab), wire = machines[j]
        tables[j, :nxt.shape[0]] = nxt
        pmv[j, :nxt.shape[0]] = tab
        wiring[j] = wire
        counts.append(nxt.shape[0])
    return HardwareTile(tile_index, tuple(pid for _, pid in mapping), tables, pmv, wiring, tuple(counts))
