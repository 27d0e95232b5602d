"""Bit-split decomposition of an Aho-Corasick DFA.

Machine ``j`` reads bit ``j`` (0 = MSB) of each 5-bit residue code.  Its
states are sets of AC states built by subset construction, numbered in BFS
discovery order with the 0-edge explored before the 1-edge.  Each state
carries a partial match vector (PMV): the union of the AC output sets of
its members.  A peptide matches at a position iff its bit is set in all
five current PMVs.
"""
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal, NamedTuple

import numpy as np

from . import kernels
from .ac_core import (MatchEvent, _as_peptides, _text_codes, bitset_members,
                      bitset_to_int, build_automaton)
from .errors import EmptyPool
from .ingest import CODE_BITS, bit_split_strings

CostMode = Literal["exact", "trie"]
COST_MODES = ("exact", "trie")


@dataclass(frozen=True, eq=False)
class BitSplitFsm:
    bit_index: int
    next: np.ndarray          # (B, 2) int32
    pmv: np.ndarray           # (B, words) uint64, bits over local pattern index
    members: np.ndarray       # flat AC-state members of every state
    member_offsets: np.ndarray

    @property
    def n_states(self):
        return self.next.shape[0]

    def state_set(self, s):
        return frozenset(self.members[self.member_offsets[s]:self.member_offsets[s + 1]].tolist())

    def pmv_int(self, s):
        return bitset_to_int(self.pmv[s])


@dataclass(frozen=True, eq=False)
class TileMachines:
    automaton: object
    fsms: tuple

    @property
    def peptides(self):
        return self.automaton.patterns

    @property
    def peptide_ids(self):
        return tuple(p.id for p in self.automaton.patterns)

    @property
    def state_counts(self):
        return tuple(f.n_states for f in self.fsms)


class CostReport(NamedTuple):
    per_machine: tuple
    total: int


def build_bitsplit(a, bit_index):
    if a.dfa_next is None:
        raise ValueError("automaton has no DFA table")
    if not 0 <= bit_index < CODE_BITS:
        raise ValueError(f"bit_index must be in 0..4, got {bit_index}")
    n, status, nxt, pmv, mem, moff = kernels.subset_construct(
        a.dfa_next, a.output, bit_index, -1, -1, True)
    return BitSplitFsm(bit_index, nxt, pmv, mem, moff)


def build_tile_machines(pool_subset):
    peptides = _as_peptides(pool_subset)
    if not peptides:
        raise EmptyPool("a tile needs at least one peptide")
    a = build_automaton(peptides)
    return TileMachines(a, tuple(build_bitsplit(a, j) for j in range(CODE_BITS)))


def text_bits(codes):
    """(5, n) array; row j is bit j (MSB first) of every residue code."""
    shifts = np.arange(CODE_BITS - 1, -1, -1, dtype=np.int64)[:, None]
    return (codes[None, :] >> shifts) & 1


def bitsplit_trace(tm, text):
    """Per-machine state traces, shape (5, n)."""
    codes = _text_codes(text)
    bits = text_bits(codes)
    return np.stack([kernels.run_table(f.next, bits[f.bit_index]) for f in tm.fsms]) \
        if codes.size else np.zeros((CODE_BITS, 0), np.int32)


def and_pmvs(tm, traces):
    acc = tm.fsms[0].pmv[traces[0]]
    for f, tr in zip(tm.fsms[1:], traces[1:]):
        acc = acc & f.pmv[tr]
    return acc


def match_bitsplit(tm, text):
    traces = bitsplit_trace(tm, text)
    if traces.shape[1] == 0:
        return []
    anded = and_pmvs(tm, traces)
    ids = tm.peptide_ids
    events = []
    for pos in np.flatnonzero(anded.any(axis=1)).tolist():
        events.append(MatchEvent(pos, frozenset(ids[i] for i in bitset_members(anded[pos]))))
    return events


@lru_cache(maxsize=65536)
def stream_prefixes(sequence):
    """Per machine, the set of non-empty prefixes of the peptide's bit stream."""
    return tuple(frozenset(st[:k] for k in range(1, len(st) + 1))
                 for st in bit_split_strings(sequence).streams)


class BitTrieCounter:
    """Node counts of the five binary tries over the peptides' bit streams.

    Supports incremental insertion, which is what the packers need.  These
    counts coincide with the subset-construction state counts: a reachable
    subset state is fixed by the longest suffix of the bit input that is a
    stream prefix, and its deepest members spell that prefix back.
    """

    def __init__(self, peptides=()):
        self.prefixes = [set() for _ in range(CODE_BITS)]
        for p in peptides:
            self.add(p)

    def copy(self):
        c = BitTrieCounter()
        c.prefixes = [set(s) for s in self.prefixes]
        return c

    def delta(self, peptide):
        seq = peptide.sequence if hasattr(peptide, "sequence") else peptide
        return tuple(len(new - have) for new, have in zip(stream_prefixes(seq), self.prefixes))

    def add(self, peptide):
        seq = peptide.sequence if hasattr(peptide, "sequence") else peptide
        for new, have in zip(stream_prefixes(seq), self.prefixes):
            have |= new

    @property
    def per_machine(self):
        return tuple(1 + len(s) for s in self.prefixes)


def state_cost(pool_subset, mode="exact"):
    peptides = _as_peptides(pool_subset)
    if not peptides:
        raise EmptyPool("cost of an empty tile is undefined")
    if mode == "trie":
        per = BitTrieCounter(peptides).per_machine
    elif mode == "exact":
        codes, offsets = kernels.flatten_codes([p.codes for p in peptides])
        counts, _ = kernels.tile_counts(codes, offsets, np.zeros(CODE_BITS, np.int64), -1, -1, -1)
        per = tuple(int(c) for c in counts)
    else:
        raise ValueError(f"unknown cost mode {mode!r}; expected one of {COST_MODES}")
    return CostReport(per, sum(per))
