"""Aho-Corasick automaton over the 20-letter amino-acid alphabet.

States are dense integers in BFS order (children visited by residue code),
so state ``s`` always has a smaller index than every state deeper than it.
Output sets are bitsets over the *local* pattern index (position in
``patterns``); ``ids`` maps local index to peptide id.
"""
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import kernels
from .errors import EmptyPool
from .ingest import ALPHABET, Peptide, encode


@dataclass(frozen=True)
class MatchEvent:
    end_position: int
    peptide_ids: frozenset


@dataclass(frozen=True, eq=False)
class AcAutomaton:
    patterns: tuple
    goto: np.ndarray
    output: np.ndarray
    depth: np.ndarray
    fail: Optional[np.ndarray] = None
    dfa_next: Optional[np.ndarray] = None

    @property
    def n_states(self):
        return self.goto.shape[0]

    @property
    def ids(self):
        return [p.id for p in self.patterns]

    def output_ids(self, state):
        """Peptide ids in the output set of ``state``."""
        return frozenset(self.patterns[i].id for i in bitset_members(self.output[state]))

    def label(self, state):
        """Prefix string spelled by the goto path from the root to ``state``."""
        parent = self._parents()
        letters = []
        while state != 0:
            p, c = parent[state]
            letters.append(ALPHABET[c])
            state = p
        return "".join(reversed(letters))

    def state_of(self, prefix):
        s = 0
        for c in encode(prefix):
            s = int(self.goto[s, c])
            if s < 0:
                raise KeyError(prefix)
        return s

    def _parents(self):
        cached = self.__dict__.get("_parent_cache")
        if cached is None:
            cached = {}
            rows, cols = np.nonzero(self.goto >= 0)
            for s, c in zip(rows.tolist(), cols.tolist()):
                cached[int(self.goto[s, c])] = (s, c)
            object.__setattr__(self, "_parent_cache", cached)
        return cached


def bitset_members(words):
    out = []
    for w, word in enumerate(int(x) for x in words):
        while word:
            low = word & -word
            out.append(w * 64 + low.bit_length() - 1)
            word ^= low
    return out


def bitset_to_int(words):
    value = 0
    for w, word in enumerate(int(x) for x in words):
        value |= word << (64 * w)
    return value


def _as_peptides(pool):
    peps = []
    for i, p in enumerate(pool):
        peps.append(p if isinstance(p, Peptide) else Peptide(i, p))
    return tuple(peps)


def _flat(peptides):
    return kernels.flatten_codes([p.codes for p in peptides])


def build_trie(pool):
    """Keyword trie with goto edges and unmerged outputs only."""
    peptides = _as_peptides(pool)
    if not peptides:
        raise EmptyPool("cannot build an automaton from an empty pool")
    codes, offsets = _flat(peptides)
    goto, term = kernels.trie_np(codes, offsets)
    raw = kernels.terminal_outputs(term, goto.shape[0])
    depth = np.zeros(goto.shape[0], np.int32)
    for s in range(goto.shape[0]):
        kids = goto[s][goto[s] >= 0]
        depth[kids] = depth[s] + 1
    return AcAutomaton(peptides, goto, raw, depth)


def add_failure_links(a):
    fail, _ = kernels.failure_links_np(a.goto)
    out = a.output.copy()
    for s in range(1, a.n_states):
        out[s] |= out[fail[s]]
    return replace(a, fail=fail, output=out)


def to_dfa(a):
    if a.fail is None:
        raise ValueError("failure links must be added before DFA conversion")
    return replace(a, dfa_next=kernels.dfa_np(a.goto, a.fail))


def build_automaton(pool):
    """Trie, failure links and DFA table in one kernel call."""
    peptides = _as_peptides(pool)
    if not peptides:
        raise EmptyPool("cannot build an automaton from an empty pool")
    codes, offsets = _flat(peptides)
    goto, fail, dfa, out, depth = kernels.ac_tables(codes, offsets)
    return AcAutomaton(peptides, goto, out, depth, fail, dfa)


def _text_codes(text):
    if isinstance(text, np.ndarray):
        return text.astype(np.int64, copy=False)
    return encode(text)


def events_from_trace(states, output, ids):
    """Turn a per-position state trace into MatchEvents."""
    hits = np.flatnonzero(output[states].any(axis=1))
    events = []
    for pos in hits.tolist():
        local = bitset_members(output[states[pos]])
        events.append(MatchEvent(pos, frozenset(ids[i] for i in local)))
    return events


def match_stream(a, text):
    if a.dfa_next is None:
        raise ValueError("automaton has no DFA table; call to_dfa first")
    codes = _text_codes(text)
    if codes.size == 0:
        return []
    states = kernels.run_table(a.dfa_next, codes)
    return events_from_trace(states, a.output, a.ids)


def step_with_failure(a, state, code):
    """One transition using goto edges and failure fallback only."""
    while state != 0 and a.goto[state, code] < 0:
        state = a.fail[state]
    t = a.goto[state, code]
    return int(t) if t >= 0 else 0


def naive_match(peptides, text):
    """Brute-force oracle: every occurrence of every peptide, by end position."""
    found = {}
    for i, p in enumerate(peptides):
        seq = p.sequence if isinstance(p, Peptide) else p
        pid = p.id if isinstance(p, Peptide) else i
        start = text.find(seq)
        while start >= 0:
            found.setdefault(start + len(seq) - 1, set()).add(pid)
            start = text.find(seq, start + 1)
    return [MatchEvent(pos, frozenset(found[pos])) for pos in sorted(found)]
