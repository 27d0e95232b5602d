import numpy as np
import pytest

from peptile.ac_core import (MatchEvent, add_failure_links, build_automaton, build_trie, match_stream,
                             naive_match, step_with_failure, to_dfa)
from peptile.errors import EmptyPool
from peptile.ingest import ALPHABET, build_pool, encode


def events(a, text):
    return [(e.end_position, e.peptide_ids) for e in match_stream(a, text)]


def test_chain_trie():
    assert build_trie(build_pool(["AA"])).n_states == 3


def test_shared_prefix_outputs():
    a = build_trie(build_pool(["ACE", "AC"]))
    assert a.n_states == 4
    assert a.output_ids(a.state_of("AC")) == {1}
    assert a.output_ids(a.state_of("ACE")) == {0}


def test_distinct_prefix_count():
    a = build_trie(build_pool(["HE", "SHE", "HIS"]))
    assert a.n_states == 8
    labels = sorted(a.label(s) for s in range(a.n_states))
    assert labels == ["", "H", "HE", "HI", "HIS", "S", "SH", "SHE"]


def test_failure_links_and_merged_outputs():
    a = add_failure_links(build_trie(build_pool(["HE", "SHE"])))
    she, he = a.state_of("SHE"), a.state_of("HE")
    assert a.fail[she] == he
    assert a.output_ids(she) >= {0, 1}
    aa = add_failure_links(build_trie(build_pool(["AA"])))
    assert aa.fail[aa.state_of("AA")] == aa.state_of("A")


def test_single_letter_states_fail_to_root():
    a = add_failure_links(build_trie(build_pool(["HE", "SHE", "HIS"])))
    for s in range(a.n_states):
        if a.depth[s] == 1:
            assert a.fail[s] == 0


def test_dfa_transitions():
    a = to_dfa(add_failure_links(build_trie(build_pool(["AA"]))))
    assert a.dfa_next[0, ALPHABET.index("C")] == 0
    b = to_dfa(add_failure_links(build_trie(build_pool(["HE", "SHE"]))))
    assert b.dfa_next[b.state_of("SH"), ALPHABET.index("E")] == b.state_of("SHE")
    np.testing.assert_array_equal(b.dfa_next[b.state_of("SHE")], b.dfa_next[b.state_of("HE")])


def test_stepwise_build_equals_one_call():
    pool = build_pool(["HE", "SHE", "HIS", "HERS", "AA"])
    a = to_dfa(add_failure_links(build_trie(pool)))
    b = build_automaton(pool)
    for name in ("goto", "fail", "dfa_next", "output", "depth"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))


def test_dfa_agrees_with_failure_fallback():
    a = build_automaton(build_pool(["HE", "SHE", "HIS", "HERS"]))
    for s in range(a.n_states):
        for c in range(20):
            assert step_with_failure(a, s, c) == a.dfa_next[s, c]


def test_match_she_his():
    a = build_automaton(build_pool(["HE", "SHE", "HIS"]))
    assert events(a, "SHEHIS") == [(2, frozenset({0, 1})), (5, frozenset({2}))]


def test_no_match_on_prefix():
    assert events(build_automaton(build_pool(["ACE"])), "AC") == []


def test_overlapping_matches():
    assert [e for e, _ in events(build_automaton(build_pool(["AA"])), "AAA")] == [1, 2]


def test_match_accepts_codes_and_empty_text():
    a = build_automaton(build_pool(["AA"]))
    assert match_stream(a, encode("AAA")) == match_stream(a, "AAA")
    assert match_stream(a, "") == []


def test_naive_oracle_agrees():
    pool = build_pool(["HE", "SHE", "HIS", "HERS"])
    text = "USHERSHISHE".replace("U", "A")
    assert match_stream(build_automaton(pool), text) == naive_match(pool, text)
    assert all(isinstance(e, MatchEvent) for e in naive_match(pool, text))


def test_empty_pool():
    with pytest.raises(EmptyPool):
        build_trie(build_pool([]))
