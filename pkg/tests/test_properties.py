import itertools

from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from peptile.ac_core import build_automaton, match_stream, naive_match, step_with_failure
from peptile.bitsplit import BitTrieCounter, build_tile_machines, match_bitsplit, state_cost
from peptile.emit import emit_plan_vhdl, emit_table, parse_table
from peptile.errors import SinglePeptideExceedsCap
from peptile.ingest import ALPHABET, DigestConfig, bit_split_strings, build_pool, decode, digest, encode, \
    tryptic_fragments
from peptile.sim import simulate_plan, tile_from_vhdl, verify
from peptile.tilepack import (PackConfig, dump_plan, load_plan, order_alphabetical, pack_fit_scan,
                              pack_sequential, plan_violations, run_strategy)

settings.register_profile("peptile", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("peptile")

residues = st.sampled_from(ALPHABET)
small_alphabets = st.sampled_from([ALPHABET, "ACDE", "HIS", "KR", "AY"])


@st.composite
def sequences(draw, min_size=0, max_size=40, alphabet=None):
    alpha = alphabet or draw(small_alphabets)
    return draw(st.text(alphabet=alpha, min_size=min_size, max_size=max_size))


@st.composite
def pools(draw, max_n=25, min_n=1):
    alpha = draw(small_alphabets)
    seqs = draw(st.lists(st.text(alphabet=alpha, min_size=2, max_size=8), min_size=min_n, max_size=max_n))
    pool = build_pool(seqs)
    assume(len(pool) >= min_n)
    return pool, alpha


def event_set(events):
    return {(e.end_position, pid) for e in events for pid in e.peptide_ids}


@given(sequences())
def test_encode_decode_round_trip(seq):
    assert decode(encode(seq)) == seq


@given(sequences(min_size=1))
def test_bit_streams_reassemble(seq):
    bs = bit_split_strings(seq)
    assert len({len(s) for s in bs.streams}) == 1
    assert bs.reassemble() == encode(seq).tolist()


@given(sequences(alphabet="ACDEKRP", max_size=60))
def test_trypsin_fragments_partition_protein(seq):
    frags = tryptic_fragments(seq)
    assert "".join(frags) == seq
    for f, nxt in zip(frags, frags[1:]):
        assert f[-1] in "KR" and nxt[0] != "P"
    for f in frags:
        for i, ch in enumerate(f[:-1]):
            assert ch not in "KR" or f[i + 1] == "P"
    assert [p.sequence for p in digest(seq)] == [f for f in frags if len(f) >= 2]


@given(sequences(alphabet="ACKRP", min_size=1, max_size=30), st.integers(0, 3))
def test_missed_cleavage_peptides_are_substrings(seq, m):
    for p in digest(seq, DigestConfig(missed_cleavages=m)):
        assert p.sequence in seq


@given(st.lists(st.text(alphabet="ACDE", min_size=2, max_size=5), max_size=30))
def test_dedup_is_idempotent(seqs):
    pool = build_pool(seqs)
    assert build_pool(pool.sequences).sequences == pool.sequences
    assert len(set(pool.sequences)) == len(pool)
    assert set(pool.sequences) == set(seqs)


@given(pools(), st.data())
@settings(max_examples=80)
def test_matchers_agree_with_naive_oracle(pool_alpha, data):
    pool, alpha = pool_alpha
    text = data.draw(st.text(alphabet=alpha, max_size=200))
    want = naive_match(pool, text)
    a = build_automaton(pool)
    assert match_stream(a, text) == want
    assert match_bitsplit(build_tile_machines(pool), text) == want


@given(pools())
@settings(max_examples=40)
def test_dfa_equals_failure_fallback(pool_alpha):
    a = build_automaton(pool_alpha[0])
    for s in range(a.n_states):
        for c in range(len(ALPHABET)):
            assert step_with_failure(a, s, c) == a.dfa_next[s, c]


@given(pools(max_n=30))
@settings(max_examples=80)
def test_exact_cost_equals_trie_cost(pool_alpha):
    pool = pool_alpha[0]
    assert state_cost(pool, "exact") == state_cost(pool, "trie")


@given(pools(max_n=12, min_n=2), st.data())
@settings(max_examples=60)
def test_cost_subadditive_and_monotone(pool_alpha, data):
    peps = list(pool_alpha[0])
    k = data.draw(st.integers(1, len(peps) - 1))
    a, b = state_cost(peps[:k]), state_cost(peps[k:])
    ab = state_cost(peps)
    for x, y, z in zip(a.per_machine, b.per_machine, ab.per_machine):
        assert z <= x + y - 1
        assert max(x, y) <= z


@given(pools(max_n=15))
@settings(max_examples=60)
def test_marginal_cost_matches_rebuild(pool_alpha):
    peps = list(pool_alpha[0])
    counter = BitTrieCounter()
    for i, p in enumerate(peps):
        before = state_cost(peps[:i]).per_machine if i else (1,) * 5
        after = state_cost(peps[:i + 1], "exact").per_machine
        assert counter.delta(p) == tuple(y - x for x, y in zip(before, after))
        counter.add(p)


@given(pools(max_n=10), st.randoms(use_true_random=False))
@settings(max_examples=40)
def test_tile_order_does_not_matter(pool_alpha, rnd):
    peps = list(pool_alpha[0])
    shuffled = peps[:]
    rnd.shuffle(shuffled)
    a, b = build_tile_machines(peps), build_tile_machines(shuffled)
    assert a.state_counts == b.state_counts
    text = "".join(p.sequence for p in peps)
    assert event_set(match_bitsplit(a, text)) == event_set(match_bitsplit(b, text))


@given(pools(max_n=25), st.integers(0, 40), st.sampled_from(["per-machine", "aggregate"]), st.data())
@settings(max_examples=60)
def test_strategies_produce_valid_plans(pool_alpha, slack, scope, data):
    pool, alpha = pool_alpha
    singles = [state_cost([p]) for p in pool]
    lo = max(max(c.per_machine) if scope == "per-machine" else c.total for c in singles)
    cfg = PackConfig(state_cap=lo + slack, cap_scope=scope)
    seq = pack_sequential(order_alphabetical(pool), cfg)
    fit = pack_fit_scan(order_alphabetical(pool), cfg)
    assert fit.tile_count <= seq.tile_count
    for name in ("sequential", "fit-scan", "greedy") + (("exhaustive",) if len(pool) <= 5 else ()):
        plan = run_strategy(name, pool, cfg)
        assert plan_violations(plan) == []
        assert dump_plan(load_plan(dump_plan(plan))) == dump_plan(plan)
    text = data.draw(st.text(alphabet=alpha, max_size=150))
    assert event_set(match_stream(build_automaton(pool), text)) == \
        {(e.end_position, e.peptide_id) for e in simulate_plan(fit, text)}


@given(pools(max_n=15), st.data())
@settings(max_examples=30)
def test_vhdl_read_back_is_equivalent(pool_alpha, data):
    pool, alpha = pool_alpha
    plan = run_strategy("greedy", pool, PackConfig(state_cap=12))
    units = emit_plan_vhdl(plan)
    hw = [tile_from_vhdl(units, t.index) for t in plan.tiles]
    texts = [data.draw(st.text(alphabet=alpha, max_size=120)) for _ in range(3)]
    assert verify(plan, texts, tiles=hw).passed


@given(pools(max_n=15))
@settings(max_examples=30)
def test_tables_round_trip(pool_alpha):
    tm = build_tile_machines(pool_alpha[0])
    for f in tm.fsms:
        t = parse_table(emit_table(f))
        assert [list(r) for r in t.next] == f.next.tolist()
        assert list(t.pmv) == [f.pmv_int(s) for s in range(f.n_states)]
    assert [list(r) for r in parse_table(emit_table(tm.automaton)).next] == tm.automaton.dfa_next.tolist()


def test_exhaustive_is_a_lower_bound_small_enumeration():
    # every 3-subset of a fixed 6-peptide family at a few caps
    family = ["AA", "AC", "YY", "YW", "HE", "HIS"]
    for trio in itertools.combinations(family, 3):
        pool = build_pool(trio)
        for cap in (3, 4, 5, 6):
            cfg = PackConfig(state_cap=cap)
            try:
                best = run_strategy("exhaustive", pool, cfg).tile_count
            except SinglePeptideExceedsCap:
                continue
            for name in ("sequential", "fit-scan", "greedy"):
                assert best <= run_strategy(name, pool, cfg).tile_count
