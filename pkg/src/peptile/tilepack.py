"""Peptide-to-tile packing under a state cap.

Strategies:

* ``sequential``  fill tiles in list order, open a new tile at the first
  peptide that does not fit;
* ``fit-scan``    when the next peptide does not fit, take the first later
  one that does, and close the tile only when nothing left fits;
* ``greedy``      seed a tile, then repeatedly add the remaining peptide
  with the smallest marginal state count;
* ``exhaustive``  best sequential packing over every permutation (tiny
  pools only; used as an oracle).

State counts only grow when a peptide is added to a set, so a peptide that
does not fit a tile will never fit a superset of it; the scans below rely on
that to skip rejected candidates.
"""
import itertools
import json
from dataclasses import asdict, dataclass, field
from decimal import ROUND_DOWN, Decimal
from typing import Optional

import numpy as np

from .bitsplit import COST_MODES, BitTrieCounter, CostReport, build_tile_machines, state_cost
from .errors import (MismatchedPools, PlanFormatError, PoolTooLarge,
                     SinglePeptideExceedsCap)
from .ingest import Peptide, PeptidePool, build_pool

CAP_SCOPES = ("per-machine", "aggregate")
SEED_RULES = ("lexicographic-first", "rng")
STRATEGIES = ("sequential", "fit-scan", "greedy", "exhaustive")
EXHAUSTIVE_LIMIT = 8
PLAN_FORMAT = "peptile-plan/1"


@dataclass(frozen=True)
class PackConfig:
    state_cap: int = 256
    cap_scope: str = "per-machine"
    max_peptides_per_tile: Optional[int] = None
    cost_mode: str = "exact"
    seed_rule: str = "lexicographic-first"
    seed: int = 0

    def __post_init__(self):
        if self.state_cap < 1:
            raise ValueError("state_cap must be positive")
        if self.cap_scope not in CAP_SCOPES:
            raise ValueError(f"cap_scope must be one of {CAP_SCOPES}")
        if self.cost_mode not in COST_MODES:
            raise ValueError(f"cost_mode must be one of {COST_MODES}")
        if self.seed_rule not in SEED_RULES:
            raise ValueError(f"seed_rule must be one of {SEED_RULES}")
        if self.max_peptides_per_tile is not None and self.max_peptides_per_tile < 1:
            raise ValueError("max_peptides_per_tile must be positive")

    def fits(self, per_machine):
        if self.cap_scope == "per-machine":
            return max(per_machine) <= self.state_cap
        return sum(per_machine) <= self.state_cap

    def full(self, n_peptides):
        return self.max_peptides_per_tile is not None and n_peptides >= self.max_peptides_per_tile


@dataclass(frozen=True, eq=False)
class Tile:
    index: int
    peptides: tuple
    machines: object
    cost: CostReport

    @property
    def peptide_ids(self):
        return tuple(p.id for p in self.peptides)


@dataclass(frozen=True, eq=False)
class PackingPlan:
    strategy: str
    config: PackConfig
    pool: PeptidePool
    tiles: tuple = ()

    @property
    def metrics(self):
        sizes = [len(t.peptides) for t in self.tiles]
        return {
            "tile_count": len(self.tiles),
            "total_states": sum(t.cost.total for t in self.tiles),
            "max_peptides_in_tile": max(sizes, default=0),
            "min_peptides_in_tile": min(sizes, default=0),
        }

    @property
    def tile_count(self):
        return len(self.tiles)


class CostModelDiverged(RuntimeError):
    """Incremental cost disagrees with the from-scratch subset construction."""


class _OpenTile:
    """A tile being filled: tracks the incremental per-machine state counts."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.peptides = []
        self.counter = BitTrieCounter()

    def trial(self, p):
        base = self.counter.per_machine
        return tuple(b + d for b, d in zip(base, self.counter.delta(p)))

    def add(self, p):
        self.counter.add(p)
        self.peptides.append(p)

    def close(self, index):
        machines = build_tile_machines(self.peptides)
        if self.cfg.cost_mode == "exact":
            per = machines.state_counts
            if per != self.counter.per_machine:
                raise CostModelDiverged(
                    f"tile {index}: incremental counts {self.counter.per_machine} != built {per}")
        else:
            per = self.counter.per_machine
        return Tile(index, tuple(self.peptides), machines, CostReport(per, sum(per)))


def _start_tile(p, cfg):
    tile = _OpenTile(cfg)
    counts = tile.trial(p)
    if not cfg.fits(counts):
        raise SinglePeptideExceedsCap(p.id, p.sequence, sum(counts))
    tile.add(p)
    return tile


def _as_pool(peptides):
    peps = tuple(peptides)
    if all(isinstance(p, Peptide) for p in peps):
        ids = sorted(p.id for p in peps)
        if ids == list(range(len(peps))):
            return PeptidePool(tuple(sorted(peps, key=lambda p: p.id)))
    return build_pool(peps)


def _peptide_list(items):
    return [p if isinstance(p, Peptide) else Peptide(i, p) for i, p in enumerate(items)]


def order_alphabetical(pool):
    return sorted(_peptide_list(pool), key=lambda p: p.sequence)


def pack_sequential(ordered, cfg=PackConfig(), pool=None, strategy="sequential"):
    ordered = _peptide_list(ordered)
    pool = pool if pool is not None else _as_pool(ordered)
    tiles = []
    cur = None
    for p in ordered:
        if cur is not None and not cfg.full(len(cur.peptides)):
            counts = cur.trial(p)
            if cfg.fits(counts):
                cur.add(p)
                continue
        if cur is not None:
            tiles.append(cur.close(len(tiles)))
        cur = _start_tile(p, cfg)
    if cur is not None:
        tiles.append(cur.close(len(tiles)))
    return PackingPlan(strategy, cfg, pool, tuple(tiles))


def pack_fit_scan(ordered, cfg=PackConfig(), pool=None):
    remaining = _peptide_list(ordered)
    pool = pool if pool is not None else _as_pool(remaining)
    tiles = []
    while remaining:
        cur = _start_tile(remaining[0], cfg)
        rest = []
        for i, p in enumerate(remaining[1:], 1):
            if cfg.full(len(cur.peptides)):
                rest.extend(remaining[i:])
                break
            if cfg.fits(cur.trial(p)):
                cur.add(p)
            else:
                rest.append(p)
        tiles.append(cur.close(len(tiles)))
        remaining = rest
    return PackingPlan("fit-scan", cfg, pool, tuple(tiles))


def _pick_seed(remaining, cfg, rng):
    if cfg.seed_rule == "rng":
        return int(rng.integers(len(remaining)))
    return 0


def greedy_order_tile(remaining, cfg=PackConfig(), rng=None, index=0):
    """Fill one tile by repeated minimum-marginal-cost selection.

    ``remaining`` is a list of peptides sorted by sequence; chosen peptides
    are removed from it in place.  Equal marginal costs go to the
    lexicographically smaller peptide.
    """
    if not remaining:
        raise ValueError("greedy_order_tile needs a non-empty pool")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    cur = _start_tile(remaining.pop(_pick_seed(remaining, cfg, rng)), cfg)
    candidates = list(remaining)
    while candidates and not cfg.full(len(cur.peptides)):
        base = sum(cur.counter.per_machine)
        best = None
        best_delta = None
        feasible = []
        for p in candidates:
            counts = cur.trial(p)
            if not cfg.fits(counts):
                continue
            feasible.append(p)
            delta = sum(counts) - base
            if best is None or delta < best_delta:
                best, best_delta = p, delta
        if best is None:
            break
        cur.add(best)
        feasible.remove(best)
        remaining.remove(best)
        candidates = feasible
    return cur.close(index)


def pack_greedy(pool, cfg=PackConfig()):
    peptides = _peptide_list(pool)
    full_pool = _as_pool(peptides)
    remaining = sorted(peptides, key=lambda p: p.sequence)
    rng = np.random.default_rng(cfg.seed)
    tiles = []
    while remaining:
        tiles.append(greedy_order_tile(remaining, cfg, rng, index=len(tiles)))
    return PackingPlan("greedy", cfg, full_pool, tuple(tiles))


def pack_exhaustive(pool, cfg=PackConfig()):
    """Minimum (tile_count, total_states) sequential packing over all orders.

    Costs are measured from scratch per candidate tile set (memoized), not
    through the incremental counter used by the other strategies.
    """
    peptides = _peptide_list(pool)
    if len(peptides) > EXHAUSTIVE_LIMIT:
        raise PoolTooLarge(f"exhaustive search is limited to {EXHAUSTIVE_LIMIT} peptides, got {len(peptides)}")
    full_pool = _as_pool(peptides)
    base = sorted(peptides, key=lambda p: p.sequence)
    if not base:
        return PackingPlan("exhaustive", cfg, full_pool, ())
    memo = {}

    def cost(members):
        c = memo.get(members)
        if c is None:
            c = state_cost([base[i] for i in sorted(members)], cfg.cost_mode)
            memo[members] = c
        return c

    for i, p in enumerate(base):
        c = cost(frozenset([i]))
        if not cfg.fits(c.per_machine):
            raise SinglePeptideExceedsCap(p.id, p.sequence, c.total)

    best_key = None
    best_perm = None
    for perm in itertools.permutations(range(len(base))):
        tiles = []
        cur = frozenset()
        for i in perm:
            if cur and not cfg.full(len(cur)):
                trial = cur | {i}
                if cfg.fits(cost(trial).per_machine):
                    cur = trial
                    continue
            if cur:
                tiles.append(cur)
            cur = frozenset([i])
        tiles.append(cur)
        key = (len(tiles), sum(cost(t).total for t in tiles))
        if best_key is None or key < best_key:
            best_key, best_perm = key, perm
    plan = pack_sequential([base[i] for i in best_perm], cfg, full_pool, strategy="exhaustive")
    return plan


def run_strategy(name, pool, cfg=PackConfig()):
    if name == "sequential":
        return pack_sequential(order_alphabetical(pool), cfg, _as_pool(_peptide_list(pool)))
    if name == "fit-scan":
        return pack_fit_scan(order_alphabetical(pool), cfg, _as_pool(_peptide_list(pool)))
    if name == "greedy":
        return pack_greedy(pool, cfg)
    if name == "exhaustive":
        return pack_exhaustive(pool, cfg)
    raise ValueError(f"unknown strategy {name!r}; expected one of {STRATEGIES}")


# ---------------------------------------------------------------------------
# validity
# ---------------------------------------------------------------------------


def plan_violations(plan, remeasure=True):
    """Human-readable list of broken plan invariants (empty when valid)."""
    problems = []
    seen = {}
    for t in plan.tiles:
        if not t.peptides:
            problems.append(f"tile {t.index} is empty")
        for pid in t.peptide_ids:
            if pid in seen:
                problems.append(f"peptide {pid} in tiles {seen[pid]} and {t.index}")
            seen[pid] = t.index
        if plan.config.max_peptides_per_tile is not None and len(t.peptides) > plan.config.max_peptides_per_tile:
            problems.append(f"tile {t.index} holds {len(t.peptides)} peptides")
        per = t.cost.per_machine
        if remeasure:
            per = state_cost(t.peptides, plan.config.cost_mode).per_machine
            if per != t.cost.per_machine:
                problems.append(f"tile {t.index} recorded {t.cost.per_machine}, re-measured {per}")
            if per != t.machines.state_counts and plan.config.cost_mode == "exact":
                problems.append(f"tile {t.index} machines have {t.machines.state_counts} states")
        if not plan.config.fits(per):
            problems.append(f"tile {t.index} breaks the {plan.config.cap_scope} cap: {per}")
    missing = set(range(len(plan.pool))) - set(seen)
    if missing:
        problems.append(f"peptides not placed: {sorted(missing)}")
    extra = set(seen) - set(range(len(plan.pool)))
    if extra:
        problems.append(f"unknown peptide ids: {sorted(extra)}")
    for t in plan.tiles:
        for p in t.peptides:
            if p.id < len(plan.pool) and plan.pool[p.id].sequence != p.sequence:
                problems.append(f"peptide {p.id} sequence differs from the pool")
    return problems


# ---------------------------------------------------------------------------
# comparison
# ---------------------------------------------------------------------------


def format_percent(numerator, denominator):
    """Percentage with one decimal, truncated toward zero (96/68 -> 29.1%)."""
    if denominator == 0:
        return "n/a"
    value = (Decimal(numerator) * 100 / Decimal(denominator)).quantize(Decimal("0.1"), rounding=ROUND_DOWN)
    if value == 0:
        value = Decimal("0.0")
    return f"{value}%"


def tile_increment(before, after):
    return format_percent(before - after, before)


def peptide_increment(alphabetical, ordered):
    return format_percent(ordered - alphabetical, alphabetical)


@dataclass
class ComparisonReport:
    rows: list
    increments: list
    admissions: list = field(default_factory=list)


def admitted_counts(pool, budget, cfg=PackConfig()):
    """Peptides admitted into one tile of ``budget`` total states.

    Returns (alphabetical, ordered): how far the alphabetical list gets
    before the first overflow, and how many the greedy order takes in.
    """
    one = PackConfig(state_cap=budget, cap_scope="aggregate", cost_mode=cfg.cost_mode,
                     seed_rule=cfg.seed_rule, seed=cfg.seed)
    alpha = order_alphabetical(pool)
    if not alpha:
        return 0, 0
    tile = _OpenTile(one)
    for p in alpha:
        if not one.fits(tile.trial(p)):
            break
        tile.add(p)
    n_alpha = len(tile.peptides)
    remaining = sorted(alpha, key=lambda p: p.sequence)
    try:
        n_ordered = len(greedy_order_tile(remaining, one).peptides)
    except SinglePeptideExceedsCap:
        n_ordered = 0
    return n_alpha, n_ordered


def compare_plans(plans, budgets=(), admissions=None):
    if plans:
        ref = sorted(plans[0].pool.sequences)
        for pl in plans[1:]:
            if sorted(pl.pool.sequences) != ref:
                raise MismatchedPools(f"plan {pl.strategy!r} covers a different peptide pool")
    rows = []
    for pl in plans:
        m = pl.metrics
        rows.append({"strategy": pl.strategy, **m})
    increments = []
    for a, b in itertools.combinations(plans, 2):
        increments.append({
            "from": a.strategy,
            "to": b.strategy,
            "tiles_from": a.tile_count,
            "tiles_to": b.tile_count,
            "tile_increment": tile_increment(a.tile_count, b.tile_count),
        })
    adm = list(admissions or [])
    if budgets and plans:
        for b in budgets:
            n_alpha, n_ord = admitted_counts(plans[0].pool, b, plans[0].config)
            adm.append({"budget": b, "alphabetical": n_alpha, "ordered": n_ord})
    for row in adm:
        row["peptide_increment"] = peptide_increment(row["alphabetical"], row["ordered"])
    return ComparisonReport(rows, increments, adm)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def dump_plan(plan):
    doc = {
        "format": PLAN_FORMAT,
        "strategy": plan.strategy,
        "config": asdict(plan.config),
        "peptides": plan.pool.sequences,
        "tiles": [
            {
                "index": t.index,
                "peptide_ids": list(t.peptide_ids),
                "state_counts": list(t.cost.per_machine),
                "total_states": t.cost.total,
            }
            for t in plan.tiles
        ],
        "metrics": plan.metrics,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def load_plan(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PlanFormatError(f"plan is not valid JSON: {exc}") from None
    try:
        if doc.get("format") != PLAN_FORMAT:
            raise PlanFormatError(f"unsupported plan format {doc.get('format')!r}")
        cfg = PackConfig(**doc["config"])
        pool = build_pool(doc["peptides"])
        if len(pool) != len(doc["peptides"]):
            raise PlanFormatError("plan peptide list has duplicates")
        tiles = []
        for k, t in enumerate(doc["tiles"]):
            peps = tuple(pool[i] for i in t["peptide_ids"])
            machines = build_tile_machines(peps)
            per = tuple(int(x) for x in t["state_counts"])
            expect = machines.state_counts if cfg.cost_mode == "exact" else state_cost(peps, "trie").per_machine
            if per != expect:
                raise PlanFormatError(f"tile {k}: stored state counts {per} do not match {expect}")
            tiles.append(Tile(int(t["index"]), peps, machines, CostReport(per, sum(per))))
        plan = PackingPlan(doc["strategy"], cfg, pool, tuple(tiles))
    except PlanFormatError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise PlanFormatError(f"malformed plan: {exc}") from None
    problems = plan_violations(plan, remeasure=False)
    if problems:
        raise PlanFormatError("; ".join(problems))
    return plan
