"""Tile-packed bit-split Aho-Corasick matchers for peptide sets."""

__version__ = "0.1.0"

from .ac_core import AcAutomaton, MatchEvent, build_automaton, match_stream  # noqa: E402
from .bitsplit import build_tile_machines, match_bitsplit, state_cost  # noqa: E402
from .ingest import Peptide, PeptidePool, bit_split_strings, build_pool, digest  # noqa: E402
from .tilepack import PackConfig, PackingPlan, run_strategy  # noqa: E402

__all__ = [
    "AcAutomaton", "MatchEvent", "PackConfig", "PackingPlan", "Peptide", "PeptidePool",
    "bit_split_strings", "build_automaton", "build_pool", "build_tile_machines", "digest",
    "match_bitsplit", "match_stream", "run_strategy", "state_cost",
]
