"""Menu gaps, aligned gaps and revenue separations for a single additive buyer."""

from .auctions import (
    DiscreteDistribution,
    Mechanism,
    MenuEntry,
    arev,
    brev,
    buyer_choice,
    c_expensive,
    parity_split,
    revenue,
    verify_ic_ir,
)
from .constructions import (
    alpha_enclosure,
    build_construction,
    build_q_sequence,
    build_x_sequence,
    divergence_partial,
    fast_gap_terms,
    lagrel_closed_form,
    lagrel_tail_bound,
)
from .gapcore import align_gap_terms, align_to_menu, menu_gap_terms, sup_gap
from .gapopt import (
    align_gap_bruteforce,
    align_gap_search,
    lagrel_chain,
    menu_gap_lp,
    optimal_mechanism_lp,
)
from .numeric import Interval
from .sequences import AllocationSequence, GapReport, PointSequence, ScalarSequence, SequenceError
from .transforms import (
    Certificate,
    ExtractionConfig,
    HNParams,
    aligned_sequence,
    hn_construct,
    prop_hn_check,
    representative_sequence,
    theorem_ext_pipeline,
    theorem_main_pipeline,
)

__version__ = "0.1.0"
