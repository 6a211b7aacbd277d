"""Constructive minimum-width universal approximation networks.

Width-1 builders for one-dimensional targets, neural-ODE flow compilation
for d >= 2, a Floor-based encoder-memorizer-decoder for uniform
approximation, and certified error lower bounds for networks below the
critical width max(d_in, d_out).
"""

from .bounds import (
    Certificate,
    affine_range_certificate,
    homeomorphism_obstruction_demo,
    null_direction_certificate,
)
from .emd import (
    CodewordTable,
    QuantSpec,
    build_decoder,
    build_emd,
    build_encoder,
    build_memorizer,
    encode_reference,
    table_from_target,
)
from .errors import (
    BudgetError,
    DomainError,
    FitError,
    GeometryError,
    MinWidthError,
    MonotonicityError,
    ParseError,
    PreconditionError,
    StructuralError,
)
from .flowmap import (
    ElementaryMap,
    ODEControls,
    compile_elementary,
    compile_flow,
    fit_controls,
    integrate,
    max_monotone_dt,
    split_steps,
)
from .measure import ErrorReport, error_lp, error_uniform
from .mono1d import (
    PL1D,
    build_sawtooth,
    compile_monotone,
    fit_monotone_pl,
    pl_eval,
    pl_from_points,
    pl_invert,
    pl_line,
)
from .network import (
    ActivationKind,
    Affine,
    Layer,
    Network,
    compose,
    deserialize,
    eval_batch,
    eval_network,
    serialize,
)
from .pipelines import FlowConfig, pipeline_c, pipeline_lp, table1_width_check
from .targets import TargetSpec, corpus, corpus_by_name
from .uoe1d import (
    ExtremaProfile,
    OrderingSignature,
    build_c_uap_1d,
    build_c_uap_curve,
    build_lp_uap_1d,
    extract_extrema,
    find_uoe_window,
    match_composition,
    ordering_signature,
    perm_sequence,
    uoe_eval,
)

__version__ = "0.1.0"
