"""Optimal discrete beamforming for intelligent reflecting surfaces.

Provably optimal weight selection from arbitrary finite alphabets,
radiation-pattern metrics, grating-lobe prediction for rectangular and
triangular lattices, and prephase-based lobe mitigation.
"""

from .analysis import (
    GratingLobePrediction,
    PatternCut,
    PatternGrid,
    UnresolvedWidthError,
    beamforming_error,
    beamwidth_3db,
    cut_beamwidth,
    cut_sidelobe_level,
    find_mainlobe,
    mainlobe_gain,
    pattern_uv_map,
    predict_grating_lobe_rect,
    predict_grating_lobe_tri,
    sample_arc,
    sample_cut,
    sample_pattern,
    sidelobe_level,
    uv_sidelobe_level,
)
from .geometry import (
    Direction,
    GlobalSet,
    Lattice,
    LatticeKind,
    PerElementBinary,
    SteeringVector,
    WeightMatrix,
    array_factor,
    array_factor_uv,
    steering_phase,
    steering_phases,
    steering_vector,
    unit_vector,
)
from .prephase import (
    PrephaseConfig,
    build_random_binary_prephase,
    prephase_alphabets,
    prephase_solve,
)
from .solvers import (
    CapExceededError,
    CoPhaseTuple,
    MultibeamResult,
    RadialPartition,
    RotatedRadialPartition,
    SeparatingLine,
    SolveResult,
    brute_force_solve,
    default_cophase_seeds,
    gopa_solve,
    kopa_solve,
    multibeam_solve,
    opa_solve,
    threshold_solve,
)

__version__ = "0.1.0"
