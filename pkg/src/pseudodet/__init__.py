"""Pseudodeterministic extraction of classical bits from Haar-like quantum states."""

from .errors import ConfigError, DimensionMismatchError, InvalidDimensionError, RoleMismatchError, ToleranceWarning
from .extractor import (
    BitString,
    ExtractorParams,
    GoodSetReport,
    canonical_f,
    derive_params,
    extract,
    good_set_check,
    round_bits,
)
from .generators import GeneratorOutput, QprgConfig, qprf, qprf_branch, sqprg, wqprg
from .states import (
    DensityMatrix,
    PureState,
    SeedKey,
    SeedRole,
    basis_state,
    fidelity,
    sample_haar,
    seeded_prfs_state,
    seeded_state,
    trace_distance,
    uniform_superposition,
)
from .tomography import Backend, DiagonalSnapshot, TomographyConfig, required_shots, snapshot

__version__ = "0.1.0"
