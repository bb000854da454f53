"""Probability that a product of i.i.d. random matrices has an all-real spectrum."""

__version__ = "0.1.0"

from .matrix_core import (  # noqa: E402
    ExactMatrix,
    ScaledMatrix,
    SquareMatrix,
    exact_product,
    multiply,
    product_rescaled,
    rank_le_one,
)
from .spectra import (  # noqa: E402
    CharPoly,
    Policy,
    SpectrumClass,
    all_roots_real_exact,
    char_poly,
    classify_spectrum,
    classify_spectrum_float,
    discriminant_2x2,
    sturm_real_root_count,
)
from .measures import (  # noqa: E402
    AtomicMixture,
    FiniteSupport,
    Gaussian,
    IidEntries,
    RankOneMixture,
    Rademacher,
    Uniform,
    atom_rank_one_lower_bound,
    enumerate_support,
    exact_rank_le_one_probability,
    sample_matrix,
)
from .montecarlo import EstimateResult, SweepResult, TrialConfig, run_trials, sweep, wilson_interval  # noqa: E402
from .bounds import (  # noqa: E402
    check_theorem1,
    discriminant_pair,
    exact_real_probability,
    lemma_exchangeable_check,
    theorem1_bound,
)
