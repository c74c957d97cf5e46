"""Large-system limits of asynchronous CDMA with linear MMSE detection.

Subpackage map:

- :mod:`cdmalimits.numerics` — shared solver kernels (Cholesky solve,
  damped fixed point, bisection, frequency grids).
- :mod:`cdmalimits.waveforms` — chip waveform spectra, aliased sampling,
  delay vectors, and the circulant structure of the sampled correlations.
- :mod:`cdmalimits.large_system` — asymptotic multiuser efficiency:
  matrix-valued fixed point, scalar frequency-domain solver, and the
  closed-form ideal-bandlimited/synchronous special cases.
- :mod:`cdmalimits.capacity` — spectral efficiency of the linear MMSE
  front end and the synchronous closed form it is compared against.
- :mod:`cdmalimits.montecarlo` — exact finite-size validation.
- :mod:`cdmalimits.cli` — command line front end.
"""

from .capacity import (
    CapacityResult,
    ZeroBandwidthError,
    capacity_constrained,
    capacity_penalty_term,
    capacity_sync_closed_form,
    decibels_to_linear,
    linear_to_decibels,
    make_capacity_result,
    snr_for_ebn0,
    spectral_efficiency,
)
from .large_system import (
    EfficiencySpectrum,
    HypothesisViolationError,
    PowerDelayLaw,
    SystemLaw,
    UpsilonField,
    ZeroPowerError,
    effective_interference_density,
    efficiency_of_user,
    equal_power_uniform_delays,
    product_law,
    received_power_density,
    sinr_user,
    solve_efficiency_scalar,
    solve_efficiency_sinc,
    solve_efficiency_sync,
    solve_upsilon,
    synchronous_law,
    uniform_delay_grid,
)
from .montecarlo import (
    FiniteSystem,
    PairedSummaries,
    PulseTooLongError,
    SinrSample,
    TrialSummary,
    build_phi_matrix,
    finite_system,
    materialize,
    mmse_sinr,
    run_trials,
    spectral_distribution_distance,
    theorem3_harness,
    trial_seed,
)
from .numerics import (
    BracketError,
    DivergenceError,
    FixedPointReport,
    FrequencyGrid,
    NotPositiveDefiniteError,
    bisect,
    fixed_point,
    hermitian_solve,
    integrate_uniform,
)
from .waveforms import (
    ChipWaveform,
    DelayVector,
    QSplit,
    TabulatedRangeError,
    UndersampledError,
    delta_vector,
    load_tabulated_waveform,
    phase_twisted_circulant,
    q_eigendecomposition,
    q_split,
    root_raised_cosine_waveform,
    sampled_spectrum,
    sinc_waveform,
    tabulated_waveform,
)

__all__ = [
    "BracketError",
    "CapacityResult",
    "ChipWaveform",
    "DelayVector",
    "DivergenceError",
    "EfficiencySpectrum",
    "FiniteSystem",
    "FixedPointReport",
    "FrequencyGrid",
    "HypothesisViolationError",
    "NotPositiveDefiniteError",
    "PairedSummaries",
    "PowerDelayLaw",
    "PulseTooLongError",
    "QSplit",
    "SinrSample",
    "SystemLaw",
    "TabulatedRangeError",
    "TrialSummary",
    "UndersampledError",
    "UpsilonField",
    "ZeroBandwidthError",
    "ZeroPowerError",
    "bisect",
    "build_phi_matrix",
    "capacity_constrained",
    "capacity_penalty_term",
    "capacity_sync_closed_form",
    "decibels_to_linear",
    "delta_vector",
    "effective_interference_density",
    "efficiency_of_user",
    "equal_power_uniform_delays",
    "finite_system",
    "fixed_point",
    "hermitian_solve",
    "integrate_uniform",
    "linear_to_decibels",
    "load_tabulated_waveform",
    "make_capacity_result",
    "materialize",
    "mmse_sinr",
    "phase_twisted_circulant",
    "product_law",
    "q_eigendecomposition",
    "q_split",
    "received_power_density",
    "root_raised_cosine_waveform",
    "run_trials",
    "sampled_spectrum",
    "sinc_waveform",
    "sinr_user",
    "snr_for_ebn0",
    "solve_efficiency_scalar",
    "solve_efficiency_sinc",
    "solve_efficiency_sync",
    "solve_upsilon",
    "spectral_distribution_distance",
    "spectral_efficiency",
    "synchronous_law",
    "tabulated_waveform",
    "theorem3_harness",
    "trial_seed",
    "uniform_delay_grid",
    "__version__",
]

__version__ = "0.1.0"
