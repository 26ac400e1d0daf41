"""Sequential shifted chi-square test (SSCT) for spectrum sensing.

A truncated sequential detector on sample energies, with exact recursions
for its noise-side operating characteristics, a backward grid recursion for
the signal side, energy-detection and sequential-probability-ratio
baselines, and a seeded Monte Carlo harness.
"""

from .boundaries import (
    BoundarySequences,
    SsctConfig,
    derive_bounds,
    index_s,
    lower_bound,
    psi_vector,
    truncate_psi,
    upper_bound,
)
from .baselines import (
    EnergyDetectorConfig,
    SprtConfig,
    ed_error_probs,
    ed_min_samples,
    ed_threshold,
    sprt_increment,
    sprt_run,
)
from .detector import (
    Decision,
    DetectorState,
    Verdict,
    detector_new,
    detector_step,
    run_to_decision,
    run_to_decision_transformed,
)
from .integrals import (
    Arith,
    ExactTables,
    PolyIntegral,
    UnstableEvaluationError,
    g_term,
    j_band,
    j_upper,
    poly_build,
    poly_eval,
    volume_table,
)
from .model import SignalModel
from .montecarlo import EstimateCI, SimResult, SimSpec, estimate, gen_energy, sprt_estimate
from .performance import (
    ExactNoiseSummary,
    GridRecursion,
    GridSpec,
    PerformanceReport,
    asn,
    efficiency,
    false_alarm_exact,
    h1_increment_pdf,
    miss_detection_grid,
    noise_side_exact,
    signal_side_grid,
)
from .special import gaussian_q, gaussian_q_inv, log_bessel_i0, noncentral_chisq2_cdf

__version__ = "0.1.0"
