"""Sequential-measurement magnetometry on spin-chain probes.

Exact spin-chain dynamics, sequential projective-measurement trajectory
statistics, classical Fisher information, grid-based Bayesian field
estimation, time-resource scaling fits, and robustness studies under
local dephasing and coupling disorder.
"""

__version__ = "0.1.0"

from .chain import (
    CapacityError,
    DegenerateOutcomeError,
    MagnetizationSeries,
    NumericsError,
    Operator,
    Propagator,
    PureState,
    SpinChainParams,
    build_hamiltonian,
    collapse,
    evolve,
    magnetization_series,
    make_propagator,
    measure_probability,
    projector,
    site_operator,
)
from .protocol import (
    MeasurementSchedule,
    Trajectory,
    TrajectoryDataset,
    TrajectoryDistribution,
    enumerate_distribution,
    sample_dataset,
    sample_mixed_datasets,
    sample_trajectory,
    step_probabilities,
)
from .estimation import (
    DegeneratePosteriorError,
    ErrorMetrics,
    FisherResult,
    GridSpec,
    PosteriorGrid,
    averaged_error,
    classical_fisher,
    error_metrics,
    fisher_sweep,
    fisher_sweep_csv,
    log_likelihood,
    posterior,
    posterior_2d,
    single_trajectory_posterior,
)
from .lindblad import (
    DensityMatrix,
    DephasingParams,
    build_liouvillian,
    dephasing_sweep_csv,
    enumerate_distribution_lindblad,
    evolve_lindblad,
    fisher_dephasing_sweep,
)
from .disorder import (
    DisorderParams,
    averaged_fisher_disorder,
    disorder_sweep_csv,
    misspecified_csv,
    misspecified_bayes_experiment,
    sample_dataset_disordered,
    sample_disorder,
)
from .analysis import (
    BudgetError,
    FitResult,
    ResourceModel,
    fit_power_law,
    invert_budget,
    repeats_for_budget,
    scaling_experiment,
)
from . import svgplot
