"""Model-assisted probability of detection (POD) curves for nondestructive
testing simulations: Berens and Binomial-Berens regression, polynomial chaos
and kriging metamodels, and Sobol' sensitivity indices of the POD."""

__version__ = "0.1.0"

from .berens import (
    LinearFit,
    berens_pod,
    berens_pod_band,
    binomial_band,
    binomial_pod,
    clopper_pearson,
    fit_linear,
    residual_diagnostics,
)
from .chaos import ChaosFit, build_orthonormal_basis, chaos_pod, chaos_pod_band, fit_chaos
from .data import (
    ConditionalUniform,
    Gaussian,
    InputSet,
    InputSpec,
    Schema,
    SimulationDataset,
    Uniform,
    derive_defect_size,
    load_dataset,
    write_dataset,
)
from .doe import sample_inputs, sobol_sequence
from .kriging import KrigingFit, KrigingOptions, fit_kriging, kriging_pod, kriging_pod_band
from .pod import (
    DetectabilitySummary,
    PodBand,
    PodCurve,
    a_at_level,
    a_at_level_with_confidence,
    comparison_table,
    summarize,
)
from .sensitivity import (
    inverse_pod_sobol,
    pod_sobol_indices,
    pod_value_sobol,
    sobol_indices_scalar,
)
from .synthetic import SyntheticModelSpec, make_dataset, true_pod
from .transform import BoxCoxTransform, apply_boxcox, fit_boxcox, invert_boxcox
