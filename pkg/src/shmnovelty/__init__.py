"""Unsupervised novelty detection for structural health monitoring.

Pipeline: cumulative-intensity features from acceleration records,
PCA + kurtosis-based robust ICA decomposition, per-component kernel-density
maximum-entropy marginals tuned by Bayesian optimization, a block-minima
density threshold, and majority voting per simulation.  A linear
shear-building simulator generates labeled synthetic datasets for
end-to-end verification.
"""

from .building import (
    BuildingSpec,
    Dataset,
    ExcitationSpec,
    GenerateConfig,
    ScenarioSpec,
    SimulationResult,
    TemperatureSampler,
    TestCase,
    es_of_temp,
    fc_of_temp,
    generate_dataset,
    modal_frequencies,
    newmark_response,
    simulate,
    stiffness_scale,
)
from .decomposition import (
    IcaModel,
    PcaModel,
    ica_transform,
    kurtosis,
    optimal_step,
    pca_fit,
    pca_transform,
    robust_ica_fit,
    whiten,
)
from .detector import (
    DetectionReport,
    Metrics,
    NoveltyModel,
    SimulationVerdict,
    TrainConfig,
    block_minima_threshold,
    build_report,
    classify_segment,
    compute_metrics,
    detect_simulation,
    joint_density,
    train,
    vote_simulation,
)
from .errors import (
    DegenerateInputError,
    FormatVersionError,
    IllConditionedError,
    InvalidInputError,
    OutOfValidityError,
    ShmNoveltyError,
)
from .features import (
    AccelRecord,
    AccelSegment,
    EtaGrid,
    FeatureVector,
    Normalizer,
    apply_normalizer,
    build_feature_vector,
    cumulative_intensity,
    fit_normalizer,
    read_accel_csv,
    segment_record,
    write_accel_csv,
)
from .gpopt import (
    GpSurrogate,
    bayes_minimize,
    expected_improvement,
    fit_hyperparameters,
    fit_surrogate,
    gp_posterior,
    matern52_ard,
)
from .kdme import (
    KdmeConfig,
    KdmeFitReport,
    KdmeModel,
    fit_kdme,
    kdme_log_pdf,
    kdme_objective,
    kdme_pdf,
    me_probabilities,
    sample_fractional_moment,
    solve_lambda,
)
from .persist import load_model, save_model

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
