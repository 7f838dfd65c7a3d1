"""End-to-end novelty detection pipeline.

Training chains min-max normalization, PCA, robust ICA, and one KDME
marginal per independent component.  The joint density of a segment is the
product of marginal densities (the components are independent by
construction), computed in log space.  The novelty threshold is the median
of block minima of the training joint densities; a segment is novel when
its density falls strictly below the threshold, and a simulation is voted
damaged when at least half of its segments are novel.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from . import decomposition, kdme
from .errors import InvalidInputError
from .features import (
    AccelSegment,
    EtaGrid,
    FeatureVector,
    Normalizer,
    apply_normalizer,
    build_feature_vector,
    feature_matrix,
    fit_normalizer,
)

FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    """Settings for :func:`train`."""

    q: int = 4
    kdme: kdme.KdmeConfig = field(default_factory=kdme.KdmeConfig)
    block_window: int = 30
    eta: EtaGrid = field(default_factory=EtaGrid)
    seed: int = 0


@dataclass(frozen=True)
class ModelMetadata:
    q: int
    eta_values: np.ndarray
    segment_seconds: float
    sample_rate: float
    training_segments: int
    seed: int
    format_version: int = FORMAT_VERSION


@dataclass(frozen=True)
class NoveltyModel:
    """Serialized pipeline state: transforms, marginals, and threshold."""

    normalizer: Normalizer
    pca: decomposition.PcaModel
    ica: decomposition.IcaModel
    marginals: tuple[kdme.KdmeModel, ...]
    threshold: float
    metadata: ModelMetadata

    def __post_init__(self):
        q = self.metadata.q
        if not (
            self.pca.loadings.shape[1] == q
            and self.ica.W.shape == (q, q)
            and len(self.marginals) == q
        ):
            raise InvalidInputError("q is inconsistent across pipeline stages")
        if not self.threshold > 0:
            raise InvalidInputError("threshold must be > 0")


@dataclass(frozen=True)
class SimulationVerdict:
    """Voted outcome for one simulation."""

    case_id: str
    median_density: float
    damaged: bool
    segment_densities: np.ndarray
    segment_novel: np.ndarray
    label: bool | None = None


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    recall: float | None
    precision: float | None
    f1: float | None


@dataclass(frozen=True)
class DetectionReport:
    """Per-segment densities, per-simulation verdicts, and evaluation."""

    verdicts: tuple[SimulationVerdict, ...]
    tn: int | None = None
    tp: int | None = None
    fn: int | None = None
    fp: int | None = None
    metrics: Metrics | None = None


def _segment_components(model_parts, segments: list[AccelSegment]) -> np.ndarray:
    """Featurize segments and push them through the fitted transform chain."""
    normalizer, pca, ica, eta = model_parts
    vectors = [
        apply_normalizer(normalizer, build_feature_vector(seg, eta)) for seg in segments
    ]
    X = feature_matrix(vectors)
    Y = decomposition.pca_transform(pca, X)
    return decomposition.ica_transform(ica, Y)


def transform_segments(model: NoveltyModel, segments: list[AccelSegment]) -> np.ndarray:
    """Independent-component coordinates for a batch of segments, shape (n, q)."""
    eta = EtaGrid(model.metadata.eta_values)
    return _segment_components((model.normalizer, model.pca, model.ica, eta), segments)


def _joint_log_density(marginals, components: np.ndarray) -> np.ndarray:
    """Sum of marginal log densities per row; -inf rows mean underflow to 0."""
    total = np.zeros(components.shape[0])
    for j, marginal in enumerate(marginals):
        total += kdme.kdme_log_pdf(marginal, components[:, j])
    return total


def joint_density(model: NoveltyModel, segment: AccelSegment) -> float:
    """Joint density of one segment: product of marginal densities.

    Computed in log space and exponentiated at the end; exact zero is a
    legal result for extreme outliers.
    """
    components = transform_segments(model, [segment])
    return float(np.exp(_joint_log_density(model.marginals, components))[0])


def joint_densities(model: NoveltyModel, segments: list[AccelSegment]) -> np.ndarray:
    components = transform_segments(model, segments)
    return np.exp(_joint_log_density(model.marginals, components))


def block_minima_threshold(densities, window: int) -> float:
    """Median of per-block minima over consecutive fixed-size blocks.

    The trailing partial block is dropped; an even number of blocks takes
    the mean of the two central minima.
    """
    d = np.asarray(densities, dtype=float)
    if window < 1:
        raise InvalidInputError("window must be >= 1")
    if d.size < window:
        raise InvalidInputError(
            f"need at least one full block: {d.size} < window {window}"
        )
    n_blocks = d.size // window
    minima = d[: n_blocks * window].reshape(n_blocks, window).min(axis=1)
    return float(np.median(minima))


def train(training_segments: list[AccelSegment], config: TrainConfig | None = None) -> NoveltyModel:
    """Fit the full pipeline on in-control training segments."""
    cfg = config or TrainConfig()
    n = len(training_segments)
    if n < 2 * cfg.block_window:
        raise InvalidInputError(
            f"need >= {2 * cfg.block_window} training segments, got {n}"
        )
    vectors = [build_feature_vector(seg, cfg.eta) for seg in training_segments]
    normalizer = fit_normalizer(vectors)
    normalized = [apply_normalizer(normalizer, v) for v in vectors]
    X = feature_matrix(normalized)
    pca = decomposition.pca_fit(X, cfg.q)
    Y = decomposition.pca_transform(pca, X)
    ica = decomposition.robust_ica_fit(Y, seed=cfg.seed)
    components = decomposition.ica_transform(ica, Y)
    marginals = []
    for j in range(cfg.q):
        comp_seed = int(np.random.SeedSequence([cfg.seed, 77, j]).generate_state(1)[0])
        comp_cfg = dataclasses.replace(cfg.kdme, seed=comp_seed)
        marginals.append(kdme.fit_kdme(components[:, j], comp_cfg))
    densities = np.exp(_joint_log_density(marginals, components))
    threshold = block_minima_threshold(densities, cfg.block_window)
    seg0 = training_segments[0]
    metadata = ModelMetadata(
        q=cfg.q,
        eta_values=cfg.eta.values,
        segment_seconds=seg0.duration,
        sample_rate=seg0.sample_rate,
        training_segments=n,
        seed=cfg.seed,
    )
    return NoveltyModel(
        normalizer=normalizer,
        pca=pca,
        ica=ica,
        marginals=tuple(marginals),
        threshold=threshold,
        metadata=metadata,
    )


def classify_segment(model: NoveltyModel, segment: AccelSegment) -> tuple[float, bool]:
    """(density, is_novel); novel means strictly below the threshold."""
    density = joint_density(model, segment)
    return density, density < model.threshold


def vote_simulation(segment_flags, segment_densities) -> tuple[bool, float]:
    """Majority vote with ties going to damaged; returns the median density."""
    flags = np.asarray(segment_flags, dtype=bool)
    densities = np.asarray(segment_densities, dtype=float)
    if flags.size == 0:
        raise InvalidInputError("vote requires at least one segment")
    damaged = int(flags.sum()) >= math.ceil(flags.size / 2)
    return damaged, float(np.median(densities))


def detect_simulation(
    model: NoveltyModel, segments: list[AccelSegment], case_id: str = "",
    label: bool | None = None,
) -> SimulationVerdict:
    densities = joint_densities(model, segments)
    novel = densities < model.threshold
    damaged, median = vote_simulation(novel, densities)
    return SimulationVerdict(
        case_id=case_id,
        median_density=median,
        damaged=damaged,
        segment_densities=densities,
        segment_novel=novel,
        label=label,
    )


def compute_metrics(TN: int, TP: int, FN: int, FP: int) -> Metrics:
    """Accuracy, recall, precision, F1; undefined ratios come back as None."""
    for name, value in (("TN", TN), ("TP", TP), ("FN", FN), ("FP", FP)):
        if value < 0:
            raise InvalidInputError(f"{name} must be non-negative, got {value}")
    total = TN + TP + FN + FP
    if total == 0:
        raise InvalidInputError("confusion counts sum to zero")
    accuracy = (TN + TP) / total
    recall = TP / (TP + FN) if TP + FN > 0 else None
    precision = TP / (TP + FP) if TP + FP > 0 else None
    if precision is not None and recall is not None and precision + recall > 0:
        f1 = 2.0 * precision * recall / (precision + recall)
    else:
        f1 = None
    return Metrics(accuracy=accuracy, recall=recall, precision=precision, f1=f1)


def build_report(verdicts: list[SimulationVerdict]) -> DetectionReport:
    """Assemble the report; confusion and metrics appear only when every
    verdict carries a ground-truth label."""
    verdicts = tuple(verdicts)
    if verdicts and all(v.label is not None for v in verdicts):
        tp = sum(1 for v in verdicts if v.damaged and v.label)
        tn = sum(1 for v in verdicts if not v.damaged and not v.label)
        fp = sum(1 for v in verdicts if v.damaged and not v.label)
        fn = sum(1 for v in verdicts if not v.damaged and v.label)
        metrics = compute_metrics(tn, tp, fn, fp)
        return DetectionReport(
            verdicts=verdicts, tn=tn, tp=tp, fn=fn, fp=fp, metrics=metrics
        )
    return DetectionReport(verdicts=verdicts)
