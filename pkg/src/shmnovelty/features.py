"""Cumulative-intensity feature extraction from multi-channel acceleration records.

A record carries four acceleration channels (base and top of the structure,
two horizontal directions).  Each fixed-duration segment is mapped to a
stacked feature vector of cumulative intensities

    I(eta) = integral over the segment of |a(t)|**eta dt,

evaluated on a grid of exponents eta and concatenated channel by channel.
Features are min-max normalized against the training population.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

# Column order of the CSV interchange format (after the time column).
CSV_CHANNEL_ORDER: tuple[str, ...] = ("base_d1", "base_d2", "top_d1", "top_d2")

# Stacking order of the feature vector: direction 1 (base, top) then
# direction 2 (base, top).  Distinct from the CSV column order on purpose;
# both are fixed contracts.
FEATURE_CHANNEL_ORDER: tuple[str, ...] = ("base_d1", "top_d1", "base_d2", "top_d2")

CSV_HEADER = "time,base_d1,base_d2,top_d1,top_d2"

# Maximum tolerated deviation of consecutive time stamps from the nominal
# sampling step, in seconds.
TIME_JITTER_TOL = 1e-6


@dataclass(frozen=True)
class AccelRecord:
    """Four-channel acceleration time series.

    Parameters
    ----------
    sample_rate : float
        Samples per second, > 0.
    data : ndarray, shape (4, length)
        Channel rows in ``CSV_CHANNEL_ORDER``, acceleration in g.
    record_id : str
        Provenance tag propagated to segments.
    """

    sample_rate: float
    data: np.ndarray
    record_id: str = ""

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2 or data.shape[0] != 4:
            raise InvalidInputError(
                f"record data must have shape (4, length), got {data.shape}"
            )
        if data.shape[1] < 2:
            raise InvalidInputError("record must hold at least 2 samples")
        if not self.sample_rate > 0:
            raise InvalidInputError(f"sample_rate must be > 0, got {self.sample_rate}")
        object.__setattr__(self, "data", data)

    @property
    def length(self) -> int:
        return self.data.shape[1]

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate

    @property
    def duration(self) -> float:
        return self.length / self.sample_rate

    def channel(self, name: str) -> np.ndarray:
        return self.data[CSV_CHANNEL_ORDER.index(name)]


@dataclass(frozen=True)
class AccelSegment:
    """Fixed-duration slice of an :class:`AccelRecord` with provenance."""

    sample_rate: float
    data: np.ndarray
    record_id: str
    segment_index: int

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2 or data.shape[0] != 4 or data.shape[1] < 2:
            raise InvalidInputError(
                f"segment data must have shape (4, length>=2), got {data.shape}"
            )
        object.__setattr__(self, "data", data)

    @property
    def length(self) -> int:
        return self.data.shape[1]

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate

    @property
    def duration(self) -> float:
        return self.length / self.sample_rate

    def channel(self, name: str) -> np.ndarray:
        return self.data[CSV_CHANNEL_ORDER.index(name)]


def default_eta_values() -> np.ndarray:
    # 0.1, 0.2, ..., 10.0 without accumulation drift.
    return np.linspace(0.1, 10.0, 100)


@dataclass(frozen=True)
class EtaGrid:
    """Ordered exponent grid for the cumulative-intensity sweep."""

    values: np.ndarray = field(default_factory=default_eta_values)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise InvalidInputError("eta grid must be a non-empty 1-d array")
        if not np.all(values > 0):
            raise InvalidInputError("eta values must be > 0")
        if not np.all(np.diff(values) > 0):
            raise InvalidInputError("eta values must be strictly increasing")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class FeatureVector:
    """Stacked cumulative-intensity vector, length 4 x |EtaGrid|.

    Layout: [base_d1 over all eta, top_d1 over all eta,
             base_d2 over all eta, top_d2 over all eta].
    """

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise InvalidInputError("feature vector must be 1-d")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class Normalizer:
    """Per-feature min-max transform learned from training vectors."""

    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        mins = np.asarray(self.mins, dtype=float)
        maxs = np.asarray(self.maxs, dtype=float)
        if mins.shape != maxs.shape or mins.ndim != 1:
            raise InvalidInputError("normalizer min/max must be 1-d and congruent")
        if np.any(maxs < mins):
            raise InvalidInputError("normalizer requires max >= min per feature")
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)


def cumulative_intensity(channel: np.ndarray, eta: float, dt: float) -> float:
    """Trapezoidal approximation of the cumulative intensity integral.

    Parameters
    ----------
    channel : ndarray
        Acceleration series in g, length >= 2.
    eta : float
        Exponent applied to |a|, > 0.
    dt : float
        Sampling step in seconds, > 0.

    Returns
    -------
    float
        Non-negative integral of |a|**eta over the series span.
    """
    a = np.asarray(channel, dtype=float)
    if a.ndim != 1 or a.size < 2:
        raise InvalidInputError("channel must be 1-d with at least 2 samples")
    if not eta > 0:
        raise InvalidInputError(f"eta must be > 0, got {eta}")
    if not dt > 0:
        raise InvalidInputError(f"dt must be > 0, got {dt}")
    return float(np.trapezoid(np.abs(a) ** eta, dx=dt))


def segment_record(record: AccelRecord, segment_seconds: float) -> list[AccelSegment]:
    """Split a record into contiguous non-overlapping fixed-duration segments.

    The trailing partial segment is dropped; a record shorter than one
    segment yields an empty list.
    """
    n_float = segment_seconds * record.sample_rate
    n = int(round(n_float))
    if n < 1 or abs(n_float - n) > 1e-9:
        raise InvalidInputError(
            "segment_seconds x sample_rate must be a positive integer, "
            f"got {n_float}"
        )
    count = record.length // n
    return [
        AccelSegment(
            sample_rate=record.sample_rate,
            data=record.data[:, i * n : (i + 1) * n],
            record_id=record.record_id,
            segment_index=i,
        )
        for i in range(count)
    ]


def build_feature_vector(segment: AccelSegment, grid: EtaGrid) -> FeatureVector:
    """Evaluate the cumulative-intensity sweep over all channels and exponents."""
    dt = segment.dt
    channels = np.stack(
        [segment.channel(name) for name in FEATURE_CHANNEL_ORDER], axis=0
    )
    absval = np.abs(channels)
    blocks = np.empty((4, len(grid)))
    for j, eta in enumerate(grid.values):
        blocks[:, j] = np.trapezoid(absval**eta, dx=dt, axis=1)
    return FeatureVector(blocks.reshape(-1))


def feature_matrix(vectors: list[FeatureVector]) -> np.ndarray:
    """Stack feature vectors into an (n, d) matrix, validating congruence."""
    if not vectors:
        raise InvalidInputError("no feature vectors given")
    d = len(vectors[0])
    for v in vectors:
        if len(v) != d:
            raise InvalidInputError(
                f"inconsistent feature dimensions: {len(v)} vs {d}"
            )
    return np.stack([v.values for v in vectors], axis=0)


def fit_normalizer(training: list[FeatureVector]) -> Normalizer:
    """Learn per-feature min and max from at least two training vectors."""
    if len(training) < 2:
        raise InvalidInputError("normalizer requires >= 2 training vectors")
    X = feature_matrix(training)
    return Normalizer(mins=X.min(axis=0), maxs=X.max(axis=0))


def apply_normalizer(n: Normalizer, v: FeatureVector) -> FeatureVector:
    """Map features to (x - min)/(max - min).

    Degenerate features (max == min in training) map to 0.  Test-time values
    outside the training range are passed through unclipped: novelty often
    lives outside the training envelope.
    """
    if len(v) != n.mins.size:
        raise InvalidInputError(
            f"dimension mismatch: vector {len(v)}, normalizer {n.mins.size}"
        )
    span = n.maxs - n.mins
    out = np.zeros_like(v.values)
    live = span > 0
    out[live] = (v.values[live] - n.mins[live]) / span[live]
    return FeatureVector(out)


def read_accel_csv(path: str, record_id: str = "") -> AccelRecord:
    """Read the CSV interchange format into an :class:`AccelRecord`.

    Expected header: ``time,base_d1,base_d2,top_d1,top_d2`` (leading ``#``
    comment lines are skipped).  Sampling must be uniform within
    ``TIME_JITTER_TOL`` seconds.
    """
    with open(path, "r", encoding="utf-8") as fh:
        line = fh.readline()
        while line.startswith("#"):
            line = fh.readline()
        header = line.strip()
        if header != CSV_HEADER:
            raise InvalidInputError(
                f"{path}: expected header '{CSV_HEADER}', got '{header}'"
            )
        table = np.loadtxt(fh, delimiter=",", ndmin=2)
    if table.shape[0] < 2 or table.shape[1] != 5:
        raise InvalidInputError(f"{path}: need >= 2 rows of 5 columns")
    time = table[:, 0]
    steps = np.diff(time)
    dt = steps[0]
    if dt <= 0 or np.any(np.abs(steps - dt) > TIME_JITTER_TOL):
        raise InvalidInputError(
            f"{path}: time stamps must be uniform within {TIME_JITTER_TOL} s"
        )
    return AccelRecord(sample_rate=1.0 / dt, data=table[:, 1:].T, record_id=record_id)


def write_accel_csv(path: str, record: AccelRecord, header_comments: list[str] | None = None) -> None:
    """Write a record in the CSV interchange format.

    Floats are rendered with ``repr`` so a write/read round trip is lossless
    and reruns with identical inputs are byte-identical.
    """
    time = np.arange(record.length) / record.sample_rate
    cols = [time] + [record.data[i] for i in range(4)]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for comment in header_comments or []:
            fh.write(f"# {comment}\n")
        fh.write(CSV_HEADER + "\n")
        chunk = 65536
        for start in range(0, record.length, chunk):
            stop = min(start + chunk, record.length)
            # tolist() yields Python floats, whose repr is the shortest
            # round-trip decimal (numpy scalar repr is not CSV-safe).
            chunk_cols = [c[start:stop].tolist() for c in cols]
            buf = io.StringIO()
            for row in zip(*chunk_cols):
                buf.write(",".join(repr(v) for v in row))
                buf.write("\n")
            fh.write(buf.getvalue())
