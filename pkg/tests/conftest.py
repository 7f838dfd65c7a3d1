"""Shared fixtures: a small trained pipeline reused across suites."""

import numpy as np
import pytest

from shmnovelty.detector import TrainConfig, train
from shmnovelty.features import AccelSegment
from shmnovelty.kdme import KdmeConfig

FAST_TRAIN = TrainConfig(
    kdme=KdmeConfig(N=500, M_range=(1, 2), bo_budget=8),
    block_window=3,
    seed=0,
)


def noise_segments(rng, count, scale=1.0, start_index=0, record_id="synth"):
    """White-noise segments whose amplitude varies a little per segment."""
    segments = []
    for i in range(count):
        sigma = 1e-4 * (1.0 + 0.1 * rng.uniform()) * scale
        data = rng.standard_normal((4, 500)) * sigma
        segments.append(
            AccelSegment(
                sample_rate=50.0,
                data=data,
                record_id=record_id,
                segment_index=start_index + i,
            )
        )
    return segments


@pytest.fixture(scope="session")
def trained():
    rng = np.random.default_rng(42)
    segments = noise_segments(rng, 36)
    return segments, train(segments, FAST_TRAIN)
