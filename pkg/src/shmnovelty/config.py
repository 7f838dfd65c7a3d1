"""Declarative run configuration.

One flat ``key = value`` text document drives every command.  Lines starting
with ``#`` and blank lines are ignored.  Unknown keys are rejected so typos
fail loudly instead of silently reverting to defaults.  Precedence is
CLI flags > config file > defaults.  The SHA-256 hash of the fully resolved
document is embedded in every output file so results can be traced back to
the exact configuration that produced them.
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass

import numpy as np

from .building import (
    BuildingSpec,
    GenerateConfig,
    TemperatureSampler,
)
from .detector import TrainConfig
from .errors import InvalidInputError
from .features import EtaGrid
from .kdme import KdmeConfig


@dataclass(frozen=True)
class RunConfig:
    # Feature extraction.
    eta_start: float = 0.1
    eta_stop: float = 10.0
    eta_count: int = 100
    segment_seconds: float = 60.0
    sample_rate: float = 100.0

    # Decomposition.
    q: int = 4

    # Density estimation.
    kdme_n: int = 1000
    m_range: tuple[int, ...] = (1, 2, 3)
    gamma_max_init: float = 3.0
    kdme_h: float | None = None  # None: kernel width = evaluation grid spacing
    window_padding: float = 0.5
    bo_budget: int = 50

    # Threshold and voting.
    block_window: int = 30
    vote_rule: str = "majority"

    # Building model.
    stories: int = 3
    story_mass: float = 2.0e5
    stiffness_d1: float = 5.5e8
    stiffness_d2: float = 6.0e8
    damping_ratio: float = 0.10
    story_height: float = 3.66
    fc_ref: float = 28.0
    drift_threshold: float = 0.005

    # Dataset generation.
    n_train_hours: float = 48.0
    n_test_cases: int = 100
    damaged_fraction: float = 0.78
    damage_factor_min: float = 0.5
    damage_factor_max: float = 0.8
    damaged_pga_min: float = 1.4
    damaged_pga_max: float = 1.8
    undamaged_pga_min: float = 0.01
    undamaged_pga_max: float = 0.05
    ambient_std: float = 1.0e-4
    event_duration: float = 20.0
    test_ambient_minutes: float = 10.0
    temperature_block_minutes: float = 10.0
    temp_mean: float = 18.0
    temp_annual_amplitude: float = 6.0
    temp_daily_amplitude: float = 4.0
    temp_jitter_std: float = 1.5

    # Named seeds; no command draws entropy from anywhere else.
    simulate_seed: int = 0
    train_seed: int = 0

    # Paths (flags normally supply these; the file may pin them too).
    data_dir: str = ""
    model_file: str = ""
    out_dir: str = ""

    def __post_init__(self):
        if self.eta_count < 1 or self.eta_stop < self.eta_start:
            raise InvalidInputError("invalid eta grid specification")
        if self.segment_seconds <= 0 or self.sample_rate <= 0:
            raise InvalidInputError("segment_seconds and sample_rate must be positive")
        if self.q < 1:
            raise InvalidInputError(f"q must be >= 1, got {self.q}")
        if self.vote_rule != "majority":
            raise InvalidInputError(f"unsupported vote_rule {self.vote_rule!r}")
        if not self.m_range or any(m < 1 for m in self.m_range):
            raise InvalidInputError("m_range entries must be >= 1")
        if not 0.0 <= self.damaged_fraction <= 1.0:
            raise InvalidInputError("damaged_fraction must lie in [0, 1]")
        if self.drift_threshold <= 0:
            raise InvalidInputError("drift_threshold must be positive")

    def eta_grid(self) -> EtaGrid:
        return EtaGrid(
            values=np.linspace(self.eta_start, self.eta_stop, self.eta_count)
        )

    def kdme_config(self) -> KdmeConfig:
        return KdmeConfig(
            N=self.kdme_n,
            M_range=self.m_range,
            gamma_max_init=self.gamma_max_init,
            h=self.kdme_h,
            window_padding=self.window_padding,
            bo_budget=self.bo_budget,
            seed=self.train_seed,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            q=self.q,
            kdme=self.kdme_config(),
            block_window=self.block_window,
            eta=self.eta_grid(),
            seed=self.train_seed,
        )

    def building_spec(self) -> BuildingSpec:
        return BuildingSpec(
            story_count=self.stories,
            masses=tuple([self.story_mass] * self.stories),
            stiffness_d1=tuple([self.stiffness_d1] * self.stories),
            stiffness_d2=tuple([self.stiffness_d2] * self.stories),
            damping_ratio=self.damping_ratio,
            story_height=self.story_height,
            fc_ref=self.fc_ref,
        )

    def generate_config(self) -> GenerateConfig:
        return GenerateConfig(
            building=self.building_spec(),
            n_train_hours=self.n_train_hours,
            n_test_cases=self.n_test_cases,
            damaged_fraction=self.damaged_fraction,
            damage_factor_range=(self.damage_factor_min, self.damage_factor_max),
            damaged_event_pga=(self.damaged_pga_min, self.damaged_pga_max),
            undamaged_event_pga=(self.undamaged_pga_min, self.undamaged_pga_max),
            temperature=TemperatureSampler(
                mean=self.temp_mean,
                annual_amplitude=self.temp_annual_amplitude,
                daily_amplitude=self.temp_daily_amplitude,
                jitter_std=self.temp_jitter_std,
            ),
            ambient_std=self.ambient_std,
            sample_rate=self.sample_rate,
            test_ambient_minutes=self.test_ambient_minutes,
            event_duration=self.event_duration,
            temperature_block_minutes=self.temperature_block_minutes,
            seed=self.simulate_seed,
        )


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _parse_value(key: str, raw: str):
    field = _FIELDS[key]
    raw = raw.strip()
    if key == "m_range":
        try:
            return tuple(int(part) for part in raw.split(",") if part.strip())
        except ValueError:
            raise InvalidInputError(f"m_range must be comma-separated integers, got {raw!r}")
    if key == "kdme_h":
        if raw.lower() in ("auto", "none", ""):
            return None
        try:
            return float(raw)
        except ValueError:
            raise InvalidInputError(f"kdme_h must be a number or 'auto', got {raw!r}")
    if field.type in ("int", int):
        try:
            return int(raw)
        except ValueError:
            raise InvalidInputError(f"{key} must be an integer, got {raw!r}")
    if field.type in ("float", float):
        try:
            return float(raw)
        except ValueError:
            raise InvalidInputError(f"{key} must be a number, got {raw!r}")
    return raw


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines into a field dict; unknown keys error."""
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise InvalidInputError(
                f"{source}:{lineno}: expected 'key = value', got {stripped!r}"
            )
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in _FIELDS:
            raise InvalidInputError(f"{source}:{lineno}: unknown config key {key!r}")
        if key in values:
            raise InvalidInputError(f"{source}:{lineno}: duplicate config key {key!r}")
        values[key] = _parse_value(key, raw)
    return values


def load_config(path: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Resolve defaults, then file values, then override strings from flags."""
    values: dict = {}
    if path:
        with open(path, "r", encoding="utf-8") as fh:
            values.update(parse_config_text(fh.read(), source=path))
    for key, raw in (overrides or {}).items():
        if key not in _FIELDS:
            raise InvalidInputError(f"unknown config key {key!r}")
        values[key] = _parse_value(key, raw) if isinstance(raw, str) else raw
    return RunConfig(**values)


def config_text(cfg: RunConfig) -> str:
    """Render the fully resolved configuration, one sorted key per line."""
    lines = []
    for name in sorted(_FIELDS):
        value = getattr(cfg, name)
        if name == "m_range":
            rendered = ",".join(str(m) for m in value)
        elif value is None:
            rendered = "auto"
        elif isinstance(value, float):
            rendered = repr(value)
        else:
            rendered = str(value)
        lines.append(f"{name} = {rendered}")
    return "\n".join(lines) + "\n"


def config_sha256(cfg: RunConfig) -> str:
    return hashlib.sha256(config_text(cfg).encode("utf-8")).hexdigest()
