"""Declarative TOML configuration for the pipeline CLI.

Unknown keys are rejected; command-line flags override file values.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(Exception):
    pass


@dataclass
class QualityParams:
    max_error_m: float = 50.0
    min_bins: int = 10
    min_days: int = 1
    d_max: int = 31


@dataclass
class StayParams:
    dist_m: float = 100.0
    min_stay_s: float = 600.0
    max_gap_s: float = 21600.0


@dataclass
class HomeParams:
    bandwidth_m: float = 100.0


@dataclass
class CostParams:
    stat: str = "median"
    metric: str = "path_length"


@dataclass
class CalibrateParams:
    beta_start: float = 0.1
    beta_stop: float = 3.0
    beta_step: float = 0.1


@dataclass
class TripgenParams:
    corr_threshold: float = 0.5
    drop_priority: list = field(default_factory=lambda: ["population_density"])
    base_year: int = 2021


@dataclass
class ForecastParams:
    years: list = field(default_factory=lambda: [2015, 2025, 2035, 2045])


@dataclass
class CompareParams:
    predicted: str = ""
    predicted_column: str = "production"
    reference: str = ""
    reference_column: str = "production"
    key: str = "zone_id"


@dataclass
class PathParams:
    pings: str = ""
    pings_format: str = "csv"
    zones: str = ""
    population: str = ""
    sea: dict = field(default_factory=dict)  # year (str in TOML) -> path


@dataclass
class SynthParams:
    grid_nx: int = 5
    grid_ny: int = 5
    cell_size_deg: float = 0.05
    counties: int = 5
    population_per_zone: int = 400
    population_spread: float = 0.5
    sampling_rate: float = 0.3
    n_days: int = 14
    start_date: str = "2021-06-07"
    beta_star: float = 1.5
    excursion_rate: float = 1.2
    noise_sigma_m: float = 10.0
    home_jitter_m: float = 25.0
    frac_low_accuracy: float = 0.05


@dataclass
class PipelineConfig:
    seed: int = 0
    timezone: str = "UTC"
    output_dir: str = "out"
    paths: PathParams = field(default_factory=PathParams)
    quality: QualityParams = field(default_factory=QualityParams)
    stay: StayParams = field(default_factory=StayParams)
    home: HomeParams = field(default_factory=HomeParams)
    cost: CostParams = field(default_factory=CostParams)
    calibrate: CalibrateParams = field(default_factory=CalibrateParams)
    tripgen: TripgenParams = field(default_factory=TripgenParams)
    forecast: ForecastParams = field(default_factory=ForecastParams)
    compare: CompareParams = field(default_factory=CompareParams)
    synth: SynthParams = field(default_factory=SynthParams)

    def validate(self):
        problems = []
        if self.quality.max_error_m <= 0:
            problems.append("quality.max_error_m must be positive")
        if not 1 <= self.quality.min_bins <= 48:
            problems.append("quality.min_bins must be in 1..48")
        if self.quality.min_days < 1:
            problems.append("quality.min_days must be >= 1")
        if self.stay.dist_m <= 0 or self.stay.min_stay_s <= 0:
            problems.append("stay thresholds must be positive")
        if self.home.bandwidth_m <= 0:
            problems.append("home.bandwidth_m must be positive")
        if self.cost.stat not in ("mean", "median"):
            problems.append("cost.stat must be mean or median")
        if self.cost.metric not in ("travel_time", "path_length"):
            problems.append("cost.metric must be travel_time or path_length")
        if self.calibrate.beta_step <= 0:
            problems.append("calibrate.beta_step must be positive")
        if self.calibrate.beta_start <= 0:
            problems.append("calibrate.beta_start must be positive")
        if self.calibrate.beta_stop < self.calibrate.beta_start:
            problems.append("calibrate.beta_stop must be >= beta_start")
        if not 0 < self.synth.sampling_rate <= 1:
            problems.append("synth.sampling_rate must be in (0, 1]")
        if problems:
            raise ConfigError("; ".join(problems))


def _fill_dataclass(cls, data: dict, where: str):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown keys in [{where}]: {', '.join(sorted(unknown))}")
    return cls(**data)


def load_config(path=None, text: str | None = None, overrides: dict | None = None) -> PipelineConfig:
    """Parse and validate a pipeline TOML config; overrides win over the file."""
    data: dict = {}
    if text is not None:
        data = tomllib.loads(text)
    elif path is not None:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    cfg = PipelineConfig()
    sections = {
        "paths": PathParams,
        "quality": QualityParams,
        "stay": StayParams,
        "home": HomeParams,
        "cost": CostParams,
        "calibrate": CalibrateParams,
        "tripgen": TripgenParams,
        "forecast": ForecastParams,
        "compare": CompareParams,
        "synth": SynthParams,
    }
    top_known = {"seed", "timezone", "output_dir"} | set(sections)
    unknown = set(data) - top_known
    if unknown:
        raise ConfigError(f"unknown top-level keys: {', '.join(sorted(unknown))}")
    for key in ("seed", "timezone", "output_dir"):
        if key in data:
            setattr(cfg, key, data[key])
    for name, cls in sections.items():
        if name in data:
            if not isinstance(data[name], dict):
                raise ConfigError(f"[{name}] must be a table")
            setattr(cfg, name, _fill_dataclass(cls, data[name], name))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if "." in key:
            section, leaf = key.split(".", 1)
            setattr(getattr(cfg, section), leaf, value)
        else:
            setattr(cfg, key, value)
    cfg.validate()
    return cfg
