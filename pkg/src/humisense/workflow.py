"""End-to-end pipeline composition: scenario -> series -> de-noised
series -> feature dataset. This is the canonical way to build the default
synthetic dataset used by the CLI and the acceptance suite."""

from __future__ import annotations

from .denoise import CsiSeries, DenoiseConfig, denoise_pipeline
from .features import Dataset, build_dataset
from .synth import DisturbanceLog, ScenarioConfig, generate_series


def synth_dataset(cfg: ScenarioConfig | None = None,
                  denoise_cfg: DenoiseConfig | None = None,
                  ) -> tuple[Dataset, DisturbanceLog, CsiSeries]:
    """Generate a scenario and featurize it.

    ``denoise_cfg=None`` skips the de-noising stage entirely (raw frames
    are featurized as-is). Returns the dataset, the disturbance log and
    the clean oracle series.
    """
    series, log, clean = generate_series(cfg or ScenarioConfig())
    processed = denoise_pipeline(series, denoise_cfg) if denoise_cfg else series
    return build_dataset(processed), log, clean


def default_dataset() -> Dataset:
    """The default scenario, de-noised with default settings."""
    dataset, _, _ = synth_dataset(ScenarioConfig(), DenoiseConfig())
    return dataset
