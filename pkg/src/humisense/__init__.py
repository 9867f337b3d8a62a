"""WiFi-CSI humidity sensing: capture ingestion, de-noising, feature
extraction, humidity binning, classification and evaluation, plus a
synthetic chamber generator for desk-scale verification."""

from .denoise import CsiSeries, DenoiseConfig, denoise_pipeline
from .features import Dataset, Standardizer, build_dataset
from .ingest import CsiFrame, ParseResult, parse_capture, parse_capture_file
from .labels import bin_humidity, class_set
from .classify import (
    TrainedModel,
    fit_model,
    load_model,
    predict_model,
    save_model,
)
from .evaluation import EvalReport, evaluate, resolution_sweep, split
from .synth import DisturbanceLog, ScenarioConfig, generate_series, write_capture
from .workflow import default_dataset, synth_dataset

__version__ = "0.1.0"

__all__ = [
    "CsiSeries", "DenoiseConfig", "denoise_pipeline",
    "Dataset", "Standardizer", "build_dataset",
    "CsiFrame", "ParseResult", "parse_capture", "parse_capture_file",
    "bin_humidity", "class_set",
    "TrainedModel", "fit_model", "load_model", "predict_model", "save_model",
    "EvalReport", "evaluate", "resolution_sweep", "split",
    "DisturbanceLog", "ScenarioConfig", "generate_series", "write_capture",
    "default_dataset", "synth_dataset",
    "__version__",
]
