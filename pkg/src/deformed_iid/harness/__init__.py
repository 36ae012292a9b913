"""Experiment configuration, orchestration and report emission."""

from .config import CONFIG_SCHEMA, EXPERIMENTS, REPORT_SCHEMA, ExperimentConfig, load_config_file, make_config
from .io import emit_csv, emit_json, emit_svg_scatter
from .runner import ExperimentReport, run

__all__ = ["CONFIG_SCHEMA", "EXPERIMENTS", "REPORT_SCHEMA", "ExperimentConfig", "ExperimentReport",
           "emit_csv", "emit_json", "emit_svg_scatter", "load_config_file", "make_config", "run"]
