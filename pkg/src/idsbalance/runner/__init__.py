"""Experiment configuration, orchestration, rendering and the command line."""
from .config import ARMS, PROFILES, ExperimentConfig, derive_seed, load_config, reseed
from .experiment import (ExperimentReport, PreparedData, export_predictions, prepare_data,
                         run_cell, run_experiment, stratified_subsample)
from .render import format_metric, format_p, metrics_csv, render_tables

__all__ = ["ARMS", "PROFILES", "ExperimentConfig", "derive_seed", "load_config", "reseed",
           "ExperimentReport", "PreparedData", "export_predictions", "prepare_data", "run_cell",
           "run_experiment", "stratified_subsample", "format_metric", "format_p", "metrics_csv",
           "render_tables"]
