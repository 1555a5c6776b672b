"""Workload fingerprinting for HPC-configured cloud clusters from privacy-preserving telemetry."""

from .telemetry import (
    CLASS_ORDER,
    METERS,
    AppLabel,
    Dataset,
    MeterId,
    MeterSample,
    NodeId,
    Role,
    TelemetryRun,
    align_timesteps,
    apply_scaler,
    featurize,
    featurize_corpus,
    fit_scaler,
)

__version__ = "0.1.0"
