"""Experiment runner and deterministic result writers.

A run streams each trial's noisy states through every configured method
in arrival order and scores the outputs against the clean states. All
emitted payloads (CSV, summary JSON, heatmap grids) are byte-identical
across reruns and across SSRLAB_THREADS settings; the wall-clock
timestamp lives in its own run_meta.json, outside the determinism
guarantee. Files are written to a temp name and atomically renamed.
"""

from __future__ import annotations

import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from contextlib import suppress
from dataclasses import dataclass, fields, replace
from datetime import datetime, timezone

import numpy as np

from ._version import TOOL_VERSION
from .affinity import (
    HeatmapGrid,
    StateVector,
    affinity_to_heatmap,
    compute_affinity,
    self_expressive_residual,
)
from .config import (
    METHOD_EMA,
    METHOD_PASSTHROUGH,
    METHOD_SSR,
    ExperimentConfig,
    config_to_dict,
)
from .errors import ConfigInvalid, NUMERIC_ERRORS
from .metrics import RunSummary, StepRecord, score_run
from .regularizer import SsrState, ema_fuse, passthrough_step, ssr_step
from .synth import ScenarioFrame, derive_trial_seed, generate_scenario

__all__ = [
    "THREADS_ENV_VAR",
    "CSV_HEADER",
    "MethodResult",
    "ResultBundle",
    "run_experiment",
    "dump_csv",
    "dump_summary_json",
    "dump_heatmaps",
    "write_experiment_outputs",
    "summary_table",
    "heatmap_filename",
]

THREADS_ENV_VAR = "SSRLAB_THREADS"
CSV_HEADER = "frame,method,trial,raw_error,corrected_error,subspace_residual,se_residual"

_SUMMARY_FIELDS = tuple(f.name for f in fields(RunSummary))


@dataclass(frozen=True)
class MethodResult:
    """Everything one method produced across all trials."""

    records: tuple[tuple[StepRecord, ...], ...]
    summaries: tuple[RunSummary, ...]
    aggregate_mean: dict[str, float]
    aggregate_std: dict[str, float]


@dataclass(frozen=True)
class ResultBundle:
    """Scored experiment plus provenance.

    The timestamp is the only field excluded from the byte-determinism
    guarantee; writers keep it out of the payload files.
    """

    config: ExperimentConfig
    methods: dict[str, MethodResult]
    heatmaps: dict[int, HeatmapGrid]
    seed: int
    tool_version: str
    timestamp: str


def _thread_count() -> int:
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw is None:
        return 1
    try:
        count = int(raw)
    except ValueError:
        raise ConfigInvalid(
            f"{THREADS_ENV_VAR}: expected an integer, got {raw!r}"
        ) from None
    if count < 1:
        raise ConfigInvalid(f"{THREADS_ENV_VAR}: must be at least 1, got {count}")
    return count


def _annotate(exc: Exception, method: str, trial: int, frame: int) -> Exception:
    return type(exc)(f"(method={method}, trial={trial}, frame={frame}): {exc}")


def _run_ssr(
    config: ExperimentConfig,
    frames: list[ScenarioFrame],
    trial: int,
    capture_heatmaps: bool,
) -> tuple[list[StateVector], list[float], dict[int, HeatmapGrid]]:
    state = SsrState.initial(config.ssr)
    corrected: list[StateVector] = []
    residuals: list[float] = []
    heatmaps: dict[int, HeatmapGrid] = {}
    wanted = set(config.heatmap_frames) if capture_heatmaps else set()
    for t, frame in enumerate(frames):
        incoming = frame.noisy_state
        seen = state.window.push(incoming)  # the window this step scores
        try:
            out, aff, state = ssr_step(state, incoming)
        except NUMERIC_ERRORS as exc:
            raise _annotate(exc, METHOD_SSR, trial, t) from exc
        corrected.append(out)
        residuals.append(self_expressive_residual(seen, aff))
        if t in wanted:
            heatmaps[t] = affinity_to_heatmap(aff)
    return corrected, residuals, heatmaps


def _run_ema(
    config: ExperimentConfig, frames: list[ScenarioFrame], trial: int
) -> list[StateVector]:
    corrected: list[StateVector] = []
    previous: StateVector | None = None
    for t, frame in enumerate(frames):
        if previous is None:
            fused = frame.noisy_state
        else:
            try:
                fused = ema_fuse(frame.noisy_state, previous, config.ema_alpha)
            except NUMERIC_ERRORS as exc:
                raise _annotate(exc, METHOD_EMA, trial, t) from exc
        corrected.append(fused)
        previous = fused
    return corrected


def _run_trial(
    config: ExperimentConfig, trial: int
) -> tuple[dict[str, tuple[tuple[StepRecord, ...], RunSummary]], dict[int, HeatmapGrid]]:
    seed = derive_trial_seed(config.trajectory.seed, trial)
    try:
        frames = generate_scenario(replace(config.trajectory, seed=seed), config.noise)
    except NUMERIC_ERRORS as exc:
        raise type(exc)(f"(scenario generation, trial={trial}): {exc}") from exc
    out: dict[str, tuple[tuple[StepRecord, ...], RunSummary]] = {}
    heatmaps: dict[int, HeatmapGrid] = {}
    for method in config.methods:
        residuals: list[float] | None = None
        if method == METHOD_SSR:
            corrected, residuals, grabbed = _run_ssr(
                config, frames, trial, config.emit_heatmaps and trial == 0
            )
            heatmaps.update(grabbed)
        elif method == METHOD_EMA:
            corrected = _run_ema(config, frames, trial)
        elif method == METHOD_PASSTHROUGH:
            corrected = [passthrough_step(f.noisy_state) for f in frames]
        else:  # pragma: no cover - methods validated at config build
            raise ConfigInvalid(f"methods: unknown method {method!r}")
        records, summary = score_run(frames, corrected, residuals)
        out[method] = (tuple(records), summary)
    return out, heatmaps


def _aggregate(summaries: tuple[RunSummary, ...]) -> tuple[dict[str, float], dict[str, float]]:
    mean: dict[str, float] = {}
    std: dict[str, float] = {}
    for name in _SUMMARY_FIELDS:
        values = np.array([getattr(s, name) for s in summaries])
        mean[name] = float(values.mean())
        std[name] = float(values.std(ddof=1)) if len(values) > 1 else 0.0
    return mean, std


def run_experiment(config: ExperimentConfig) -> ResultBundle:
    """Run all configured methods over all trials and score them.

    Trials run independently (optionally on a thread pool capped by
    SSRLAB_THREADS); outputs are assembled in trial order, so results do
    not depend on scheduling.
    """
    workers = min(_thread_count(), config.trials)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trial_results = list(
                pool.map(lambda i: _run_trial(config, i), range(config.trials))
            )
    else:
        trial_results = [_run_trial(config, i) for i in range(config.trials)]
    methods: dict[str, MethodResult] = {}
    for method in config.methods:
        records = tuple(result[0][method][0] for result in trial_results)
        summaries = tuple(result[0][method][1] for result in trial_results)
        mean, std = _aggregate(summaries)
        methods[method] = MethodResult(
            records=records,
            summaries=summaries,
            aggregate_mean=mean,
            aggregate_std=std,
        )
    heatmaps: dict[int, HeatmapGrid] = {}
    for _, grabbed in trial_results:
        heatmaps.update(grabbed)
    return ResultBundle(
        config=config,
        methods=methods,
        heatmaps=dict(sorted(heatmaps.items())),
        seed=config.trajectory.seed,
        tool_version=TOOL_VERSION,
        timestamp=datetime.now(timezone.utc).isoformat(),
    )


def _fmt(value: float) -> str:
    """17 significant digits; enough to round-trip any float64."""
    return format(float(value), ".17g")


def _atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        with suppress(OSError):
            os.unlink(tmp)
        raise


def dump_csv(bundle: ResultBundle, path: str) -> None:
    """Per-frame records, one row per (method, trial, frame), sorted."""
    lines = [CSV_HEADER]
    for method in sorted(bundle.methods):
        result = bundle.methods[method]
        for trial, records in enumerate(result.records):
            for record in records:
                lines.append(
                    f"{record.frame},{method},{trial},"
                    f"{_fmt(record.raw_error)},{_fmt(record.corrected_error)},"
                    f"{_fmt(record.subspace_residual)},{_fmt(record.se_residual)}"
                )
    _atomic_write_text(path, "\n".join(lines) + "\n")


def summary_payload(bundle: ResultBundle) -> dict:
    """Deterministic JSON payload: config echo, summaries, provenance."""
    methods = {}
    for method, result in bundle.methods.items():
        methods[method] = {
            "aggregate_mean": result.aggregate_mean,
            "aggregate_std": result.aggregate_std,
            "per_trial": [
                {name: getattr(s, name) for name in _SUMMARY_FIELDS}
                for s in result.summaries
            ],
        }
    return {
        "config": config_to_dict(bundle.config),
        "methods": methods,
        "provenance": {
            "seed": bundle.seed,
            "tool_version": bundle.tool_version,
            "trials": bundle.config.trials,
        },
    }


def dump_summary_json(bundle: ResultBundle, path: str) -> None:
    """Canonical summary JSON; keys sorted, no volatile fields."""
    import json

    payload = summary_payload(bundle)
    _atomic_write_text(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def dump_run_meta(bundle: ResultBundle, path: str) -> None:
    """Volatile provenance (the timestamp), kept out of the payload files."""
    import json

    meta = {"timestamp_utc": bundle.timestamp}
    _atomic_write_text(path, json.dumps(meta, sort_keys=True, indent=2) + "\n")


def heatmap_filename(frame: int) -> str:
    return f"affinity_f{frame:05}.csv"


def dump_heatmaps(bundle: ResultBundle, directory: str) -> list[str]:
    """One CSV grid per captured frame; returns the written paths."""
    written = []
    for frame, grid in sorted(bundle.heatmaps.items()):
        rows = [",".join(_fmt(v) for v in row) for row in grid.values]
        path = os.path.join(directory, heatmap_filename(frame))
        _atomic_write_text(path, "\n".join(rows) + "\n")
        written.append(path)
    return written


def write_experiment_outputs(bundle: ResultBundle, directory: str | None = None) -> dict[str, str]:
    """Write results.csv, summary.json, run_meta.json, and heatmaps."""
    out_dir = directory if directory is not None else bundle.config.output_dir
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "csv": os.path.join(out_dir, "results.csv"),
        "summary": os.path.join(out_dir, "summary.json"),
        "meta": os.path.join(out_dir, "run_meta.json"),
    }
    dump_csv(bundle, paths["csv"])
    dump_summary_json(bundle, paths["summary"])
    dump_run_meta(bundle, paths["meta"])
    if bundle.heatmaps:
        dump_heatmaps(bundle, out_dir)
    return paths


def summary_table(bundle: ResultBundle) -> str:
    """Small fixed-width table of aggregate scores per method."""
    header = (
        f"{'method':<12} {'mean_raw':>12} {'mean_corr':>12} "
        f"{'improve':>10} {'tail':>12} {'win_frac':>9}"
    )
    lines = [header]
    for method in sorted(bundle.methods):
        mean = bundle.methods[method].aggregate_mean
        lines.append(
            f"{method:<12} {mean['mean_raw_error']:>12.6f} "
            f"{mean['mean_corrected_error']:>12.6f} "
            f"{mean['improvement_ratio']:>10.4f} "
            f"{mean['tail_error_mean']:>12.6f} "
            f"{mean['win_fraction']:>9.4f}"
        )
    return "\n".join(lines)
