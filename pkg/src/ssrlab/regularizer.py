"""Closed-form streaming correction of latent-state sequences.

Every incoming state is appended to a sliding window of the window_k most
recent predecessors, a row-normalized affinity is computed over the
window, and the corrected state is the affinity-weighted combination of
the window rows (the current frame's row of the matrix applied to the
stacked window). No training, no iteration: one small matrix product per
frame.

Two buffer policies control what the window retains: "store-raw" keeps
the observed states (the default; feedback cannot compound smoothing),
"store-corrected" writes the corrected state back into the window.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .affinity import (
    AFFINITY_MODES,
    MODE_SOFTMAX,
    AffinityMatrix,
    StateVector,
    StateWindow,
    compute_affinity,
)
from .errors import AlphaOutOfRange, DimensionMismatch

__all__ = [
    "STORE_RAW",
    "STORE_CORRECTED",
    "BUFFER_POLICIES",
    "SsrConfig",
    "SsrState",
    "ssr_step",
    "run_stream",
    "ema_fuse",
    "passthrough_step",
]

STORE_RAW = "store-raw"
STORE_CORRECTED = "store-corrected"
BUFFER_POLICIES = frozenset({STORE_RAW, STORE_CORRECTED})


@dataclass(frozen=True)
class SsrConfig:
    """Settings for the sliding-window corrector.

    Attributes:
        window_k: history length; the window holds at most window_k + 1
            states (history plus the current frame).
        mode: affinity normalization, "softmax" or "raw-sum".
        temperature: softmax temperature; None means sqrt(d), resolved
            from the first incoming state.
        buffer_policy: "store-raw" or "store-corrected".
    """

    window_k: int = 8
    mode: str = MODE_SOFTMAX
    temperature: float | None = None
    buffer_policy: str = STORE_RAW

    def __post_init__(self) -> None:
        if self.window_k < 1:
            raise ValueError("window_k must be at least 1")
        if self.mode not in AFFINITY_MODES:
            raise ValueError(f"unknown affinity mode {self.mode!r}")
        if self.temperature is not None and not self.temperature > 0.0:
            raise ValueError("temperature must be positive when given")
        if self.buffer_policy not in BUFFER_POLICIES:
            raise ValueError(f"unknown buffer policy {self.buffer_policy!r}")


@dataclass(frozen=True)
class SsrState:
    """Immutable stream state: the window plus a frame counter."""

    config: SsrConfig
    window: StateWindow
    frames_seen: int

    def __post_init__(self) -> None:
        if self.frames_seen < 0:
            raise ValueError("frames_seen must be nonnegative")
        expected = min(self.frames_seen, self.config.window_k + 1)
        if len(self.window) != expected:
            raise ValueError(
                f"window holds {len(self.window)} states, expected {expected}"
            )

    @classmethod
    def initial(cls, config: SsrConfig) -> "SsrState":
        """Fresh state with an empty window."""
        window = StateWindow(states=(), capacity=config.window_k + 1)
        return cls(config=config, window=window, frames_seen=0)


def ssr_step(
    state: SsrState, incoming: StateVector
) -> tuple[StateVector, AffinityMatrix, SsrState]:
    """Advance the stream by one frame.

    The incoming state joins the window (evicting the oldest entry at
    capacity), the affinity is computed over the updated window, and the
    corrected state is the current frame's affinity row applied to the
    stacked window. A single-frame window yields affinity [[1.0]] and
    returns the input unchanged.

    Returns:
        (corrected state, affinity matrix, updated SsrState)
    """
    cfg = state.config
    window = state.window.push(incoming)
    affinity = compute_affinity(window, mode=cfg.mode, temperature=cfg.temperature)
    if len(window) == 1:
        corrected = incoming
    else:
        corrected = StateVector(affinity.current_row() @ window.as_matrix())
    if cfg.buffer_policy == STORE_CORRECTED:
        window = window.replace_current(corrected)
    new_state = SsrState(config=cfg, window=window, frames_seen=state.frames_seen + 1)
    return corrected, affinity, new_state


def run_stream(
    config: SsrConfig, states: "list[StateVector]"
) -> tuple[list[StateVector], list[AffinityMatrix]]:
    """Run ssr_step over a whole sequence, collecting outputs in order."""
    state = SsrState.initial(config)
    corrected: list[StateVector] = []
    affinities: list[AffinityMatrix] = []
    for incoming in states:
        out, aff, state = ssr_step(state, incoming)
        corrected.append(out)
        affinities.append(aff)
    return corrected, affinities


def ema_fuse(
    current: StateVector, previous: StateVector, alpha: float
) -> StateVector:
    """Two-frame exponential blend alpha * current + (1 - alpha) * previous.

    The endpoints are exact: alpha=1 returns current, alpha=0 returns
    previous, bit for bit.
    """
    if not 0.0 <= alpha <= 1.0:
        raise AlphaOutOfRange(f"alpha must lie in [0, 1], got {alpha}")
    if current.dim != previous.dim:
        raise DimensionMismatch(
            f"current dim {current.dim} vs previous dim {previous.dim}"
        )
    if alpha == 1.0:
        return current
    if alpha == 0.0:
        return previous
    return StateVector(alpha * current.values + (1.0 - alpha) * previous.values)


def passthrough_step(incoming: StateVector) -> StateVector:
    """Identity baseline; returns the input unchanged."""
    return incoming
