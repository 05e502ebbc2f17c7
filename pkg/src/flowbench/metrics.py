"""Quantitative proxies for the editing failure modes.

High-frequency jitter is measured as mean squared second temporal difference
(constant-velocity motion must not register, so first differences are out).
Low-frequency misalignment compares temporal moving averages of the edit and
the source. Distributional quality uses the energy distance between endpoint
sets. Correlation traces pull the per-step noise/velocity cosines out of an
edit trace for schedule diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .editor import EditTrace
from .errors import TooFewFramesError, TraceTooShortError
from .tensorcore import LatentField, RngStream


@dataclass(frozen=True)
class MetricReport:
    """Per-run metric row."""

    jitter: float
    lowfreq_alignment: float
    target_distance: float
    noise_corr: np.ndarray = field(default_factory=lambda: np.empty(0))
    velocity_corr: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        for name in ("jitter", "lowfreq_alignment", "target_distance"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0.0:
                raise ValueError(f"{name} must be finite and >= 0, got {value}")
        object.__setattr__(self, "noise_corr", np.asarray(self.noise_corr, dtype=np.float64))
        object.__setattr__(self, "velocity_corr", np.asarray(self.velocity_corr, dtype=np.float64))


def jitter_energy(z: LatentField) -> float:
    """Mean squared second temporal difference, (1/((T-2)d)) sum ||z_{f+1} - 2 z_f + z_{f-1}||^2.

    Zero for any trajectory affine in the frame index, so steady motion does
    not count as jitter.
    """
    if z.frames < 3:
        raise TooFewFramesError(f"jitter needs at least 3 frames, got {z.frames}")
    second = z.data[2:] - 2.0 * z.data[1:-1] + z.data[:-2]
    return float(np.sum(second * second)) / ((z.frames - 2) * z.frame_dim)


def moving_average(z: LatentField, window: int) -> np.ndarray:
    """Per-frame mean over the symmetric truncated window |df| <= window - 1.

    window=1 is the identity; window=T averages every frame into the global
    temporal mean.
    """
    if not (1 <= window <= z.frames):
        raise ValueError(f"window must lie in [1, frames], got {window}")
    half = window - 1
    out = np.empty_like(z.data)
    for f in range(z.frames):
        lo = max(0, f - half)
        hi = min(z.frames, f + half + 1)
        out[f] = z.data[lo:hi].mean(axis=0)
    return out


def default_window(frames: int) -> int:
    """Quarter-length window (at least 3), separating trajectory shape from frame noise."""
    return min(frames, max(3, frames // 4))


def lowfreq_alignment(z: LatentField, x_src: LatentField, window: int) -> float:
    """RMS over frames of the distance between temporal moving averages."""
    if z.shape != x_src.shape:
        raise ValueError(f"shape mismatch: {z.shape} vs {x_src.shape}")
    diff = moving_average(z, window) - moving_average(x_src, window)
    per_frame_sq = np.sum(diff * diff, axis=1)
    return float(np.sqrt(per_frame_sq.mean()))


def energy_distance(
    samples_a: list[LatentField],
    samples_b: list[LatentField],
    max_pairs: int | None = None,
    stream: RngStream | None = None,
) -> float:
    """Energy distance 2 E||A-B|| - E||A-A'|| - E||B-B'|| between sample sets.

    All-pairs (V-statistic) by default, which is exactly zero on identical
    multisets. For large sets pass ``max_pairs`` to subsample pair indices
    from ``stream``.
    """
    if not samples_a or not samples_b:
        raise ValueError("energy distance needs nonempty sample sets")
    a = np.stack([s.flat for s in samples_a])
    b = np.stack([s.flat for s in samples_b])

    def mean_cross(x, y):
        if max_pairs is not None and x.shape[0] * y.shape[0] > max_pairs:
            if stream is None:
                raise ValueError("subsampled mode needs a stream")
            i = (stream.uniforms(max_pairs) * x.shape[0]).astype(int)
            j = (stream.uniforms(max_pairs) * y.shape[0]).astype(int)
            return float(np.linalg.norm(x[i] - y[j], axis=1).mean())
        diff = x[:, None, :] - y[None, :, :]
        return float(np.sqrt((diff * diff).sum(axis=2)).mean())

    return 2.0 * mean_cross(a, b) - mean_cross(a, a) - mean_cross(b, b)


def correlation_trace(trace: EditTrace) -> tuple[np.ndarray, np.ndarray]:
    """Per-step consecutive cosines (slot-0 noise, aggregated edit velocity).

    Both arrays have length executed_steps - 1; velocity entries where either
    step's velocity vanished are NaN.
    """
    if len(trace) < 2:
        raise TraceTooShortError(f"need at least 2 executed steps, got {len(trace)}")
    noise = []
    velocity = []
    for record in trace.records[1:]:
        noise.append(record.noise_cos_prev[0] if record.noise_cos_prev else np.nan)
        v = record.velocity_cos_prev
        velocity.append(np.nan if v is None else v)
    return np.array(noise), np.array(velocity)


def late_half_dispersion(velocity_corr: np.ndarray) -> float:
    """1 - mean consecutive-velocity cosine over the late half of the run."""
    late = velocity_corr[len(velocity_corr) // 2 :]
    late = late[np.isfinite(late)]
    if late.size == 0:
        return float("nan")
    return float(1.0 - late.mean())
