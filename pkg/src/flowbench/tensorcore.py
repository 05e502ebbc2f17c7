"""Deterministic numerical substrate: latent fields and seeded Gaussian streams.

A :class:`LatentField` is a dense float64 array of shape ``(frames, frame_dim)``
stored frame-major, i.e. frame 0 occupies the first ``frame_dim`` entries of the
flat buffer. All randomness flows through :class:`RngStream`, a counter-based
generator (Philox) addressed by ``(seed, stream_id, counter)``: the same address
produces bit-identical draws on every run and under any thread schedule, and
distinct stream ids give statistically independent sequences. Noise identity is
therefore reproducible and addressable, which the editing algorithms rely on
when they share or refresh noise across timesteps and slots.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError

_MASK64 = (1 << 64) - 1

# Norms below this are treated as numerically zero in similarity computations.
DEGENERATE_NORM = 1e-12


def _splitmix64(x: int) -> int:
    """One round of the SplitMix64 mixer; stable across platforms."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def _token64(token: int | str) -> int:
    if isinstance(token, str):
        return int.from_bytes(
            hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest(), "little"
        )
    return token & _MASK64


@dataclass
class RngStream:
    """Addressable counter-based random stream.

    ``counter`` counts calls, not individual variates: every draw call runs on
    a private 2**128-wide counter block, so calls can never overlap regardless
    of how many variates each consumed.
    """

    seed: int
    stream_id: int = 0
    counter: int = 0

    def _generator(self) -> np.random.Generator:
        key = np.array([self.seed & _MASK64, self.stream_id & _MASK64], dtype=np.uint64)
        bitgen = np.random.Philox(key=key, counter=self.counter << 128)
        return np.random.Generator(bitgen)

    def normals(self, n: int) -> np.ndarray:
        """Draw ``n`` standard normals and advance the call counter."""
        gen = self._generator()
        self.counter += 1
        return gen.standard_normal(n)

    def uniforms(self, n: int) -> np.ndarray:
        """Draw ``n`` uniforms on [0, 1) and advance the call counter."""
        gen = self._generator()
        self.counter += 1
        return gen.random(n)

    def child(self, *path: int | str) -> "RngStream":
        """Derive an independent stream addressed by ``path``.

        Mixing is deterministic: the same ``(seed, stream_id, path)`` always
        names the same stream. Used to give every (slot, timestep) pair in the
        editors its own noise source.
        """
        h = _splitmix64(self.stream_id & _MASK64)
        for token in path:
            h = _splitmix64(h ^ _token64(token))
        return RngStream(seed=self.seed, stream_id=h)


def stream_for(seed: int, *path: int | str) -> RngStream:
    """Root stream for a run seed, optionally refined by a derivation path."""
    root = RngStream(seed=seed, stream_id=_splitmix64(seed & _MASK64))
    return root.child(*path) if path else root


@dataclass(frozen=True, eq=False)
class LatentField:
    """Immutable (frames, frame_dim) float64 array; the toy "video"."""

    data: np.ndarray
    frames: int = field(init=False)
    frame_dim: int = field(init=False)

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"latent field must be 2-D (frames, frame_dim), got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"latent field needs at least one frame and one dim, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("latent field contains non-finite entries")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "frames", arr.shape[0])
        object.__setattr__(self, "frame_dim", arr.shape[1])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.frames, self.frame_dim)

    @property
    def flat(self) -> np.ndarray:
        """Frame-major flat view of length frames * frame_dim."""
        return self.data.reshape(-1)

    @classmethod
    def zeros(cls, frames: int, frame_dim: int) -> "LatentField":
        return cls(np.zeros((frames, frame_dim)))

    @classmethod
    def from_flat(cls, flat: np.ndarray, frames: int, frame_dim: int) -> "LatentField":
        return cls(np.asarray(flat, dtype=np.float64).reshape(frames, frame_dim))

    def frame(self, index: int) -> np.ndarray:
        return self.data[index]

    def block(self, lo: int, hi: int) -> "LatentField":
        """Sub-field restricted to per-frame dimensions [lo, hi)."""
        if not (0 <= lo < hi <= self.frame_dim):
            raise ValueError(f"block [{lo}, {hi}) out of range for frame_dim {self.frame_dim}")
        return LatentField(self.data[:, lo:hi])

    def norm(self) -> float:
        return float(np.linalg.norm(self.flat))

    def __add__(self, other: "LatentField") -> "LatentField":
        _check_same_shape(self, other)
        return LatentField(self.data + other.data)

    def __sub__(self, other: "LatentField") -> "LatentField":
        _check_same_shape(self, other)
        return LatentField(self.data - other.data)

    def __mul__(self, scalar: float) -> "LatentField":
        return LatentField(self.data * float(scalar))

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"LatentField(frames={self.frames}, frame_dim={self.frame_dim})"


def _check_same_shape(a: LatentField, b: LatentField) -> None:
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")


def gaussian(stream: RngStream, shape: tuple[int, int]) -> LatentField:
    """Standard-normal field of the given (frames, frame_dim) shape."""
    frames, frame_dim = shape
    if frames < 1 or frame_dim < 1:
        raise ValueError(f"invalid field shape {shape}")
    return LatentField(stream.normals(frames * frame_dim).reshape(frames, frame_dim))


def cosine_sim(a: LatentField, b: LatentField) -> float:
    """Cosine similarity of the flattened fields, in [-1, 1].

    Raises :class:`DegenerateInputError` when both norms are numerically zero;
    a single zero field yields 0.0 (its dot with anything is exactly zero).
    """
    _check_same_shape(a, b)
    na = a.norm()
    nb = b.norm()
    if na < DEGENERATE_NORM and nb < DEGENERATE_NORM:
        raise DegenerateInputError("cosine similarity of two near-zero fields is undefined")
    denom = na * nb
    if denom == 0.0:
        return 0.0
    value = float(np.dot(a.flat, b.flat)) / denom
    return float(min(1.0, max(-1.0, value)))


def neg_mse(a: LatentField, b: LatentField) -> float:
    """Negated mean squared error, -(1/(T*d)) * ||a - b||^2."""
    _check_same_shape(a, b)
    diff = a.flat - b.flat
    return -float(np.dot(diff, diff)) / diff.size


def axpy(alpha: float, x: LatentField, y: LatentField) -> LatentField:
    """alpha * x + y as a new field; inputs are untouched."""
    _check_same_shape(x, y)
    return LatentField(float(alpha) * x.data + y.data)
