"""Closed-form rectified-flow velocity fields over diagonal Gaussian mixtures.

The generative convention throughout: data lives at t=0, the standard-normal
prior at t=1, and intermediate states are the linear interpolant

    X_t = (1 - t) * X0 + t * X1,    X0 ~ data,  X1 ~ N(0, I) independent.

For a diagonal-covariance Gaussian mixture data law everything is exact:

* X_t given component k is N((1-t) * mu_k, (1-t)^2 * var_k + t^2), so posterior
  component responsibilities follow from Bayes' rule (computed in the log
  domain with log-sum-exp, since whole-field densities underflow fast);
* within a component, E[X0 | X_t = x] is the usual Gaussian conditional mean,
  applied coordinatewise;
* the marginal velocity field is V(x, t) = (x - E[X0 | X_t = x]) / t, which is
  what an ideally trained flow network would output.

Conditioning on the first frame is exact as well: frame-0 coordinates get
pinned and component weights are reweighted by their frame-0 marginal density.
Classifier-free guidance extrapolates between a condition's velocity and the
velocity of the prior-weighted union of all registered conditions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import DegenerateConditionError, UnknownConditionError
from .tensorcore import LatentField, RngStream, gaussian

# Variance floor; also the variance assigned to coordinates pinned by
# first-frame conditioning.
VAR_FLOOR = 1e-8

# The velocity (x - E[X0|x]) / t is singular at t = 0, so integration stops
# here and the t_min state is returned as the sample.
T_MIN = 1e-3

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class GaussianComponent:
    """One diagonal-covariance mixture component."""

    weight: float
    mean: LatentField
    var: np.ndarray  # per-dimension variances, same (frames, frame_dim) shape

    def __post_init__(self):
        var = np.asarray(self.var, dtype=np.float64)
        if np.isscalar(self.var) or var.ndim == 0:
            var = np.full(self.mean.shape, float(var))
        if var.shape != self.mean.shape:
            raise ValueError(f"var shape {var.shape} does not match mean shape {self.mean.shape}")
        if np.any(var < VAR_FLOOR):
            var = np.maximum(var, VAR_FLOOR)
        if not (0.0 < self.weight <= 1.0):
            raise ValueError(f"component weight must be in (0, 1], got {self.weight}")
        var = np.ascontiguousarray(var)
        var.setflags(write=False)
        object.__setattr__(self, "var", var)


class ConditionedMixture:
    """Gaussian-mixture data law for one prompt label."""

    def __init__(self, condition_id: str, components: Sequence[GaussianComponent]):
        if not components:
            raise ValueError("mixture needs at least one component")
        shape = components[0].mean.shape
        for comp in components:
            if comp.mean.shape != shape:
                raise ValueError("all components must share one (frames, frame_dim) shape")
        total = sum(c.weight for c in components)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"component weights must sum to 1, got {total}")
        self.condition_id = condition_id
        self.components = tuple(components)
        self.frames, self.frame_dim = shape
        # Packed (K, frames*frame_dim) arrays for vectorized math.
        self._means = np.stack([c.mean.flat for c in components])
        self._vars = np.stack([c.var.reshape(-1) for c in components])
        self._log_weights = np.log(np.array([c.weight for c in components]))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.frames, self.frame_dim)

    def prior_mean(self) -> LatentField:
        mean = np.exp(self._log_weights) @ self._means
        return LatentField.from_flat(mean, self.frames, self.frame_dim)

    def draw(self, stream: RngStream) -> LatentField:
        """Exact sample of X0: pick a component, then add scaled normals."""
        u = stream.uniforms(1)[0]
        k = int(np.searchsorted(np.cumsum(np.exp(self._log_weights)), u))
        k = min(k, len(self.components) - 1)
        z = stream.normals(self._means.shape[1])
        flat = self._means[k] + np.sqrt(self._vars[k]) * z
        return LatentField.from_flat(flat, self.frames, self.frame_dim)

    def rescaled(self, weights: np.ndarray) -> "ConditionedMixture":
        comps = [
            GaussianComponent(w, c.mean, c.var)
            for w, c in zip(weights, self.components)
            if w > 0.0
        ]
        return ConditionedMixture(self.condition_id, comps)


@dataclass(frozen=True)
class Condition:
    """A (prompt, optional first frame) pair identifying one conditional law."""

    prompt: str
    first_frame: np.ndarray | None = None

    def __post_init__(self):
        if self.first_frame is not None:
            ff = np.ascontiguousarray(np.asarray(self.first_frame, dtype=np.float64))
            if ff.ndim != 1:
                raise ValueError("first_frame must be a 1-D per-frame vector")
            ff.setflags(write=False)
            object.__setattr__(self, "first_frame", ff)

    def cache_key(self) -> tuple:
        ff = self.first_frame
        return (self.prompt, None if ff is None else ff.tobytes())


@dataclass(frozen=True)
class VelocityQuery:
    """Arguments of one velocity evaluation."""

    x: LatentField
    t: float
    condition: Condition
    cfg_scale: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.t <= 1.0):
            raise ValueError(f"velocity query needs t in (0, 1], got {self.t}")
        if self.cfg_scale < 0.0:
            raise ValueError(f"cfg_scale must be >= 0, got {self.cfg_scale}")


def condition_on_first_frame(mix: ConditionedMixture, f: np.ndarray) -> ConditionedMixture:
    """Exact mixture of X0 given that frame 0 of X0 equals ``f``.

    With diagonal covariance the conditioning factorizes: frame-0 coordinates
    are pinned to ``f`` (variance collapsed to the floor) while all other
    coordinates keep their marginals. Component weights are multiplied by each
    component's Gaussian density of ``f`` on its frame-0 marginal and
    renormalized in the log domain.
    """
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (mix.frame_dim,):
        raise ValueError(f"first frame must have length {mix.frame_dim}, got shape {f.shape}")
    log_posterior = np.empty(len(mix.components))
    for k, comp in enumerate(mix.components):
        mu0 = comp.mean.frame(0)
        var0 = comp.var[0]
        resid = f - mu0
        # Overflow of the quadratic form saturates cleanly to -inf, which is
        # exactly the "impossibly far" signal the error path below looks for.
        with np.errstate(over="ignore"):
            log_density = -0.5 * float(np.sum(resid * resid / var0 + np.log(2.0 * np.pi * var0)))
        log_posterior[k] = math.log(comp.weight) + log_density
    norm = logsumexp(log_posterior)
    if not np.isfinite(norm):
        raise DegenerateConditionError(
            "first frame has vanishing density under every mixture component"
        )
    weights = np.exp(log_posterior - norm)
    new_components = []
    for w, comp in zip(weights, mix.components):
        if w <= 0.0:
            continue
        mean = np.array(comp.mean.data)
        mean[0, :] = f
        var = np.array(comp.var)
        var[0, :] = VAR_FLOOR
        new_components.append(GaussianComponent(w, LatentField(mean), var))
    # Renormalize exactly (dropped zero-weight components change nothing).
    total = sum(c.weight for c in new_components)
    new_components = [GaussianComponent(c.weight / total, c.mean, c.var) for c in new_components]
    return ConditionedMixture(mix.condition_id, new_components)


def _posterior_flat(mix: ConditionedMixture, x_flat: np.ndarray, t: float) -> np.ndarray:
    """E[X0 | X_t = x] on flat coordinates."""
    one_t = 1.0 - t
    denom = one_t * one_t * mix._vars + t * t  # (K, n) marginal variances of X_t | k
    resid = x_flat[None, :] - one_t * mix._means
    log_density = -0.5 * np.sum(resid * resid / denom + np.log(denom) + _LOG_2PI, axis=1)
    log_resp = mix._log_weights + log_density
    # Softmax with max subtraction; whole-field log densities reach magnitude
    # 1e3 and beyond, so the shift is what keeps exp() alive.
    resp = np.exp(log_resp - log_resp.max())
    resp /= resp.sum()
    cond_mean = mix._means + (one_t * mix._vars / denom) * resid
    return resp @ cond_mean


def posterior_x0_mean(mix: ConditionedMixture, x: LatentField, t: float) -> LatentField:
    """Posterior mean of the clean sample given the interpolant state at time t."""
    if not (0.0 < t <= 1.0):
        raise ValueError(f"posterior needs t in (0, 1], got {t}")
    flat = _posterior_flat(mix, x.flat, t)
    return LatentField.from_flat(flat, mix.frames, mix.frame_dim)


def _velocity_flat(mix: ConditionedMixture, x_flat: np.ndarray, t: float) -> np.ndarray:
    return (x_flat - _posterior_flat(mix, x_flat, t)) / t


def time_grid(steps: int, shift: float = 1.0, t_min: float = T_MIN) -> np.ndarray:
    """Integration grid t_0 < ... < t_N with t_i = i/N, t_0 clamped to t_min.

    ``shift`` applies the reparameterization t <- s*t / (1 + (s-1)*t) used by
    production samplers; the default s=1 keeps the grid uniform.
    """
    if steps < 1:
        raise ValueError("need at least one step")
    grid = np.linspace(0.0, 1.0, steps + 1)
    if shift != 1.0:
        grid = shift * grid / (1.0 + (shift - 1.0) * grid)
    grid[0] = max(grid[0], t_min)
    return grid


class FlowModel:
    """Registry of conditional mixtures exposing the trained-network surface.

    The unconditional branch used by classifier-free guidance is the
    prior-weighted union of all registered mixtures (each condition gets equal
    prior mass), mirroring a null prompt marginalizing over conditions.
    """

    def __init__(self):
        self._mixtures: dict[str, ConditionedMixture] = {}
        self._conditioned_cache: dict[tuple, ConditionedMixture] = {}
        self._union: ConditionedMixture | None = None

    def register(self, mix: ConditionedMixture) -> None:
        if self._mixtures and next(iter(self._mixtures.values())).shape != mix.shape:
            raise ValueError("all registered mixtures must share one latent shape")
        self._mixtures[mix.condition_id] = mix
        self._conditioned_cache.clear()
        self._union = None

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self._mixtures)

    def mixture(self, prompt: str) -> ConditionedMixture:
        try:
            return self._mixtures[prompt]
        except KeyError:
            raise UnknownConditionError(f"condition {prompt!r} was never registered") from None

    def mixture_for(self, condition: Condition) -> ConditionedMixture:
        """Mixture for a condition, with first-frame conditioning applied."""
        key = condition.cache_key()
        cached = self._conditioned_cache.get(key)
        if cached is not None:
            return cached
        mix = self.mixture(condition.prompt)
        if condition.first_frame is not None:
            mix = condition_on_first_frame(mix, condition.first_frame)
        self._conditioned_cache[key] = mix
        return mix

    def _union_mixture(self) -> ConditionedMixture:
        if self._union is None:
            if not self._mixtures:
                raise UnknownConditionError("no conditions registered")
            prior = 1.0 / len(self._mixtures)
            comps = [
                GaussianComponent(prior * c.weight, c.mean, c.var)
                for mix in self._mixtures.values()
                for c in mix.components
            ]
            self._union = ConditionedMixture("<unconditional>", comps)
        return self._union

    def _guided_flat(
        self, mix: ConditionedMixture, x_flat: np.ndarray, t: float, cfg_scale: float
    ) -> np.ndarray:
        v_cond = _velocity_flat(mix, x_flat, t)
        if cfg_scale == 1.0:
            return v_cond
        v_uncond = _velocity_flat(self._union_mixture(), x_flat, t)
        return v_uncond + cfg_scale * (v_cond - v_uncond)

    def velocity(self, query: VelocityQuery) -> LatentField:
        """Guided marginal velocity at the query point.

        cfg_scale=1 is the plain conditional velocity; cfg_scale=0 the
        unconditional one; anything else extrapolates linearly between them.
        """
        mix = self.mixture_for(query.condition)
        flat = self._guided_flat(mix, query.x.flat, query.t, query.cfg_scale)
        return LatentField.from_flat(flat, mix.frames, mix.frame_dim)

    def sample(
        self,
        condition: Condition,
        steps: int,
        stream: RngStream,
        cfg_scale: float = 1.0,
        shift: float = 1.0,
        on_step: Callable[[int, float, LatentField, LatentField], None] | None = None,
    ) -> LatentField:
        """Euler-integrate the flow from pure noise down to t_min.

        ``on_step(i, t_i, state, velocity)`` is invoked once per step so
        callers can record integration diagnostics without a second loop.
        """
        mix = self.mixture_for(condition)
        grid = time_grid(steps, shift=shift)
        z = gaussian(stream, mix.shape)
        if on_step is None:
            # Hot path: the loop stays on flat arrays, skipping per-step field
            # construction and validation (identical arithmetic either way).
            flat = z.flat.copy()
            for i in range(steps, 0, -1):
                t = float(grid[i])
                v = self._guided_flat(mix, flat, t, cfg_scale)
                flat += (float(grid[i - 1]) - t) * v
            return LatentField.from_flat(flat, mix.frames, mix.frame_dim)
        for i in range(steps, 0, -1):
            t = float(grid[i])
            v = self.velocity(VelocityQuery(z, t, condition, cfg_scale))
            on_step(i, t, z, v)
            z = LatentField(z.data + (float(grid[i - 1]) - t) * v.data)
        return z


def single_condition_model(mix: ConditionedMixture) -> FlowModel:
    """Wrap one mixture in a model (convenience for tests and oracles)."""
    model = FlowModel()
    model.register(mix)
    return model
