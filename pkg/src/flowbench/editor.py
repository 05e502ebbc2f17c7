"""Inversion-free editing algorithms and their baselines.

Two editors share one engine:

* ``flowedit`` traces a noise-free path from the source latent by Euler-stepping
  the expected difference between target- and source-conditioned velocities,
  with fresh i.i.d. noise per step and slot and a plain average across slots.
* ``dynaedit`` augments the same path with similarity-guided aggregation (SGA),
  a softmax-weighted combination of candidate edit velocities scored by how
  close their projected endpoints stay to the source, and with an annealed
  noise-correlation (ANC) schedule that makes the per-slot noise a Markov chain
  whose step-to-step correlation grows as integration approaches t=0.

Baselines: noise-then-denoise (``sdedit_baseline``) and round-trip ODE
inversion (``ode_inversion_baseline``).

Noise discipline: the fresh draw for slot j at timestep i always comes from a
stream derived from (run seed, j, i). Shared, refreshed, and anchored noise are
then exact reparameterizations of one mechanism, and editors with aligned
configurations reproduce each other bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError
from .flowmodel import Condition, FlowModel, VelocityQuery, time_grid
from .tensorcore import LatentField, RngStream, axpy, cosine_sim, gaussian, neg_mse, stream_for

SIMILARITY_FNS = {"cosine": cosine_sim, "neg_mse": neg_mse}

# Hyperparameter presets: (source CFG, target CFG, SGA temperature). The two
# CFG pairs trade edit strength against source fidelity; the two temperatures
# trade hard selection (strong alignment) against soft blending.
PRESETS: Mapping[str, dict] = {
    "low-cfg-select": {"cfg_src": 2.5, "cfg_tar": 4.5, "tau": 0.01},
    "low-cfg-blend": {"cfg_src": 2.5, "cfg_tar": 4.5, "tau": 1.0},
    "high-cfg-select": {"cfg_src": 4.5, "cfg_tar": 8.5, "tau": 0.01},
    "high-cfg-blend": {"cfg_src": 4.5, "cfg_tar": 8.5, "tau": 1.0},
}


@dataclass(frozen=True)
class AncSchedule:
    """Noise-correlation schedule a(t) for the Markov update of Eq. slots.

    kinds:
      iid                  -- a = 0 everywhere (fresh noise each step)
      constant             -- a = 1 after the first step (one frozen noise)
      markov_increasing    -- a(t) = clamp((1-t)/(1-t_saturate), 0, 1):
                              zero correlation at t=1, full from t_saturate on
      markov_decreasing    -- time-mirror of the increasing schedule
      non_markov_increasing-- increasing coefficients, but mixed against one
                              fixed anchor map instead of the previous slot
    """

    kind: str = "markov_increasing"
    t_saturate: float = 0.25

    KINDS = ("iid", "constant", "markov_increasing", "markov_decreasing", "non_markov_increasing")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigError(f"unknown ANC schedule kind {self.kind!r}; pick one of {self.KINDS}")
        if not (0.0 < self.t_saturate < 1.0):
            raise ConfigError(f"t_saturate must lie in (0, 1), got {self.t_saturate}")

    def a(self, t: float, first_step: bool) -> float:
        """Mixing coefficient for the update performed at time t.

        The first executed step always returns 0: slots start from zero and
        must be filled with unit-variance noise before any mixing.
        """
        if first_step:
            return 0.0
        if self.kind == "iid":
            return 0.0
        if self.kind == "constant":
            return 1.0
        if self.kind in ("markov_increasing", "non_markov_increasing"):
            return float(np.clip((1.0 - t) / (1.0 - self.t_saturate), 0.0, 1.0))
        # markov_decreasing: mirrored in time, high correlation early, none late
        return float(np.clip(t / (1.0 - self.t_saturate), 0.0, 1.0))

    @property
    def anchored(self) -> bool:
        return self.kind == "non_markov_increasing"


@dataclass(frozen=True)
class NoiseBank:
    """Correlated noise state: one evolving field per aggregation slot.

    ``step`` is the timestep index the next update belongs to; the fresh draw
    for slot j at that step comes from ``stream.child(j, step)``, so noise
    identity is a pure function of (seed, slot, timestep).
    """

    slots: tuple[LatentField, ...]
    stream: RngStream
    step: int
    anchors: tuple[LatentField, ...] | None = None

    @classmethod
    def create(
        cls,
        n_slots: int,
        shape: tuple[int, int],
        stream: RngStream,
        first_step: int,
        anchored: bool = False,
    ) -> "NoiseBank":
        slots = tuple(LatentField.zeros(*shape) for _ in range(n_slots))
        anchors = None
        if anchored:
            anchors = tuple(gaussian(stream.child("anchor", j), shape) for j in range(n_slots))
        return cls(slots=slots, stream=stream, step=first_step, anchors=anchors)


def anc_step(bank: NoiseBank, a: float) -> NoiseBank:
    """Advance every slot one timestep with mixing coefficient ``a``.

    Markov banks update w~ <- sqrt(a) * w~ + sqrt(1-a) * w with fresh w;
    anchored banks mix the fresh draw against their fixed anchor map instead.
    Either way each slot stays marginally N(0, I).
    """
    if not (0.0 <= a <= 1.0):
        raise ValueError(f"mixing coefficient must lie in [0, 1], got {a}")
    keep = math.sqrt(a)
    fresh_scale = math.sqrt(1.0 - a)
    new_slots = []
    for j, slot in enumerate(bank.slots):
        base = bank.anchors[j] if bank.anchors is not None else slot
        if a == 1.0 and bank.anchors is None:
            new_slots.append(slot)
            continue
        w = gaussian(bank.stream.child(j, bank.step), slot.shape)
        new_slots.append(LatentField(keep * base.data + fresh_scale * w.data))
    return replace(bank, slots=tuple(new_slots), step=bank.step - 1)


@dataclass(frozen=True)
class EditConfig:
    """All sampler knobs for one editing run."""

    steps: int = 50
    n_max: int | None = None  # default: steps, i.e. start from pure noise
    n_sga_schedule: Mapping[int, int] | None = None  # timestep index -> slot count
    tau: float = 0.01
    anc_schedule: AncSchedule = field(default_factory=AncSchedule)
    cfg_src: float = 2.5
    cfg_tar: float = 4.5
    similarity: str = "cosine"
    seed: int = 0
    shift: float = 1.0

    def __post_init__(self):
        if self.steps < 1:
            raise ConfigError(f"steps must be >= 1, got {self.steps}")
        n_max = self.steps if self.n_max is None else self.n_max
        if not (0 <= n_max <= self.steps):
            raise ConfigError(f"n_max must lie in [0, steps], got {n_max}")
        object.__setattr__(self, "n_max", n_max)
        if not self.tau > 0.0:
            raise ConfigError(f"tau must be positive, got {self.tau}")
        if self.similarity not in SIMILARITY_FNS:
            raise ConfigError(f"unknown similarity {self.similarity!r}")
        if self.n_sga_schedule is not None:
            bad = {i: k for i, k in self.n_sga_schedule.items() if k < 1}
            if bad:
                raise ConfigError(f"slot counts must be >= 1, got {bad}")

    def n_sga(self, i: int) -> int:
        """Aggregation slot count at timestep i.

        Default: 5 slots on the first three executed steps, 1 afterwards.
        Explicit schedules fall back to 1 for unlisted steps.
        """
        if self.n_sga_schedule is None:
            return 5 if i > self.n_max - 3 else 1
        return int(self.n_sga_schedule.get(i, 1))

    def updated(self, **changes) -> "EditConfig":
        return replace(self, **changes)

    @classmethod
    def from_preset(cls, name: str, **overrides) -> "EditConfig":
        try:
            knobs = PRESETS[name]
        except KeyError:
            raise ConfigError(f"unknown preset {name!r}; pick one of {sorted(PRESETS)}") from None
        return cls(**{**knobs, **overrides})


def constant_sga_schedule(steps: int, count: int) -> dict[int, int]:
    """A fixed slot count on every step (the plain-averaging budget)."""
    return {i: count for i in range(1, steps + 1)}


@dataclass(frozen=True)
class StepRecord:
    """Diagnostics for one executed integration step."""

    step: int
    t: float
    anc_a: float
    n_active: int
    similarities: tuple[float, ...]
    weights: tuple[float, ...]
    vbar_norm: float
    noise_cos_prev: tuple[float, ...] | None  # per bank slot, vs previous step
    velocity_cos_prev: float | None  # aggregated direction vs previous step
    snapshot: LatentField | None = None

    def __post_init__(self):
        if self.weights and abs(sum(self.weights) - 1.0) > 1e-9:
            raise ValueError(f"step weights must sum to 1, got {sum(self.weights)}")


@dataclass(frozen=True)
class EditTrace:
    """One record per executed step, in execution order."""

    records: tuple[StepRecord, ...]

    def __len__(self) -> int:
        return len(self.records)


def noisy_source(x_src: LatentField, w: LatentField, t: float) -> LatentField:
    """Interpolant state of the source latent at noise level t."""
    if not (0.0 <= t <= 1.0):
        raise ValueError(f"t must lie in [0, 1], got {t}")
    return LatentField((1.0 - t) * x_src.data + t * w.data)


def noisy_target(z_edit: LatentField, z_src: LatentField, x_src: LatentField) -> LatentField:
    """Noisy target state carrying the accumulated edit on top of z_src.

    Grouped as (z_edit - x_src) + z_src so that an untouched edit state
    (z_edit identical to x_src) yields z_src bit-exactly.
    """
    return LatentField((z_edit.data - x_src.data) + z_src.data)


def velocity_difference(
    model: FlowModel,
    z_tar: LatentField,
    z_src: LatentField,
    t: float,
    cond_src: Condition,
    cond_tar: Condition,
    cfg_src: float = 1.0,
    cfg_tar: float = 1.0,
) -> LatentField:
    """Guided target velocity minus guided source velocity; the edit direction."""
    v_tar = model.velocity(VelocityQuery(z_tar, t, cond_tar, cfg_tar))
    v_src = model.velocity(VelocityQuery(z_src, t, cond_src, cfg_src))
    return v_tar - v_src


def edit_projection(z_edit: LatentField, v: LatentField, t: float) -> LatentField:
    """Projected final edit if velocity v were applied for the remaining span t."""
    if t <= 0.0:
        raise ValueError(f"projection needs t > 0, got {t}")
    return axpy(-t, v, z_edit)


def softmax_weights(similarities: np.ndarray, tau: float) -> np.ndarray:
    """Temperature softmax on the similarity scores.

    Computed in the log domain with max subtraction: at tau ~ 1e-3 the scores
    reach magnitude 1e3 and naive exponentiation overflows. tau = inf is the
    exact-uniform limit (bitwise 1/n weights, not just approximately uniform).
    """
    n = len(similarities)
    if math.isinf(tau):
        return np.full(n, 1.0 / n)
    z = np.asarray(similarities, dtype=np.float64) / tau
    z = z - z.max()
    w = np.exp(z)
    return w / w.sum()


def sga_aggregate(
    z_edit: LatentField,
    velocities: Sequence[LatentField],
    t: float,
    x_src: LatentField,
    tau: float,
    similarity: str = "cosine",
) -> tuple[LatentField, np.ndarray, np.ndarray]:
    """Similarity-guided aggregation of candidate edit velocities.

    Each candidate is projected to its implied final edit, scored by similarity
    to the source, and the scores are softmax-normalized. The combined
    prediction, mapped back to a velocity, equals the weights-weighted sum of
    the candidate velocities (the projection map is affine and the weights sum
    to one), so that form is what gets computed. Returns (velocity, weights,
    similarities).
    """
    if not velocities:
        raise ValueError("need at least one candidate velocity")
    if t <= 0.0:
        raise ValueError(f"aggregation needs t > 0, got {t}")
    sim_fn = SIMILARITY_FNS[similarity]
    sims = np.array([sim_fn(x_src, edit_projection(z_edit, v, t)) for v in velocities])
    weights = softmax_weights(sims, tau)
    stacked = np.stack([v.flat for v in velocities])
    vbar = LatentField.from_flat(weights @ stacked, z_edit.frames, z_edit.frame_dim)
    return vbar, weights, sims


def _edit_loop(
    model: FlowModel,
    x_src: LatentField,
    cond_src: Condition,
    cond_tar: Condition,
    cfg: EditConfig,
    use_sga: bool,
    force_iid: bool,
    snapshot_stride: int = 0,
) -> tuple[LatentField, EditTrace]:
    n_max = cfg.n_max
    if n_max == 0:
        return x_src, EditTrace(records=())
    grid = time_grid(cfg.steps, shift=cfg.shift)
    executed = range(n_max, 0, -1)
    counts = {i: cfg.n_sga(i) for i in executed}
    n_slots = counts[n_max]
    peak = max(counts.values())
    if peak > n_slots:
        raise ConfigError(
            f"slot schedule requests {peak} slots but the bank holds {n_slots} "
            f"(sized by the first executed step)"
        )
    schedule = AncSchedule("iid") if force_iid else cfg.anc_schedule
    bank = NoiseBank.create(
        n_slots,
        x_src.shape,
        stream_for(cfg.seed, "edit-noise"),
        first_step=n_max,
        anchored=schedule.anchored,
    )
    z = x_src
    prev_vbar: LatentField | None = None
    records: list[StepRecord] = []
    for step_no, i in enumerate(executed):
        t = float(grid[i])
        a = schedule.a(t, first_step=step_no == 0)
        new_bank = anc_step(bank, a)
        if step_no == 0:
            noise_cos = None
        else:
            noise_cos = tuple(
                cosine_sim(new, old) for new, old in zip(new_bank.slots, bank.slots)
            )
        diffs = []
        for j in range(counts[i]):
            z_src_j = noisy_source(x_src, new_bank.slots[j], t)
            z_tar_j = noisy_target(z, z_src_j, x_src)
            diffs.append(
                velocity_difference(
                    model, z_tar_j, z_src_j, t, cond_src, cond_tar, cfg.cfg_src, cfg.cfg_tar
                )
            )
        tau = cfg.tau if use_sga else math.inf
        vbar, weights, sims = sga_aggregate(z, diffs, t, x_src, tau, cfg.similarity)
        velocity_cos = None if prev_vbar is None else _direction_cosine(vbar, prev_vbar)
        snapshot = None
        if snapshot_stride > 0 and step_no % snapshot_stride == 0:
            snapshot = z
        records.append(
            StepRecord(
                step=i,
                t=t,
                anc_a=a,
                n_active=counts[i],
                similarities=tuple(float(s) for s in sims),
                weights=tuple(float(w) for w in weights),
                vbar_norm=vbar.norm(),
                noise_cos_prev=noise_cos,
                velocity_cos_prev=velocity_cos,
                snapshot=snapshot,
            )
        )
        z = axpy(float(grid[i - 1]) - t, vbar, z)
        bank = new_bank
        prev_vbar = vbar
    return z, EditTrace(records=tuple(records))


def _direction_cosine(a: LatentField, b: LatentField) -> float | None:
    """Cosine of two velocity fields, or None when either is numerically zero."""
    if a.norm() < 1e-12 or b.norm() < 1e-12:
        return None
    return cosine_sim(a, b)


def dynaedit(
    model: FlowModel,
    x_src: LatentField,
    cond_src: Condition,
    cond_tar: Condition,
    cfg: EditConfig,
    snapshot_stride: int = 0,
) -> tuple[LatentField, EditTrace]:
    """Noise-free editing with SGA aggregation and the ANC noise schedule.

    Per step: evolve the noise bank one ANC update, build noisy source/target
    pairs per active slot, take guided velocity differences, aggregate them
    with SGA, and Euler-step the edit state. Slots beyond the active count
    still receive ANC updates so slot histories stay continuous.
    """
    return _edit_loop(
        model, x_src, cond_src, cond_tar, cfg,
        use_sga=True, force_iid=False, snapshot_stride=snapshot_stride,
    )


def flowedit(
    model: FlowModel,
    x_src: LatentField,
    cond_src: Condition,
    cond_tar: Condition,
    cfg: EditConfig,
    snapshot_stride: int = 0,
) -> tuple[LatentField, EditTrace]:
    """Baseline inversion-free editing: i.i.d. noise, plain velocity average.

    Reads its per-step sample count from ``cfg.n_sga`` so budget-matched
    comparisons against ``dynaedit`` are exact; ``cfg.tau`` and
    ``cfg.anc_schedule`` are ignored by definition of the baseline.
    """
    return _edit_loop(
        model, x_src, cond_src, cond_tar, cfg,
        use_sga=False, force_iid=True, snapshot_stride=snapshot_stride,
    )


def _integrate(
    model: FlowModel,
    z: LatentField,
    condition: Condition,
    grid: np.ndarray,
    start: int,
    cfg_scale: float,
    records: list[StepRecord] | None = None,
) -> LatentField:
    """Euler-integrate the generation ODE from grid index ``start`` down to 0."""
    prev_v: LatentField | None = None
    for i in range(start, 0, -1):
        t = float(grid[i])
        v = model.velocity(VelocityQuery(z, t, condition, cfg_scale))
        if records is not None:
            records.append(
                StepRecord(
                    step=i,
                    t=t,
                    anc_a=0.0,
                    n_active=1,
                    similarities=(),
                    weights=(1.0,),
                    vbar_norm=v.norm(),
                    noise_cos_prev=None,
                    velocity_cos_prev=None if prev_v is None else _direction_cosine(v, prev_v),
                )
            )
        z = axpy(float(grid[i - 1]) - t, v, z)
        prev_v = v
    return z


def sample_traced(
    model: FlowModel,
    condition: Condition,
    steps: int,
    stream: RngStream,
    cfg_scale: float = 1.0,
    shift: float = 1.0,
) -> tuple[LatentField, EditTrace]:
    """Plain generation from noise, with per-step integration diagnostics."""
    mix = model.mixture_for(condition)
    grid = time_grid(steps, shift=shift)
    z = gaussian(stream, mix.shape)
    records: list[StepRecord] = []
    z = _integrate(model, z, condition, grid, steps, cfg_scale, records)
    return z, EditTrace(records=tuple(records))


def sdedit_baseline(
    model: FlowModel,
    x_src: LatentField,
    cond_tar: Condition,
    t_start: float,
    steps: int,
    stream: RngStream,
    cfg_scale: float = 1.0,
) -> LatentField:
    """Noise-then-denoise editing: renoise the source to t_start, generate back."""
    z, _ = sdedit_traced(model, x_src, cond_tar, t_start, steps, stream, cfg_scale)
    return z


def sdedit_traced(
    model: FlowModel,
    x_src: LatentField,
    cond_tar: Condition,
    t_start: float,
    steps: int,
    stream: RngStream,
    cfg_scale: float = 1.0,
) -> tuple[LatentField, EditTrace]:
    if not (0.0 <= t_start <= 1.0):
        raise ValueError(f"t_start must lie in [0, 1], got {t_start}")
    grid = time_grid(steps)
    # Quantize the start time onto the grid so t_start=1 is exactly a plain
    # generation and t_start=0 is exactly the identity.
    start = round(t_start * steps)
    if start == 0:
        return x_src, EditTrace(records=())
    w = gaussian(stream, x_src.shape)
    z = noisy_source(x_src, w, float(grid[start]))
    records: list[StepRecord] = []
    z = _integrate(model, z, cond_tar, grid, start, cfg_scale, records)
    return z, EditTrace(records=tuple(records))


def ode_inversion_baseline(
    model: FlowModel,
    x_src: LatentField,
    cond_src: Condition,
    cond_tar: Condition,
    steps: int,
    cfg_src: float = 1.0,
    cfg_tar: float = 1.0,
) -> LatentField:
    """Editing by inversion: integrate the source forward to t=1 under the
    source condition, then generate backward under the target condition."""
    z, _ = ode_inversion_traced(model, x_src, cond_src, cond_tar, steps, cfg_src, cfg_tar)
    return z


def ode_inversion_traced(
    model: FlowModel,
    x_src: LatentField,
    cond_src: Condition,
    cond_tar: Condition,
    steps: int,
    cfg_src: float = 1.0,
    cfg_tar: float = 1.0,
) -> tuple[LatentField, EditTrace]:
    grid = time_grid(steps)
    records: list[StepRecord] = []
    z = x_src
    prev_v: LatentField | None = None
    for i in range(steps):  # forward pass, t_min up to 1
        t = float(grid[i])
        v = model.velocity(VelocityQuery(z, t, cond_src, cfg_src))
        records.append(
            StepRecord(
                step=i,
                t=t,
                anc_a=0.0,
                n_active=1,
                similarities=(),
                weights=(1.0,),
                vbar_norm=v.norm(),
                noise_cos_prev=None,
                velocity_cos_prev=None if prev_v is None else _direction_cosine(v, prev_v),
            )
        )
        z = axpy(float(grid[i + 1]) - t, v, z)
        prev_v = v
    z = _integrate(model, z, cond_tar, grid, steps, cfg_tar, records)
    return z, EditTrace(records=tuple(records))
