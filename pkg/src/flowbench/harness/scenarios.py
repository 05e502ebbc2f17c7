"""Built-in editing scenarios.

Each scenario is a pair of registered conditional mixtures plus a recipe for
the source latent. The four built-ins target one failure mode each:

* ``mean-shift``   -- a constant per-frame offset, the pure low-frequency edit.
* ``trajectory-jump`` -- straight 2-D point paths edited into a mixture of
  parabolic arcs executed at different onset times; initial noise decides when
  the jump happens, which is the coarse-feature sensitivity under study.
* ``two-object``   -- two block objects: A must change, B has identical
  marginals under both conditions but its mode is entangled with A's outcome,
  so aggregation quality shows up as block-B misalignment.
* ``bimodal-target`` -- two well-separated edit outcomes (up-arc vs down-arc),
  the seed-sensitivity probe.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..errors import ConfigError
from ..flowmodel import Condition, ConditionedMixture, FlowModel, GaussianComponent
from ..tensorcore import LatentField, stream_for


@dataclass(frozen=True)
class Scenario:
    """A named editing problem: conditions, shapes, and the source recipe."""

    name: str
    frames: int
    frame_dim: int
    mixtures: Mapping[str, ConditionedMixture]
    source_label: str
    target_label: str
    condition_on_input_frame: bool = True
    blocks: Mapping[str, tuple[int, int]] = field(default_factory=dict)

    def __post_init__(self):
        for label in (self.source_label, self.target_label):
            if label not in self.mixtures:
                raise ConfigError(f"scenario {self.name!r}: condition {label!r} not registered")

    def model(self) -> FlowModel:
        model = FlowModel()
        for mix in self.mixtures.values():
            model.register(mix)
        return model

    def source_field(self, seed: int) -> LatentField:
        """The per-seed source latent; a fixed function of (scenario, seed)."""
        stream = stream_for(seed, "scenario", self.name, "source")
        return self.mixtures[self.source_label].draw(stream)

    def conditions(self, x_src: LatentField) -> tuple[Condition, Condition]:
        """Source and target conditions, sharing the input's first frame when
        the scenario uses first-frame conditioning."""
        ff = x_src.frame(0) if self.condition_on_input_frame else None
        return Condition(self.source_label, ff), Condition(self.target_label, ff)


def _path_mixture(label, means, var, weights=None) -> ConditionedMixture:
    weights = weights or [1.0 / len(means)] * len(means)
    comps = [GaussianComponent(w, LatentField(m), var) for w, m in zip(weights, means)]
    return ConditionedMixture(label, comps)


def mean_shift(
    offset: float = 0.8,
    sigma_src: float = 0.3,
    sigma_tar: float = 0.5,
    frames: int = 8,
    frame_dim: int = 4,
) -> Scenario:
    """Single-Gaussian source and target differing by a constant offset.

    Pass offset=0 and sigma_tar=sigma_src for the degenerate variant whose
    source and target laws coincide.
    """
    src = np.zeros((frames, frame_dim))
    tar = np.full((frames, frame_dim), offset)
    return Scenario(
        name="mean-shift",
        frames=frames,
        frame_dim=frame_dim,
        mixtures={
            "baseline": _path_mixture("baseline", [src], sigma_src**2),
            "shifted": _path_mixture("shifted", [tar], sigma_tar**2),
        },
        source_label="baseline",
        target_label="shifted",
        condition_on_input_frame=False,
    )


def trajectory_jump(
    frames: int = 16,
    slope: float = 0.3,
    sigma_src: float = 0.05,
    sigma_tar: float = 0.15,
    jump_times: tuple[float, ...] = (3.0, 7.5, 12.0),
    jump_height: float = 2.0,
    jump_width: float = 1.5,
) -> Scenario:
    """Straight 2-D paths edited into arcs executed at different moments.

    All target components share the source's first frame and differ in when
    the arc happens, so pure noise at the start of the edit decides the
    coarse spatio-temporal outcome.
    """
    f = np.arange(frames, dtype=np.float64)
    straight = np.stack([f * slope, np.zeros(frames)], axis=1)
    arcs = []
    for center in jump_times:
        bump = jump_height * np.exp(-0.5 * ((f - center) / jump_width) ** 2)
        arcs.append(np.stack([f * slope, bump], axis=1))
    return Scenario(
        name="trajectory-jump",
        frames=frames,
        frame_dim=2,
        mixtures={
            "straight": _path_mixture("straight", [straight], sigma_src**2),
            "jump": _path_mixture("jump", arcs, sigma_tar**2),
        },
        source_label="straight",
        target_label="jump",
    )


def two_object(
    frames: int = 16,
    slope_a: float = 0.3,
    slope_b: float = 0.15,
    arc_height: float = 2.2,
    sigma_a_src: float = 0.08,
    sigma_a_tar: float = 0.2,
    sigma_b: float = 0.1,
) -> Scenario:
    """Two-block latent: object A (dims 0-1) must change, object B (dims 2-3)
    must not.

    Block B's marginal is the same two-mode mixture under both conditions (so
    nothing about B is required to change), but in the target law each B mode
    is entangled with one A outcome. An editor that mixes A outcomes therefore
    drags B off its source mode; an editor that selects the source-consistent
    path keeps B aligned.
    """
    f = np.arange(frames, dtype=np.float64)
    u = f / (frames - 1)
    a_straight = np.stack([f * slope_a, np.zeros(frames)], axis=1)
    a_arc = np.stack([f * slope_a, arc_height * 4 * u * (1 - u)], axis=1)
    b_modes = [
        np.stack([np.zeros(frames), slope_b * f], axis=1),
        np.stack([np.zeros(frames), -slope_b * f], axis=1),
    ]

    def assemble(a_mean, b_mean, sigma_a):
        mean = np.concatenate([a_mean, b_mean], axis=1)
        var = np.concatenate(
            [np.full((frames, 2), sigma_a**2), np.full((frames, 2), sigma_b**2)], axis=1
        )
        return GaussianComponent(0.5, LatentField(mean), var)

    src = ConditionedMixture("calm", [assemble(a_straight, b, sigma_a_src) for b in b_modes])
    tar = ConditionedMixture("leap", [assemble(a_arc, b, sigma_a_tar) for b in b_modes])
    return Scenario(
        name="two-object",
        frames=frames,
        frame_dim=4,
        mixtures={"calm": src, "leap": tar},
        source_label="calm",
        target_label="leap",
        blocks={"a": (0, 2), "b": (2, 4)},
    )


def bimodal_target(
    frames: int = 16,
    slope: float = 0.3,
    sigma_src: float = 0.05,
    sigma_tar: float = 0.2,
    arc_height: float = 2.2,
) -> Scenario:
    """Straight paths edited into either an up-arc or a down-arc."""
    f = np.arange(frames, dtype=np.float64)
    u = f / (frames - 1)
    straight = np.stack([f * slope, np.zeros(frames)], axis=1)
    arcs = [
        np.stack([f * slope, sign * arc_height * 4 * u * (1 - u)], axis=1)
        for sign in (1.0, -1.0)
    ]
    return Scenario(
        name="bimodal-target",
        frames=frames,
        frame_dim=2,
        mixtures={
            "straight": _path_mixture("straight", [straight], sigma_src**2),
            "deflected": _path_mixture("deflected", arcs, sigma_tar**2),
        },
        source_label="straight",
        target_label="deflected",
    )


def builtin_scenarios() -> list[Scenario]:
    return [mean_shift(), trajectory_jump(), two_object(), bimodal_target()]


def get_scenario(name: str) -> Scenario:
    for scenario in builtin_scenarios():
        if scenario.name == name:
            return scenario
    known = [s.name for s in builtin_scenarios()]
    raise ConfigError(f"unknown scenario {name!r}; built-ins: {known}")


_SCENARIO_KEYS = {
    "name", "frames", "frame_dim", "conditions", "source", "target",
    "condition_on_input_frame", "blocks",
}
_COMPONENT_KEYS = {"weight", "mean", "var"}


def scenario_from_dict(spec: dict) -> Scenario:
    """Build a scenario from its config-file form (strict keys).

    Component means are nested ``frames x frame_dim`` lists; ``var`` is either
    a scalar or a nested list of the same shape.
    """
    unknown = set(spec) - _SCENARIO_KEYS
    if unknown:
        raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
    missing = {"name", "frames", "frame_dim", "conditions", "source", "target"} - set(spec)
    if missing:
        raise ConfigError(f"scenario config missing keys: {sorted(missing)}")
    frames, frame_dim = int(spec["frames"]), int(spec["frame_dim"])
    mixtures = {}
    for label, cond in spec["conditions"].items():
        if set(cond) != {"components"}:
            raise ConfigError(f"condition {label!r} must have exactly a 'components' list")
        comps = []
        for comp in cond["components"]:
            unknown = set(comp) - _COMPONENT_KEYS
            if unknown:
                raise ConfigError(f"unknown component keys: {sorted(unknown)}")
            mean = np.asarray(comp["mean"], dtype=np.float64)
            if mean.shape != (frames, frame_dim):
                raise ConfigError(
                    f"component mean shape {mean.shape} != ({frames}, {frame_dim})"
                )
            var = comp["var"]
            var = float(var) if np.isscalar(var) else np.asarray(var, dtype=np.float64)
            comps.append(GaussianComponent(float(comp["weight"]), LatentField(mean), var))
        mixtures[label] = ConditionedMixture(label, comps)
    blocks = {k: (int(v[0]), int(v[1])) for k, v in spec.get("blocks", {}).items()}
    return Scenario(
        name=str(spec["name"]),
        frames=frames,
        frame_dim=frame_dim,
        mixtures=mixtures,
        source_label=str(spec["source"]),
        target_label=str(spec["target"]),
        condition_on_input_frame=bool(spec.get("condition_on_input_frame", True)),
        blocks=blocks,
    )
