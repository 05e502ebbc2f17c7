"""Study execution and ablation suites.

A study runs one method over a seed list and writes, per seed, a metrics row
(CSV), a step trace (JSONL), and the endpoint latent (binary), plus summary
SVG plots. Outputs are keyed by seed and independent of execution order;
rerunning an identical spec reproduces every CSV/trace/latent byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.stats import binomtest

from ..editor import (
    EditConfig,
    EditTrace,
    dynaedit,
    flowedit,
    ode_inversion_traced,
    sample_traced,
    sdedit_traced,
)
from ..errors import ConfigError
from ..flowmodel import FlowModel
from ..metrics import (
    correlation_trace,
    default_window,
    energy_distance,
    jitter_energy,
    late_half_dispersion,
    lowfreq_alignment,
)
from ..tensorcore import LatentField, stream_for
from . import fileio, plots
from .scenarios import Scenario, get_scenario

METHODS = ("dynaedit", "flowedit", "sdedit", "ode_inversion", "sample")

_SPEC_KEYS = {
    "scenario", "method", "seeds", "out_dir", "config",
    "sdedit_t_start", "sample_cfg", "snapshot_stride", "plots",
}


@dataclass(frozen=True)
class StudySpec:
    """One study: a scenario, a method, a config, and a seed list."""

    scenario: str
    method: str
    seeds: tuple[int, ...]
    out_dir: str | Path
    config: EditConfig = field(default_factory=EditConfig)
    sdedit_t_start: float = 0.6
    sample_cfg: float = 1.0
    snapshot_stride: int = 0
    plots: bool = True

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; pick one of {METHODS}")
        if not self.seeds:
            raise ConfigError("seed list must be nonempty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seed list must be duplicate-free")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))

    @classmethod
    def from_dict(cls, data: dict, out_dir: str | Path | None = None) -> "StudySpec":
        unknown = set(data) - _SPEC_KEYS
        if unknown:
            raise ConfigError(f"unknown study keys: {sorted(unknown)}")
        missing = {"scenario", "method", "seeds"} - set(data)
        if missing:
            raise ConfigError(f"study config missing keys: {sorted(missing)}")
        config = fileio.config_from_dict(data.get("config") or {})
        out = out_dir if out_dir is not None else data.get("out_dir")
        if out is None:
            raise ConfigError("study needs an output directory")
        return cls(
            scenario=str(data["scenario"]),
            method=str(data["method"]),
            seeds=tuple(int(s) for s in data["seeds"]),
            out_dir=out,
            config=config,
            sdedit_t_start=float(data.get("sdedit_t_start", 0.6)),
            sample_cfg=float(data.get("sample_cfg", 1.0)),
            snapshot_stride=int(data.get("snapshot_stride", 0)),
            plots=bool(data.get("plots", True)),
        )


def _run_method(
    spec: StudySpec, scenario: Scenario, model: FlowModel, seed: int
) -> tuple[LatentField, LatentField, EditTrace]:
    """Returns (x_src, endpoint, trace) for one seed."""
    x_src = scenario.source_field(seed)
    cond_src, cond_tar = scenario.conditions(x_src)
    cfg = replace(spec.config, seed=seed)
    if spec.method == "dynaedit":
        z, trace = dynaedit(model, x_src, cond_src, cond_tar, cfg, spec.snapshot_stride)
    elif spec.method == "flowedit":
        z, trace = flowedit(model, x_src, cond_src, cond_tar, cfg, spec.snapshot_stride)
    elif spec.method == "sdedit":
        z, trace = sdedit_traced(
            model, x_src, cond_tar, spec.sdedit_t_start, cfg.steps,
            stream_for(seed, "sdedit-init"), cfg.cfg_tar,
        )
    elif spec.method == "ode_inversion":
        z, trace = ode_inversion_traced(
            model, x_src, cond_src, cond_tar, cfg.steps, cfg.cfg_src, cfg.cfg_tar
        )
    else:  # sample
        z, trace = sample_traced(
            model, cond_tar, cfg.steps, stream_for(seed, "sample-init"), spec.sample_cfg
        )
    return x_src, z, trace


def target_distance(scenario: Scenario, model: FlowModel, x_src: LatentField, z: LatentField) -> float:
    """Distance from the endpoint to the nearest target-mixture component mean."""
    _, cond_tar = scenario.conditions(x_src)
    mix = model.mixture_for(cond_tar)
    return min(float(np.linalg.norm(z.flat - c.mean.flat)) for c in mix.components)


def _metric_row(
    spec: StudySpec, scenario: Scenario, model: FlowModel, seed: int,
    x_src: LatentField, z: LatentField, trace: EditTrace,
) -> dict:
    window = default_window(scenario.frames)
    if len(trace) >= 2:
        noise_corr, velocity_corr = correlation_trace(trace)
        noise_mean = float(np.nanmean(noise_corr)) if np.isfinite(noise_corr).any() else math.nan
        vel_mean = (
            float(np.nanmean(velocity_corr)) if np.isfinite(velocity_corr).any() else math.nan
        )
    else:
        noise_mean = vel_mean = math.nan
    return {
        "scenario": scenario.name,
        "method": spec.method,
        "seed": seed,
        "steps": spec.config.steps,
        "n_max": spec.config.n_max,
        "jitter": repr(jitter_energy(z)) if scenario.frames >= 3 else "",
        "lowfreq_alignment": repr(lowfreq_alignment(z, x_src, window)),
        "target_distance": repr(target_distance(scenario, model, x_src, z)),
        "noise_corr_mean": repr(noise_mean),
        "velocity_corr_mean": repr(vel_mean),
        "latent_file": f"latent_seed{seed}.bin",
        "trace_file": f"trace_seed{seed}.jsonl",
    }


def run_study(spec: StudySpec, scenario: Scenario | None = None) -> dict:
    """Execute a study; returns a manifest of written files.

    ``scenario`` overrides the by-name lookup, for externally defined
    scenario configs.
    """
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if scenario is None:
        scenario = get_scenario(spec.scenario)
    elif scenario.name != spec.scenario:
        raise ConfigError(
            f"study names scenario {spec.scenario!r} but got {scenario.name!r}"
        )
    model = scenario.model()
    rows = []
    traces = {}
    for seed in sorted(spec.seeds):
        x_src, z, trace = _run_method(spec, scenario, model, seed)
        fileio.write_latent(out / f"latent_seed{seed}.bin", z)
        fileio.write_trace(out / f"trace_seed{seed}.jsonl", trace)
        rows.append(_metric_row(spec, scenario, model, seed, x_src, z, trace))
        traces[seed] = trace
    fileio.write_metrics_csv(out / "metrics.csv", rows)
    manifest = {
        "metrics": str(out / "metrics.csv"),
        "latents": [str(out / r["latent_file"]) for r in rows],
        "traces": [str(out / r["trace_file"]) for r in rows],
    }
    if spec.plots:
        manifest["plots"] = _study_plots(out, spec, rows, traces)
    return manifest


def _study_plots(out: Path, spec: StudySpec, rows: list[dict], traces: dict) -> list[str]:
    written = []
    curves = []
    for seed, trace in sorted(traces.items()):
        if len(trace) >= 2:
            noise_corr, velocity_corr = correlation_trace(trace)
            curves.append((f"seed {seed}", noise_corr, velocity_corr))
        if len(curves) >= 6:
            break
    if curves:
        path = out / "correlation_traces.svg"
        plots.plot_correlation_traces(path, curves, title=f"{spec.scenario} / {spec.method}")
        written.append(str(path))
    values = {"jitter": [], "lowfreq_alignment": [], "target_distance": []}
    for row in rows:
        for key in values:
            if row[key]:
                values[key].append(float(row[key]))
    path = out / "metric_distributions.svg"
    plots.plot_metric_distributions(path, values, title=f"{spec.scenario} / {spec.method}")
    written.append(str(path))
    return written


def sign_test(wins: int, trials: int) -> float:
    """One-sided sign test: p of >= wins successes under a fair coin."""
    if trials == 0:
        return 1.0
    return float(binomtest(wins, trials, alternative="greater").pvalue)


@dataclass(frozen=True)
class _Arm:
    name: str
    method: str
    config: EditConfig


def _paired_metric_runs(
    scenario: Scenario,
    arms: Sequence[_Arm],
    seeds: Sequence[int],
    metric: Callable[[Scenario, LatentField, LatentField, EditTrace], float],
) -> dict[str, np.ndarray]:
    model = scenario.model()
    out: dict[str, list[float]] = {arm.name: [] for arm in arms}
    for seed in seeds:
        x_src = scenario.source_field(seed)
        cond_src, cond_tar = scenario.conditions(x_src)
        for arm in arms:
            cfg = replace(arm.config, seed=seed)
            runner = dynaedit if arm.method == "dynaedit" else flowedit
            z, trace = runner(model, x_src, cond_src, cond_tar, cfg)
            out[arm.name].append(metric(scenario, x_src, z, trace))
    return {k: np.array(v) for k, v in out.items()}


def _jitter_metric(scenario, x_src, z, trace):
    return jitter_energy(z)


def _block_b_alignment(scenario, x_src, z, trace):
    lo, hi = scenario.blocks["b"]
    window = default_window(scenario.frames)
    return lowfreq_alignment(z.block(lo, hi), x_src.block(lo, hi), window)


def _dispersion_metric(scenario, x_src, z, trace):
    return late_half_dispersion(correlation_trace(trace)[1])


# Frozen ablation configurations. The ANC (jitter) pairing needs the strong
# guidance pair: extrapolation past the conditional/unconditional hull is what
# amplifies noise-to-noise inconsistency into visible roughness. The start-step
# pairing instead runs unguided on a shifted grid, so the anchor effect of the
# lower start-noise level is not drowned by first-step extrapolation overshoot.
_ANC_CFG = EditConfig(steps=10, cfg_src=4.5, cfg_tar=8.5, tau=0.01)
_SGA_CFG = EditConfig(steps=50, cfg_src=2.5, cfg_tar=4.5, tau=0.01)
_SCHED_CFG = EditConfig(steps=50, cfg_src=2.5, cfg_tar=4.5, tau=0.01)
_NMAX_STEPS = 8
_NMAX_CFG = EditConfig(steps=_NMAX_STEPS, cfg_src=1.0, cfg_tar=1.0, tau=0.01, shift=0.5)

SUITES = ("sga", "anc", "schedules", "similarity", "nmax")


def ablation_suite(
    name: str, out_dir: str | Path, n_seeds: int = 24, make_plots: bool = True
) -> dict:
    """Run one paired-configuration ablation; returns the summary dict.

    Writes ``ablation_<name>.csv`` (per-seed metric per arm, plus paired
    differences against the first arm) and ``ablation_<name>_summary.json``
    (means, win counts, sign-test p-value).
    """
    if name not in SUITES:
        raise ConfigError(f"unknown ablation suite {name!r}; pick one of {SUITES}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seeds = list(range(n_seeds))

    if name == "anc":
        scenario = get_scenario("trajectory-jump")
        arms = [
            _Arm("markov_increasing", "dynaedit", _ANC_CFG),
            _Arm("iid", "dynaedit", _ANC_CFG.updated(anc_schedule=_iid())),
        ]
        values = _paired_metric_runs(scenario, arms, seeds, _jitter_metric)
        summary = _summarize(name, "jitter_energy", values, better="markov_increasing")
    elif name == "sga":
        scenario = get_scenario("two-object")
        arms = [
            _Arm("sga", "dynaedit", _SGA_CFG),
            _Arm("averaging", "dynaedit", _SGA_CFG.updated(tau=math.inf)),
        ]
        values = _paired_metric_runs(scenario, arms, seeds, _block_b_alignment)
        summary = _summarize(name, "block_b_lowfreq_alignment", values, better="sga")
    elif name == "schedules":
        scenario = get_scenario("trajectory-jump")
        arms = [
            _Arm(kind, "dynaedit", _SCHED_CFG.updated(anc_schedule=_sched(kind)))
            for kind in ("markov_increasing", "markov_decreasing", "non_markov_increasing")
        ] + [_Arm("iid", "dynaedit", _SCHED_CFG.updated(anc_schedule=_iid()))]
        values = _paired_metric_runs(scenario, arms, seeds, _dispersion_metric)
        summary = _summarize(
            name, "late_half_velocity_dispersion", values,
            better="markov_increasing", versus="markov_decreasing",
        )
    elif name == "similarity":
        scenario = get_scenario("two-object")
        arms = [
            _Arm("cosine", "dynaedit", _SGA_CFG),
            _Arm("neg_mse", "dynaedit", _SGA_CFG.updated(similarity="neg_mse")),
        ]
        values = _paired_metric_runs(scenario, arms, seeds, _block_b_alignment)
        summary = _summarize(name, "block_b_lowfreq_alignment", values, better="cosine")
    else:  # nmax
        summary, values = _nmax_suite(out, n_seeds)

    _write_ablation_table(out / f"ablation_{name}.csv", values)
    with open(out / f"ablation_{name}_summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    if make_plots:
        plots.plot_metric_distributions(
            out / f"ablation_{name}.svg",
            {k: list(v) for k, v in values.items() if np.isfinite(v).all()},
            title=f"ablation: {name}",
        )
    return summary


def _iid():
    from ..editor import AncSchedule

    return AncSchedule("iid")


def _sched(kind):
    from ..editor import AncSchedule

    return AncSchedule(kind)


def _summarize(
    name: str, metric: str, values: dict[str, np.ndarray],
    better: str, versus: str | None = None,
) -> dict:
    arms = list(values)
    versus = versus or next(a for a in arms if a != better)
    a, b = values[better], values[versus]
    wins = int(np.sum(a < b))
    ties = int(np.sum(a == b))
    n = len(a) - ties
    return {
        "suite": name,
        "metric": metric,
        "means": {k: float(np.nanmean(v)) for k, v in values.items()},
        "comparison": f"{better} < {versus}",
        "wins": wins,
        "trials": n,
        "sign_test_p": sign_test(wins, n),
        "seeds": len(a),
    }


def _nmax_suite(out: Path, n_seeds: int) -> tuple[dict, dict[str, np.ndarray]]:
    """Edit expressivity against structural adherence across the start step.

    Pooled over several sources, many edit seeds each: endpoints from n_max=N
    should land closer (energy distance) to the target-conditioned sample
    population while deviating more from the source in the low-frequency
    metric.
    """
    scenario = get_scenario("trajectory-jump")
    model = scenario.model()
    n_sources = 5
    per_source = max(n_seeds, 20) // n_sources or 1
    window = default_window(scenario.frames)
    endpoints = {"n_max=N": [], "n_max=N-1": []}
    align = {"n_max=N": [], "n_max=N-1": []}
    targets = []
    for source_seed in range(n_sources):
        x_src = scenario.source_field(source_seed)
        cond_src, cond_tar = scenario.conditions(x_src)
        target_mix = model.mixture_for(cond_tar)
        targets += [
            target_mix.draw(stream_for(9000 + k, "nmax-targets", source_seed))
            for k in range(40)
        ]
        for seed in range(per_source):
            for label, n_max in (("n_max=N", _NMAX_STEPS), ("n_max=N-1", _NMAX_STEPS - 1)):
                cfg = _NMAX_CFG.updated(seed=seed, n_max=n_max)
                z, _ = dynaedit(model, x_src, cond_src, cond_tar, cfg)
                endpoints[label].append(z)
                align[label].append(lowfreq_alignment(z, x_src, window))
    distances = {k: energy_distance(v, targets) for k, v in endpoints.items()}
    summary = {
        "suite": "nmax",
        "metric": "energy_distance_to_target / lowfreq_alignment_to_source",
        "energy_distance": {k: float(v) for k, v in distances.items()},
        "lowfreq_alignment_mean": {k: float(np.mean(v)) for k, v in align.items()},
        "expressivity_ordering_holds": bool(
            distances["n_max=N"] < distances["n_max=N-1"]
        ),
        "adherence_ordering_holds": bool(
            np.mean(align["n_max=N"]) > np.mean(align["n_max=N-1"])
        ),
        "seeds": n_sources * per_source,
    }
    values = {k: np.array(v) for k, v in align.items()}
    return summary, values


def _write_ablation_table(path: Path, values: dict[str, np.ndarray]) -> None:
    import csv

    arms = list(values)
    baseline = arms[0]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed", *arms, *[f"diff_{a}_minus_{baseline}" for a in arms[1:]]])
        n = len(values[baseline])
        for i in range(n):
            row = [i] + [repr(float(values[a][i])) for a in arms]
            row += [repr(float(values[a][i] - values[baseline][i])) for a in arms[1:]]
            writer.writerow(row)
