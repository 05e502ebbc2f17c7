"""Study file formats.

Latent binary: little-endian header ``<4sIII`` = (magic b"LATF", version,
frames, frame_dim) followed by frames*frame_dim little-endian float64 values,
frame-major. Trivially parseable from any language for cross-checks.

Trace stream: one JSON object per line, one line per executed step, schema
version in every record under ``"v"``. Field set (fixed): v, step, t, anc_a,
n_active, similarities, weights, vbar_norm, noise_cos_prev, velocity_cos_prev,
snapshot.

Metrics table: CSV with the fixed header ``METRICS_HEADER``; the leading
``schema`` column stamps the version.
"""

from __future__ import annotations

import csv
import json
import math
import struct
from pathlib import Path

import numpy as np

from ..editor import AncSchedule, EditConfig, EditTrace, StepRecord
from ..errors import ConfigError, OutputError
from ..tensorcore import LatentField

LATENT_MAGIC = b"LATF"
LATENT_VERSION = 1
TRACE_VERSION = 1
METRICS_SCHEMA = "metrics-v1"

METRICS_HEADER = [
    "schema", "scenario", "method", "seed", "steps", "n_max",
    "jitter", "lowfreq_alignment", "target_distance",
    "noise_corr_mean", "velocity_corr_mean", "latent_file", "trace_file",
]


def write_latent(path: str | Path, field: LatentField) -> None:
    header = struct.pack("<4sIII", LATENT_MAGIC, LATENT_VERSION, field.frames, field.frame_dim)
    payload = field.data.astype("<f8").tobytes()
    try:
        Path(path).write_bytes(header + payload)
    except OSError as exc:
        raise OutputError(f"cannot write latent file {path}: {exc}") from exc


def read_latent(path: str | Path) -> LatentField:
    raw = Path(path).read_bytes()
    magic, version, frames, frame_dim = struct.unpack_from("<4sIII", raw)
    if magic != LATENT_MAGIC or version != LATENT_VERSION:
        raise OutputError(f"{path} is not a v{LATENT_VERSION} latent file")
    data = np.frombuffer(raw, dtype="<f8", offset=struct.calcsize("<4sIII"))
    return LatentField.from_flat(np.array(data), frames, frame_dim)


def _record_to_obj(record: StepRecord) -> dict:
    snapshot = None
    if record.snapshot is not None:
        snapshot = {
            "frames": record.snapshot.frames,
            "frame_dim": record.snapshot.frame_dim,
            "data": record.snapshot.flat.tolist(),
        }
    return {
        "v": TRACE_VERSION,
        "step": record.step,
        "t": record.t,
        "anc_a": record.anc_a,
        "n_active": record.n_active,
        "similarities": list(record.similarities),
        "weights": list(record.weights),
        "vbar_norm": record.vbar_norm,
        "noise_cos_prev": None if record.noise_cos_prev is None else list(record.noise_cos_prev),
        "velocity_cos_prev": record.velocity_cos_prev,
        "snapshot": snapshot,
    }


def _obj_to_record(obj: dict) -> StepRecord:
    snapshot = None
    if obj.get("snapshot") is not None:
        snap = obj["snapshot"]
        snapshot = LatentField.from_flat(
            np.array(snap["data"]), snap["frames"], snap["frame_dim"]
        )
    noise = obj["noise_cos_prev"]
    return StepRecord(
        step=obj["step"],
        t=obj["t"],
        anc_a=obj["anc_a"],
        n_active=obj["n_active"],
        similarities=tuple(obj["similarities"]),
        weights=tuple(obj["weights"]),
        vbar_norm=obj["vbar_norm"],
        noise_cos_prev=None if noise is None else tuple(noise),
        velocity_cos_prev=obj["velocity_cos_prev"],
        snapshot=snapshot,
    )


def write_trace(path: str | Path, trace: EditTrace) -> None:
    try:
        with open(path, "w") as fh:
            for record in trace.records:
                fh.write(json.dumps(_record_to_obj(record)) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write trace file {path}: {exc}") from exc


def read_trace(path: str | Path) -> EditTrace:
    records = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                records.append(_obj_to_record(json.loads(line)))
    return EditTrace(records=tuple(records))


def write_metrics_csv(path: str | Path, rows: list[dict]) -> None:
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=METRICS_HEADER)
            writer.writeheader()
            for row in rows:
                writer.writerow({**row, "schema": METRICS_SCHEMA})
    except OSError as exc:
        raise OutputError(f"cannot write metrics file {path}: {exc}") from exc


def read_metrics_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != METRICS_HEADER:
            raise OutputError(f"{path} has unexpected header {reader.fieldnames}")
        return list(reader)


_CONFIG_KEYS = {
    "steps", "n_max", "n_sga", "tau", "anc", "cfg_src", "cfg_tar",
    "similarity", "seed", "shift",
}
_ANC_KEYS = {"kind", "t_saturate"}
_NSGA_FORMS = ("constant", "early", "map")


def config_to_dict(cfg: EditConfig) -> dict:
    n_sga = None
    if cfg.n_sga_schedule is not None:
        n_sga = {"map": {str(k): v for k, v in sorted(cfg.n_sga_schedule.items())}}
    return {
        "steps": cfg.steps,
        "n_max": cfg.n_max,
        "n_sga": n_sga,
        "tau": "inf" if math.isinf(cfg.tau) else cfg.tau,
        "anc": {"kind": cfg.anc_schedule.kind, "t_saturate": cfg.anc_schedule.t_saturate},
        "cfg_src": cfg.cfg_src,
        "cfg_tar": cfg.cfg_tar,
        "similarity": cfg.similarity,
        "seed": cfg.seed,
        "shift": cfg.shift,
    }


def config_from_dict(data: dict) -> EditConfig:
    """Strict EditConfig parser; unknown keys fail loudly.

    ``n_sga`` accepts three forms: {"constant": k}, {"early": k,
    "early_steps": m, "late": j}, or {"map": {"<step>": k, ...}}.
    """
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs: dict = {}
    for key in ("steps", "n_max", "seed"):
        if key in data and data[key] is not None:
            kwargs[key] = int(data[key])
    for key in ("cfg_src", "cfg_tar", "shift"):
        if key in data:
            kwargs[key] = float(data[key])
    if "similarity" in data:
        kwargs["similarity"] = str(data["similarity"])
    if "tau" in data:
        kwargs["tau"] = math.inf if data["tau"] == "inf" else float(data["tau"])
    if "anc" in data and data["anc"] is not None:
        anc = data["anc"]
        unknown = set(anc) - _ANC_KEYS
        if unknown:
            raise ConfigError(f"unknown anc keys: {sorted(unknown)}")
        kwargs["anc_schedule"] = AncSchedule(
            kind=anc.get("kind", "markov_increasing"),
            t_saturate=float(anc.get("t_saturate", 0.25)),
        )
    schedule = data.get("n_sga")
    if schedule is not None:
        steps = kwargs.get("steps", EditConfig().steps)
        n_max = kwargs.get("n_max", steps)
        if "constant" in schedule:
            _expect_keys(schedule, {"constant"})
            kwargs["n_sga_schedule"] = {i: int(schedule["constant"]) for i in range(1, steps + 1)}
        elif "early" in schedule:
            _expect_keys(schedule, {"early", "early_steps", "late"})
            early, span = int(schedule["early"]), int(schedule.get("early_steps", 3))
            late = int(schedule.get("late", 1))
            kwargs["n_sga_schedule"] = {
                i: early if i > n_max - span else late for i in range(1, n_max + 1)
            }
        elif "map" in schedule:
            _expect_keys(schedule, {"map"})
            kwargs["n_sga_schedule"] = {int(k): int(v) for k, v in schedule["map"].items()}
        else:
            raise ConfigError(f"n_sga must use one of the forms {_NSGA_FORMS}")
    return EditConfig(**kwargs)


def _expect_keys(data: dict, allowed: set[str]) -> None:
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown n_sga keys: {sorted(unknown)}")


def load_json(path: str | Path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise OutputError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
