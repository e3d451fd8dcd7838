"""Experiment orchestration: config loading, sweep dispatch, CSV emission.

Configs are JSON documents ``{"experiment": ..., "seed": ..., "parameters":
{...}, "output_dir": ...}``.  Every run writes its CSVs plus a
``manifest.json`` echoing the config and checksumming each output; a rerun
with the same config and seed reproduces every CSV byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import MissingField, TypeMismatch, UnknownExperiment
from .experiments import RUNNERS

SEED_ENV_VAR = "QCS_SEED"

# (type, default) per parameter; None defaults mean "derived at run time".
_NUMBER = (int, float)
PARAM_SPECS = {
    "SuccessVsM": {
        "n": (int, 2**15),
        "k_list": (list, [10, 20, 50, 100]),
        "p": (_NUMBER, 0.98),
        "m_grid": ((list, type(None)), None),
        "trials": (int, 1000),
        "min_hits": (int, 2),
        # detector-level dark rate (~10 cps) times a millisecond-scale period
        "dark_per_period": (_NUMBER, 0.01),
    },
    "MminVsK": {
        "k_list": (list, [10, 20, 30, 40, 50, 60, 70, 80, 90, 100]),
        "p": (_NUMBER, 0.98),
        "target": (_NUMBER, 0.95),
        "trials": (int, 20000),
        "min_hits_list": (list, [1, 2]),
        "bound_n": (int, 2**20),
        "bound_c": (_NUMBER, 1.0),
    },
    "NmseVsM": {
        "tone_freq_hz": (_NUMBER, 5e9),
        "period_s": (_NUMBER, 1e-9),
        "n": (int, 16),
        "depth": (_NUMBER, 1.0),
        "m_list": (list, [100, 1000, 10_000, 100_000, 1_000_000]),
        "trials_per_m": (int, 4),
        "n_periods": (int, 1000),
    },
    "ConfusionTLS": {
        "tone_freqs_hz": (list, [5.4e9, 16.2e9, 27.0e9, 37.8e9]),
        "dispersion_s2": (_NUMBER, 1074e-24),
        "window_s": (_NUMBER, 5.12e-10),
        "n_bins": (int, 512),
        "photon_counts": (list, [1, 2, 3, 4]),
        "trials": (int, 10000),
        "confusion_photons": (int, 4),
        "target_single_photon_accuracy": (_NUMBER, 0.47),
        "background": ((int, float, type(None)), None),
    },
    "DftDemo": {
        "tone_freq_hz": (_NUMBER, 20e9),
        "tone_period_s": (_NUMBER, 1e-9),
        "tone_n": (int, 64),
        "tone_photons": (int, 100_000),
        "comb_k": (int, 83),
        "comb_spacing_hz": (_NUMBER, 1e7),
        "comb_n": (int, 256),
        "comb_photons": (int, 2_000_000),
        "n_periods": (int, 1000),
    },
    "JitterBandwidth": {
        "fwhm_ps_list": (list, [45.3, 20.2, 3.0]),
        "tau_ps": (_NUMBER, 0.0),
        "f_min_hz": (_NUMBER, 1e8),
        "f_max_hz": (_NUMBER, 3e11),
        "f_points": (int, 200),
    },
    "ResolutionVsIntegration": {
        "f0_hz": (_NUMBER, 1e9),
        "photons": (int, 20000),
        "integration_s": (list, [0.1, 1.0, 10.0, 50.0]),
        "clocks": (
            list,
            [["free_running", 5e-9], ["gps_locked", 3e-11], ["common_clock", 0.0]],
        ),
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int
    parameters: dict
    output_dir: str = "out"
    threads: int = 1


@dataclass
class RunManifest:
    experiment: str
    seed: int
    parameters: dict
    toolkit_version: str
    wall_time_s: float
    outputs: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "experiment": self.experiment,
            "seed": self.seed,
            "parameters": self.parameters,
            "toolkit_version": self.toolkit_version,
            "wall_time_s": self.wall_time_s,
            "outputs": self.outputs,
        }


def _resolve_seed(doc: dict, seed_override, env) -> int:
    if seed_override is not None:
        return int(seed_override)
    if "seed" in doc:
        if not isinstance(doc["seed"], int) or isinstance(doc["seed"], bool):
            raise TypeMismatch("seed", "expected an integer")
        return doc["seed"]
    env_seed = env.get(SEED_ENV_VAR)
    if env_seed is not None:
        try:
            return int(env_seed)
        except ValueError:
            raise TypeMismatch("seed", f"{SEED_ENV_VAR} is not an integer") from None
    raise MissingField("seed")


def load_config(
    path, seed_override=None, out_override=None, threads=1, env=None
) -> ExperimentConfig:
    """Parse and validate an experiment config file.

    Seed priority: explicit override, then the config file, then the
    QCS_SEED environment variable.  Unknown experiments and badly typed or
    unknown parameters are rejected with the offending field named.
    """
    env = os.environ if env is None else env
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise TypeMismatch("<root>", "config must be a JSON object")
    if "experiment" not in doc:
        raise MissingField("experiment")
    name = doc["experiment"]
    if not isinstance(name, str):
        raise TypeMismatch("experiment", "expected a string")
    if name not in PARAM_SPECS:
        raise UnknownExperiment(name)
    seed = _resolve_seed(doc, seed_override, env)
    raw_params = doc.get("parameters", {})
    if not isinstance(raw_params, dict):
        raise TypeMismatch("parameters", "expected an object")
    spec = PARAM_SPECS[name]
    params = {}
    for key, (types, default) in spec.items():
        params[key] = default
    for key, value in raw_params.items():
        if key not in spec:
            raise TypeMismatch(key, "not a parameter of this experiment")
        types, _ = spec[key]
        if isinstance(value, bool) or not isinstance(value, types):
            raise TypeMismatch(key, f"expected {types}")
        params[key] = value
    output_dir = doc.get("output_dir", "out")
    if not isinstance(output_dir, str):
        raise TypeMismatch("output_dir", "expected a string")
    if out_override is not None:
        output_dir = str(out_override)
    return ExperimentConfig(
        experiment=name,
        seed=seed,
        parameters=params,
        output_dir=output_dir,
        threads=int(threads),
    )


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.9g}"
    return str(value)


def emit_results(rows, schema, path) -> str:
    """Write a CSV (header + rows, LF endings, 9-significant-digit floats)
    and return its sha256 hex digest."""
    schema = tuple(schema)
    lines = [",".join(schema)]
    for row in rows:
        if len(row) != len(schema):
            raise TypeMismatch("rows", "row width does not match the schema")
        lines.append(",".join(_format_value(v) for v in row))
    payload = ("\n".join(lines) + "\n").encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(payload)
    return hashlib.sha256(payload).hexdigest()


def run_experiment(cfg: ExperimentConfig) -> RunManifest:
    """Run the configured sweep and write its outputs plus a manifest."""
    runner = RUNNERS[cfg.experiment]
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    params = dict(cfg.parameters)
    params["threads"] = cfg.threads
    started = time.perf_counter()
    tables = runner(params, np.random.SeedSequence(cfg.seed))
    manifest = RunManifest(
        experiment=cfg.experiment,
        seed=cfg.seed,
        parameters=cfg.parameters,
        toolkit_version=__version__,
        wall_time_s=round(time.perf_counter() - started, 6),
    )
    for filename in sorted(tables):
        schema, rows = tables[filename]
        digest = emit_results(rows, schema, out_dir / filename)
        manifest.outputs[filename] = digest
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest.to_json(), fh, indent=2)
        fh.write("\n")
    return manifest
