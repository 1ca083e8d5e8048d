"""Run configuration: JSON schema validation, semantic checks and model construction."""

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import List, Optional, Tuple

import jsonschema

from . import laws
from .density import METHODS, Model, QuadConfig
from .errors import ConfigError
from .models import (make_brownian_bridge_process, make_brownian_motion_process, make_general_sine_process,
                     uniform_diffusion)
from .series import EvalPoint

VALIDATE_DEFAULTS = {"mc_samples": 1_000_000, "ks_tol": 0.005, "variance_rtol": 0.01,
                     "degenerate_variance": 1e-8, "samples_csv": False}


def load_schema():
    return json.loads(resources.files("heatdens").joinpath("schema/config.schema.json").read_text())


@dataclass(frozen=True)
class Run:
    method: str
    N: Tuple[int, ...]


@dataclass(frozen=True)
class RunConfig:
    raw: dict
    model: Model
    points: List[EvalPoint]
    runs: List[Run]
    quad: QuadConfig
    grid: object = "auto"
    on_nonconvergence: str = "raise"
    validate: dict = field(default_factory=dict)
    out_dir: Optional[str] = None


def _path(err):
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def _semantic_checks(cfg, command):
    problems = []
    proc = cfg["model"]["process"]
    diff = cfg["model"]["diffusion"]
    if diff["hi"] < diff["lo"]:
        problems.append("model/diffusion: hi must be >= lo")
    if proc["name"] == "general_sine":
        for key in ("nu", "xi_law"):
            if key not in proc:
                problems.append(f"model/process: general_sine requires '{key}'")
    else:
        for key in ("nu", "xi_law"):
            if key in proc:
                problems.append(f"model/process: '{key}' is only valid for general_sine")
    for i, run in enumerate(cfg["runs"]):
        Ns = run["N"]
        if any(b <= a for a, b in zip(Ns, Ns[1:])):
            problems.append(f"runs/{i}/N: orders must be strictly increasing")
        if command == "converge" and len(Ns) < 2:
            problems.append(f"runs/{i}/N: converge needs at least two orders")
        if run["method"] == "kl" and min(Ns) < 3:
            problems.append(f"runs/{i}/N: the kl method needs N >= 3")
        if run["method"] in ("fourier_indep", "bb_fast") and min(Ns) < 2:
            problems.append(f"runs/{i}/N: {run['method']} needs N >= 2")
        if run["method"] == "bb_fast" and proc["name"] != "brownian_bridge":
            problems.append(f"runs/{i}/method: bb_fast requires the brownian_bridge process")
        if run["method"] == "fourier_indep" and proc["name"] == "brownian_motion":
            problems.append(f"runs/{i}/method: brownian_motion coefficients are not independent")
        if run["method"] == "fourier_joint" and proc["name"] == "general_sine" \
                and proc.get("xi_law") != "normal":
            problems.append(f"runs/{i}/method: fourier_joint requires Gaussian coefficients")
    grid = cfg.get("grid", "auto")
    if isinstance(grid, dict) and not grid["hi"] > grid["lo"]:
        problems.append("grid: hi must be > lo")
    v = cfg.get("validate", {})
    if command == "validate" and v.get("mc_samples", VALIDATE_DEFAULTS["mc_samples"]) < 10_000:
        problems.append("validate/mc_samples: at least 10000 samples are required")
    return problems


def parse_config(cfg, command="density"):
    """Validate a configuration mapping; every violation is reported in one :class:`ConfigError`."""
    validator = jsonschema.Draft202012Validator(load_schema())
    problems = [f"{_path(e)}: {e.message}" for e in sorted(validator.iter_errors(cfg), key=lambda e: list(
        map(str, e.absolute_path)))]
    try:
        problems += _semantic_checks(cfg, command)
    except (KeyError, TypeError, AttributeError, IndexError):
        # structurally broken input; the schema violations above describe it
        pass
    if problems:
        raise ConfigError(problems)
    try:
        model = build_model(cfg["model"])
    except (ValueError, TypeError) as exc:
        raise ConfigError([f"model: {exc}"]) from exc
    points = [EvalPoint(float(p["x"]), float(p["t"])) for p in cfg["points"]]
    runs = [Run(r["method"], tuple(int(n) for n in r["N"])) for r in cfg["runs"]]
    q = cfg.get("quad", {})
    quad = QuadConfig(**q)
    grid = cfg.get("grid", "auto")
    if isinstance(grid, dict):
        grid = (float(grid["lo"]), float(grid["hi"]), int(grid["count"]))
    validate = dict(VALIDATE_DEFAULTS, **cfg.get("validate", {}))
    return RunConfig(cfg, model, points, runs, quad, grid, cfg.get("on_nonconvergence", "raise"), validate,
                     cfg.get("output", {}).get("dir"))


def load_config(path, command="density"):
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError([f"cannot read config: {exc}"]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError([f"invalid JSON: {exc}"]) from exc
    return parse_config(cfg, command)


def build_model(spec):
    proc = spec["process"]
    name = proc["name"]
    if name == "brownian_bridge":
        process = make_brownian_bridge_process()
    elif name == "brownian_motion":
        process = make_brownian_motion_process()
    elif name == "general_sine":
        process = make_general_sine_process(proc["nu"], laws.xi_law_by_name(proc["xi_law"]))
    else:
        raise ConfigError([f"model/process/name: unknown process {name!r}"])
    d = spec["diffusion"]
    return Model(process, uniform_diffusion(float(d["lo"]), float(d["hi"])))


__all__ = ["RunConfig", "Run", "parse_config", "load_config", "build_model", "load_schema", "METHODS"]
