"""``heatdens`` command line: density tables, convergence studies, MC validation, hypothesis checks.

Exit codes: 0 success, 1 an MC validation check failed, 2 invalid input,
3 hypothesis violation, 4 numerical degeneracy, 5 non-convergence. Errors
are written to stderr as one JSON object.
"""

import argparse
import json
import os
import sys
import tempfile
from dataclasses import replace

import numpy as np

from .config import load_config
from .density import density_grid
from .diagnostics import convergence_report, density_moments, exact_bb_moments, hypothesis_report
from .errors import ConfigError, HeatDensError
from .mc import ecdf_distance, sample_solution


def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_text(obj):
    return json.dumps(_plain(obj), sort_keys=True, indent=2, allow_nan=True) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def grid_csv(grid):
    lines = ["u,density"] + [f"{u:.17g},{f:.17g}" for u, f in zip(grid.u, grid.f)]
    return "\n".join(lines) + "\n"


def read_grid_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]


def _fmt(v):
    return f"{v:g}"


def _pt(point):
    return {"x": point.x, "t": point.t}


def cmd_density(cfg, out):
    written = []
    for point in cfg.points:
        for run in cfg.runs:
            for N in run.N:
                g = density_grid(point, N, run.method, cfg.model, cfg.quad, cfg.grid, cfg.on_nonconvergence)
                stem = f"density_{run.method}_N{N}_x{_fmt(point.x)}_t{_fmt(point.t)}"
                mass, mean, var = density_moments(g)
                side = {"meta": g.meta, "moments": {"mass": mass, "mean": mean, "variance": var},
                        "model": cfg.raw["model"], "points": len(g.u)}
                _atomic_write(os.path.join(out, stem + ".csv"), grid_csv(g))
                _atomic_write(os.path.join(out, stem + ".json"), _json_text(side))
                written.append(stem + ".csv")
    return {"command": "density", "written": written}, 0


def cmd_converge(cfg, out):
    blocks = []
    rows = ["x,t,method,N,N_prime,l1"]
    for point in cfg.points:
        for run in cfg.runs:
            rep = convergence_report(point, run.N, run.method, cfg.model, cfg.quad, cfg.grid)
            blocks.append({"point": _pt(point), **rep.to_dict()})
            rows += [f"{_fmt(point.x)},{_fmt(point.t)},{run.method},{a},{b},{d:.17g}" for a, b, d in rep.pairs]
    _atomic_write(os.path.join(out, "convergence.json"), _json_text({"blocks": blocks}))
    _atomic_write(os.path.join(out, "convergence.csv"), "\n".join(rows) + "\n")
    return {"command": "converge", "blocks": blocks}, 0


def _validate_one(cfg, point, run, N, out):
    v = cfg.validate
    route = "kl" if run.method == "kl" else "fourier"
    samples = sample_solution(cfg.model, point, N, v["mc_samples"], cfg.quad.mc_seed, route)
    g = density_grid(point, N, run.method, cfg.model, cfg.quad, cfg.grid, cfg.on_nonconvergence)
    mass, mean, var = density_moments(g)
    s_mean, s_var = samples.mean(), samples.variance()
    block = {"point": _pt(point), "method": run.method, "N": N, "mc_samples": samples.n,
             "seed": samples.seed, "grid": {"mass": mass, "mean": mean, "variance": var},
             "samples": {"mean": s_mean, "variance": s_var}}
    if cfg.model.process.name == "brownian_bridge" and route == "fourier":
        block["exact"] = dict(zip(("mean", "variance"), exact_bb_moments(point, N, cfg.model.diffusion)))
    if s_var < v["degenerate_variance"]:
        block["branch"] = "degenerate"
        block["passed"] = bool(var <= 1e-6 and s_var <= 1e-6)
    else:
        block["branch"] = "ks"
        block["ks"] = ecdf_distance(samples, g)
        block["variance_rel_diff"] = abs(var - s_var) / s_var
        block["passed"] = bool(block["ks"] <= v["ks_tol"])
    if v["samples_csv"]:
        stem = f"samples_{route}_N{N}_x{_fmt(point.x)}_t{_fmt(point.t)}.csv"
        _atomic_write(os.path.join(out, stem), "u\n" + "".join(f"{x:.17g}\n" for x in samples.values))
    return block


def cmd_validate(cfg, out):
    blocks = [_validate_one(cfg, p, run, N, out) for p in cfg.points for run in cfg.runs for N in run.N]
    _atomic_write(os.path.join(out, "validation.json"), _json_text({"blocks": blocks}))
    ok = all(b["passed"] for b in blocks)
    return {"command": "validate", "passed": ok, "blocks": blocks}, 0 if ok else 1


def cmd_check(cfg, out):
    N = max(max(r.N) for r in cfg.runs)
    blocks = []
    for p in cfg.points:
        rep = hypothesis_report(cfg.model, p, N, cfg.quad)
        blocks.append({"point": _pt(p), "N": N, **rep.to_dict()})
    _atomic_write(os.path.join(out, "hypotheses.json"), _json_text({"blocks": blocks}))
    return {"command": "check", "blocks": blocks}, 0


COMMANDS = {"density": cmd_density, "converge": cmd_converge, "validate": cmd_validate, "check": cmd_check}


def build_parser():
    parser = argparse.ArgumentParser(prog="heatdens", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", default=None, help="output directory (default: config output.dir or .)")
    parser.add_argument("--seed", type=int, default=None, help="override quad.mc_seed")
    parser.add_argument("--threads", type=int, default=None, help="kernel worker threads")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.command)
        quad = cfg.quad
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError(["--seed must be unsigned"])
            quad = replace(quad, mc_seed=args.seed)
        if args.threads is not None:
            quad = replace(quad, threads=max(1, args.threads))
        cfg = replace(cfg, quad=quad)
        out = args.out or cfg.out_dir or "."
        summary, code = COMMANDS[args.command](cfg, out)
    except HeatDensError as exc:
        sys.stderr.write(_json_text(exc.to_dict()))
        return exc.exit_code
    sys.stdout.write(_json_text(summary))
    return code


if __name__ == "__main__":
    sys.exit(main())
