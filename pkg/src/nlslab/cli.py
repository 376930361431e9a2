"""``nlslab`` command line runner.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 validation failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import densities as dens
from . import dynamics as dyn
from . import linalg
from .model import (ConfigError, ModelConfig, ResampleExhausted, build,
                    ground_state, j_vector, projector_PD, projector_PDprime,
                    subsystem_eigensystem)
from .validation import run_suite

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VALIDATION = 0, 2, 3, 4

MODEL_KEYS = {"D", "seed", "lambda1", "lambda2", "sigma"}
GRID_KEYS = {"t0", "t1", "n", "spacing"}
TOP_KEYS = {"model", "grid", "outputs", "checks", "plot"}
DEFAULT_GRID = {"t0": 0.0, "t1": 100.0, "n": 2001, "spacing": "linear"}


class UsageError(ValueError):
    pass


def worker_count() -> int:
    raw = os.environ.get("NLSLAB_THREADS", "")
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"NLSLAB_THREADS must be an integer, got {raw!r}") from None
    return max(n, 1)


def load_config(path) -> dict:
    """Read a JSON run config and reject unknown keys."""
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    for section, allowed in ((cfg, TOP_KEYS), (cfg.get("model", {}), MODEL_KEYS),
                             (cfg.get("grid", {}), GRID_KEYS)):
        unknown = set(section) - allowed
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
    return cfg


def resolve(args) -> tuple[ModelConfig, dyn.TimeGrid, Path, bool]:
    cfg = load_config(args.config)
    m = dict(cfg.get("model", {}))
    if args.D is not None:
        m["D"] = args.D
    if args.seed is not None:
        m["seed"] = args.seed
    model_cfg = ModelConfig(**m)
    g = {**DEFAULT_GRID, **cfg.get("grid", {})}
    for key in ("t0", "t1", "n"):
        val = getattr(args, key, None)
        if val is not None:
            g[key] = val
    grid = dyn.TimeGrid(float(g["t0"]), float(g["t1"]), int(g["n"]), g["spacing"])
    out = Path(args.out or cfg.get("outputs", "nlslab_out"))
    plot = bool(args.plot or cfg.get("plot", False))
    return model_cfg, grid, out, plot


def manifest(model_cfg, grid=None, **extra) -> dict:
    rec = {"config": dataclasses.asdict(model_cfg), "seed": model_cfg.seed,
           "D_NLS": model_cfg.d_nls}
    if grid is not None:
        rec["grid"] = dataclasses.asdict(grid)
    rec.update(extra)
    return rec


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(type(x))


def operator_from_string(model, text: str) -> np.ndarray:
    """Operators named on the command line.

    ``Jvec:a1``  |J_a><J_a|          ``JtJ:a1``  J_a^T J_a
    ``JJt:a1``   J_a J_a^T           ``PD`` / ``PDprime`` projectors
    ``Q:a1``     reduced non-Hermitian sum over all eigenvectors
    ``rho:<basis:kind:indices>``     any density spec
    """
    head, _, rest = text.partition(":")
    if head == "Jvec":
        v = j_vector(model, rest or 1)
        return np.outer(v, v.conj())
    if head == "JtJ":
        return model.JtJ(rest or 1)
    if head == "JJt":
        J = model.J(rest or 1)
        return J @ J.T
    if head == "PD":
        return projector_PD(model)
    if head == "PDprime":
        return projector_PDprime(model)
    if head == "Q":
        sub = int(str(rest or 1).lstrip("a"))
        return dens.make_density(model, f"nH:reduced:all:a{sub}").mat
    if head == "rho":
        return dens.make_density(model, rest).mat
    raise dens.BadSpecString(f"unknown operator {text!r}")


def cmd_generate(args) -> int:
    model_cfg, _, out, plot = resolve(args)
    t0 = time.perf_counter()
    model = build(model_cfg)
    out.mkdir(parents=True, exist_ok=True)
    for name, mat in (("H", model.H), ("S1", model.S1), ("S2", model.S2),
                      ("Psi1", model.Psi1), ("Psi2", model.Psi2), ("M", model.M)):
        linalg.save_matrix(out / f"{name}.csv", mat)
    from .model import invariant_report
    write_json(out / "model.json", manifest(model_cfg, invariants=invariant_report(model),
                                            wall_time=time.perf_counter() - t0))
    if plot:
        from .plotting import spectrum_plot
        spectrum_plot(out / "spectrum_psi1.svg", subsystem_eigensystem(model, 1).values)
    print(f"wrote model D={model.D} seed={model_cfg.seed} to {out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    model_cfg, _, out, _ = resolve(args)
    model = build(model_cfg)
    rep = run_suite(model, tol=args.tol or 1e-12, workers=worker_count())
    out.mkdir(parents=True, exist_ok=True)
    (out / "validation.json").write_text(rep.to_json() + "\n")
    print(rep.table())
    return EXIT_OK if rep.ok else EXIT_VALIDATION


def cmd_echo(args) -> int:
    model_cfg, grid, out, plot = resolve(args)
    spec = dens.DensitySpec.parse(args.density)
    model = build(model_cfg)
    rho = dens.make_density(model, spec).mat
    series = dyn.loschmidt_echo(rho, ground_state(model), grid, normalized=args.normalized)
    out.mkdir(parents=True, exist_ok=True)
    (out / "echo.csv").write_text(series.to_csv())
    env = dyn.echo_envelope(series, args.window)
    lines = ["t,upper,lower"] + [f"{t:.17g},{u:.17g},{lo:.17g}"
                                 for t, u, lo in zip(series.t, env["upper"], env["lower"])]
    (out / "echo_envelope.csv").write_text("\n".join(lines) + "\n")
    write_json(out / "echo.json", manifest(model_cfg, grid, density=str(spec)))
    if plot:
        from .plotting import line_plot
        line_plot(out / "echo.svg", series.t,
                  {"echo": series.values, "upper": env["upper"], "lower": env["lower"]},
                  ylabel="Loschmidt echo")
    return EXIT_OK


def cmd_vie(args) -> int:
    model_cfg, grid, out, plot = resolve(args)
    model = build(model_cfg)
    rho0 = operator_from_string(model, args.state)
    O = operator_from_string(model, args.obs)
    series = dyn.vie_series(model.H, rho0, O, grid)
    out.mkdir(parents=True, exist_ok=True)
    (out / "vie.csv").write_text(series.to_value_csv())
    write_json(out / "vie.json", manifest(model_cfg, grid, state=args.state, obs=args.obs))
    if plot:
        from .plotting import line_plot
        line_plot(out / "vie.svg", series.t, {"VIE": series.values}, ylabel="VIE")
    return EXIT_OK


def cmd_average(args) -> int:
    model_cfg, _, out, plot = resolve(args)
    model = build(model_cfg)
    rho0 = operator_from_string(model, args.state)
    O = operator_from_string(model, args.obs)
    avg = dyn.long_time_average(model.H, rho0, O, args.T, args.samples,
                                per_dim=not args.no_per_dim)
    limit = dyn.dephased_expectation(model.H, rho0, O, per_dim=not args.no_per_dim)
    out.mkdir(parents=True, exist_ok=True)
    (out / "average.csv").write_text(
        "quantity,re,im\n"
        f"long_time_average,{avg.value.real:.17g},{avg.value.imag:.17g}\n"
        f"dephased_limit,{limit.real:.17g},{limit.imag:.17g}\n"
        f"fluctuation,{avg.fluctuation:.17g},0\n")
    write_json(out / "average.json", manifest(model_cfg, state=args.state, obs=args.obs,
                                              T=args.T, samples=args.samples,
                                              per_dim=not args.no_per_dim))
    if plot:
        from .plotting import line_plot
        t = np.linspace(0.0, args.T, args.samples)
        f = dyn.Propagator(model.H).trace_series(rho0, O, t)
        scale = 1.0 / model.D if not args.no_per_dim else 1.0
        cum = np.cumsum(0.5 * (f[1:] + f[:-1])) * (t[1] - t[0])
        line_plot(out / "average.svg", t[1:], {"running average": scale * cum / t[1:]},
                  logx=True, xlabel="T")
    print(f"{avg.value.real:.10g} {avg.value.imag:+.10g}j  (dephased {limit.real:.10g}, "
          f"fluctuation {avg.fluctuation:.3g})")
    return EXIT_OK


def cmd_nls(args) -> int:
    model_cfg, _, out, plot = resolve(args)
    from .model import nls_eigenvectors

    D = model_cfg.D
    basis = nls_eigenvectors(D)
    rows = ["j,position,head_sq,tail_sq,support"]
    for j in range(1, basis.count + 1):
        v = basis.vectors[:, j - 1]
        rows.append(f"{j},{D - j + 1},{v[D - j - 1] ** 2:.17g},{v[-1] ** 2:.17g},{j + 1}")
    out.mkdir(parents=True, exist_ok=True)
    (out / "nls.csv").write_text("\n".join(rows) + "\n")
    print("\n".join(rows))
    if plot:
        from .plotting import bar_plot
        j = basis.count
        v = basis.vectors[:, j - 1] ** 2
        bar_plot(out / "nls_diagonal.svg", [str(k) for k in range(1, D + 1)], v,
                 ylabel=f"diagonal of |v_{j}><v_{j}|")
    return EXIT_OK


def cmd_density(args) -> int:
    model_cfg, _, out, _ = resolve(args)
    model = build(model_cfg)
    rec = dens.describe(model, args.spec, partner=args.partner)
    print(json.dumps(rec, indent=2, default=_json_default))
    return EXIT_OK


def _common(p):
    p.add_argument("--config", help="JSON run config")
    p.add_argument("--seed", type=int)
    p.add_argument("--D", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--plot", action="store_true", help="also write SVG figures")
    p.add_argument("--tol", type=float)


def _grid(p):
    p.add_argument("--t0", type=float)
    p.add_argument("--t1", type=float)
    p.add_argument("--n", type=int)


def parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nlslab")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="build a model and write its matrices")
    _common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("validate", help="run the identity suite")
    _common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("echo", help="Loschmidt echo of a density")
    _common(p)
    _grid(p)
    p.add_argument("--density", required=True, help="basis:kind:indices, e.g. nH:mixed:NLS")
    p.add_argument("--window", type=int, default=50)
    p.add_argument("--normalized", action="store_true")
    p.set_defaults(func=cmd_echo)

    p = sub.add_parser("vie", help="imaginary-spectrum variance series")
    _common(p)
    _grid(p)
    p.add_argument("--state", required=True)
    p.add_argument("--obs", required=True)
    p.set_defaults(func=cmd_vie)

    p = sub.add_parser("average", help="long-time average against the dephased limit")
    _common(p)
    p.add_argument("--state", required=True)
    p.add_argument("--obs", required=True)
    p.add_argument("--T", type=float, default=1000.0)
    p.add_argument("--samples", type=int, default=20001)
    p.add_argument("--no-per-dim", action="store_true",
                   help="report (1/T)∫ instead of (1/DT)∫")
    p.set_defaults(func=cmd_average)

    p = sub.add_parser("nls", help="closed-form nullspace table")
    _common(p)
    p.set_defaults(func=cmd_nls)

    p = sub.add_parser("density", help="density diagnostics")
    dsub = p.add_subparsers(dest="action", required=True)
    q = dsub.add_parser("describe")
    _common(q)
    q.add_argument("spec")
    q.add_argument("--partner")
    q.set_defaults(func=cmd_density)
    return ap


def main(argv=None) -> int:
    ap = parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, ConfigError, dens.BadSpecString, dens.IndexOutOfRange,
            dens.IndexNotInNLS, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (linalg.LinalgError, ResampleExhausted, dyn.DegenerateSpectrum,
            np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
