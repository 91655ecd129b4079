"""Command-line entry point: check, simulate, sweep, convergence, optimize-rate."""

from __future__ import annotations

import argparse
import itertools
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .certificate import (StabilityCertificate, build_certificate, check_gains,
                          f_of_mu1, g_of_mu1, mu1_interval_right, optimal_mu1)
from .config import RunSettings, initial_profile, parse_config, serialize_config
from .energy import dissipation_residual, kato_identity_residual
from .errors import (BousslabError, CertificationError, ConfigurationError,
                     InadmissibleGainsError, InconsistentParametersError)
from .mms import convergence_study
from .operators import build_operators
from .params import DelaySpec, Grid, SystemParams, validate_params
from .report import bound_check, fit_decay, summary_text
from .stepping import StepConfig, initial_state, run, slow_mode_state

EXIT_OK = 0
EXIT_INADMISSIBLE = 2
EXIT_CONFIG = 3


def _load(args):
    p, dly, grid, runset = parse_config(args.config)
    if getattr(args, "dt", None) is not None:
        runset = replace(runset, dt=args.dt)
    if getattr(args, "horizon", None) is not None:
        runset = replace(runset, T=args.horizon)
    if getattr(args, "nonlinear", False):
        runset = replace(runset, nonlinear=True)
    if getattr(args, "seed", None) is not None:
        runset = replace(runset, seed=args.seed)
    if getattr(args, "n", None) is not None:
        grid = Grid(n=args.n, L=p.L)
    return p, dly, grid, runset


def _try_certificate(p, dly) -> StabilityCertificate | None:
    try:
        return build_certificate(p, dly)
    except (InadmissibleGainsError, CertificationError,
            InconsistentParametersError):
        return None


def simulate(p: SystemParams, dly: DelaySpec, grid: Grid, runset: RunSettings):
    """Shared orchestration for `simulate` and per-point sweep simulation.

    Returns (report, certificate-or-None, extras dict).
    """
    vrep = validate_params(p, dly, horizon=max(runset.T, 1.0))
    if not vrep.ok:
        raise ConfigurationError(
            "validation failed:\n" + "\n".join(c.message for c in vrep.errors))
    cert = _try_certificate(p, dly)
    ops = build_operators(p, grid)
    mu1 = cert.mu1 if (runset.mu1 == "auto" and cert) else (
        0.0 if runset.mu1 == "auto" else float(runset.mu1))
    mu2 = cert.mu2 if (runset.mu2 == "auto" and cert) else (
        0.0 if runset.mu2 == "auto" else float(runset.mu2))

    if runset.eta0.startswith("slowmode"):
        toks = runset.eta0.split()
        amp = float(toks[1]) if len(toks) > 1 else 1.0
        state, _ = slow_mode_state(ops, p, dly, runset.dt, amplitude=amp)
    else:
        rng = np.random.default_rng(runset.seed)
        eta0 = initial_profile(runset.eta0, grid.nodes, p.L, rng)
        omega0 = initial_profile(runset.omega0, grid.nodes, p.L, rng)
        state = initial_state(p, dly, grid, eta0, omega0,
                              interpolation=runset.interpolation)

    cfg = StepConfig(dt=runset.dt, theta=runset.resolve_theta(),
                     startup_steps=runset.startup_steps,
                     nonlinear=runset.nonlinear,
                     picard_iters=runset.picard_iters,
                     picard_tol=runset.picard_tol)
    rep = run(state, runset.T, cfg, p, dly, ops,
              rho_res=runset.rho_res, mu1=mu1, mu2=mu2,
              store_fields=runset.store_fields)

    extras = {"certified": cert is not None}
    if rep.n_rows >= 3:
        extras["dissipation_residual"] = dissipation_residual(rep, p)
    if rep.fields_eta is not None and rep.n_rows >= 2:
        kres, c_l = kato_identity_residual(rep, p)
        extras["kato_residual"] = kres
        extras["kato_C_L"] = c_l
    if rep.n_rows >= 2 and np.all(rep.E > 0):
        lam_obs, r2 = fit_decay(rep.t, rep.E, runset.fit_window)
        extras["lambda_obs"] = lam_obs
        extras["fit_r2"] = r2
    if cert is not None:
        extras.update(lambda_theory=cert.lam, zeta=cert.zeta,
                      mu1_star=cert.mu1_star)
        ok, ratio = bound_check(rep.t, rep.E, cert.lam, cert.zeta,
                                runset.bound_slack)
        extras["bound_ok"] = ok
        extras["bound_max_ratio"] = ratio
    else:
        extras["note"] = "uncertified (gains inadmissible or L out of range)"
    return rep, cert, extras


def cmd_check(args) -> int:
    try:
        p, dly, grid, runset = _load(args)
    except (ConfigurationError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    vrep = validate_params(p, dly)
    print(vrep)
    if not vrep.ok:
        return EXIT_CONFIG
    admissible, Phi, thr = check_gains(p, dly)
    if not admissible or not p.length_ok:
        print(f"inadmissible: alpha = {p.alpha}, threshold = {thr!r}, "
              f"L_ok = {p.length_ok}")
        return EXIT_INADMISSIBLE
    cert = build_certificate(p, dly)
    print(cert.document())
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        p, dly, grid, runset = _load(args)
    except (ConfigurationError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        rep, cert, extras = simulate(p, dly, grid, runset)
    except BousslabError as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return 1
    (out / "timeseries.csv").write_text(rep.to_csv())
    (out / "summary.txt").write_text(summary_text(rep, extras))
    if cert is not None:
        (out / "certificate.txt").write_text(cert.document() + "\n")
    (out / "config.ini").write_text(serialize_config(p, dly, grid, runset))
    print(summary_text(rep, extras), end="")
    return EXIT_OK if rep.termination == "completed" else 1


_SWEEPABLE_SYSTEM = ("a", "a1", "L", "alpha", "beta")
_SWEEPABLE_DELAY = ("tau0", "M", "d")


def _sweep_point(base_p, base_dly, grid, runset, names, values, task):
    p, dly = base_p, base_dly
    for name, v in zip(names, values):
        if name in _SWEEPABLE_SYSTEM:
            p = replace(p, **{name: v})
        elif name in _SWEEPABLE_DELAY:
            dly = replace(dly, **{name: v})
        else:
            raise ConfigurationError(f"unknown sweep axis {name!r}")
    if p.L != grid.L:
        grid = Grid(n=grid.n, L=p.L)
    row = {name: v for name, v in zip(names, values)}
    try:
        admissible, _, thr = check_gains(p, dly)
        row["admissible"] = admissible
        row["threshold"] = thr
        if task in ("certify", "both") and admissible and p.length_ok:
            cert = build_certificate(p, dly)
            row["mu1_star"] = cert.mu1_star
            row["lambda"] = cert.lam
            row["zeta"] = cert.zeta
        if task in ("simulate", "both"):
            rep, cert, extras = simulate(p, dly, grid, runset)
            row["lambda_obs"] = extras.get("lambda_obs", "")
            row["E_final"] = rep.E[-1]
            row["bound_ok"] = extras.get("bound_ok", "")
        row["error"] = ""
    except BousslabError as exc:
        row["error"] = str(exc).replace(",", ";").replace("\n", " ")
    return row


def cmd_sweep(args) -> int:
    try:
        import configparser
        cp = configparser.ConfigParser()
        cp.optionxform = str
        cp.read_string(Path(args.spec).read_text())
        if not cp.has_section("axes") or not list(cp.items("axes")):
            raise ConfigurationError("sweep spec needs a non-empty [axes] section")
        task = cp.get("sweep", "task", fallback="certify")
        if task not in ("certify", "simulate", "both"):
            raise ConfigurationError(f"unknown sweep task {task!r}")
        output = cp.get("sweep", "output", fallback="sweep.csv")
        names = []
        value_lists = []
        for name, raw in cp.items("axes"):
            vals = [float(x) for x in raw.split()]
            if not vals:
                raise ConfigurationError(f"empty axis {name!r}")
            names.append(name)
            value_lists.append(vals)
        base_text = Path(args.spec).read_text()
        p, dly, grid, runset = parse_config(base_text)
    except (ConfigurationError, OSError, ValueError) as exc:
        print(f"sweep spec error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    points = list(itertools.product(*value_lists))
    with ThreadPoolExecutor(max_workers=min(8, len(points))) as pool:
        rows = list(pool.map(
            lambda vals: _sweep_point(p, dly, grid, runset, names, vals, task),
            points))

    columns = list(names) + ["admissible", "threshold"]
    if task in ("certify", "both"):
        columns += ["mu1_star", "lambda", "zeta"]
    if task in ("simulate", "both"):
        columns += ["lambda_obs", "E_final", "bound_ok"]
    columns.append("error")
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(
            ("%.17g" % row[c]) if isinstance(row.get(c), float)
            else str(row.get(c, "")) for c in columns))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / output).write_text("\n".join(lines) + "\n")
    print(f"wrote {len(rows)} rows to {out / output}")
    return EXIT_OK


def cmd_convergence(args) -> int:
    rows, orders = convergence_study(levels=args.levels)
    print("n,dt,error")
    for n, dt, err in rows:
        print(f"{n},{dt:.6g},{err:.8e}")
    print("orders:", " ".join("%.3f" % o for o in orders))
    return EXIT_OK if all(o >= 1.9 for o in orders) else 1


def cmd_optimize_rate(args) -> int:
    try:
        p, dly, grid, runset = _load(args)
    except (ConfigurationError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        right = mu1_interval_right(p, dly)
        mu1s, lam_star = optimal_mu1(p, dly)
    except BousslabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INADMISSIBLE
    print("mu1,f,g")
    for mu1 in np.linspace(0.0, right, args.points):
        print(f"{mu1:.8g},{f_of_mu1(p, float(mu1)):.8g},"
              f"{g_of_mu1(p, dly, float(mu1)):.8g}")
    print(f"mu1_star = {mu1s!r}")
    print(f"lambda_star = {lam_star!r}")
    return EXIT_OK


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="bousslab",
        description="Fifth-order Boussinesq system with delayed boundary "
                    "feedback: simulation, energy monitors, decay certification.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", required=True, help="INI configuration path")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--dt", type=float, default=None)
        sp.add_argument("--n", type=int, default=None)
        sp.add_argument("--horizon", type=float, default=None)
        sp.add_argument("--nonlinear", action="store_true")
        sp.add_argument("--seed", type=int, default=None)

    sp = sub.add_parser("check", help="validate and certify a configuration")
    common(sp)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("simulate", help="run and emit time series + summary")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("sweep", help="parameter sweep from a sweep spec file")
    sp.add_argument("--spec", required=True, help="sweep spec INI path")
    sp.add_argument("--out", default="out")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("convergence", help="manufactured-solution order study")
    sp.add_argument("--levels", type=int, default=3)
    sp.set_defaults(func=cmd_convergence)

    sp = sub.add_parser("optimize-rate", help="print f/g tables and mu1*")
    common(sp)
    sp.add_argument("--points", type=int, default=21)
    sp.set_defaults(func=cmd_optimize_rate)

    args = ap.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
