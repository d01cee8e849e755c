"""Command line scenario runner.

    rwabath simulate --config scenario.yaml [--out DIR]
    rwabath sweep --config scenario.yaml [--out DIR]
    rwabath oracle-validate --config scenario.yaml [--out DIR]
    rwabath self-check

Exit codes: 0 success, 2 configuration error, 3 numeric failure,
4 invariant violation. ``RWABATH_LOG_LEVEL`` sets the log verbosity.
"""
import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, _backend
from .bvh import build_generator, evolve_asymptotic, resolvent_asymptotic_error, stationary_excited_block
from .config import load_scenario
from .errors import ConfigError, InvariantViolation, NumericError
from .kernels import correlation_kernel, memory_kernel, nonvacuum_density
from .model import DiagonalOccupation, validate_problem
from .oracle import discretize_bath, evolve_oracle
from .reduced import INFLOW_SIGN, evolve_exact, trace_distance
from .volterra import solve_resolvent

log = logging.getLogger("rwabath")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_INVARIANT = 0, 2, 3, 4


def _num(x):
    return repr(float(x))


def trajectory_header(n):
    cols = ["t", "rho00"]
    for k in range(1, n + 1):
        cols += [f"rho0e_{k}_re", f"rho0e_{k}_im"]
    for j in range(1, n + 1):
        for k in range(1, n + 1):
            cols += [f"rhoee_{j}{k}_re", f"rhoee_{j}{k}_im"]
    return cols + ["trace_residual", "min_eig"]


def trajectory_rows(traj):
    tr = traj.trace_residuals()
    me = traj.min_eigenvalues()
    for i in range(len(traj)):
        row = [_num(traj.t[i]), _num(traj.rho00[i])]
        for z in traj.rho0e[i]:
            row += [_num(z.real), _num(z.imag)]
        for z in traj.rhoee[i].ravel():
            row += [_num(z.real), _num(z.imag)]
        yield row + [_num(tr[i]), _num(me[i])]


def write_csv(path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_json(path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _matrix_json(m):
    m = np.asarray(m)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _kernels(scn, lam):
    mem = memory_kernel(scn.family)
    corr = None
    if scn.occupation is not None:
        corr = correlation_kernel(scn.occupation, scn.family, scn.n_levels)
    if lam != 1.0:
        mem = mem.scaled(lam)
        corr = corr.scaled(lam) if corr is not None else None
    return mem, corr


def _steps(T, h):
    return int(round(T / h))


# ---------------------------------------------------------------------------
# commands


def run_simulate(scn, out_dir):
    s = scn.solver
    lam = s.coupling
    report = validate_problem(scn.hamiltonian, scn.family, scn.occupation)
    mem, corr = _kernels(scn, lam)
    traj = solve_resolvent(scn.hamiltonian, mem, s.step, s.horizon, method=s.method,
                           memory_cutoff=s.memory_cutoff)
    n = traj.n_steps
    idx = np.arange(0, n + 1, s.stride)
    if idx[-1] != n:
        idx = np.append(idx, n)
    exact = evolve_exact(scn.initial, traj, corr, idx)
    write_csv(out_dir / "trajectory.csv", trajectory_header(scn.n_levels), trajectory_rows(exact))

    problems = exact.check()
    summary = {
        "backend": _backend.name,
        "coupling": lam,
        "n_levels": scn.n_levels,
        "step": s.step,
        "horizon": s.horizon,
        "samples": int(idx.size),
        "inflow_sign": "positive" if INFLOW_SIGN > 0 else "negative",
        "max_trace_residual": float(exact.trace_residuals().max()),
        "min_eigenvalue": float(exact.min_eigenvalues().min()),
        "contraction": traj.check_contraction() if traj.n_steps else 1.0,
        "problem_report": report.as_dict(),
    }
    summary["stationary"] = _stationary_summary(scn, exact, lam)
    if scn.oracle.enabled:
        summary["oracle"] = _oracle_summary(scn, exact, lam, out_dir)
    write_json(out_dir / "summary.json", summary)
    write_json(out_dir / "validation.json", {
        "violations": [{"t": t, "problem": msg} for t, msg in problems],
        "passed": not problems,
    })
    if problems:
        raise InvariantViolation(f"{len(problems)} samples violate the state invariants")
    return summary


def _stationary_summary(scn, exact, lam):
    tail = exact.t >= 0.9 * exact.t[-1]
    out = {"exact_tail_average": _matrix_json(exact.rhoee[tail].mean(axis=0))}
    if lam <= 0:
        out["asymptotic"] = None
        out["note"] = "coupling is zero"
        return out
    if scn.occupation is not None and not isinstance(scn.occupation, DiagonalOccupation):
        out["asymptotic"] = None
        out["note"] = "stationary formula needs a diagonal occupation"
        return out
    try:
        gen = build_generator(scn.hamiltonian, memory_kernel(scn.family), lam)
        dens = nonvacuum_density(scn.family, scn.occupation) if scn.occupation is not None else None
        y = (1.0 - scn.initial.p) * stationary_excited_block(gen, dens)
    except NumericError as exc:
        out["asymptotic"] = None
        out["note"] = f"{type(exc).__name__}: {exc}"
        return out
    avg = exact.rhoee[tail].mean(axis=0)
    out["asymptotic"] = _matrix_json(y)
    out["distance"] = float(np.max(np.abs(avg - y)))
    rate = lam**2 * gen.slowest_rate()
    out["relaxation_time"] = 1.0 / rate if rate > 0 else None
    return out


def _oracle_summary(scn, exact, lam, out_dir):
    o = scn.oracle
    bath = discretize_bath(scn.family, scn.occupation, o.modes, o.window, o.min_coverage)
    keep = exact.t <= 0.5 * bath.recurrence_time
    orc = evolve_oracle(bath, scn.hamiltonian, scn.initial, exact.t[keep], lam=lam)
    d = trace_distance(exact.full()[keep], orc.full())
    write_csv(out_dir / "oracle.csv", ["t", "trace_distance"],
              ([_num(t), _num(x)] for t, x in zip(exact.t[keep], d)))
    return {
        "modes": o.modes,
        "window": list(o.window),
        "recurrence_time": bath.recurrence_time,
        "max_trace_distance": float(d.max()) if d.size else 0.0,
        "tolerance": o.tolerance,
        "passed": bool(d.size == 0 or d.max() <= o.tolerance),
    }


def run_oracle_validate(scn, out_dir):
    s = scn.solver
    lam = s.coupling
    mem, corr = _kernels(scn, lam)
    bath = discretize_bath(scn.family, scn.occupation, scn.oracle.modes, scn.oracle.window,
                           scn.oracle.min_coverage)
    horizon = min(s.horizon, 0.5 * bath.recurrence_time)
    horizon = _steps(horizon, s.step) * s.step
    traj = solve_resolvent(scn.hamiltonian, mem, s.step, horizon, method=s.method,
                           memory_cutoff=s.memory_cutoff)
    idx = np.arange(0, traj.n_steps + 1, s.stride)
    exact = evolve_exact(scn.initial, traj, corr, idx)
    res = _oracle_summary(scn, exact, lam, out_dir)
    write_json(out_dir / "oracle.json", res)
    if not res["passed"]:
        raise InvariantViolation(
            f"oracle trace distance {res['max_trace_distance']:.3e} exceeds {res['tolerance']:g}"
        )
    return res


def run_sweep(scn, out_dir):
    b = scn.bvh
    if not b.lambdas:
        raise ConfigError("bvh.lambdas", "sweep needs at least one value")
    base = memory_kernel(scn.family)
    corr0 = None
    if scn.occupation is not None:
        corr0 = correlation_kernel(scn.occupation, scn.family, scn.n_levels)
    dens = None
    if isinstance(scn.occupation, DiagonalOccupation):
        dens = nonvacuum_density(scn.family, scn.occupation)
    rows = []
    for lam in b.lambdas:
        gen = build_generator(scn.hamiltonian, base, lam)
        h = b.step
        n = int(np.ceil(b.tau_max / lam**2 / h - 1e-9))
        traj = solve_resolvent(scn.hamiltonian, base.scaled(lam), h, n * h)
        k = np.unique(np.rint(np.linspace(b.tau_min, b.tau_max, b.n_tau) / lam**2 / h).astype(np.int64))
        k = k[k <= n]
        taus = k * h * lam**2
        err = resolvent_asymptotic_error(traj, gen, taus)
        corr = corr0.scaled(lam) if corr0 is not None else None
        exact = evolve_exact(scn.initial, traj, corr, k)
        if corr is not None and dens is None:
            dist = float("nan")
        else:
            asym = evolve_asymptotic(scn.initial, gen, dens, taus)
            dist = float(trace_distance(exact.full(), asym.full()).max())
        rows.append({"lambda": lam, "E": err.error, "E_scaled": err.scaled,
                     "D": dist, "D_scaled": dist / lam**2})
        log.info("lambda=%g E=%.3e D=%.3e", lam, err.error, dist)
    scaled = [r["E_scaled"] for r in rows]
    verdict = None if len(rows) < 2 else bool(all(a > b for a, b in zip(scaled, scaled[1:])))
    write_csv(out_dir / "sweep.csv", ["lambda", "E", "E_over_lambda2", "D", "D_over_lambda2"],
              ([_num(r["lambda"]), _num(r["E"]), _num(r["E_scaled"]), _num(r["D"]), _num(r["D_scaled"])]
               for r in rows))
    # JSON has no NaN; a distance that was not computed is null there
    json_rows = [{k: (None if isinstance(v, float) and not np.isfinite(v) else v) for k, v in r.items()}
                 for r in rows]
    result = {"rows": json_rows, "tau_min": b.tau_min, "tau_max": b.tau_max,
              "E_scaled_decreasing": verdict}
    write_json(out_dir / "sweep.json", result)
    return result


def run_self_check(stream=None):
    from .selfcheck import run_all

    stream = sys.stdout if stream is None else stream
    results = run_all()
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}", file=stream)
    return all(ok for _, ok, _ in results)


# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="rwabath", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (("simulate", "exact reduced dynamics of a scenario"),
                           ("sweep", "weak-coupling convergence table over bvh.lambdas"),
                           ("oracle-validate", "compare with the discrete-bath reference")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--config", required=True, type=Path)
        sp.add_argument("--out", type=Path, default=None, help="output directory (overrides outputs.directory)")
    sub.add_parser("self-check", help="run the built-in fixture suite")
    return p


def _setup_logging():
    level = os.environ.get("RWABATH_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None):
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        if args.command == "self-check":
            return EXIT_OK if run_self_check() else EXIT_INVARIANT
        scn = load_scenario(args.config)
        out_dir = args.out if args.out is not None else scn.output_dir
        if args.command == "simulate":
            run_simulate(scn, out_dir)
        elif args.command == "sweep":
            run_sweep(scn, out_dir)
        else:
            run_oracle_validate(scn, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except NumericError as exc:
        print(f"numeric failure [{exc.origin}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
