"""Time the compiled core against the numpy fallback.

    python3 benchmarks/bench_core.py [--repeat 3] [--scale 1.0] [--json out.json]

Each kernel is run on identical inputs by both backends; the table reports
the best wall time, the speedup and the largest absolute difference.
"""
import argparse
import json
import time

import numpy as np

from rwabath import _fallback
from rwabath.quadrature import filon_weights

try:
    from rwabath import _core
except ImportError:
    _core = None


def _lorentzian_lags(n_lag, h, energies):
    lags = np.arange(n_lag + 1) * h
    g = 0.1 * np.exp(-(1.0 + 0.2j) * lags)
    return g, lags, np.ascontiguousarray(g[None, :] * np.exp(1j * np.outer(energies, lags)))


def case_scalar(scale):
    n = int(20000 * scale)
    _, _, kt = _lorentzian_lags(n, 5e-3, np.array([0.0, 0.4, -0.3]))
    return "volterra_scalar", (kt, 5e-3, n, 1e-12, 5), f"3 levels, {n} steps, full memory"


def case_dense(scale):
    n = int(3000 * scale)
    g, lags, _ = _lorentzian_lags(n, 5e-3, np.zeros(1))
    h_s = np.array([[0.0, 0.1, 0.0], [0.1, 0.4, 0.05], [0.0, 0.05, -0.3]])
    w, u = np.linalg.eigh(h_s)
    rot = np.einsum("ij,mj,kj->mik", u, np.exp(1j * np.outer(lags, w)), u.conj())
    kt = np.ascontiguousarray(g[:, None, None] * rot)
    return "volterra_dense", (kt, 5e-3, n, 1e-12, 5), f"3x3, {n} steps, full memory"


def case_filon(scale):
    n, q, h = int(20000 * scale), 2000, 0.05
    t = np.arange(n + 1) * h
    v = np.ascontiguousarray(np.stack([np.exp(-(0.01 + 0.02j) * t), np.exp(-(0.012 - 0.01j) * t)]))
    nodes = np.linspace(-6, 6, q)
    delta = np.ascontiguousarray(np.array([0.0, 0.4])[:, None] - nodes[None, :])
    weight = np.ascontiguousarray(np.vstack([np.full(q, 1e-3), np.full(q, 2e-3)]))
    w0, w1 = filon_weights(delta, h)
    idx = np.linspace(0, n, 200).astype(np.int64)
    args = (v, delta, weight, np.ascontiguousarray(w0), np.ascontiguousarray(w1), h, idx)
    return "filon_inflow", args, f"2 levels, {q} nodes, {n} steps"


def best_time(fn, args, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def result_array(out):
    return out[0] if isinstance(out, tuple) else out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scale", type=float, default=1.0, help="multiply the problem sizes")
    ap.add_argument("--json", default=None, help="also write the results to this file")
    args = ap.parse_args(argv)
    if _core is None:
        print("compiled core not built; only the fallback is timed")
    rows = []
    for make in (case_scalar, case_dense, case_filon):
        name, inputs, desc = make(args.scale)
        t_py, out_py = best_time(getattr(_fallback, name), inputs, args.repeat)
        row = {"kernel": name, "problem": desc, "python_s": t_py}
        if _core is not None:
            t_c, out_c = best_time(getattr(_core, name), inputs, args.repeat)
            a, b = result_array(out_c), result_array(out_py)
            row.update(cython_s=t_c, speedup=t_py / t_c,
                       max_abs_diff=float(np.max(np.abs(a - b))),
                       max_abs=float(np.max(np.abs(b))))
        rows.append(row)
    print(f"{'kernel':<16} {'problem':<34} {'numpy [s]':>10} {'cython [s]':>11} {'speedup':>8} {'max diff':>10}")
    for r in rows:
        if "cython_s" in r:
            print(f"{r['kernel']:<16} {r['problem']:<34} {r['python_s']:>10.3f} {r['cython_s']:>11.3f} "
                  f"{r['speedup']:>8.1f} {r['max_abs_diff']:>10.2e}")
        else:
            print(f"{r['kernel']:<16} {r['problem']:<34} {r['python_s']:>10.3f}")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
