"""Pure numpy implementations of the inner loops in :mod:`rwabath._core`.

The history sums are vectorized per step, so cost is one Python iteration
per time step rather than per lag.
"""
import numpy as np

__all__ = ["volterra_scalar", "volterra_dense", "filon_inflow"]


def volterra_scalar(kt, h, n_steps, tol, max_sweeps):
    kt = np.ascontiguousarray(kt, dtype=complex)
    nb, nl = kt.shape[0], kt.shape[1] - 1
    v = np.zeros((nb, n_steps + 1), dtype=complex)
    v[:, 0] = 1.0
    k0 = kt[:, 0]
    fn = np.zeros(nb, dtype=complex)
    # reversed kernel so that the history sum is a contiguous dot product
    krev = kt[:, ::-1]
    for n in range(n_steps):
        acc = np.zeros(nb, dtype=complex)
        if n + 1 <= nl:
            acc += 0.5 * kt[:, n + 1] * v[:, 0]
        m0 = max(1, n + 1 - nl)
        if m0 <= n:
            # lags n+1-m for m in [m0, n] -> krev columns nl-(n+1-m)
            lo = nl - (n + 1 - m0)
            acc += np.einsum("bm,bm->b", krev[:, lo:lo + n + 1 - m0], v[:, m0:n + 1])
        hn1 = -h * acc
        vo = v[:, n] + h * fn
        prev = None
        ok = False
        for _ in range(max_sweeps):
            vn = v[:, n] + 0.5 * h * (fn + hn1 - 0.5 * h * k0 * vo)
            diff = np.abs(vn - vo)
            vo = vn
            if np.all(diff <= tol * (1.0 + np.abs(vn))):
                ok = True
                break
            d = float(diff.max())
            if prev is not None and d > 0.5 * prev:
                break
            prev = d
        if not ok:
            return v, n + 1
        v[:, n + 1] = vo
        fn = hn1 - 0.5 * h * k0 * vo
    return v, 0


def volterra_dense(kt, h, n_steps, tol, max_sweeps):
    kt = np.ascontiguousarray(kt, dtype=complex)
    nl, nd = kt.shape[0] - 1, kt.shape[1]
    v = np.zeros((n_steps + 1, nd, nd), dtype=complex)
    v[0] = np.eye(nd)
    k0 = kt[0]
    fn = np.zeros((nd, nd), dtype=complex)
    krev = kt[::-1]
    for n in range(n_steps):
        m0 = max(0, n + 1 - nl)
        lo = nl - (n + 1 - m0)
        seg = krev[lo:lo + n + 1 - m0]
        acc = np.einsum("mik,mkj->ij", seg, v[m0:n + 1])
        if m0 == 0:
            acc -= 0.5 * kt[n + 1] @ v[0]
        hn1 = -h * acc
        vo = v[n] + h * fn
        prev = None
        ok = False
        for _ in range(max_sweeps):
            vn = v[n] + 0.5 * h * (fn + hn1 - 0.5 * h * (k0 @ vo))
            diff = float(np.max(np.abs(vn - vo)))
            vo = vn
            if diff <= tol * (1.0 + float(np.max(np.abs(vn)))):
                ok = True
                break
            if prev is not None and diff > 0.5 * prev:
                break
            prev = diff
        if not ok:
            return v, n + 1
        v[n + 1] = vo
        fn = hn1 - 0.5 * h * (k0 @ vo)
    return v, 0


def filon_inflow(v, delta, weight, w0, w1, h, out_idx):
    v = np.asarray(v, dtype=complex)
    delta = np.asarray(delta, dtype=float)
    weight = np.asarray(weight, dtype=float)
    ni, nq = delta.shape
    out_idx = np.asarray(out_idx, dtype=np.int64)
    out = np.zeros((weight.shape[0], out_idx.size, ni))
    if out_idx.size == 0:
        return out
    last = int(out_idx.max())
    # c(t_n) = sum_{m<n} exp(-i delta t_m) (w0 v_m + w1 v_{m+1}) is a running
    # sum over steps, evaluated in blocks of steps to bound memory
    block = max(1, int(1_000_000 // max(ni * nq, 1)))
    c = np.zeros((ni, nq), dtype=complex)
    k = 0

    def emit(k, cq):
        out[:, k] = weight @ (cq.real ** 2 + cq.imag ** 2).T

    while k < out_idx.size and out_idx[k] == 0:
        emit(k, c)
        k += 1
    start = 0
    while start < last:
        stop = min(last, start + block)
        m = np.arange(start, stop)
        ph = np.exp(-1j * m[:, None, None] * h * delta[None])
        inc = ph * (v[:, start:stop].T[:, :, None] * w0[None] + v[:, start + 1:stop + 1].T[:, :, None] * w1[None])
        cum = np.cumsum(inc, axis=0) + c
        while k < out_idx.size and out_idx[k] <= stop:
            emit(k, cum[out_idx[k] - start - 1])
            k += 1
        c = cum[-1]
        start = stop
    return out
