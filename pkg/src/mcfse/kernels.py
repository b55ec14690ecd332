"""Hot loops: spectral FSE iterations and full-search SSE maps.

Each kernel exists twice, a numba version and a numpy version, with the same
accumulation order so the two agree to rounding (the SSE maps agree exactly).
:func:`fse_iterate` and :func:`sse_map` dispatch on ``_accel.USE_NUMBA``.
"""

import numpy as np

from . import _accel
from ._accel import njit, prange


def mirror_index(grid):
    """Flat index of the conjugate-mirrored frequency ``-k mod grid`` for every bin."""
    axes = [(-np.arange(g)) % g for g in grid]
    mp, mn, mm = np.meshgrid(*axes, indexing="ij")
    return np.ravel_multi_index((mp, mn, mm), grid).ravel()


def _axis_phases(u, grid, shape):
    return [np.exp(2j * np.pi * u[a] * np.arange(shape[a]) / grid[a]) for a in range(3)]


@njit
def _fse_loop_nb(R, Wf, coeffs, S, iterations, gamma, selected, resid, w, energy):
    Gp, Gn, Gm = R.shape
    P, N, M = resid.shape
    track = energy.shape[0] > 0
    Rr = np.ascontiguousarray(R.real)
    Ri = np.ascontiguousarray(R.imag)
    Wr = np.ascontiguousarray(Wf.real)
    Wi = np.ascontiguousarray(Wf.imag)
    a2 = Rr * Rr + Ri * Ri
    mir_p = (Gp - np.arange(Gp)) % Gp
    mir_n = (Gn - np.arange(Gn)) % Gn
    mir_m = (Gm - np.arange(Gm)) % Gm
    am = np.empty(Gm, np.int64)
    bm = np.empty(Gm, np.int64)
    for it in range(iterations):
        best = -1.0
        up = 0
        un = 0
        um = 0
        for kp in range(Gp):
            mp = mir_p[kp]
            for kn in range(Gn):
                mn = mir_n[kn]
                sp = mp == kp and mn == kn
                for km in range(Gm):
                    mm = mir_m[km]
                    s = a2[kp, kn, km]
                    if not (sp and mm == km):
                        s = s + a2[mp, mn, mm]
                    if s > best:
                        best = s
                        up = kp
                        un = kn
                        um = km
        vp = mir_p[up]
        vn = mir_n[un]
        vm = mir_m[um]
        self_paired = vp == up and vn == un and vm == um
        pr = Rr[up, un, um] / S
        pi = 0.0 if self_paired else Ri[up, un, um] / S
        gr = gamma * pr
        gi = gamma * pi
        selected[it] = (up * Gn + un) * Gm + um
        coeffs[up, un, um] += complex(gr, gi)
        if not self_paired:
            coeffs[vp, vn, vm] += complex(gr, -gi)
        for km in range(Gm):
            am[km] = (km - um) % Gm
            bm[km] = (km + um) % Gm
        for kp in range(Gp):
            ap = (kp - up) % Gp
            bp = (kp + up) % Gp
            for kn in range(Gn):
                an = (kn - un) % Gn
                bn = (kn + un) % Gn
                for km in range(Gm):
                    xr = Wr[ap, an, am[km]]
                    xi = Wi[ap, an, am[km]]
                    dr = gr * xr - gi * xi
                    di = gr * xi + gi * xr
                    if not self_paired:
                        yr = Wr[bp, bn, bm[km]]
                        yi = Wi[bp, bn, bm[km]]
                        dr += gr * yr + gi * yi
                        di += gr * yi - gi * yr
                    rr = Rr[kp, kn, km] - dr
                    ri = Ri[kp, kn, km] - di
                    Rr[kp, kn, km] = rr
                    Ri[kp, kn, km] = ri
                    a2[kp, kn, km] = rr * rr + ri * ri
        if track:
            for p in range(P):
                cp = np.exp(2j * np.pi * up * p / Gp)
                for n in range(N):
                    cn = cp * np.exp(2j * np.pi * un * n / Gn)
                    for m in range(M):
                        z = complex(gr, gi) * (cn * np.exp(2j * np.pi * um * m / Gm))
                        if self_paired:
                            resid[p, n, m] -= z.real
                        else:
                            resid[p, n, m] -= 2.0 * z.real
            e = 0.0
            for p in range(P):
                for n in range(N):
                    for m in range(M):
                        e += w[p, n, m] * resid[p, n, m] * resid[p, n, m]
            energy[it + 1] = e
    for kp in range(Gp):
        for kn in range(Gn):
            for km in range(Gm):
                R[kp, kn, km] = complex(Rr[kp, kn, km], Ri[kp, kn, km])


def _fse_loop_np(R, Wf, coeffs, S, iterations, gamma, selected, resid, w, energy):
    grid = R.shape
    Rf = R.reshape(-1)
    cf = coeffs.reshape(-1)
    mirror = mirror_index(grid)
    self_pair = mirror == np.arange(Rf.size)
    track = energy.shape[0] > 0
    for it in range(iterations):
        a2 = Rf.real * Rf.real + Rf.imag * Rf.imag
        score = a2 + np.where(self_pair, 0.0, a2[mirror])
        u = int(np.argmax(score))
        v = int(mirror[u])
        is_self = u == v
        proj = Rf[u] / S
        if is_self:
            proj = complex(proj.real, 0.0)
        gp = gamma * proj
        gpc = np.conj(gp)
        selected[it] = u
        cf[u] += gp
        if not is_self:
            cf[v] += gpc
        uc = np.unravel_index(u, grid)
        shifted = np.roll(Wf, uc, axis=(0, 1, 2)).reshape(-1)
        if is_self:
            Rf -= gp * shifted
        else:
            back = np.roll(Wf, tuple(-c for c in uc), axis=(0, 1, 2)).reshape(-1)
            Rf -= gp * shifted + gpc * back
        if track:
            ep, en, em = _axis_phases(uc, grid, resid.shape)
            z = gp * (ep[:, None, None] * en[None, :, None] * em[None, None, :])
            resid -= z.real if is_self else 2.0 * z.real
            energy[it + 1] = np.sum(w * resid * resid)


def fse_iterate(R, Wf, S, iterations, gamma, resid=None, w=None, use_numba=None):
    """Run the spectral model-generation loop in place on ``R``.

    ``R`` is the DFT of the weighted residual on the working grid and ``Wf``
    the DFT of the weights. Returns ``(coeffs, selected, energy)``; ``energy``
    is empty unless ``resid``/``w`` are given, in which case the spatial
    residual is updated alongside and ``energy[i]`` holds the weighted residual
    energy after ``i`` iterations.
    """
    if use_numba is None:
        use_numba = _accel.USE_NUMBA
    coeffs = np.zeros(R.shape, dtype=np.complex128)
    selected = np.zeros(iterations, dtype=np.int64)
    if resid is not None:
        energy = np.empty(iterations + 1)
        energy[0] = np.sum(w * resid * resid)
    else:
        resid = np.zeros((1, 1, 1))
        w = np.zeros((1, 1, 1))
        energy = np.empty(0)
    if use_numba and _accel.HAS_NUMBA:
        _fse_loop_nb(R, Wf, coeffs, float(S), int(iterations), float(gamma), selected, resid, w, energy)
    else:
        _fse_loop_np(R, Wf, coeffs, float(S), int(iterations), float(gamma), selected, resid, w, energy)
    return coeffs, selected, energy


@njit(parallel=True)
def _sse_map_nb(refp, ys, xs, vals, radius):
    size = 2 * radius + 1
    out = np.empty((size, size))
    n = vals.shape[0]
    for i in prange(size):
        for j in range(size):
            acc = 0.0
            for s in range(n):
                d = vals[s] - refp[ys[s] + i, xs[s] + j]
                acc += d * d
            out[i, j] = acc
    return out


def _sse_map_np(refp, ys, xs, vals, radius):
    size = 2 * radius + 1
    out = np.zeros((size, size))
    for s in range(vals.shape[0]):
        y, x = ys[s], xs[s]
        d = vals[s] - refp[y : y + size, x : x + size]
        out += d * d
    return out


def sse_map(refp, ys, xs, vals, radius, use_numba=None):
    """Sum of squared errors for every candidate displacement.

    ``refp`` is the reference plane edge-padded by ``radius``; ``ys``/``xs``
    are template positions on the unpadded reference grid and ``vals`` the
    template samples. ``out[radius + dy, radius + dx]`` is the error for
    displacement ``(dx, dy)``.
    """
    if use_numba is None:
        use_numba = _accel.USE_NUMBA
    ys = np.ascontiguousarray(ys, dtype=np.int64)
    xs = np.ascontiguousarray(xs, dtype=np.int64)
    vals = np.ascontiguousarray(vals, dtype=np.float64)
    refp = np.ascontiguousarray(refp, dtype=np.float64)
    if use_numba and _accel.HAS_NUMBA:
        return _sse_map_nb(refp, ys, xs, vals, int(radius))
    return _sse_map_np(refp, ys, xs, vals, int(radius))
