"""Pure-Python fallback for the compiled kernels.

The envelope sweep is a vectorized multicolor Gauss-Seidel: points of one
color have no stencil neighbor of the same color, so each color can be
updated at once.  Two colors (red-black) suffice for n=1; n=2 needs four
because the diagonal complex lines couple the two factors.  For
``omega = 1`` the iteration is monotone and converges to the same fixed
point as the lexicographic compiled sweep.
"""

import numpy as np

# line stencils per complex dimension: (offsets, multiple of dx^2)
_LINES = {
    1: [([(1, 0), (-1, 0), (0, 1), (0, -1)], 1.0)],
    2: [
        ([(1, 0, 0, 0), (-1, 0, 0, 0), (0, 1, 0, 0), (0, -1, 0, 0)], 1.0),
        ([(0, 0, 1, 0), (0, 0, -1, 0), (0, 0, 0, 1), (0, 0, 0, -1)], 1.0),
        ([(1, 0, 1, 0), (-1, 0, -1, 0), (0, 1, 0, 1), (0, -1, 0, -1)], 2.0),
        ([(1, 0, -1, 0), (-1, 0, 1, 0), (0, 1, 0, -1), (0, -1, 0, 1)], 2.0),
        ([(1, 0, 0, 1), (-1, 0, 0, -1), (0, 1, -1, 0), (0, -1, 1, 0)], 2.0),
        ([(1, 0, 0, -1), (-1, 0, 0, 1), (0, 1, 1, 0), (0, -1, -1, 0)], 2.0),
    ],
}


def _color_masks(n, N):
    idx = np.indices((N,) * (2 * n))
    if n == 1:
        col = (idx[0] + idx[1]) % 2
        return [col == c for c in range(2)]
    col = (idx[0] + idx[1] + 2 * idx[2] + 2 * idx[3]) % 4
    return [col == c for c in range(4)]


def _target(psi, n, dx2):
    axes = tuple(range(psi.ndim))
    best = None
    for offsets, mult in _LINES[n]:
        s = np.zeros_like(psi)
        for o in offsets:
            s += np.roll(psi, tuple(-x for x in o), axis=axes)
        t = 0.25 * (s + mult * dx2)
        best = t if best is None else np.minimum(best, t)
    return best


def envelope_sweeps(psi, h, n, N, dx2, tol, max_sweeps, omega=1.0):
    shape = (N,) * (2 * n)
    p = psi.reshape(shape)
    hh = np.asarray(h).reshape(shape)
    masks = _color_masks(n, N)
    history = []
    for k in range(max_sweeps):
        change = 0.0
        for m in masks:
            t = _target(p, n, dx2)
            new = np.minimum(p + omega * (t - p), hh)
            d = np.abs(new - p)[m]
            if d.size:
                change = max(change, float(d.max()))
            p[m] = new[m]
        history.append(change)
        if change <= tol:
            return k + 1, history
    return max_sweeps, history


def conjugate_sweep(t, w, s):
    t = np.asarray(t, dtype=float)
    w = np.asarray(w, dtype=float)
    s = np.asarray(s, dtype=float)
    hull = []
    for j in range(t.size):
        while len(hull) >= 2:
            i1, i2 = hull[-2], hull[-1]
            cross = (t[i2] - t[i1]) * (w[j] - w[i1]) - (w[i2] - w[i1]) * (t[j] - t[i1])
            if cross <= 0.0:
                hull.pop()
            else:
                break
        hull.append(j)
    out = np.empty(s.size)
    arg = np.empty(s.size, dtype=np.intp)
    k = 0
    for j, sj in enumerate(s):
        while k + 1 < len(hull):
            i0, i1 = hull[k], hull[k + 1]
            if sj * t[i1] - w[i1] >= sj * t[i0] - w[i0]:
                k += 1
            else:
                break
        out[j] = sj * t[hull[k]] - w[hull[k]]
        arg[j] = hull[k]
    return out, arg
