"""Discrete omega-psh envelopes ``P(h) = sup{u psh, u <= h}`` as obstacle problems.

n=1: the largest grid function with ``1 + Lap_h psi >= 0`` and ``psi <= h``.
n=2: the largest one with ``1 + Lap_h psi >= 0`` restricted to six complex
lines: the two coordinate lines and ``z2 = z1, -z1, i z1, -i z1``.  The
four diagonal lines control the real and imaginary parts of the off-diagonal
Hessian entry.  This is an upper bound for the true discrete envelope.

Both are fixed points of the projected Gauss-Seidel map
``psi <- min(h, min_lines (sum of line neighbours + line_factor dx^2) / 4)``,
which decreases monotonically from ``psi = h``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

from . import _kernels
from .errors import ConvergenceError, DomainError, GridMismatchError, NormalizationError, PreconditionError
from .grid import TorusField, complex_hessian, hessian_stencils, ma_density, osc, write_field

__all__ = [
    "EnvelopeResult",
    "compute_envelope",
    "active_set_envelope",
    "reduction_check",
    "sup_bound_check",
    "save_envelope",
]

MASS_TOL = {1: 1e-6, 2: 1e-3}


@dataclass
class EnvelopeResult:
    psi: TorusField
    contact: np.ndarray
    off_contact_mass: float
    iterations: int
    history: list = field(default_factory=list, repr=False)
    min_eigenvalue: float = 1.0
    max_eigenvalue: float = 1.0
    backend: str = ""

    @property
    def contact_fraction(self):
        return float(self.contact.mean())

    def summary(self):
        return {
            "n": self.psi.grid.n,
            "N": self.psi.grid.N,
            "iterations": self.iterations,
            "contact_points": int(self.contact.sum()),
            "contact_fraction": self.contact_fraction,
            "off_contact_mass": self.off_contact_mass,
            "min_eigenvalue": self.min_eigenvalue,
            "max_eigenvalue": self.max_eigenvalue,
            "backend": self.backend,
            "final_update": self.history[-1] if self.history else 0.0,
        }


def _finish(psi, h, iterations, history, backend):
    ctol = 1e-8 * max(osc(h), 1e-300)
    contact = np.abs(psi.values - h.values) <= ctol
    dens = ma_density(psi).values
    off = float(np.abs(dens[~contact]).sum() / dens.size)
    # the largest eigenvalue tracks the second differences, bounded for a C^{1,1} envelope
    ev = complex_hessian(psi).eigenvalues
    return EnvelopeResult(psi, contact, off, iterations, history, float(ev[..., 0].min()),
                          float(ev[..., -1].max()), backend)


def compute_envelope(h, tol=1e-13, max_sweeps=200000, omega=1.0, backend=None):
    """Envelope of the obstacle ``h`` by projected Gauss-Seidel sweeps.

    Parameters
    ----------
    h : TorusField
    tol : float
        Stop when the largest update of a sweep is below ``tol * max(1, osc h)``.
    omega : float
        Relaxation in ``(0, 1]``; ``1`` keeps the iteration monotone.
    backend : {"cython", "python"}, optional
        Kernel implementation; defaults to the one selected at import.

    Raises
    ------
    ConvergenceError
        If ``max_sweeps`` is exhausted; ``history`` holds the updates.
    """
    if not 0 < omega <= 1:
        raise DomainError("omega must lie in (0, 1]")
    kern = _kernels.get_backend(backend)
    g = h.grid
    psi = np.ascontiguousarray(h.values, dtype=float).ravel().copy()
    hh = np.ascontiguousarray(h.values, dtype=float).ravel()
    stop = tol * max(1.0, osc(h))
    sweeps, history = kern.envelope_sweeps(psi, hh, g.n, g.N, g.spacing ** 2, stop, max_sweeps, omega)
    if history and history[-1] > stop:
        raise ConvergenceError(f"envelope sweeps stalled at update {history[-1]:.3e}", history)
    name = "python" if kern is _kernels.python_backend else "cython"
    return _finish(g.field(psi.reshape(g.shape)), h, sweeps, history, name)


def active_set_envelope(h, c=1.0, max_iter=200):
    """n=1 oracle: primal-dual active set for the discrete obstacle problem.

    Solves ``psi <= h``, ``mu = 1 + Lap_h psi >= 0``, ``mu (h - psi) = 0``
    with a direct sparse solve per active-set update.
    """
    g = h.grid
    if g.n != 1:
        raise DomainError("the active-set oracle is for n=1")
    st = hessian_stencils(g)[0, 0][0]
    M = g.size
    idx = np.arange(M).reshape(g.shape)
    rows, cols, vals = [], [], []
    for o, w in st:
        rows.append(idx.ravel())
        cols.append(np.roll(idx, tuple(-s for s in o), axis=(0, 1)).ravel())
        vals.append(np.full(M, w))
    L = sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(M, M))
    hv = h.values.ravel()
    psi = hv.copy()
    mu = 1.0 + L @ psi
    active = (mu + c * (psi - hv)) > 0
    I = sparse.identity(M, format="csr")
    for it in range(max_iter):
        if not active.any():
            raise ConvergenceError("active set emptied")
        Da = sparse.diags(active.astype(float))
        Di = sparse.diags((~active).astype(float))
        A = (Da @ I + Di @ L).tocsc()
        rhs = np.where(active, hv, -1.0)
        psi = spla.spsolve(A, rhs)
        mu = 1.0 + L @ psi
        new = (mu + c * (psi - hv)) > 0
        if np.array_equal(new, active):
            return g.field(psi.reshape(g.shape)), active.reshape(g.shape), it + 1
        active = new
    raise ConvergenceError("active set did not settle")


# -- reduction to the envelope ------------------------------------------------


def _g_residual(phi, g, c, f):
    from .operators import eval_g_field

    lam = complex_hessian(phi).eigenvalues
    gv = eval_g_field(g, lam)
    return gv, float(np.abs(gv - c * f.values ** (1.0 / phi.grid.n)).max())


def reduction_check(phi, g, delta, c, f, solve_tol=1e-8, envelope=None):
    """Compare ``delta^n MA(psi)`` with ``c^n f`` on the contact set of ``psi = P(phi)``.

    Returns a dict with the maximal violation, the intermediate link
    ``delta^n MA(psi) <= g(lambda(phi))^n`` and the off-contact mass.
    """
    if phi.grid != f.grid:
        raise GridMismatchError("phi and f live on different grids")
    n = phi.grid.n
    gv, res = _g_residual(phi, g, c, f)
    if res > solve_tol:
        raise PreconditionError(f"phi does not solve g(lambda(phi)) = c f^(1/n) (residual {res:.3e})")
    env = compute_envelope(phi) if envelope is None else envelope
    ma = ma_density(env.psi).values
    lhs = delta ** n * ma
    rhs = c ** n * f.values
    mid = gv ** n
    C = env.contact
    viol = float(np.max(lhs[C] - rhs[C])) if C.any() else 0.0
    link = float(np.max(lhs[C] - mid[C])) if C.any() else 0.0
    return {
        "n": n,
        "N": phi.grid.N,
        "delta": delta,
        "c": c,
        "solve_residual": res,
        "contact_fraction": env.contact_fraction,
        "max_violation": viol,
        "majorization_link_violation": link,
        "off_contact_mass": env.off_contact_mass,
        "mass_tol": MASS_TOL[n],
        "sweeps": env.iterations,
    }


def sup_bound_check(psi, phi, f, w, delta, c, n=None):
    """Evaluate the chain bounding ``h(-sup psi)`` by the Orlicz norm of ``f``.

    ``h = (w*)^{-1}``.  Links::

        0 <= h(-sup psi)
          <= int h(-psi) MA(psi)
          <= (c/delta)^n int h(-phi) f
          <= (c/delta)^n ||f||_w (w(1) + int (-phi))

    The last link is Young's inequality applied to ``f/||f||_w`` and
    ``h(-phi)``; the same bound without ``w(1)`` is reported as
    ``bound_without_w1``.
    """
    from .weights import DensitySample, eval_weight, inverse_conjugate_array, luxembourg_norm

    if psi is None:
        psi = compute_envelope(phi).psi
    if psi.grid != phi.grid or phi.grid != f.grid:
        raise GridMismatchError("fields live on different grids")
    if abs(phi.sup()) > 1e-12:
        raise NormalizationError(f"need sup phi = 0, got {phi.sup():.3e}")
    if np.any(psi.values > phi.values + 1e-12):
        raise PreconditionError("psi must lie below phi")
    n = phi.grid.n if n is None else n
    k = (c / delta) ** n
    hy = lambda y: inverse_conjugate_array(w, np.asarray(y, dtype=float))[0]
    top = float(hy(-psi.sup()))
    ma = ma_density(psi).values
    link1 = float(np.mean(hy(-psi.values) * ma))
    link2 = k * float(np.mean(hy(-phi.values) * f.values))
    fnorm = luxembourg_norm(DensitySample.from_field(f), w)
    mean_neg = float(np.mean(-phi.values))
    link3 = k * fnorm * (float(eval_weight(w, 1.0)) + mean_neg)
    values = [0.0, top, link1, link2, link3]
    slacks = [b - a for a, b in zip(values[:-1], values[1:])]
    return {
        "values": values,
        "slacks": slacks,
        "holds": all(s >= -1e-12 for s in slacks),
        "lux_norm": fnorm,
        "bound_without_w1": k * fnorm * mean_neg,
    }


def save_envelope(prefix, result):
    """Write ``<prefix>.mafld`` and a ``<prefix>.json`` sidecar."""
    write_field(f"{prefix}.mafld", result.psi)
    with open(f"{prefix}.json", "w") as fh:
        json.dump(result.summary(), fh, indent=2, sort_keys=True)
