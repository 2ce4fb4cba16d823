"""Discrete Monge-Ampere solves on the model torus and the estimates around them.

``MA(phi) = b f`` is solved with ``mean(phi) = 0``.  The scalar ``b`` absorbs
the O(dx^2) mass defect of the discrete operator for n=2; it equals 1 when
``f`` is the discrete density of some grid function (n=1 always).
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla
from scipy.special import logsumexp

from .errors import (
    ConvergenceError,
    DampingError,
    DegenerateScheduleError,
    DomainError,
    GridMismatchError,
    NormalizationError,
    PreconditionError,
)
from .grid import (
    TorusField,
    TorusGrid,
    complex_hessian,
    grad_energy,
    hessian_stencils,
    laplacian_symbol,
    lp_norm,
    ma_density,
    osc,
    sup_norm,
)

__all__ = [
    "ENERGY_CONSTANT",
    "SolveReport",
    "MoserSchedule",
    "MoserTrace",
    "EnergyCheck",
    "ExperimentRow",
    "solve_poisson_spectral",
    "solve_ma_newton",
    "moser_trace",
    "energy_chain_check",
    "skoda_integral",
    "skoda_alpha_scan",
    "DensityFamily",
    "density_family",
    "osc_experiment",
    "experiment_csv",
]

# constant in the energy inequality for MA(phi) = 1 + tr H + ..., tr H = real Laplacian
ENERGY_CONSTANT = {1: 4.0, 2: 2.0}

MEAN_TOL = 1e-10


@dataclass
class SolveReport:
    iterations: int
    residual: float
    osc: float
    scale: float = 1.0
    norm_trace: list = field(default_factory=list)
    wall_time: float = 0.0
    flags: dict = field(default_factory=dict)
    residual_history: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def _check_density(f, require_positive=True):
    if not isinstance(f, TorusField):
        raise DomainError("density must be a TorusField")
    if require_positive and f.inf() <= 0:
        raise DomainError("density must be positive")
    if abs(f.mean() - 1.0) > MEAN_TOL:
        raise NormalizationError(f"density has mean {f.mean():.12g}, expected 1")


def solve_poisson_spectral(f):
    """Exact discrete solve of ``1 + Lap_h phi = f`` for n=1, sup-normalized to 0."""
    if f.grid.n != 1:
        raise DomainError("the spectral solve is the n=1 path")
    _check_density(f, require_positive=False)
    sym = laplacian_symbol(f.grid)
    rhs = np.fft.fftn(f.values - 1.0)
    sym = sym.copy()
    sym.flat[0] = 1.0
    sol = rhs / sym
    sol.flat[0] = 0.0
    phi = np.fft.ifftn(sol).real
    return f.grid.field(phi).sup_normalized(0.0)


# -- Newton -----------------------------------------------------------------


def _stencil_matrix(grid, stencil):
    """Sparse matrix of a periodic stencil on the flattened grid."""
    M = grid.size
    idx = np.arange(M).reshape(grid.shape)
    rows, cols, vals = [], [], []
    for o, w in stencil:
        shifted = np.roll(idx, tuple(-s for s in o), axis=tuple(range(grid.ndim)))
        rows.append(idx.ravel())
        cols.append(shifted.ravel())
        vals.append(np.full(M, w))
    return sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(M, M))


_MATRIX_CACHE = {}


def _hessian_matrices(grid):
    if grid not in _MATRIX_CACHE:
        st = hessian_stencils(grid)
        mats = {}
        for key, (re, im) in st.items():
            mats[key] = (_stencil_matrix(grid, re), _stencil_matrix(grid, im) if im else None)
        _MATRIX_CACHE[grid] = mats
    return _MATRIX_CACHE[grid]


def _jacobian(phi):
    """Derivative of ``ma_density`` at ``phi`` as a sparse matrix."""
    mats = _hessian_matrices(phi.grid)
    v = phi.values.ravel()
    if phi.grid.n == 1:
        return mats[0, 0][0]
    S11, S22 = mats[0, 0][0], mats[1, 1][0]
    Sre, Sim = mats[0, 1]
    a = 1.0 + S11 @ v
    d = 1.0 + S22 @ v
    re = Sre @ v
    im = Sim @ v
    D = sparse.diags
    return (D(d) @ S11 + D(a) @ S22 - 2.0 * (D(re) @ Sre) - 2.0 * (D(im) @ Sim)).tocsr()


def _bordered_solve(J, fvec, r, grid, direct):
    """Solve ``J dphi - f db = r`` with ``mean(dphi) = 0``."""
    M = J.shape[0]
    if direct:
        A = sparse.bmat([[J, -fvec.reshape(-1, 1)], [np.full((1, M), 1.0 / M), None]], format="csc")
        x = spla.spsolve(A, np.concatenate([r, [0.0]]))
        return x[:M], x[M]
    sym = laplacian_symbol(grid).copy()
    sym.flat[0] = 1.0
    fmean = float(fvec.mean())

    def precond(y):
        rr, rho = y[:M], y[M]
        db = -rr.mean() / fmean
        g = np.fft.fftn((rr + fvec * db).reshape(grid.shape)) / sym
        g.flat[0] = 0.0
        dphi = np.fft.ifftn(g).real.ravel() + rho
        return np.concatenate([dphi, [db]])

    def matvec(x):
        return np.concatenate([J @ x[:M] - fvec * x[M], [x[:M].mean()]])

    A = spla.LinearOperator((M + 1, M + 1), matvec=matvec, dtype=float)
    P = spla.LinearOperator((M + 1, M + 1), matvec=precond, dtype=float)
    x, info = spla.gmres(A, np.concatenate([r, [0.0]]), M=P, rtol=1e-13, atol=0.0,
                         restart=60, maxiter=50)
    if info < 0:
        raise ConvergenceError("inner linear solve failed")
    return x[:M], x[M]


def solve_ma_newton(f, tol=None, max_iter=50, init=None, direct=None):
    """Damped Newton for ``MA(phi) = b f`` with mean-zero gauge.

    Parameters
    ----------
    f : TorusField
        Positive density with mean 1.
    tol : float, optional
        Max-norm residual target; defaults to 1e-10 (n=1) or 1e-7 (n=2).
    init : TorusField, optional
        Starting guess (default 0); must be strictly psh.
    direct : bool, optional
        Force a sparse direct inner solve; by default used for n=1 up to
        20000 points (4-d fill-in makes it slow for n=2).

    Returns
    -------
    phi : TorusField
        Solution normalized to ``sup phi = 0``.
    report : SolveReport
        ``report.scale`` is the multiplier ``b``.
    """
    _check_density(f)
    grid = f.grid
    tol = (1e-10 if grid.n == 1 else 1e-7) if tol is None else tol
    direct = (grid.n == 1 and grid.size <= 20000) if direct is None else direct
    t0 = time.perf_counter()
    phi = grid.constant(0.0) if init is None else init.mean_normalized()
    if phi.grid != grid:
        raise GridMismatchError("initial guess lives on another grid")
    fvec = f.values.ravel()
    b = 1.0

    def residual(p, bb):
        return ma_density(p).values.ravel() - bb * fvec

    res = residual(phi, b)
    rnorm = float(np.abs(res).max())
    history = [rnorm]
    it = 0
    while rnorm >= tol:
        if it >= max_iter:
            raise ConvergenceError(f"Newton stalled at residual {rnorm:.3e}", history)
        J = _jacobian(phi)
        dphi, db = _bordered_solve(J, fvec, -res, grid, direct)
        step = 1.0
        for _ in range(40):
            trial = phi.with_values(phi.values + step * dphi.reshape(grid.shape))
            tb = b + step * db
            tres = residual(trial, tb)
            tn = float(np.abs(tres).max())
            psh = complex_hessian(trial).eigenvalues[..., 0].min() > 0
            if psh and tn < rnorm:
                break
            step *= 0.5
        else:
            raise DampingError(f"no admissible step from residual {rnorm:.3e}", history)
        phi, b, res, rnorm = trial, tb, tres, tn
        history.append(rnorm)
        it += 1
    phi = phi.sup_normalized(0.0)
    report = SolveReport(
        iterations=it,
        residual=rnorm,
        osc=osc(phi),
        scale=float(b),
        wall_time=time.perf_counter() - t0,
        flags={"psh": bool(complex_hessian(phi).eigenvalues[..., 0].min() > 0), "direct": bool(direct)},
        residual_history=history,
    )
    return phi, report


# -- Moser ------------------------------------------------------------------


@dataclass(frozen=True)
class MoserSchedule:
    """Exponents ``r_0 = 1/(q-1)``, ``r_k = n/(n-1) (r_{k-1}/q + 1)`` with ``q = p/(p-1)``."""

    n: int
    p: float

    def __post_init__(self):
        if self.n < 2:
            raise DegenerateScheduleError(
                "the schedule divides by n-1; use n >= 2 or MoserSchedule.geometric")
        if not self.p > self.n:
            raise PreconditionError(f"need p > n, got p={self.p}, n={self.n}")

    @property
    def q(self):
        return self.p / (self.p - 1.0)

    @property
    def r0(self):
        return 1.0 / (self.q - 1.0)

    @property
    def ratio_limit(self):
        return self.n / ((self.n - 1.0) * self.q)

    def radii(self, K):
        r = [self.r0]
        for _ in range(K):
            r.append(self.n / (self.n - 1.0) * (r[-1] / self.q + 1.0))
        return np.asarray(r)

    @staticmethod
    def geometric(r0, ratio, K):
        """Plain geometric exponents for any dimension."""
        if r0 < 1 or ratio <= 1:
            raise DomainError("need r0 >= 1 and ratio > 1")
        return r0 * ratio ** np.arange(K + 1)


@dataclass
class MoserTrace:
    radii: np.ndarray
    norms: np.ndarray
    sup: float

    @property
    def limit(self):
        return float(self.norms[-1])

    @property
    def monotone(self):
        return bool(np.all(np.diff(self.norms) >= -1e-12 * self.sup))

    def relative_gap(self, r_min=1e3):
        """Largest ``1 - ||phi||_r / ||phi||_oo`` over traced ``r > r_min``."""
        sel = self.radii > r_min
        if not sel.any() or self.sup == 0:
            return 0.0
        return float(np.max(1.0 - self.norms[sel] / self.sup))


def moser_trace(phi, schedule, K):
    """Norms ``||phi||_{r_k}`` along a schedule (or an explicit radius array)."""
    radii = schedule.radii(K) if isinstance(schedule, MoserSchedule) else np.asarray(schedule, float)[: K + 1]
    norms = np.array([lp_norm(phi, max(r, 1.0)) for r in radii])
    return MoserTrace(radii, norms, sup_norm(phi))


# -- energy chain -----------------------------------------------------------


@dataclass
class EnergyCheck:
    lhs: float
    rhs: float
    slack: float
    small_r: bool


def energy_chain_check(phi, f, r, residual_tol=1e-6):
    """Both sides of ``int (-phi)^r (f - 1) >= c_n r/(r+1)^2 ||grad (-phi)^((r+1)/2)||^2``.

    ``phi <= -1`` is required; ``phi`` must solve ``MA(phi) = f`` within
    ``residual_tol``.
    """
    if r <= 0:
        raise DomainError("r must be positive")
    if phi.grid != f.grid:
        raise GridMismatchError("phi and f live on different grids")
    if phi.sup() > -1.0 + 1e-12:
        raise NormalizationError(f"need phi <= -1, sup is {phi.sup():.6g}")
    res = float(np.abs(ma_density(phi).values - f.values).max())
    if res > residual_tol:
        raise PreconditionError(f"phi does not solve MA(phi)=f (residual {res:.3e})")
    neg = -phi.values
    lhs = float(np.mean(neg ** r * (f.values - 1.0)))
    u = phi.with_values(neg ** ((r + 1.0) / 2.0))
    rhs = ENERGY_CONSTANT[phi.grid.n] * r / (r + 1.0) ** 2 * grad_energy(u)
    return EnergyCheck(lhs, rhs, lhs - rhs, small_r=r < 0.1)


# -- Skoda integrals --------------------------------------------------------


def skoda_integral(phi, alpha, sup_tol=1e-12):
    """``mean exp(-alpha phi)`` for ``sup phi <= 0``, evaluated in log-sum-exp form."""
    if phi.sup() > sup_tol:
        raise NormalizationError(f"need sup phi <= 0, got {phi.sup():.6g}")
    if alpha < 0:
        raise DomainError("alpha must be nonnegative")
    lse = logsumexp(-alpha * phi.values.ravel()) - math.log(phi.grid.size)
    return math.exp(lse) if lse < 709 else math.inf


def skoda_alpha_scan(phi, alphas, cap):
    """Integrals over increasing ``alphas`` and the largest one staying ``<= cap``."""
    alphas = np.sort(np.asarray(alphas, dtype=float))
    vals = np.array([skoda_integral(phi, a) for a in alphas])
    ok = alphas[vals <= cap]
    return (float(ok.max()) if ok.size else None), alphas, vals


# -- oscillation experiment -------------------------------------------------


class DensityFamily:
    """Mean-one densities ``f_eps`` depending on ``x1`` only.

    ``power_sine``: ``f_eps ~ (sin^2(pi x1) + eps)^(-exponent)``, which
    degenerates to ``|sin(pi x1)|^(-2 exponent)`` as ``eps -> 0``;
    ``constant``: ``f = 1``.

    Grid densities are exact cell averages, so they keep unit mass and stay
    bounded on a fixed grid; norms of the continuum density come from a
    1-d quadrature in ``u`` with ``x = u^m``, which removes the singularity
    at ``x1 = 0``.
    """

    NAMES = ("power_sine", "constant")

    def __init__(self, name, exponent=0.4, panels=64, nodes=16):
        if name not in self.NAMES:
            raise DomainError(f"unknown density family {name!r}")
        if name == "power_sine" and not 0 < exponent < 0.5:
            raise DomainError("exponent must lie in (0, 1/2) for an integrable limit")
        self.name = name
        self.exponent = float(exponent)
        self.m = max(1, math.ceil(2.0 / (1.0 - 2.0 * self.exponent)))
        x, w = np.polynomial.legendre.leggauss(nodes)
        edges = np.linspace(0.0, 0.5 ** (1.0 / self.m), panels + 1)
        half = 0.5 * np.diff(edges)
        u = (edges[:-1, None] + half[:, None] * (x[None, :] + 1.0)).ravel()
        wu = (half[:, None] * w[None, :]).ravel()
        self._x = u ** self.m
        self._dx = self.m * u ** (self.m - 1) * wu

    def raw(self, x, eps):
        return (np.sin(np.pi * x) ** 2 + eps) ** (-self.exponent)

    def _check_eps(self, eps):
        if self.name == "power_sine" and eps < 0:
            raise DomainError("eps must be nonnegative")

    def _partial_mass(self, b, eps):
        """``int_0^b raw`` for ``0 <= b <= 1/2``."""
        x = self._x * (2.0 * b)
        return float(np.dot(self._dx * 2.0 * b, self.raw(x, eps)))

    def total_mass(self, eps):
        self._check_eps(eps)
        if self.name == "constant":
            return 1.0
        return 2.0 * self._partial_mass(0.5, eps)

    def grid_density(self, grid, eps):
        """Cell averages on the grid (cells centred on grid points), mean one."""
        self._check_eps(eps)
        if self.name == "constant":
            return grid.constant(1.0)
        N = grid.N
        edges = (np.arange(N // 2 + 1) + 0.5) / N
        edges[-1] = 0.5
        F = np.array([self._partial_mass(min(e, 0.5), eps) for e in edges])
        # cell i centred at i/N; F is symmetric about 0 and 1/2
        cells = np.empty(N)
        cells[0] = 2.0 * F[0]
        cells[1:N // 2] = np.diff(F)[: N // 2 - 1]
        cells[N // 2] = 2.0 * (F[-1] - F[-2])
        cells[N // 2 + 1:] = cells[1:N // 2][::-1]
        prof = cells * N / cells.mean() / N
        shape = [1] * grid.ndim
        shape[0] = N
        return grid.field(np.broadcast_to(prof.reshape(shape), grid.shape).copy())

    def sample(self, eps):
        """Continuum density as a :class:`~malab.weights.DensitySample` over ``x1``."""
        from .weights import DensitySample

        self._check_eps(eps)
        if self.name == "constant":
            return DensitySample([1.0], [1.0])
        x = np.concatenate([self._x, 1.0 - self._x[::-1]])
        m = np.concatenate([self._dx, self._dx[::-1]])
        vals = self.raw(x, eps) / self.total_mass(eps)
        m = m / m.sum()
        return DensitySample(vals, m)

    def limit_lp_norm(self, p):
        """Closed-form ``||f_0||_p`` of the degenerate limit, from
        ``int_0^1 |sin(pi x)|^(-s) dx = Gamma((1-s)/2) / (sqrt(pi) Gamma(1-s/2))``."""
        if self.name == "constant":
            return 1.0
        s = 2.0 * self.exponent * p
        if s >= 1.0:
            return math.inf

        def sine_moment(s):
            return math.exp(math.lgamma(0.5 - 0.5 * s) - math.lgamma(1.0 - 0.5 * s)) / math.sqrt(math.pi)

        z0 = sine_moment(2.0 * self.exponent)
        return sine_moment(s) ** (1.0 / p) / z0

    def sup(self, eps):
        if self.name == "constant":
            return 1.0
        return math.inf if eps == 0 else eps ** (-self.exponent) / self.total_mass(eps)


def density_family(name, grid, eps, exponent=0.4):
    """Grid density of a named family (see :class:`DensityFamily`)."""
    return DensityFamily(name, exponent).grid_density(grid, eps)


@dataclass
class ExperimentRow:
    eps: float
    osc: float
    lp_norm: float
    lux: dict
    sup_f: float
    failed: str = ""


def _experiment_row(family, eps, weights, p, grid):
    from .weights import luxembourg_norm

    f = family.grid_density(grid, eps)
    sample = family.sample(eps)
    lux = {w.name: luxembourg_norm(sample, w) for w in weights}
    lp = sample.integral(lambda v: v ** p) ** (1.0 / p)
    try:
        if grid.n == 1:
            phi = solve_poisson_spectral(f)
        else:
            phi, _ = solve_ma_newton(f)
        o = osc(phi)
        failed = ""
    except (DomainError, ConvergenceError) as exc:
        o, failed = math.nan, f"{type(exc).__name__}: {exc}"
    return ExperimentRow(float(eps), o, lp, lux, family.sup(eps), failed)


def osc_experiment(family, eps_grid, weights, p, n=1, N=64, exponent=0.4, jobs=1):
    """Solve ``MA(f_eps)`` for each ``eps`` and tabulate oscillation and norms.

    ``osc`` is measured on the grid solution; ``lp_norm`` and the
    Luxembourg norms are those of the continuum density.  Rows come back in
    ``eps_grid`` order whatever ``jobs`` is.
    """
    if p < 1:
        raise DomainError("p must be >= 1")
    fam = family if isinstance(family, DensityFamily) else DensityFamily(family, exponent)
    grid = TorusGrid(n, N)
    args = [(fam, e, list(weights), p, grid) for e in eps_grid]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(lambda a: _experiment_row(*a), args))
    return [_experiment_row(*a) for a in args]


def experiment_csv(rows, weights):
    """CSV text with header ``eps,osc,lp_norm,lux_<name>...``."""
    names = [w.name for w in weights]
    lines = [",".join(["eps", "osc", "lp_norm"] + [f"lux_{nm}" for nm in names])]
    for r in rows:
        vals = [r.eps, r.osc, r.lp_norm] + [r.lux[nm] for nm in names]
        lines.append(",".join(repr(float(v)) for v in vals))
    return "\n".join(lines) + "\n"
