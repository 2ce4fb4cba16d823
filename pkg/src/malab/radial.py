"""Radial model potentials ``v = chi(log |z|^2)`` near the origin of C^n.

All evaluation happens in the logarithmic variable ``x = log(-t)`` with
``t = log |z|^2 <= 0``.  Profiles can therefore be probed at ``t = -e^1000``,
and the factor ``e^(-n t)`` of the density never has to be formed on its own:
densities are carried as ``log(F(t) e^(n t))``.

The Monge-Ampere density of ``v`` against Lebesgue measure is
``c_n chi'^(n-1) chi'' e^(-n t)`` with ``c_n = n! (2/pi)^n`` for
``dd^c = (i/pi) d dbar``; :func:`wedge_constant` recomputes it from a finite
difference Hessian of ``|z|^2``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator
from scipy.special import logsumexp

from .errors import DomainError, NonIntegrableError, OutOfDomainError, PreconditionError

__all__ = [
    "ProfileKind",
    "RadialProfile",
    "DensityProfile",
    "Verdict",
    "IntegrabilityResult",
    "BoundednessResult",
    "RigidityReport",
    "wedge_constant",
    "dimensional_constant",
    "forward_density",
    "log_forward_density",
    "inverse_profile",
    "integrability_functional",
    "substituted_integral",
    "is_bounded_profile",
    "rigidity_chain",
    "write_profile_csv",
    "read_profile_csv",
]

TRIPLE_LOG_OFFSET = 10000.0
CONVERGE_TOL = 1e-3
DIVERGE_TOL = 0.1
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def wedge_constant(n, h=0.25):
    """Density of ``(dd^c |z|^2)^n`` against Lebesgue measure, from finite differences.

    The complex Hessian ``v_{j kbar}`` of ``|z|^2`` is assembled from second
    differences of the real coordinates and the value of
    ``i dz ^ dzbar`` on ``(d/dx, d/dy)`` is evaluated from the forms.
    """
    def v(p):
        return float(np.sum(np.asarray(p) ** 2))

    dim = 2 * n
    E = np.eye(dim) * h

    def d2(a, b):
        if a == b:
            return (v(E[a]) - 2 * v(np.zeros(dim)) + v(-E[a])) / h ** 2
        return (v(E[a] + E[b]) - v(E[a] - E[b]) - v(-E[a] + E[b]) + v(-E[a] - E[b])) / (4 * h ** 2)

    H = np.empty((n, n), dtype=complex)
    for j in range(n):
        for k in range(n):
            xj, yj, xk, yk = 2 * j, 2 * j + 1, 2 * k, 2 * k + 1
            # d^2/dz_j dzbar_k = (1/4)[(d_xj d_xk + d_yj d_yk) + i (d_xj d_yk - d_yj d_xk)]
            H[j, k] = 0.25 * (d2(xj, xk) + d2(yj, yk) + 1j * (d2(xj, yk) - d2(yj, xk)))
    # dz(d/dx) = 1, dz(d/dy) = i, dzbar(d/dx) = 1, dzbar(d/dy) = -i
    area = (1j * (1 * (-1j) - 1j * 1)).real
    det = np.linalg.det(H).real
    return math.factorial(n) * det * (area / math.pi) ** n


_C_CACHE = {}


def dimensional_constant(n):
    """``c_n`` from :func:`wedge_constant`, cached per ``n``."""
    if n < 1:
        raise DomainError("n must be >= 1")
    if n not in _C_CACHE:
        _C_CACHE[n] = wedge_constant(n)
    return _C_CACHE[n]


class ProfileKind(str, Enum):
    TRIPLE_LOG = "TripleLog"
    EXPONENTIAL = "Exponential"
    LINEAR = "Linear"
    SAMPLED = "Sampled"


def _as_x(t):
    t = np.asarray(t, dtype=float)
    if np.any(t > 0):
        raise DomainError("profiles live on t <= 0")
    with np.errstate(divide="ignore"):
        return np.log(-t)


@dataclass(frozen=True, eq=False)
class _Samples:
    x: np.ndarray
    chi: CubicSpline
    log_chi1: CubicSpline
    chi2: Callable
    log_chi2: Optional[Callable]


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Convex increasing ``chi`` on ``(-oo, 0]``.

    ``x_cut = log(-t_cut)`` is the truncation point in the logarithmic
    variable; named profiles default to ``x_cut = 1e300``.
    """

    kind: ProfileKind
    n: int
    x_cut: float = 1e300
    offset: float = TRIPLE_LOG_OFFSET
    samples: Optional[_Samples] = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", ProfileKind(self.kind))
        if self.n < 1:
            raise DomainError("n must be >= 1")
        if self.kind is ProfileKind.SAMPLED and self.samples is None:
            raise DomainError("sampled profiles need samples")
        if self.kind is ProfileKind.TRIPLE_LOG and self.offset <= math.e ** math.e:
            raise DomainError("TripleLog offset must exceed e^e")

    @classmethod
    def triple_log(cls, n, offset=TRIPLE_LOG_OFFSET):
        """``chi(t) = -log log log(-t + offset)``."""
        return cls(ProfileKind.TRIPLE_LOG, n, offset=offset)

    @classmethod
    def exponential(cls, n):
        """``chi(t) = e^t``, i.e. ``v = |z|^2``."""
        return cls(ProfileKind.EXPONENTIAL, n)

    @classmethod
    def linear(cls, n):
        """``chi(t) = t``, i.e. ``v = log |z|^2``."""
        return cls(ProfileKind.LINEAR, n)

    @classmethod
    def sampled(cls, t, chi, chi1, chi2, n):
        """Profile from samples on ``t < 0`` (any order, no duplicates)."""
        chi1 = np.asarray(chi1, dtype=float)
        chi2 = np.asarray(chi2, dtype=float)
        if np.any(chi1 <= 0) or np.any(chi2 < 0):
            raise DomainError("samples must have chi' > 0 and chi'' >= 0")
        with np.errstate(divide="ignore"):
            return cls.from_logs(t, chi, np.log(chi1), np.log(chi2), n)

    @classmethod
    def from_logs(cls, t, chi, log_chi1, log_chi2, n):
        """Samples given through ``log chi'`` and ``log chi''`` (``-inf`` where ``chi'' = 0``)."""
        t = np.asarray(t, dtype=float)
        order = np.argsort(-t)  # ascending in x = log(-t)
        t, chi, lc1, lc2 = (np.asarray(a, dtype=float)[order] for a in (t, chi, log_chi1, log_chi2))
        if t.size < 4 or np.any(t >= 0):
            raise DomainError("need at least 4 samples with t < 0")
        if not np.all(np.isfinite(lc1)) or np.any(np.isnan(lc2)) or np.any(np.isposinf(lc2)):
            raise DomainError("samples must have chi' > 0 and chi'' >= 0")
        x = np.log(-t)
        if np.any(np.diff(x) <= 0):
            raise DomainError("duplicate sample points")
        if np.all(np.isfinite(lc2)):
            spl = CubicSpline(x, lc2)
            c2 = lambda z, s=spl: np.exp(s(z))
        else:
            spl = None
            c2 = PchipInterpolator(x, np.exp(lc2))
        s = _Samples(x, CubicSpline(x, chi), CubicSpline(x, lc1), c2, spl)
        return cls(ProfileKind.SAMPLED, n, x_cut=float(x[-1]), samples=s)

    @property
    def t_cut(self):
        with np.errstate(over="ignore"):
            return -math.exp(self.x_cut) if self.x_cut < 709 else -math.inf

    @property
    def x_range(self):
        if self.kind is ProfileKind.SAMPLED:
            return float(self.samples.x[0]), float(self.samples.x[-1])
        return -math.inf, self.x_cut

    @property
    def vanishing_slope(self):
        """Whether ``chi'(-oo) = 0`` (flag only)."""
        if self.kind is ProfileKind.LINEAR:
            return False
        if self.kind is ProfileKind.SAMPLED:
            return bool(self.samples.log_chi1(self.samples.x[-1]) < self.samples.log_chi1(self.samples.x[0]))
        return True

    def _check(self, x):
        lo, hi = self.x_range
        x = np.asarray(x, dtype=float)
        if np.any(x < lo - 1e-12) or np.any(x > hi + 1e-12):
            raise OutOfDomainError(f"t outside the profile domain [{-math.exp(min(hi, 709)):.6g}, {-math.exp(lo):.6g}]")
        return x

    def _triple(self, x):
        lu = np.logaddexp(x, math.log(self.offset))  # log(-t + offset)
        l2 = np.log(lu)
        return lu, l2, np.log(l2)

    # evaluators in x = log(-t)

    def chi_x(self, x):
        x = self._check(x)
        if self.kind is ProfileKind.TRIPLE_LOG:
            return -self._triple(x)[2]
        if self.kind is ProfileKind.EXPONENTIAL:
            return np.exp(-np.exp(x))
        if self.kind is ProfileKind.LINEAR:
            return -np.exp(x)
        return self.samples.chi(x)

    def log_chi1_x(self, x):
        x = self._check(x)
        if self.kind is ProfileKind.TRIPLE_LOG:
            lu, l2, l3 = self._triple(x)
            return -(lu + l2 + l3)
        if self.kind is ProfileKind.EXPONENTIAL:
            return -np.exp(x)
        if self.kind is ProfileKind.LINEAR:
            return np.zeros_like(x)
        return self.samples.log_chi1(x)

    def log_chi2_x(self, x):
        x = self._check(x)
        if self.kind is ProfileKind.TRIPLE_LOG:
            lu, l2, l3 = self._triple(x)
            L2 = np.exp(l3)
            # chi'' = (L1 L2 + L2 + 1) / (u L1 L2)^2 with L1 = log u, L2 = log L1
            return np.log(lu * L2 + L2 + 1.0) - 2.0 * (lu + l2 + l3)
        if self.kind is ProfileKind.EXPONENTIAL:
            return -np.exp(x)
        if self.kind is ProfileKind.LINEAR:
            return np.full_like(x, -np.inf)
        if self.samples.log_chi2 is not None:
            return self.samples.log_chi2(x)
        with np.errstate(divide="ignore"):
            return np.log(np.maximum(self.samples.chi2(x), 0.0))

    # scaled evaluators: log(chi' |t|) and log(chi'' t^2) without cancelling x against log u

    def log_chi1_t_x(self, x):
        x = self._check(x)
        if self.kind is ProfileKind.TRIPLE_LOG:
            _, l2, l3 = self._triple(x)
            r = -np.logaddexp(0.0, math.log(self.offset) - x)  # log(|t| / u)
            return r - l2 - l3
        if self.kind is ProfileKind.EXPONENTIAL:
            return x - np.exp(x)
        if self.kind is ProfileKind.LINEAR:
            return x.copy()
        return self.samples.log_chi1(x) + x

    def log_chi2_t2_x(self, x):
        x = self._check(x)
        if self.kind is ProfileKind.TRIPLE_LOG:
            lu, l2, l3 = self._triple(x)
            r = -np.logaddexp(0.0, math.log(self.offset) - x)
            L2 = np.exp(l3)
            return np.log(lu * L2 + L2 + 1.0) + 2.0 * (r - l2 - l3)
        if self.kind is ProfileKind.EXPONENTIAL:
            return 2 * x - np.exp(x)
        if self.kind is ProfileKind.LINEAR:
            return np.full_like(x, -np.inf)
        return self.log_chi2_x(x) + 2 * x

    # evaluators in t

    def chi(self, t):
        return self.chi_x(_as_x(t))

    def chi1(self, t):
        return np.exp(self.log_chi1_x(_as_x(t)))

    def chi2(self, t):
        return np.exp(self.log_chi2_x(_as_x(t)))


def log_forward_density(profile, x):
    """``log[c_n chi'^(n-1) chi'' e^(-n t)]`` at ``t = -e^x``."""
    n = profile.n
    x = np.asarray(x, dtype=float)
    lc1 = profile.log_chi1_x(x)
    lc2 = profile.log_chi2_x(x)
    with np.errstate(over="ignore"):
        return math.log(dimensional_constant(n)) + (n - 1) * lc1 + lc2 + n * np.exp(x)


def forward_density(profile, t):
    """``c_n chi'(t)^(n-1) chi''(t) e^(-n t)``; overflows to ``inf`` far out."""
    x = _as_x(t)
    with np.errstate(over="ignore"):
        out = np.exp(log_forward_density(profile, x))
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True, eq=False)
class DensityProfile:
    """Radial density ``F(t)`` stored as ``log_weighted(x) = log(F(t) e^(n t))``, ``t = -e^x``."""

    log_weighted: Callable
    n: int
    label: str = "F"

    @property
    def c_n(self):
        return dimensional_constant(self.n)

    @classmethod
    def constant(cls, n):
        """``F = c_n``, the density of ``|z|^2``."""
        c = math.log(dimensional_constant(n))
        return cls(lambda x: c - n * np.exp(x), n, "c_n")

    @classmethod
    def from_profile(cls, profile):
        """``F = forward_density(profile)``; the exponentials cancel in the weighted log."""
        n = profile.n
        c = math.log(dimensional_constant(n))
        return cls(lambda x: c + (n - 1) * profile.log_chi1_x(x) + profile.log_chi2_x(x), n,
                   f"forward({profile.kind.value})")

    @classmethod
    def from_function(cls, F, n, label="F"):
        """Plain callable ``F(t)``; only usable where ``F e^(n t)`` is representable."""
        def lw(x):
            t = -np.exp(x)
            with np.errstate(divide="ignore"):
                return np.log(np.asarray(F(t), dtype=float)) + n * t
        return cls(lw, n, label)

    def __call__(self, t):
        x = _as_x(t)
        with np.errstate(over="ignore"):
            return np.exp(self.log_weighted(x) + self.n * np.exp(x))


def _log_panel_integrals(log_f, edges):
    """``log int exp(log_f(x)) dx`` over each panel ``[edges[i], edges[i+1]]``."""
    a, b = edges[:-1, None], edges[1:, None]
    xq = 0.5 * (a + b) + 0.5 * (b - a) * _GL_X[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        lw = np.log(0.5 * (b - a) * _GL_W[None, :])
        vals = np.asarray(log_f(xq), dtype=float)
    vals = np.where(np.isnan(vals), np.inf, vals)
    return logsumexp(vals + lw, axis=1)


def inverse_profile(F, x_min=-6.0, x_max=8.0, per_unit=64, max_doublings=4096):
    """Recover ``chi`` from its radial density by two quadratures.

    ``chi'(t) = [(n/c_n) int_{-oo}^t F(s) e^(n s) ds]^(1/n)`` on the grid
    ``t_k = -exp(x_k)``, ``x_k`` uniform on ``[x_min, x_max]``.  The part of
    the inner integral beyond ``x_max`` is summed over doubling blocks of
    ``|t|`` until the blocks stop contributing.  ``chi''`` is taken from the
    derivative of a cubic spline of ``log chi'`` in ``x`` and ``chi`` from a
    second quadrature anchored at ``chi(0) = 0``.

    Raises
    ------
    NonIntegrableError
        If the doubling blocks keep contributing.
    """
    n = F.n
    m = int(round((x_max - x_min) * per_unit))
    x = np.linspace(x_min, x_max, m + 1)
    log_g = lambda z: F.log_weighted(z) + z  # ds = |s| dx
    panels = _log_panel_integrals(log_g, x)
    # tail beyond x_max, in batches of doubling blocks
    log_tail = -np.inf
    start = x_max
    done = False
    for _ in range(max_doublings // 64):
        edges = start + math.log(2.0) * np.arange(65)
        blocks = _log_panel_integrals(log_g, edges)
        if np.any(np.isposinf(blocks)):
            raise NonIntegrableError("density weighted by e^(n t) is not integrable at -oo")
        log_tail = np.logaddexp(log_tail, logsumexp(blocks))
        if blocks[-1] < log_tail + math.log(1e-17) or np.all(np.isneginf(blocks)):
            done = True
            break
        start = edges[-1]
    if not done:
        raise NonIntegrableError(f"doubling blocks still contribute at t = -exp({start:.6g})")
    # cumulative from -oo: reverse accumulate over panels
    rev = np.logaddexp.accumulate(np.concatenate([[log_tail], panels[::-1]]))
    log_I = rev[::-1]
    if np.any(np.isneginf(log_I)):
        raise DomainError("density vanishes identically on part of the grid")
    log_c1 = (math.log(n / dimensional_constant(n)) + log_I) / n
    s = CubicSpline(x, log_c1)
    slope = s(x, 1)
    t = -np.exp(x)
    # chi'' = d chi'/dt = chi' * (d log chi'/dx) / t
    with np.errstate(divide="ignore"):
        log_c2 = np.log(np.maximum(-slope, 0.0)) + log_c1 - x
    lp = _log_panel_integrals(lambda z: s(z) + z, x)
    # int over [t_0, 0] from the first-order Taylor expansion of chi' at t_0
    head = math.exp(log_c1[0] + x_min) + 0.5 * math.exp(log_c2[0] + 2 * x_min)
    cum = np.concatenate([[0.0], np.cumsum(np.exp(lp))])
    chi = -(head + cum)
    return RadialProfile.from_logs(t, chi, log_c1, log_c2, n)


# -- integrals on [T, -e] ---------------------------------------------------


def _edges(a, b):
    """Panels of width 1/4 below x = 16 and ratio 1.02 beyond."""
    if b <= a:
        return np.array([a, b])
    parts = []
    if a < 16:
        m = max(1, int(math.ceil((min(b, 16.0) - a) / 0.25)))
        parts.append(np.linspace(a, min(b, 16.0), m + 1))
    if b > 16:
        lo = max(a, 16.0)
        m = max(1, int(math.ceil(math.log(b / lo) / math.log(1.02))))
        parts.append(np.geomspace(lo, b, m + 1))
    return np.unique(np.concatenate(parts))


def _log_integral_x(log_f, a, b):
    if b <= a:
        return -math.inf
    return float(logsumexp(_log_panel_integrals(log_f, _edges(a, b))))


def _integral_x(log_f, a, b):
    with np.errstate(over="ignore"):
        return float(np.exp(_log_integral_x(log_f, a, b)))


class Verdict(str, Enum):
    CONVERGES = "Converges"
    DIVERGES = "Diverges"
    INCONCLUSIVE = "Inconclusive"


def _verdict(values):
    """Three-state reading of a truncation sequence (each entry one doubling further)."""
    v = np.asarray(values, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        changes = np.abs(np.diff(v)) / np.abs(v[1:])
    changes = np.nan_to_num(changes, nan=0.0, posinf=np.inf)
    if np.isinf(v[-1]):
        return Verdict.DIVERGES, changes
    if changes.size == 0:
        return Verdict.INCONCLUSIVE, changes
    if changes[0] < CONVERGE_TOL:
        return Verdict.CONVERGES, changes
    if changes.size >= 3 and np.all(changes[:3] > DIVERGE_TOL):
        return Verdict.DIVERGES, changes
    return Verdict.INCONCLUSIVE, changes


@dataclass(frozen=True)
class IntegrabilityResult:
    value: float
    verdict: Verdict
    values: tuple
    changes: tuple
    log_abs_T: float

    @property
    def converged(self):
        return self.verdict is Verdict.CONVERGES


def _log_abs(T, log_abs_T):
    if (T is None) == (log_abs_T is None):
        raise DomainError("give exactly one of T and log_abs_T")
    if log_abs_T is None:
        if not T < -math.e:
            raise DomainError("T must lie below -e")
        return math.log(-T)
    if not log_abs_T > 1:
        raise DomainError("log|T| must exceed 1")
    return float(log_abs_T)


def _log_h(h, x):
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.asarray(h.log_h(x), dtype=float)
    bad = np.isnan(out) | (np.asarray(x) < h.s_min - 1e-12)
    if np.any(bad):
        xb = float(np.asarray(x)[bad].flat[0])
        raise OutOfDomainError(f"h undefined at s = log|t| = {xb:.6g} (t = -exp({xb:.6g}))")
    return out


def integrability_functional(profile, h, T=None, *, log_abs_T=None, log_abs_upper=1.0, doublings=3):
    """``int_T^{upper} chi'' chi'^(n-1) |t|^n h(log|t|)^n dt`` with a truncation study.

    The integral is taken in ``x = log|t|``; ``upper`` defaults to ``-e``.
    The study repeats it with ``|T|`` doubled ``doublings`` times: relative
    change below 1e-3 reads Converges, above 0.1 for three doublings reads
    Diverges, anything else Inconclusive.
    """
    n = profile.n
    X = _log_abs(T, log_abs_T)
    if X + doublings * math.log(2.0) > profile.x_range[1]:
        raise PreconditionError("truncation study runs past the profile domain")

    def log_f(x):
        return profile.log_chi2_t2_x(x) + (n - 1) * profile.log_chi1_t_x(x) + n * _log_h(h, x)

    vals = []
    for k in range(doublings + 1):
        vals.append(_integral_x(log_f, log_abs_upper, X + k * math.log(2.0)))
    verdict, changes = _verdict(vals)
    return IntegrabilityResult(vals[0], verdict, tuple(vals), tuple(float(c) for c in changes), X)


def substituted_integral(h, n, s_lo, s_hi):
    """``int_{s_lo}^{s_hi} h(s)^n / (s^n (log s)^n) ds``, the asymptotic form of the functional."""
    if s_lo <= 1:
        raise DomainError("need s_lo > 1")
    return _integral_x(lambda s: n * (_log_h(h, s) - np.log(s) - np.log(np.log(s))), s_lo, s_hi)


@dataclass(frozen=True)
class BoundednessResult:
    verdict: str
    tail_integral: float
    increments: tuple = field(repr=False)
    block_sums: tuple

    @property
    def bounded(self):
        return self.verdict == "Bounded"


def is_bounded_profile(profile, max_blocks=10):
    """Decide whether ``chi(-oo) > -oo`` from the tail integrals of ``chi'``.

    Increments ``d_k = int chi' dt`` over ``log|t| in [2^k, 2^(k+1)]`` are
    grouped in blocks ``k in [2^j, 2^(j+1))``.  Bounded when the blocks
    shrink by half and the last one is below 1e-3 of the total; Unbounded
    when the blocks stop shrinking (ratio above 0.9) for three consecutive
    blocks; Inconclusive otherwise.  The two levels of doubling separate
    ``chi' ~ 1/(|t| log|t| loglog|t|)`` (divergent) from faster tails.
    """
    x_hi = min(profile.x_range[1], 1e300)
    kmax = int(math.floor(math.log2(x_hi))) if x_hi > 1 else 0
    log_f = profile.log_chi1_t_x
    edges = 2.0 ** np.arange(kmax + 1)
    edges = edges[edges <= x_hi]
    d = []
    for a, b in zip(edges[:-1], edges[1:]):
        d.append(_integral_x(log_f, a, b))
    d = np.array(d)
    lo = max(profile.x_range[0], -40.0)
    head = _integral_x(log_f, lo, 1.0) if lo < 1.0 else 0.0
    total = head + float(d.sum())
    blocks = []
    j = 0
    while 2 ** (j + 1) - 1 <= d.size and j < max_blocks:
        blocks.append(float(d[2 ** j - 1: 2 ** (j + 1) - 1].sum()))
        j += 1
    B = np.array(blocks)
    verdict = "Inconclusive"
    if np.isfinite(total) and B.size >= 2 and (B[-1] == 0.0 or (B[-1] <= 0.5 * B[-2] and B[-1] <= 1e-3 * total)):
        verdict = "Bounded"
    elif not np.isfinite(total) or (B.size >= 4 and np.all(B[-3:] >= 0.9 * B[-4:-1])):
        verdict = "Unbounded"
    return BoundednessResult(verdict, total, tuple(float(v) for v in d), tuple(blocks))


@dataclass(frozen=True)
class RigidityReport:
    A: float
    B: float
    C: float
    D: Optional[float]
    boundary: float
    ibp_constant: float
    ibp_slack: float
    holder_bound: float
    holder_slack: float
    b_truncation: tuple
    b_diverging: bool
    bounded_verdict: str

    @property
    def ratio(self):
        return self.A / self.B if self.B > 0 else math.inf

    @property
    def holds(self):
        return self.ibp_slack >= -1e-6 * max(1.0, self.A) and self.holder_slack >= -1e-6 * max(1.0, self.C)

    @property
    def tension(self):
        """The chain was evaluated although its finiteness hypothesis on ``B`` fails."""
        return self.b_diverging


def rigidity_chain(profile, p, T=None, *, log_abs_T=None):
    """Truncated integrals on ``[T, -e]`` behind the boundedness argument.

    ``A = int chi'^n |t|^(n-1) L^p``, ``B = int chi'' chi'^(n-1) |t|^n L^p``,
    ``C = int chi'`` with ``L = log|t|``.  Integration by parts gives
    ``A <= chi'(T)^n W(T) + B`` with ``W(T) = int_e^|T| r^(n-1) (log r)^p dr``
    (the constant ``n sup W/(|t|^n L^p)`` is at most 1), and Holder gives
    ``C <= A^(1/n) D^(1-1/n)`` with ``D = int |t|^-1 L^(-p/(n-1))``.
    ``B`` is also recomputed with ``log|T|`` doubled three times to expose
    divergence.
    """
    n = profile.n
    if p <= n - 1:
        raise PreconditionError(f"need p > n - 1 = {n - 1}, got p = {p}")
    X = _log_abs(T, log_abs_T)
    if X > profile.x_range[1]:
        raise PreconditionError("T lies outside the profile domain")
    lc1, lc2 = profile.log_chi1_t_x, profile.log_chi2_t2_x
    logA = lambda x: n * lc1(x) + p * np.log(x)
    logB = lambda x: lc2(x) + (n - 1) * lc1(x) + p * np.log(x)
    A = _integral_x(logA, 1.0, X)
    B = _integral_x(logB, 1.0, X)
    C = _integral_x(lc1, 1.0, X)
    # chi'(T)^n W(T), with the e^(n X) of W cancelled against |T|^-n
    log_W = _log_integral_x(lambda x: n * (x - X) + p * np.log(x), 1.0, X)
    boundary = math.exp(n * float(lc1(np.array(X))) + log_W)
    ibp_constant = 1.0
    ibp_slack = boundary + ibp_constant * B - A
    if n == 1:
        D = None
        holder_bound = A
    else:
        D = _integral_x(lambda x: -(p / (n - 1)) * np.log(x), 1.0, X)
        holder_bound = A ** (1.0 / n) * D ** (1.0 - 1.0 / n)
    holder_slack = holder_bound - C
    trunc = [B]
    for k in range(1, 4):
        Xk = X * 2 ** k
        if Xk > profile.x_range[1]:
            break
        trunc.append(_integral_x(logB, 1.0, Xk))
    growth = np.diff(trunc) / np.asarray(trunc[1:])
    diverging = bool(len(trunc) == 4 and np.all(growth > DIVERGE_TOL))
    bounded = is_bounded_profile(profile).verdict
    return RigidityReport(A, B, C, D, boundary, ibp_constant, ibp_slack, holder_bound, holder_slack,
                          tuple(trunc), diverging, bounded)


# -- CSV --------------------------------------------------------------------


def write_profile_csv(path, profile, t):
    """Write ``t,chi,chi1,chi2`` rows for the sample points ``t``."""
    t = np.asarray(t, dtype=float)
    rows = zip(t, profile.chi(t), profile.chi1(t), profile.chi2(t))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "chi", "chi1", "chi2"])
        for r in rows:
            w.writerow([repr(float(v)) for v in r])


def read_profile_csv(path, n):
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        if header != ["t", "chi", "chi1", "chi2"]:
            raise DomainError(f"expected header t,chi,chi1,chi2, got {header}")
        data = np.array([[float(v) for v in r] for r in rd if r])
    if data.ndim != 2 or data.shape[1] != 4:
        raise DomainError("malformed profile CSV")
    return RadialProfile.sampled(data[:, 0], data[:, 1], data[:, 2], data[:, 3], n)
