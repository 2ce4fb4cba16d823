"""Constants and comparison checks behind the reduction of uniform estimates.

* :func:`trick_constant` and :func:`comparison_verify` handle the comparison
  principle ``MA(phi) <= a MA(v) + b f  =>  phi >= delta v + (1 - delta) rho - C``.
* :func:`construct_chi` builds the bounded convex profile whose composition
  with a potential absorbs the large values of ``f``.
* :func:`beta_field`, :func:`beta_bounds_check` and :func:`choose_lambda_M`
  cover the cut-off ``beta_M(phi) = 1/(1 + lambda e^(M(phi + M)))``.

Reports are plain dicts; every inequality appears as ``{lhs, rhs, slack}``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import expit

from .errors import (
    BTooSmallError,
    DomainError,
    GridMismatchError,
    InfeasibleError,
    KConditionError,
    NormalizationError,
    PreconditionError,
)
from .grid import ma_density

__all__ = [
    "TrickInputs",
    "trick_constant",
    "comparison_verify",
    "ChiConstruction",
    "construct_chi",
    "beta_field",
    "beta_bounds_check",
    "choose_lambda_M",
    "report_json",
]

LOG10 = math.log(10.0)


def _ineq(name, lhs, rhs):
    return {"name": name, "lhs": float(lhs), "rhs": float(rhs), "slack": float(rhs - lhs)}


def report_json(report, path=None):
    """Serialize a report with sorted keys; write to ``path`` when given."""
    text = json.dumps(report, indent=2, sort_keys=True, default=float)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text


# -- comparison principle------------------------------------------------------


@dataclass(frozen=True)
class TrickInputs:
    a: float
    b: float
    delta: float
    gamma: float
    C1: float
    fp_norm: float
    n: int

    def __post_init__(self):
        if not 0 < self.a < 1:
            raise DomainError("need 0 < a < 1")
        if not 0 < self.delta < 1:
            raise DomainError("need 0 < delta < 1")
        for name in ("b", "gamma", "C1", "fp_norm"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if self.n < 1:
            raise DomainError("n must be >= 1")

    @property
    def lam(self):
        return self.a / self.delta ** self.n


def trick_constant(inp):
    """``C = log[C1 ||f||_p a^-1 (1 - delta)^-n b delta^n] / gamma``.

    Raises
    ------
    InfeasibleError
        If ``lambda = a / delta^n >= 1``.
    """
    if inp.lam >= 1:
        raise InfeasibleError(f"lambda = a/delta^n = {inp.lam:.6g} >= 1; shrink a or grow delta")
    n = inp.n
    arg = inp.C1 * inp.fp_norm / inp.a * (1 - inp.delta) ** (-n) * inp.b * inp.delta ** n
    return math.log(arg) / inp.gamma


def comparison_verify(phi, v, f, a, b, rho=None, delta=None, C=None, tol=1e-12):
    """Check ``MA(phi) <= a MA(v) + b f`` pointwise and the resulting lower bound.

    When the hypothesis holds and ``rho``, ``delta`` and ``C`` are given, the
    predicted bound ``u = delta v + (1 - delta) rho - C`` is compared with
    ``phi`` at every grid point.
    """
    for other in (v, f) + ((rho,) if rho is not None else ()):
        if other.grid != phi.grid:
            raise GridMismatchError("fields live on different grids")
    lhs = ma_density(phi).values
    rhs = a * ma_density(v).values + b * f.values
    gap = lhs - rhs
    bad = gap > tol
    rep = {
        "max_violation": float(gap.max()),
        "min_margin": float((-gap).min()),
        "violation_count": int(bad.sum()),
        "violation_fraction": float(bad.mean()),
        "violation_points": [list(map(int, p)) for p in np.argwhere(bad)[:20]],
        "hypothesis_holds": not bool(bad.any()),
        "min_phi": float(phi.inf()),
        "inequalities": [_ineq("MA(phi) <= a MA(v) + b f (worst point)", lhs.flat[gap.argmax()], rhs.flat[gap.argmax()])],
    }
    if rep["hypothesis_holds"] and rho is not None and delta is not None and C is not None:
        u = delta * v.values + (1 - delta) * rho.values - C
        d = u - phi.values
        rep["lower_bound_max_excess"] = float(d.max())
        rep["lower_bound_holds"] = bool(d.max() <= tol)
        rep["min_lower_bound"] = float(u.min())
        rep["inequalities"].append(_ineq("u <= phi (worst point)", u.flat[d.argmax()], phi.values.flat[d.argmax()]))
    return rep


# -- the bounded profile chi --------------------------------------------------


def _reciprocal_integral_converges(h, s0, doublings=1000):
    """Two-level doubling test for ``int_s0^oo ds / h``; returns (verdict, partial sum)."""
    inc = h.doubling_increments(s0=s0, doublings=doublings)
    if not np.all(np.isfinite(inc)):
        return False, math.inf
    blocks = [inc[2 ** j - 1: 2 ** (j + 1) - 1].sum() for j in range(int(math.log2(inc.size + 1)))]
    B = np.array(blocks)
    total = float(inc.sum())
    ok = B.size >= 3 and B[-1] <= 0.5 * B[-2] and B[-1] <= 1e-6 * max(total, 1e-300)
    return bool(ok or B[-1] == 0.0), total


@dataclass(frozen=True, eq=False)
class ChiConstruction:
    """``chi(y) = -b(log(B - alpha y))`` with ``b(x) = c' int_{x0}^x ds / h(s)``.

    ``c' = (2/c)^(1/n) / alpha`` makes ``s chi'((B - s)/alpha) h(log s)``
    equal to ``(2/c)^(1/n)`` for every ``s > log 10``.
    """

    h: object
    alpha: float
    c: float
    n: int
    B: float
    c_prime: float
    x0: float
    x: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    sup_norm: float = 0.0
    chi1_at_zero: float = 0.0
    displayed_chi1_at_zero: float = 0.0
    min_slack: float = 0.0
    tabulation_error: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "_spline", CubicSpline(np.log(self.x), self.b))

    def b_of(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < self.x0 - 1e-12):
            raise DomainError("b is defined for x >= log log 10")
        inside = x <= self.x[-1]
        out = np.empty_like(x)
        out[inside] = self._spline(np.log(np.maximum(x[inside], self.x0)))
        for i in np.flatnonzero(~inside):
            out.flat[i] = self.sup_norm - self.c_prime * float(self.h.doubling_increments(s0=float(x.flat[i])).sum())
        return out

    def chi(self, y):
        """``chi`` on ``y <= (B - log 10)/alpha``."""
        y = np.asarray(y, dtype=float)
        s = self.B - self.alpha * y
        if np.any(s < LOG10 - 1e-12):
            raise DomainError("chi is defined for B - alpha y >= log 10")
        return -self.b_of(np.log(s))

    def chi1(self, y):
        """Closed-form slope ``alpha c' / (s h(log s))``, ``s = B - alpha y``."""
        s = self.B - self.alpha * np.asarray(y, dtype=float)
        return self.alpha * self.c_prime / (s * self.h(np.log(s)))

    def summary(self):
        return {
            "alpha": self.alpha,
            "c": self.c,
            "n": self.n,
            "B": self.B,
            "c_prime": self.c_prime,
            "x0": self.x0,
            "sup_norm": self.sup_norm,
            "chi1_at_zero": self.chi1_at_zero,
            "displayed_chi1_at_zero": self.displayed_chi1_at_zero,
            "min_slack": self.min_slack,
            "tabulation_error": self.tabulation_error,
        }


def _chi1_zero(h, alpha, c_prime, B):
    return alpha * c_prime / (B * float(h(math.log(B))))


def construct_chi(h, alpha, c, B=None, n=1, s_max=1e12, per_doubling=32):
    """Build the bounded convex profile from the tail ``h``.

    ``b(x) = c' int_{x0}^x ds/h(s)`` is tabulated on a geometric grid from
    ``x0 = log log 10`` and splined in ``log x``; the part beyond the grid
    comes from doubling increments of ``int ds/h``.

    Parameters
    ----------
    h : TailFunction
        Increasing, with ``int^oo ds/h < oo`` and domain reaching ``log log 10``.
    B : float, optional
        Defaults to the smallest power of 2 above ``log 10`` with ``chi'(0) <= 1``.

    Raises
    ------
    KConditionError
        If ``int ds/h`` diverges.
    BTooSmallError
        If the given ``B`` has ``chi'(0) > 1``; carries a suggested ``B``.
    """
    if not (alpha > 0 and c > 0):
        raise DomainError("alpha and c must be positive")
    x0 = math.log(LOG10)
    if h.s_min > x0 + 1e-12:
        raise DomainError(f"h must be defined from log log 10 = {x0:.6g}")
    ok, _ = _reciprocal_integral_converges(h, max(x0, 1.0))
    if not ok:
        raise KConditionError(f"int ds/h({h.label}) diverges")
    c_prime = (2.0 / c) ** (1.0 / n) / alpha
    if B is None:
        B = 4.0
        while _chi1_zero(h, alpha, c_prime, B) > 1:
            B *= 2
            if B > 1e300:
                raise BTooSmallError("no B makes chi'(0) <= 1", None)
    else:
        if not B > LOG10:
            raise DomainError("need B > log 10")
        if _chi1_zero(h, alpha, c_prime, B) > 1:
            good = 4.0
            while _chi1_zero(h, alpha, c_prime, good) > 1:
                good *= 2
            raise BTooSmallError(f"chi'(0) = {_chi1_zero(h, alpha, c_prime, B):.6g} > 1 at B = {B:g}", good)
    # geometric grid in x
    x_max = math.log(s_max)
    m = int(math.ceil(math.log2(x_max / x0) * per_doubling))
    x = np.geomspace(x0, x_max, m + 1)
    gx, gw = np.polynomial.legendre.leggauss(16)
    lo, hi = x[:-1, None], x[1:, None]
    q = 0.5 * (lo + hi) + 0.5 * (hi - lo) * gx[None, :]
    with np.errstate(over="ignore"):
        vals = np.exp(-np.asarray(h.log_h(q), dtype=float))
    panels = (0.5 * (hi - lo)[:, 0]) * (vals @ gw)
    b = c_prime * np.concatenate([[0.0], np.cumsum(panels)])
    tail = float(h.doubling_increments(s0=x_max).sum())
    sup_norm = float(b[-1] + c_prime * tail)
    # defining inequality on s in (log 10, s_max]
    s = np.geomspace(LOG10 * (1 + 1e-9), s_max, 400)
    con = ChiConstruction(h, alpha, c, n, float(B), c_prime, x0, x, b, sup_norm,
                          _chi1_zero(h, alpha, c_prime, B), alpha / (B * float(h(B))))
    y = (B - s) / alpha
    target = (2.0 / c) ** (1.0 / n)
    slack = s * con.chi1(y) * h(np.log(s)) / target - 1.0
    # spline slope of chi against the closed form
    dy = 1e-6 * np.maximum(1.0, np.abs(y))
    keep = B - alpha * (y + dy) >= LOG10
    yk, dk = y[keep], dy[keep]
    fd = (con.chi(yk + dk) - con.chi(yk - dk)) / (2 * dk)
    tab = float(np.max(np.abs(fd / con.chi1(yk) - 1.0)))
    object.__setattr__(con, "min_slack", float(slack.min()))
    object.__setattr__(con, "tabulation_error", tab)
    return con


# -- beta_M --------------------------------------------------------------------


def beta_field(phi, lam, M):
    """``1 / (1 + lambda e^(M (phi + M)))`` pointwise, computed as a logistic function."""
    if not (lam > 0 and M > 0):
        raise DomainError("lambda and M must be positive")
    return phi.with_values(expit(-(math.log(lam) + M * (phi.values + M))))


def _h_value(h, y):
    return np.asarray(h(np.asarray(y, dtype=float)), dtype=float)


def _selection(lam, M, delta, c, n, B_HY, V_omega, h):
    K = delta ** n / (3 ** n * c ** n)
    hM = float(_h_value(h, M))
    return [
        _ineq("2/(1+lambda) < delta^n/(3^n c^n)", 2 / (1 + lam), K),
        _ineq("2 B/h(M) <= min(1, delta^n/(3^n c^n))", 2 * B_HY / hM if hM > 0 else math.inf, min(1.0, K)),
        _ineq("2^n/3^n <= V/(1+lambda e^(-M^2))", (2 / 3) ** n, V_omega / (1 + lam * math.exp(-M * M))),
    ]


def _first_violation(ineqs):
    first = ineqs[0]
    if not first["slack"] > 0:
        return first
    for q in ineqs[1:]:
        if q["slack"] < 0:
            return q
    return None


def beta_bounds_check(phi, f, lam, M, delta, c, n, B_HY, h, V_omega=1.0, tol=1e-12):
    """Evaluate the two integral bounds on ``int beta_M(phi) f``.

    Upper: ``int beta f <= mass(phi <= -M) + mass(phi > -M)/(1+lambda)
    <= B/h(M) + 1/(1+lambda) <= delta^n/(3^n c^n)``.
    Lower: ``int beta f >= (1 - mass(phi <= -M))/(1+lambda e^(M^2))
    >= 1/(2(1+lambda e^(M^2)))``.

    ``f`` is a density of total mass 1 and ``B_HY`` must bound
    ``int h(-phi) f``; both are checked.

    Raises
    ------
    InfeasibleError
        When a selection inequality fails; the message names it.
    """
    if phi.grid != f.grid:
        raise GridMismatchError("phi and f live on different grids")
    if abs(phi.sup()) > 1e-12:
        raise NormalizationError(f"need sup phi = 0, got {phi.sup():.3e}")
    sel = _selection(lam, M, delta, c, n, B_HY, V_omega, h)
    bad = _first_violation(sel)
    if bad is not None:
        raise InfeasibleError(f"selection inequality fails: {bad['name']} (lhs {bad['lhs']:.6g}, rhs {bad['rhs']:.6g})")
    fv, pv = f.values, phi.values
    if abs(fv.mean() - 1.0) > 1e-10:
        raise PreconditionError("f must have mass 1")
    hy = _h_value(h, -pv)
    measured = float(np.mean(hy * fv))
    if measured > B_HY * (1 + 1e-12):
        raise PreconditionError(f"int h(-phi) f = {measured:.6g} exceeds B = {B_HY:.6g}")
    beta = beta_field(phi, lam, M).values
    integral = float(np.mean(beta * fv))
    deep = pv <= -M
    m_deep = float(np.mean(np.where(deep, fv, 0.0)))
    m_shallow = 1.0 - m_deep
    hM = float(_h_value(h, M))
    K = delta ** n / (3 ** n * c ** n)
    e_big = lam * math.exp(min(M * M, 700.0))
    upper = [
        _ineq("int beta f <= mass(deep) + mass(shallow)/(1+lambda)", integral, m_deep + m_shallow / (1 + lam)),
        _ineq("mass(deep) + mass(shallow)/(1+lambda) <= B/h(M) + 1/(1+lambda)",
              m_deep + m_shallow / (1 + lam), B_HY / hM + 1 / (1 + lam)),
        _ineq("B/h(M) + 1/(1+lambda) <= delta^n/(3^n c^n)", B_HY / hM + 1 / (1 + lam), K),
    ]
    lower = [
        _ineq("(1 - mass(deep))/(1+lambda e^(M^2)) <= int beta f", m_shallow / (1 + e_big), integral),
        _ineq("(1 - B/h(M))/(1+lambda e^(M^2)) <= (1 - mass(deep))/(1+lambda e^(M^2))",
              (1 - B_HY / hM) / (1 + e_big), m_shallow / (1 + e_big)),
        _ineq("1/(2(1+lambda e^(M^2))) <= (1 - B/h(M))/(1+lambda e^(M^2))",
              1 / (2 * (1 + e_big)), (1 - B_HY / hM) / (1 + e_big)),
    ]
    scale = tol * max(1.0, integral)
    return {
        "lambda": lam,
        "M": M,
        "integral": integral,
        "hy_integral": measured,
        "upper_bound": K,
        "lower_bound": 1 / (2 * (1 + e_big)),
        "upper_slack": K - integral,
        "lower_slack": integral - 1 / (2 * (1 + e_big)),
        "selection": sel,
        "upper_chain": upper,
        "lower_chain": lower,
        "holds": all(q["slack"] >= -scale for q in upper + lower),
    }


def choose_lambda_M(delta, c, n, B_HY, V_omega, h, max_doublings=60):
    """Smallest ``(lambda, M)`` on the doubling search ``M = 1, 2, 4, ...``.

    For each ``M``, ``lambda`` is the least value allowed by
    ``2/(1+lambda) < delta^n/(3^n c^n)`` (nudged up by a relative 1e-9 to
    make it strict); the other two inequalities are then checked.

    Raises
    ------
    InfeasibleError
        If no ``M`` up to ``2^max_doublings`` works, naming the inequality
        that still fails.
    """
    if not (delta > 0 and c > 0 and B_HY >= 0 and V_omega > 0):
        raise DomainError("delta, c, V_omega must be positive and B nonnegative")
    K = delta ** n / (3 ** n * c ** n)
    lam = max(2.0 / K - 1.0, 0.0) * (1 + 1e-9) + 1e-12
    last = None
    prev_h = -math.inf
    stalled = 0
    for k in range(max_doublings + 1):
        M = float(2 ** k)
        sel = _selection(lam, M, delta, c, n, B_HY, V_omega, h)
        last = _first_violation(sel)
        if last is None:
            return lam, M
        hM = float(_h_value(h, M))
        stalled = stalled + 1 if hM <= prev_h * (1 + 1e-12) else 0
        prev_h = hM
        if stalled >= 8 and last["name"].startswith("2 B/h(M)"):
            raise InfeasibleError(f"h stays bounded; {last['name']} cannot be met")
    raise InfeasibleError(f"no M up to 2^{max_doublings} satisfies {last['name']}")
