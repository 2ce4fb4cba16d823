"""Orlicz weights, condition (K), Luxembourg norms and convex conjugates.

Named weight families::

    PowerP   u_p(t) = t^p
    LogP     v_p(t) = t (log(t + 10))^p
    LogLogP  w_p(t) = t (log(t + 10))^n (log log(t + 10))^p

Condition (K) asks for ``w(t) ~ t (log t)^n (h(log log t))^n`` with ``h``
increasing and ``int^oo ds / h(s) < oo``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from . import _kernels
from .errors import ConvexityError, DomainError, OutOfDomainError

__all__ = [
    "Family",
    "WeightSpec",
    "TailFunction",
    "DensitySample",
    "KVerdict",
    "KResult",
    "Conjugate",
    "eval_weight",
    "weight_derivative",
    "check_condition_K",
    "luxembourg_norm",
    "legendre_conjugate",
    "conjugate_value",
    "inverse_conjugate",
    "inverse_conjugate_array",
]

LOG10 = math.log(10.0)


class Family(str, Enum):
    POWER = "PowerP"
    LOG = "LogP"
    LOGLOG = "LogLogP"
    TABULATED = "Tabulated"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower()
        aliases = {
            "powerp": cls.POWER, "power": cls.POWER, "u": cls.POWER,
            "logp": cls.LOG, "log": cls.LOG, "v": cls.LOG,
            "loglogp": cls.LOGLOG, "loglog": cls.LOGLOG, "w": cls.LOGLOG,
            "tabulated": cls.TABULATED, "table": cls.TABULATED,
        }
        try:
            return aliases[key]
        except KeyError:
            raise DomainError(f"unknown weight family {name!r}") from None


@dataclass(frozen=True)
class WeightSpec:
    """An Orlicz weight: a named family with exponent ``p`` and dimension ``n``,
    or monotone samples ``table = (t_values, w_values)``."""

    family: Family
    p: float = 1.0
    n: int = 1
    table: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "p", float(self.p))
        if self.family is Family.TABULATED:
            if self.table is None:
                raise DomainError("Tabulated weight needs a table")
            t, w = (np.asarray(a, dtype=float) for a in self.table)
            if t.ndim != 1 or t.shape != w.shape or t.size < 3:
                raise DomainError("table must be two equal-length 1-d arrays (>= 3 samples)")
            if np.any(np.diff(t) <= 0) or np.any(np.diff(w) < 0) or t[0] < 0:
                raise DomainError("table must be increasing in t and nondecreasing in w")
            object.__setattr__(self, "table", (tuple(t.tolist()), tuple(w.tolist())))

    @property
    def name(self):
        if self.family is Family.TABULATED:
            return "tabulated"
        p = f"{self.p:g}".replace(".", "p").replace("-", "m")
        return f"{self.family.value.lower()}_{p}_n{self.n}"

    def __call__(self, t):
        return eval_weight(self, t)

    def derivative(self, t):
        return weight_derivative(self, t)

    def to_dict(self):
        d = {"family": self.family.value, "p": self.p, "n": self.n}
        if self.table is not None:
            d["table"] = [list(self.table[0]), list(self.table[1])]
        return d

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - {"family", "p", "n", "table"}
        if unknown:
            raise DomainError(f"unknown weight keys: {sorted(unknown)}")
        table = d.get("table")
        return cls(d["family"], d.get("p", 1.0), d.get("n", 1),
                   tuple(table) if table is not None else None)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def is_convex(self, t_max=1e3, num=4001, tol=1e-9):
        """Sampled second differences are all >= -tol (relative)."""
        if self.family is Family.TABULATED:
            t = np.asarray(self.table[0])
            w = np.asarray(self.table[1])
        else:
            t = np.concatenate([np.linspace(0.0, 10.0, num), np.geomspace(10.0, t_max, num)[1:]])
            w = eval_weight(self, t)
        slopes = np.diff(w) / np.diff(t)
        scale = max(1.0, float(np.abs(slopes).max()))
        return bool(np.all(np.diff(slopes) >= -tol * scale))

    def _pchip(self):
        t, w = self.table
        return PchipInterpolator(np.asarray(t), np.asarray(w), extrapolate=False)


def _as_nonneg(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise DomainError("weights are evaluated at t >= 0 only")
    return t


def eval_weight(spec, t):
    """``w(t)`` by the family's closed form (monotone cubic for tables)."""
    t = _as_nonneg(t)
    fam = spec.family
    with np.errstate(over="ignore"):
        if fam is Family.POWER:
            out = np.power(t, spec.p)
        elif fam is Family.LOG:
            out = t * np.log(t + 10.0) ** spec.p
        elif fam is Family.LOGLOG:
            L = np.log(t + 10.0)
            out = t * L ** spec.n * np.log(L) ** spec.p
        else:
            tt, _ = spec.table
            if np.any(t < tt[0]) or np.any(t > tt[-1]):
                raise OutOfDomainError(f"t outside the table range [{tt[0]}, {tt[-1]}]")
            out = spec._pchip()(t)
    return out if out.ndim else float(out)


def weight_derivative(spec, t):
    """``w'(t)``; closed form for named families, monotone-cubic slope for tables."""
    t = _as_nonneg(t)
    p, n = spec.p, spec.n
    fam = spec.family
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if fam is Family.POWER:
            out = np.where(t > 0, p * np.power(t, p - 1.0), 0.0 if p > 1 else (1.0 if p == 1 else np.inf))
        elif fam is Family.LOG:
            L = np.log(t + 10.0)
            out = L ** p + p * t * L ** (p - 1.0) / (t + 10.0)
        elif fam is Family.LOGLOG:
            L = np.log(t + 10.0)
            M = np.log(L)
            out = L ** n * M ** p + t / (t + 10.0) * (n * L ** (n - 1) * M ** p + p * L ** (n - 1) * M ** (p - 1.0))
        else:
            tt, _ = spec.table
            if np.any(t < tt[0]) or np.any(t > tt[-1]):
                raise OutOfDomainError(f"t outside the table range [{tt[0]}, {tt[-1]}]")
            out = spec._pchip().derivative()(t)
    out = np.asarray(out, dtype=float)
    return out if out.ndim else float(out)


# -- condition (K) ----------------------------------------------------------


@dataclass(frozen=True)
class TailFunction:
    """An increasing positive ``h`` on ``[s_min, oo)``, stored through ``log h``.

    Working with ``log h`` keeps extracted tails such as
    ``exp((p - 1) e^s / n)`` representable far out.
    """

    log_h: Callable
    s_min: float = 1.0
    label: str = "h"

    @classmethod
    def power(cls, a, s_min=1.0):
        """``h(s) = s^a``."""
        return cls(lambda s, a=a: a * np.log(s), s_min, f"s^{a:g}")

    @classmethod
    def exponential(cls, eps, s_min=0.0):
        """``h(s) = e^(eps s)``."""
        return cls(lambda s, e=eps: e * np.asarray(s, dtype=float), s_min, f"exp({eps:g}s)")

    @classmethod
    def constant(cls, c=1.0, s_min=0.0):
        return cls(lambda s, c=c: np.full_like(np.asarray(s, dtype=float), math.log(c)), s_min, f"{c:g}")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s < self.s_min - 1e-12):
            raise OutOfDomainError(f"h evaluated below its domain s >= {self.s_min}")
        with np.errstate(over="ignore"):
            out = np.exp(self.log_h(s))
        return out if out.ndim else float(out)

    def derivative(self, s, step=1e-6):
        s = np.asarray(s, dtype=float)
        hs = step * np.maximum(1.0, np.abs(s))
        lo = np.maximum(s - hs, self.s_min)
        return (self(s + hs) - self(lo)) / (s + hs - lo)

    def reciprocal_integral(self, a, b):
        """``int_a^b ds / h(s)`` by adaptive quadrature in ``u = log s``."""
        if b <= a:
            return 0.0
        if a <= 0:
            head, _ = integrate.quad(lambda s: math.exp(-float(self.log_h(s))), a, min(b, 1.0), limit=200)
            if b <= 1.0:
                return head
            a = 1.0
        else:
            head = 0.0

        def f(u):
            with np.errstate(over="ignore"):
                return math.exp(u - float(self.log_h(math.exp(u))))

        val, _ = integrate.quad(f, math.log(a), math.log(b), limit=200)
        return head + val

    def doubling_increments(self, s0=None, doublings=200, nodes=64):
        """Increments ``int_T^{2T} ds/h`` for ``T = s0 * 2^k``.

        Each increment is a Gauss-Legendre rule in ``u = log s``; all
        doublings are evaluated in one vectorized pass.
        """
        s0 = max(self.s_min, 1.0) if s0 is None else s0
        kmax = min(doublings, int(math.floor(math.log2(1e300 / s0))))
        x, wq = np.polynomial.legendre.leggauss(nodes)
        a = math.log(s0) + math.log(2.0) * np.arange(kmax)
        u = a[:, None] + 0.5 * math.log(2.0) * (x[None, :] + 1.0)
        with np.errstate(over="ignore", invalid="ignore"):
            integrand = np.exp(u - self.log_h(np.exp(u)))
        integrand = np.nan_to_num(integrand, nan=np.inf)
        return 0.5 * math.log(2.0) * integrand @ wq


class KVerdict(str, Enum):
    SATISFIES = "SatisfiesK"
    FAILS = "FailsK"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class KResult:
    verdict: KVerdict
    tail: Optional[TailFunction]
    reason: str
    cauchy_threshold: Optional[float] = None
    increments: tuple = field(default=(), repr=False)

    def summary(self):
        lines = [self.verdict.value, f"reason: {self.reason}"]
        if self.tail is not None:
            lines.append(f"tail: h(s) = [w(t)/(t (log t)^n)]^(1/n) at t = exp(exp(s)), s >= {self.tail.s_min:g}")
            if self.increments:
                inc = self.increments
                lines.append(f"doubling increments: first={inc[0]:.6g} last={inc[-1]:.6g} count={len(inc)}")
            if self.cauchy_threshold is not None:
                lines.append(f"cauchy threshold: s >= {self.cauchy_threshold:.6g}")
        return "\n".join(lines)


def _loglog_t10(s):
    """``log log(t + 10)`` at ``t = exp(exp(s))``, overflow-free."""
    s = np.asarray(s, dtype=float)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        E = np.exp(s)  # log t
        delta = np.log1p(10.0 * np.exp(-E))  # log(t + 10) - log t
        return s + np.log1p(np.where(np.isinf(E), 0.0, delta / E))


def extracted_tail(spec):
    """Tail ``h(s) = [w(t) / (t (log t)^n)]^(1/n)`` at ``t = exp(exp(s))``."""
    n, p = spec.n, spec.p
    fam = spec.family
    if fam is Family.POWER:
        def log_h(s):
            s = np.asarray(s, dtype=float)
            with np.errstate(over="ignore", invalid="ignore"):
                grow = 0.0 if p == 1 else (p - 1.0) * np.exp(s)
            return (grow - n * s) / n
    elif fam is Family.LOG:
        def log_h(s):
            return (p * _loglog_t10(s) - n * np.asarray(s, dtype=float)) / n
    elif fam is Family.LOGLOG:
        def log_h(s):
            ll = _loglog_t10(s)
            return (ll - np.asarray(s, dtype=float)) + (p / n) * np.log(ll)
    else:
        raise DomainError("tables have no tail")
    return TailFunction(log_h, s_min=0.0, label=f"tail[{spec.name}]")


def check_condition_K(spec, doublings=1100, cauchy_tol=1e-6):
    """Classify a named weight and extract its tail function.

    The verdict follows the closed-form classification of the three
    families; the numerical tail study (doubling increments of
    ``int ds/h``) is attached for cross-checking.
    """
    if spec.family is Family.TABULATED:
        return KResult(KVerdict.UNKNOWN, None, "tabulated weights carry no asymptotics")
    n, p = spec.n, spec.p
    if spec.family is Family.POWER:
        ok = p > 1
        reason = f"u_p with p={p:g}: (K) iff p > 1"
    elif spec.family is Family.LOG:
        ok = p > n
        reason = f"v_p with p={p:g}, n={n}: (K) iff p > n"
    else:
        ok = p > n
        reason = f"w_p with p={p:g}, n={n}: (K) iff p > n"
    if ok and not spec.is_convex():
        ok = False
        reason += "; weight is not convex"
    tail = extracted_tail(spec)
    incs = tail.doubling_increments(s0=1.0, doublings=doublings)
    threshold = None
    if ok:
        small = incs < cauchy_tol
        # first index after which every increment stays small
        bad = np.nonzero(~small)[0]
        k = 0 if bad.size == 0 else int(bad[-1]) + 1
        if k < incs.size:
            threshold = float(2.0 ** k)
    verdict = KVerdict.SATISFIES if ok else KVerdict.FAILS
    return KResult(verdict, tail, reason, threshold, tuple(float(x) for x in incs))


# -- densities and the Luxembourg norm --------------------------------------


@dataclass(frozen=True, eq=False)
class DensitySample:
    """Values ``f_i >= 0`` with probability masses ``m_i`` (sum 1)."""

    values: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.values, dtype=float).reshape(-1)
        m = np.asarray(self.masses, dtype=float).reshape(-1)
        if f.shape != m.shape:
            raise DomainError("values and masses differ in length")
        if np.any(f < 0) or not np.all(np.isfinite(f)):
            raise DomainError("density values must be finite and nonnegative")
        if np.any(m <= 0):
            raise DomainError("masses must be positive")
        if abs(m.sum() - 1.0) > 1e-12:
            raise DomainError(f"masses sum to {m.sum()!r}, not 1")
        object.__setattr__(self, "values", f)
        object.__setattr__(self, "masses", m)

    @classmethod
    def uniform(cls, values):
        f = np.asarray(values, dtype=float).reshape(-1)
        m = np.full(f.size, 1.0 / f.size)
        m[-1] = 1.0 - m[:-1].sum()
        return cls(f, m)

    @classmethod
    def from_field(cls, field):
        return cls.uniform(field.values)

    def scaled(self, s):
        return DensitySample(self.values * s, self.masses)

    def integral(self, fn=None):
        vals = self.values if fn is None else fn(self.values)
        return float(np.dot(self.masses, vals))

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or [c.strip() for c in rows[0]] != ["f", "m"]:
            raise DomainError(f"{path}: header must be 'f,m'")
        data = np.array([[float(a), float(b)] for a, b in rows[1:]])
        return cls(data[:, 0], data[:, 1])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write("f,m\n")
            for f, m in zip(self.values, self.masses):
                fh.write(f"{float(f)!r},{float(m)!r}\n")


def luxembourg_norm(f, spec, rtol=1e-10):
    """``inf { r > 0 : int w(|f|/r) dV <= w(1) }`` by bisection.

    ``r -> int w(f/r)`` is nonincreasing, and ``r = max f`` is always
    admissible, so the root is bracketed by halving from there.
    """
    fmax = float(f.values.max())
    if fmax == 0.0:
        return 0.0
    w1 = float(eval_weight(spec, 1.0))
    if w1 <= 0:
        raise DomainError("w(1) must be positive")

    def excess(r):
        with np.errstate(over="ignore"):
            return float(np.dot(f.masses, eval_weight(spec, f.values / r))) - w1

    hi = fmax
    if excess(hi) >= 0.0:
        # only when f is constant on its support at w(1) level: hi is the root
        return hi
    lo = 0.5 * hi
    while excess(lo) <= 0.0:
        hi = lo
        lo *= 0.5
        if lo < 1e-300:
            raise DomainError("could not bracket the Luxembourg norm")
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# -- convex conjugation -----------------------------------------------------


@dataclass(frozen=True, eq=False)
class Conjugate:
    """Tabulated ``w*(s) = sup_{t >= 0} (s t - w(t))`` on a grid of slopes."""

    s: np.ndarray
    values: np.ndarray
    argmax: np.ndarray

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s < self.s[0] - 1e-12) or np.any(s > self.s[-1] + 1e-12):
            raise OutOfDomainError("slope outside the tabulated range")
        out = np.interp(s, self.s, self.values)
        return out if out.ndim else float(out)


def _check_convex_samples(t, w, tol=1e-10):
    slopes = np.diff(w) / np.diff(t)
    scale = max(1.0, float(np.abs(slopes).max()))
    bad = np.nonzero(np.diff(slopes) < -tol * scale)[0]
    if bad.size:
        i = int(bad[0]) + 1
        raise ConvexityError(f"weight is not convex near t={t[i]:.6g}")


def _slope_reach(spec, s_max):
    """Smallest doubling ``t`` with ``w'(t) >= s_max`` (a bracket for argmax)."""
    if spec.family is Family.TABULATED:
        return spec.table[0][-1]
    t = 1.0
    while weight_derivative(spec, t) < s_max:
        t *= 2.0
        if t > 1e12:
            raise DomainError(f"slopes never reach {s_max}")
    return t


def legendre_conjugate(spec, s_grid, t_grid=None, num=65537):
    """Discrete Legendre transform by the monotone supporting-point sweep.

    ``t_grid`` defaults to a uniform grid on ``[0, 2 t_reach]`` where
    ``w'(t_reach) >= max(s_grid)``.
    """
    s = np.asarray(s_grid, dtype=float)
    if s.ndim != 1 or s.size == 0 or np.any(s < 0):
        raise DomainError("s_grid must be a nonempty 1-d array of nonnegative slopes")
    order = np.argsort(s, kind="stable")
    ss = np.ascontiguousarray(s[order])
    if t_grid is None:
        if spec.family is Family.TABULATED:
            t = np.asarray(spec.table[0], dtype=float)
        else:
            t = np.linspace(0.0, 2.0 * _slope_reach(spec, float(ss[-1])), num)
    else:
        t = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t) <= 0):
        raise DomainError("t_grid must be increasing")
    w = np.asarray(eval_weight(spec, t), dtype=float)
    _check_convex_samples(t, w)
    vals, arg = _kernels.conjugate_sweep(np.ascontiguousarray(t), np.ascontiguousarray(w), ss)
    out = np.empty_like(vals)
    am = np.empty_like(vals)
    out[order] = vals
    am[order] = t[arg]
    return Conjugate(s, out, am)


def _bracketed_bisect(fn, target, lo, hi, iters=200):
    """Vectorized bisection for nondecreasing ``fn``: smallest x with fn(x) >= target."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        ge = fn(mid) >= target
        hi = np.where(ge, mid, hi)
        lo = np.where(ge, lo, mid)
        if np.all(hi - lo <= 1e-15 * np.maximum(1.0, np.abs(hi))):
            break
    return hi


def conjugate_value(spec, s):
    """Pointwise ``w*(s)`` from the first-order condition ``w'(t) = s``.

    Returns ``(value, maximizer)``; vectorized in ``s``.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise DomainError("conjugate evaluated at negative slope")
    w0 = float(eval_weight(spec, 0.0)) if spec.family is not Family.TABULATED else spec.table[1][0]
    d0 = float(weight_derivative(spec, 0.0 if spec.family is not Family.TABULATED else spec.table[0][0]))
    t_lo = 0.0 if spec.family is not Family.TABULATED else spec.table[0][0]
    hi = np.full(s.shape, max(t_lo, 1.0))
    if spec.family is Family.TABULATED:
        hi = np.full(s.shape, spec.table[0][-1])
        if np.any(s > weight_derivative(spec, hi)):
            raise OutOfDomainError("slope beyond the last table slope")
    else:
        for _ in range(200):
            need = weight_derivative(spec, hi) < s
            if not np.any(need):
                break
            hi = np.where(need, 2 * hi, hi)
    tstar = _bracketed_bisect(lambda x: weight_derivative(spec, x), s, np.full(s.shape, t_lo), hi)
    tstar = np.where(s <= d0, t_lo, tstar)
    val = s * tstar - eval_weight(spec, tstar)
    val = np.where(s <= d0, s * t_lo - w0, val)
    if val.ndim == 0:
        return float(val), float(tstar)
    return val, tstar


def inverse_conjugate(spec, y):
    """``(w*)^{-1}(y)``: the smallest slope ``s`` with ``w*(s) >= y``.

    Returns ``(s, below_range)``; for ``y <= 0`` the left end of the flat
    initial segment (``s = 0``) is returned and ``below_range`` is set when
    ``y < 0``.
    """
    s, flag = inverse_conjugate_array(spec, np.asarray([y], dtype=float))
    return float(s[0]), bool(flag[0])


def inverse_conjugate_array(spec, y):
    """Vectorized :func:`inverse_conjugate`; returns ``(s, below_range)``."""
    y = np.asarray(y, dtype=float)
    below = y < 0
    d0 = float(weight_derivative(spec, 0.0)) if spec.family is not Family.TABULATED else 0.0
    d0 = d0 if np.isfinite(d0) else 0.0
    if spec.family is not Family.TABULATED:
        # w*(w'(t)) = t w'(t) - w(t) increases in t: one bisection in t, then s = w'(t)
        excess = lambda t: t * weight_derivative(spec, t) - eval_weight(spec, t)
        hi = np.ones(y.shape)
        for _ in range(200):
            need = excess(hi) < y
            if not np.any(need):
                break
            hi = np.where(need, 2 * hi, hi)
        t = _bracketed_bisect(excess, y, np.zeros(y.shape), hi)
        s = np.where(y <= 0, 0.0, weight_derivative(spec, t))
        return s, below
    hi = np.full(y.shape, max(2.0 * d0, 1.0))
    for _ in range(200):
        need = conjugate_value(spec, hi)[0] < y
        if not np.any(need):
            break
        hi = np.where(need, 2 * hi, hi)
    lo = np.full(y.shape, d0)
    s = _bracketed_bisect(lambda x: conjugate_value(spec, x)[0], y, lo, hi)
    s = np.where(y <= 0, 0.0, s)
    return s, below
