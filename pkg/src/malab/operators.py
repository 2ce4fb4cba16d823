"""Symmetric elliptic eigenvalue operators ``g`` on cones and the domination principle.

Named operators are normalized so that ``g(1, ..., 1) = 1``:
``SigmaKRoot(k) = (sigma_k / binom(n, k))^(1/k)``, ``GeometricMean``,
``ArithmeticMean = sigma_1 / n``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from .errors import ConeViolationError, DomainError, GridMismatchError, RangeError
from .grid import complex_hessian

__all__ = [
    "ConeKind",
    "ConeSpec",
    "OperatorKind",
    "OperatorSpec",
    "elementary_symmetric",
    "eval_g",
    "eval_g_field",
    "grad_g",
    "check_conditions",
    "solve_g_equation",
    "domination_check",
]


class ConeKind(str, Enum):
    POSITIVE_ORTHANT = "PositiveOrthant"
    HALF_SPACE_TRACE = "HalfSpaceTrace"
    GARDING = "GardingSigmaK"


class OperatorKind(str, Enum):
    SIGMA_K_ROOT = "SigmaKRoot"
    GEOMETRIC_MEAN = "GeometricMean"
    ARITHMETIC_MEAN = "ArithmeticMean"
    CUSTOM = "Custom"


def elementary_symmetric(lam, k):
    """``sigma_k`` over the last axis (``sigma_0 = 1``)."""
    lam = np.asarray(lam, dtype=float)
    e = [np.ones(lam.shape[:-1])] + [np.zeros(lam.shape[:-1]) for _ in range(k)]
    for j in range(lam.shape[-1]):
        x = lam[..., j]
        for i in range(k, 0, -1):
            e[i] = e[i] + x * e[i - 1]
    return e[k]


@dataclass(frozen=True)
class ConeSpec:
    kind: ConeKind
    n: int
    k: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", ConeKind(self.kind))
        if self.n < 1:
            raise DomainError("n must be >= 1")
        if self.kind is ConeKind.GARDING and not 1 <= self.k <= self.n:
            raise DomainError(f"Garding cone needs 1 <= k <= n, got k={self.k}")

    def contains(self, lam):
        """Membership over the last axis."""
        lam = np.asarray(lam, dtype=float)
        if lam.shape[-1] != self.n:
            raise DomainError(f"expected {self.n} eigenvalues, got {lam.shape[-1]}")
        if self.kind is ConeKind.POSITIVE_ORTHANT:
            return np.all(lam > 0, axis=-1)
        if self.kind is ConeKind.HALF_SPACE_TRACE:
            return lam.sum(axis=-1) > 0
        ok = np.ones(lam.shape[:-1], dtype=bool)
        for j in range(1, self.k + 1):
            ok &= elementary_symmetric(lam, j) > 0
        return ok


@dataclass(frozen=True)
class OperatorSpec:
    """``kind`` with parameters; ``fn`` is the vectorized map for Custom operators."""

    kind: OperatorKind
    n: int
    k: int = 1
    delta: float = 1.0
    cone: Optional[ConeSpec] = None
    fn: Optional[Callable] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", OperatorKind(self.kind))
        if self.kind is OperatorKind.SIGMA_K_ROOT and not 1 <= self.k <= self.n:
            raise DomainError(f"SigmaKRoot needs 1 <= k <= n, got k={self.k}")
        if self.kind is OperatorKind.CUSTOM and self.fn is None:
            raise DomainError("Custom operators need fn")
        if not self.delta > 0:
            raise DomainError("delta must be positive")
        if self.cone is None:
            default = {
                OperatorKind.SIGMA_K_ROOT: ConeSpec(ConeKind.GARDING, self.n, self.k),
                OperatorKind.GEOMETRIC_MEAN: ConeSpec(ConeKind.POSITIVE_ORTHANT, self.n),
                OperatorKind.ARITHMETIC_MEAN: ConeSpec(ConeKind.HALF_SPACE_TRACE, self.n),
                OperatorKind.CUSTOM: ConeSpec(ConeKind.POSITIVE_ORTHANT, self.n),
            }[self.kind]
            object.__setattr__(self, "cone", default)

    @property
    def named(self):
        return self.kind is not OperatorKind.CUSTOM

    def to_dict(self):
        if not self.named:
            raise DomainError("Custom operators are not serializable")
        d = {"kind": self.kind.value, "n": self.n, "delta": self.delta}
        if self.kind is OperatorKind.SIGMA_K_ROOT:
            d["k"] = self.k
        return d

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - {"kind", "k", "n", "delta"}
        if unknown:
            raise DomainError(f"unknown operator keys: {sorted(unknown)}")
        return cls(d["kind"], int(d["n"]), int(d.get("k", 1)), float(d.get("delta", 1.0)))

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _raw_g(spec, lam):
    n = spec.n
    if spec.kind is OperatorKind.ARITHMETIC_MEAN:
        return lam.sum(axis=-1) / n
    if spec.kind is OperatorKind.GEOMETRIC_MEAN:
        return np.prod(lam, axis=-1) ** (1.0 / n)
    if spec.kind is OperatorKind.SIGMA_K_ROOT:
        return (elementary_symmetric(lam, spec.k) / math.comb(n, spec.k)) ** (1.0 / spec.k)
    return np.asarray(spec.fn(lam), dtype=float)


def eval_g_field(spec, lam):
    """``g`` over the last axis of an eigenvalue array; every point must lie in the cone."""
    lam = np.asarray(lam, dtype=float)
    inside = spec.cone.contains(lam)
    if not np.all(inside):
        bad = np.argwhere(~np.atleast_1d(inside))[0]
        raise ConeViolationError(f"eigenvalues outside {spec.cone.kind.value} at index {tuple(bad)}")
    return _raw_g(spec, lam)


def eval_g(spec, lam):
    out = eval_g_field(spec, lam)
    return float(out) if np.ndim(out) == 0 else out


def grad_g(spec, lam, step=1e-6):
    """Gradient over the last axis: closed form for named kinds, central differences otherwise."""
    lam = np.asarray(lam, dtype=float)
    g = eval_g_field(spec, lam)
    n = spec.n
    if spec.kind is OperatorKind.ARITHMETIC_MEAN:
        return np.full(lam.shape, 1.0 / n)
    if spec.kind is OperatorKind.GEOMETRIC_MEAN:
        return np.asarray(g)[..., None] / (n * lam)
    if spec.kind is OperatorKind.SIGMA_K_ROOT:
        k = spec.k
        C = math.comb(n, k)
        out = np.empty(lam.shape)
        for j in range(n):
            rest = np.delete(lam, j, axis=-1)
            dsig = elementary_symmetric(rest, k - 1) if rest.shape[-1] else np.ones(lam.shape[:-1])
            out[..., j] = (1.0 / k) * np.asarray(g) ** (1 - k) * dsig / C
        return out
    out = np.empty(lam.shape)
    for j in range(n):
        e = np.zeros(n)
        e[j] = step
        out[..., j] = (_raw_g(spec, lam + e) - _raw_g(spec, lam - e)) / (2 * step)
    return out


def _sample_cone(spec, count, rng):
    """Positive-orthant samples plus cone samples outside the orthant."""
    n = spec.n
    orth = rng.exponential(size=(count, n)) * rng.uniform(0.1, 10.0, size=(count, 1))
    orth[0] = 1.0
    wide = rng.normal(size=(4 * count, n)) + rng.uniform(-1, 3, size=(4 * count, 1))
    wide = wide[spec.cone.contains(wide)][:count]
    return orth, wide


def check_conditions(spec, sample_count=10000, seed=0):
    """Sampled symmetry, ellipticity and majorization report.

    ``delta_hat`` is the minimum of ``g / (prod lambda)^(1/n)`` over
    positive-orthant samples (the diagonal is always included).
    """
    rng = np.random.default_rng(seed)
    orth, wide = _sample_cone(spec, sample_count, rng)
    samples = np.concatenate([orth, wide]) if wide.size else orth
    g = eval_g_field(spec, samples)
    sym_err = 0.0
    perms = list(itertools.permutations(range(spec.n)))
    for _ in range(min(10, len(perms))):
        p = perms[rng.integers(len(perms))]
        gp = eval_g_field(spec, samples[:, p])
        sym_err = max(sym_err, float(np.max(np.abs(gp - g) / np.maximum(1.0, np.abs(g)))))
    ellip = float(np.min(grad_g(spec, samples)))
    geo = np.prod(orth, axis=-1) ** (1.0 / spec.n)
    delta_hat = float(np.min(eval_g_field(spec, orth) / geo))
    neg = rng.normal(size=(sample_count, spec.n))
    neg[:, -1] -= neg.sum(axis=-1) + rng.exponential(size=sample_count)
    rejects_negative_trace = not bool(np.any(spec.cone.contains(neg)))
    accepts_orthant = bool(np.all(spec.cone.contains(orth)))
    return {
        "kind": spec.kind.value,
        "n": spec.n,
        "samples": int(samples.shape[0]),
        "symmetry_error": sym_err,
        "min_partial": ellip,
        "elliptic": ellip > 0,
        "delta_hat": delta_hat,
        "delta": spec.delta,
        "majorization_ok": delta_hat >= spec.delta - 1e-9,
        "cone_accepts_orthant": accepts_orthant,
        "cone_rejects_negative_trace": rejects_negative_trace,
    }


# -- n=1 equation -----------------------------------------------------------


def _invert_g1(spec, y):
    """Solve ``g(lambda) = y`` for scalar eigenvalues ``lambda > 0`` (vectorized)."""
    y = np.asarray(y, dtype=float)
    if spec.named:
        return y.copy()
    lo = np.full(y.shape, 1e-300)
    hi = np.ones(y.shape)
    g = lambda x: _raw_g(spec, x[..., None])
    for _ in range(2000):
        need = g(hi) < y
        if not need.any():
            break
        hi = np.where(need, 2 * hi, hi)
    else:
        raise RangeError("c f lies above the range of g")
    if np.any(g(lo) > y):
        raise RangeError("c f lies below the range of g")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        ge = g(mid) >= y
        hi = np.where(ge, mid, hi)
        lo = np.where(ge, lo, mid)
    return 0.5 * (lo + hi)


def solve_g_equation(spec, f, tol=1e-10):
    """Solve ``g(lambda(phi)) = c f`` for n=1.

    The eigenvalue is ``1 + Lap_h phi``; after inverting ``g`` the equation is
    ``1 + Lap_h phi = g^{-1}(c f)`` and ``c`` is fixed by requiring the right
    side to have mean one.

    Returns
    -------
    phi : TorusField
        Sup-normalized to 0.
    c : float
    """
    from .solver import solve_poisson_spectral

    if f.grid.n != 1 or spec.n != 1:
        raise DomainError("solve_g_equation handles n=1 only")
    if f.inf() <= 0:
        raise DomainError("density must be positive")
    fv = f.values

    def mass(c):
        return float(_invert_g1(spec, c * fv).mean()) - 1.0

    if spec.named:
        c = 1.0 / float(fv.mean())
    else:
        hi = 1.0
        while mass(hi) < 0:
            hi *= 2.0
            if hi > 1e300:
                raise RangeError("no scaling c reaches unit mass")
        lo = hi
        while mass(lo) > 0:
            lo *= 0.5
            if lo < 1e-300:
                raise RangeError("no scaling c reaches unit mass")
        c = optimize.brentq(mass, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    lam = _invert_g1(spec, c * fv)
    lam = lam / lam.mean()
    phi = solve_poisson_spectral(f.with_values(lam))
    got = eval_g_field(spec, complex_hessian(phi).eigenvalues)
    res = float(np.abs(got - c * fv).max())
    if res > tol * max(1.0, float(np.abs(c * fv).max())):
        raise RangeError(f"g-equation residual {res:.3e} above tolerance")
    return phi, float(c)


# -- domination principle ---------------------------------------------------


def domination_check(phi, psi, spec, c):
    """Minimum-point mechanism of the domination principle on the grid.

    At ``x0 = argmin(phi - psi)`` the discrete complex Hessian of
    ``phi - psi`` is compared with zero, the sorted eigenvalues of ``phi``
    and ``psi`` are compared, and the hypothesis ``g(lambda(phi)) <= c
    g(lambda(psi))`` is evaluated on ``{phi < psi}``.
    """
    if phi.grid != psi.grid:
        raise GridMismatchError("phi and psi live on different grids")
    if not 0 <= c < 1:
        raise DomainError("c must lie in [0, 1)")
    diff = phi.values - psi.values
    x0 = np.unravel_index(int(np.argmin(diff)), diff.shape)
    hd = complex_hessian(phi - psi)
    # the identity cancels in H(phi) - H(psi); remove it from I + H
    Hdiff = hd.matrix[x0] - np.eye(phi.grid.n)
    hess_min = float(np.linalg.eigvalsh(Hdiff).min())
    lam_phi = complex_hessian(phi).eigenvalues
    lam_psi = complex_hessian(psi).eigenvalues
    eig_gap = float(np.min(lam_phi[x0] - lam_psi[x0]))
    in_cone = bool(spec.cone.contains(lam_phi[x0]) and spec.cone.contains(lam_psi[x0]))
    g_gap = float(_raw_g(spec, lam_phi[x0]) - _raw_g(spec, lam_psi[x0])) if in_cone else math.nan
    below = diff < 0
    if below.any():
        lp, ls = lam_phi[below], lam_psi[below]
        ok = spec.cone.contains(lp) & spec.cone.contains(ls)
        hyp = bool(ok.all() and np.all(_raw_g(spec, lp) <= c * _raw_g(spec, ls)))
    else:
        hyp = True
    return {
        "min_point": [int(i) for i in x0],
        "min_value": float(diff[x0]),
        "hessian_min_eigenvalue": hess_min,
        "eigenvalue_gap": eig_gap,
        "g_gap": g_gap,
        "below_set_empty": not bool(below.any()),
        "hypothesis_holds": hyp,
        "discretization_flag": bool(hyp and below.any()),
    }
