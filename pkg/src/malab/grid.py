"""Periodic-grid calculus on flat model tori of complex dimension 1 and 2.

The torus is ``(R/Z)^{2n}`` with real axes ordered ``(x1, y1, x2, y2)`` and the
complex structure pairing ``z_j = x_j + i y_j``.  The flat Kahler form is
normalized so that ``V_omega = 1`` and the omega-relative complex Hessian is

    H_jk = 4 d^2 phi / (dz_j dzbar_k)
         = (phi_{x_j x_k} + phi_{y_j y_k}) + i (phi_{x_j y_k} - phi_{y_j x_k}),

so that ``trace(H)`` is the real Laplacian and the eigenvalues of
``omega + dd^c phi`` relative to ``omega`` are those of ``I + H``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import DomainError, GridMismatchError

__all__ = [
    "TorusGrid",
    "TorusField",
    "HessianField",
    "second_difference",
    "hessian_stencils",
    "apply_stencil",
    "complex_hessian",
    "ma_density",
    "min_eigenvalue",
    "lp_norm",
    "sup_norm",
    "osc",
    "grad_energy",
    "laplacian_symbol",
    "write_field",
    "read_field",
    "field_to_csv",
]

V_OMEGA = 1.0
FIELD_MAGIC = b"MAFLD"


@dataclass(frozen=True)
class TorusGrid:
    """Uniform periodic grid with ``N`` points per real axis, period 1."""

    n: int
    N: int

    def __post_init__(self):
        if self.n not in (1, 2):
            raise DomainError(f"complex dimension must be 1 or 2, got {self.n}")
        if self.N < 8 or self.N & (self.N - 1):
            raise DomainError(f"N must be a power of 2 and >= 8, got {self.N}")

    @property
    def ndim(self):
        return 2 * self.n

    @property
    def shape(self):
        return (self.N,) * self.ndim

    @property
    def size(self):
        return self.N ** self.ndim

    @property
    def spacing(self):
        return 1.0 / self.N

    @property
    def volume(self):
        return V_OMEGA

    def coords(self):
        """Coordinate arrays, one per real axis, in ``(x1, y1, x2, y2)`` order."""
        x = np.arange(self.N) * self.spacing
        return np.meshgrid(*([x] * self.ndim), indexing="ij")

    def field(self, values):
        return TorusField(np.asarray(values, dtype=float), self)

    def constant(self, c):
        return TorusField(np.full(self.shape, float(c)), self)

    def from_function(self, fn):
        """Sample ``fn(*coords)`` on the grid."""
        return self.field(np.broadcast_to(fn(*self.coords()), self.shape).copy())


@dataclass(frozen=True, eq=False)
class TorusField:
    """Real values at the grid points of a :class:`TorusGrid`."""

    values: np.ndarray
    grid: TorusGrid

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise GridMismatchError(
                f"values of shape {v.shape} do not fit grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise DomainError("field values must be finite")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def with_values(self, values):
        return TorusField(values, self.grid)

    def mean(self):
        return float(self.values.mean())

    def sup(self):
        return float(self.values.max())

    def inf(self):
        return float(self.values.min())

    def sup_normalized(self, level=0.0):
        """Translate so that ``sup = level``."""
        return self.with_values(self.values - self.values.max() + level)

    def mean_normalized(self):
        return self.with_values(self.values - self.values.mean())

    def __add__(self, other):
        if isinstance(other, TorusField):
            _check_same_grid(self, other)
            return self.with_values(self.values + other.values)
        return self.with_values(self.values + other)

    def __sub__(self, other):
        if isinstance(other, TorusField):
            _check_same_grid(self, other)
            return self.with_values(self.values - other.values)
        return self.with_values(self.values - other)

    def __mul__(self, scalar):
        return self.with_values(self.values * float(scalar))

    __rmul__ = __mul__


def _check_same_grid(a, b):
    if a.grid != b.grid:
        raise GridMismatchError(f"fields live on different grids: {a.grid} vs {b.grid}")


@dataclass(frozen=True)
class HessianField:
    """Pointwise ``I + H`` (complex, Hermitian) and its ascending eigenvalues."""

    matrix: np.ndarray
    eigenvalues: np.ndarray
    grid: TorusGrid


# -- stencils ---------------------------------------------------------------
#
# A stencil is a tuple of (offset, weight) pairs; offsets are integer vectors
# over the real axes and weights already include the 1/dx^2 factor.


def _unit(ndim, a, s=1):
    o = [0] * ndim
    o[a] = s
    return o


def second_difference(ndim, a, b, dx):
    """Central second difference ``d^2/dx_a dx_b`` as a stencil."""
    if a == b:
        terms = [(_unit(ndim, a, 1), 1.0), ([0] * ndim, -2.0), (_unit(ndim, a, -1), 1.0)]
        scale = 1.0 / dx ** 2
    else:
        terms = []
        for sa, sb, w in ((1, 1, 1.0), (1, -1, -1.0), (-1, 1, -1.0), (-1, -1, 1.0)):
            o = [0] * ndim
            o[a] = sa
            o[b] = sb
            terms.append((o, w))
        scale = 1.0 / (4.0 * dx ** 2)
    return tuple((tuple(o), w * scale) for o, w in terms)


def _combine(*weighted):
    acc = {}
    for coef, stencil in weighted:
        for o, w in stencil:
            acc[o] = acc.get(o, 0.0) + coef * w
    return tuple((o, w) for o, w in acc.items() if w != 0.0)


@lru_cache(maxsize=None)
def hessian_stencils(grid):
    """Real and imaginary stencils of ``H_jk`` for ``j <= k``.

    Returns a dict ``{(j, k): (real_stencil, imag_stencil)}``.
    """
    d, dx = grid.ndim, grid.spacing
    D = {(a, b): second_difference(d, a, b, dx) for a in range(d) for b in range(d)}
    out = {}
    for j in range(grid.n):
        for k in range(j, grid.n):
            xj, yj, xk, yk = 2 * j, 2 * j + 1, 2 * k, 2 * k + 1
            re = _combine((1.0, D[xj, xk]), (1.0, D[yj, yk]))
            im = () if j == k else _combine((1.0, D[xj, yk]), (-1.0, D[yj, xk]))
            out[j, k] = (re, im)
    return out


def apply_stencil(values, stencil):
    """Apply a stencil to a periodic array."""
    out = np.zeros_like(values, dtype=float)
    axes = tuple(range(values.ndim))
    for o, w in stencil:
        if any(o):
            out += w * np.roll(values, tuple(-s for s in o), axis=axes)
        else:
            out += w * values
    return out


def _hessian_entries(phi):
    arr = phi.values
    ent = {}
    for (j, k), (re, im) in hessian_stencils(phi.grid).items():
        r = apply_stencil(arr, re)
        i = apply_stencil(arr, im) if im else np.zeros_like(arr)
        ent[j, k] = (r, i)
    return ent


def complex_hessian(phi):
    """Matrix ``I + H(phi)`` and its eigenvalues at every grid point."""
    g = phi.grid
    n = g.n
    ent = _hessian_entries(phi)
    mat = np.zeros(g.shape + (n, n), dtype=complex)
    for (j, k), (r, i) in ent.items():
        mat[..., j, k] = r + 1j * i
        if j != k:
            mat[..., k, j] = r - 1j * i
    for j in range(n):
        mat[..., j, j] += 1.0
    if n == 1:
        eig = mat.real.copy().reshape(g.shape + (1,))
    else:
        a = mat[..., 0, 0].real
        d = mat[..., 1, 1].real
        b2 = np.abs(mat[..., 0, 1]) ** 2
        half = 0.5 * (a + d)
        rad = np.sqrt(0.25 * (a - d) ** 2 + b2)
        eig = np.stack([half - rad, half + rad], axis=-1)
    return HessianField(mat, eig, g)


def ma_density(phi):
    """Signed ``(omega + dd^c phi)^n / (V_omega omega^n)`` as a field.

    No positivity is required; use :func:`min_eigenvalue` to flag non-psh
    points.
    """
    ent = _hessian_entries(phi)
    if phi.grid.n == 1:
        dens = 1.0 + ent[0, 0][0]
    else:
        a = 1.0 + ent[0, 0][0]
        d = 1.0 + ent[1, 1][0]
        re, im = ent[0, 1]
        dens = a * d - re * re - im * im
    return phi.with_values(dens / V_OMEGA)


def min_eigenvalue(phi):
    """Smallest eigenvalue of ``I + H(phi)`` over the grid."""
    return float(complex_hessian(phi).eigenvalues[..., 0].min())


# -- norms ------------------------------------------------------------------


def lp_norm(phi, r):
    """``(mean |phi|^r)^(1/r)`` against the uniform probability measure."""
    if r == np.inf:
        return sup_norm(phi)
    if r < 1:
        raise DomainError(f"r must be >= 1, got {r}")
    a = np.abs(phi.values)
    m = a.max()
    if m == 0.0:
        return 0.0
    # scale by the max so large r does not overflow
    return float(m * np.mean((a / m) ** r) ** (1.0 / r))


def sup_norm(phi):
    return float(np.abs(phi.values).max())


def osc(phi):
    return float(phi.values.max() - phi.values.min())


def grad_energy(phi):
    """``mean |grad phi|^2`` with forward differences."""
    arr = phi.values
    dx = phi.grid.spacing
    tot = np.zeros_like(arr)
    for a in range(arr.ndim):
        tot += ((np.roll(arr, -1, axis=a) - arr) / dx) ** 2
    return float(tot.mean())


def laplacian_symbol(grid):
    """Fourier symbol of the 5-point (per axis) discrete Laplacian.

    The array is laid out for ``np.fft.fftn`` on ``grid.shape`` and is
    nonpositive, vanishing only at the zero mode.
    """
    k = np.fft.fftfreq(grid.N, d=1.0 / grid.N)
    s = -(4.0 / grid.spacing ** 2) * np.sin(np.pi * k / grid.N) ** 2
    out = np.zeros(grid.shape)
    for a in range(grid.ndim):
        shape = [1] * grid.ndim
        shape[a] = grid.N
        out = out + s.reshape(shape)
    return out


# -- field files ------------------------------------------------------------


def write_field(path, phi):
    """Binary layout: ``MAFLD``, u32 n, u32 N, then little-endian float64s."""
    with open(path, "wb") as fh:
        fh.write(FIELD_MAGIC)
        fh.write(struct.pack("<II", phi.grid.n, phi.grid.N))
        fh.write(np.ascontiguousarray(phi.values, dtype="<f8").tobytes(order="C"))


def read_field(path):
    data = Path(path).read_bytes()
    head = len(FIELD_MAGIC)
    if data[:head] != FIELD_MAGIC:
        raise DomainError(f"{path}: not a field file (bad magic)")
    n, N = struct.unpack("<II", data[head:head + 8])
    grid = TorusGrid(n, N)
    vals = np.frombuffer(data[head + 8:], dtype="<f8")
    if vals.size != grid.size:
        raise DomainError(f"{path}: expected {grid.size} values, found {vals.size}")
    return TorusField(vals.reshape(grid.shape).astype(float), grid)


def field_to_csv(path, phi):
    """CSV export: one row per grid point, integer indices then value."""
    names = ["x1", "y1", "x2", "y2"][: phi.grid.ndim]
    idx = np.indices(phi.grid.shape).reshape(phi.grid.ndim, -1).T
    vals = phi.values.reshape(-1)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(f"i_{a}" for a in names) + ",value\n")
        for row, v in zip(idx, vals):
            fh.write(",".join(str(int(i)) for i in row) + f",{float(v)!r}\n")
