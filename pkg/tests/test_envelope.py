import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fields import random_density, smooth_field
from malab import _kernels
from malab.envelope import (
    MASS_TOL,
    active_set_envelope,
    compute_envelope,
    reduction_check,
    save_envelope,
    sup_bound_check,
)
from malab.errors import DomainError, NormalizationError, PreconditionError
from malab.grid import TorusGrid, complex_hessian, read_field
from malab.operators import OperatorSpec, eval_g_field, solve_g_equation
from malab.weights import WeightSpec

G16 = TorusGrid(1, 16)


def double_well(grid):
    x, y = grid.coords()
    well = 0.05 * np.cos(4 * np.pi * x) + 0.02 * np.cos(2 * np.pi * y)
    bump = 0.04 * np.exp(-((x - 0.5) ** 2 + (y - 0.5) ** 2) / 0.01)
    return grid.field(well + bump)


def obstacle(grid, seed):
    return smooth_field(grid, seed, amp=0.05, modes=4, kmax=3)


def test_psh_obstacle_is_its_own_envelope():
    g = TorusGrid(1, 16)
    h = smooth_field(g, 0, amp=0.002)
    assert complex_hessian(h).eigenvalues.min() > 0
    res = compute_envelope(h)
    np.testing.assert_array_equal(res.psi.values, h.values)
    assert res.contact.all()
    res = compute_envelope(g.constant(-3.0))
    np.testing.assert_array_equal(res.psi.values, -3.0)


def test_double_well_matches_active_set_oracle():
    h = double_well(G16)
    res = compute_envelope(h)
    psi, active, _ = active_set_envelope(h)
    assert not res.contact.all()
    assert np.abs(res.psi.values - psi.values).max() < 1e-8
    np.testing.assert_array_equal(res.contact, active)


@pytest.mark.parametrize("seed", range(20))
def test_complementarity_on_random_obstacles(seed):
    h = obstacle(TorusGrid(1, 32), seed)
    res = compute_envelope(h)
    assert np.all(res.psi.values <= h.values)
    assert res.min_eigenvalue >= -1e-8
    # total discrete mass is exactly 1 on the torus
    assert res.off_contact_mass <= MASS_TOL[1]


def test_backends_reach_the_same_fixed_point():
    if _kernels.compiled_backend is None:
        pytest.skip("compiled kernels not built")
    for n, N in ((1, 16), (2, 8)):
        g = TorusGrid(n, N)
        h = obstacle(g, 7)
        a = compute_envelope(h, backend="cython")
        b = compute_envelope(h, backend="python")
        assert np.abs(a.psi.values - b.psi.values).max() < 1e-10


def test_idempotence_and_shift():
    h = obstacle(TorusGrid(1, 32), 3)
    psi = compute_envelope(h).psi
    again = compute_envelope(psi).psi
    assert np.abs(again.values - psi.values).max() < 1e-10
    shifted = compute_envelope(h + h.grid.constant(2.5)).psi
    assert np.abs(shifted.values - psi.values - 2.5).max() < 1e-10


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(0.0, 0.05))
def test_monotone_in_the_obstacle(seed, gap):
    g = TorusGrid(1, 16)
    h2 = obstacle(g, seed)
    bump = np.abs(smooth_field(g, seed + 1, amp=gap).values)
    h1 = h2.with_values(h2.values - bump)
    assert np.all(compute_envelope(h1).psi.values <= compute_envelope(h2).psi.values + 1e-11)


def test_second_differences_stay_bounded_under_refinement():
    tops = []
    for N in (32, 64, 128):
        g = TorusGrid(1, N)
        x, y = g.coords()
        h = g.field(0.05 * np.cos(2 * np.pi * x) * np.cos(2 * np.pi * y))
        tops.append(compute_envelope(h).max_eigenvalue)
    # the obstacle's own eigenvalues reach 1 + 0.1 (2 pi)^2 ~ 4.95
    assert max(tops) < 5.0 and tops[2] < 1.1 * tops[1]


def test_n2_envelope_respects_line_constraints():
    g = TorusGrid(2, 8)
    h = obstacle(g, 11)
    res = compute_envelope(h)
    assert np.all(res.psi.values <= h.values)
    assert res.min_eigenvalue > complex_hessian(h).eigenvalues.min()
    again = compute_envelope(res.psi).psi
    assert np.abs(again.values - res.psi.values).max() < 1e-10


def test_relaxation_parameter_is_validated():
    with pytest.raises(DomainError):
        compute_envelope(G16.constant(0.0), omega=1.5)
    with pytest.raises(DomainError):
        active_set_envelope(TorusGrid(2, 8).constant(0.0))


@pytest.mark.parametrize("kind", ["ArithmeticMean", "GeometricMean"])
def test_reduction_n1_is_an_identity_chain(kind):
    spec = OperatorSpec.from_dict({"kind": kind, "n": 1, "delta": 1.0})
    f = random_density(TorusGrid(1, 32), 4, amp=0.6)
    phi, c = solve_g_equation(spec, f)
    rep = reduction_check(phi, spec, 1.0, c, f)
    assert rep["contact_fraction"] == 1.0
    assert rep["max_violation"] <= 1e-8
    assert rep["off_contact_mass"] <= rep["mass_tol"]


def test_reduction_rejects_non_solutions():
    spec = OperatorSpec.from_dict({"kind": "ArithmeticMean", "n": 1, "delta": 1.0})
    f = random_density(TorusGrid(1, 16), 5)
    phi, c = solve_g_equation(spec, f)
    with pytest.raises(PreconditionError):
        reduction_check(phi, spec, 1.0, 2 * c, f)


def test_reduction_n2_refinement():
    spec = OperatorSpec.from_dict({"kind": "ArithmeticMean", "n": 2, "delta": 1.0})
    worst = []
    for N in (8, 16):
        g = TorusGrid(2, N)
        X = g.coords()
        # eigenvalues 1 and 1 - 8 pi^2 a cos: not psh, inside the trace half-space
        phi = g.field(0.02 * np.cos(2 * np.pi * (X[0] + X[2])) + 0.005 * np.sin(2 * np.pi * (X[1] - X[3])))
        lam = complex_hessian(phi).eigenvalues
        assert lam.min() < 0
        f = g.field(eval_g_field(spec, lam) ** 2)
        rep = reduction_check(phi, spec, 1.0, 1.0, f)
        assert rep["contact_fraction"] < 1.0
        worst.append(rep["max_violation"])
    assert max(worst) <= 16 ** -2


def test_sup_bound_chain_power_two():
    spec = OperatorSpec.from_dict({"kind": "ArithmeticMean", "n": 1, "delta": 1.0})
    f = random_density(TorusGrid(1, 32), 8, amp=0.8)
    phi, c = solve_g_equation(spec, f)
    w = WeightSpec.from_dict({"family": "PowerP", "p": 2.0, "n": 1})
    rep = sup_bound_check(None, phi, f, w, 1.0, c)
    assert rep["holds"]
    assert rep["slacks"][-1] > 0
    scaled = sup_bound_check(None, phi, f * 3.0, w, 1.0, c)
    assert scaled["values"][-1] == pytest.approx(3 * rep["values"][-1], rel=1e-9)


def test_sup_bound_for_zero_envelope():
    g = TorusGrid(1, 16)
    z = g.constant(0.0)
    w = WeightSpec.from_dict({"family": "PowerP", "p": 2.0, "n": 1})
    rep = sup_bound_check(z, z, g.constant(1.0), w, 1.0, 1.0)
    assert rep["values"][:3] == [0.0, 0.0, 0.0] and rep["holds"]
    with pytest.raises(NormalizationError):
        sup_bound_check(z, g.constant(-1.0), g.constant(1.0), w, 1.0, 1.0)


def test_save_envelope(tmp_path):
    res = compute_envelope(double_well(G16))
    save_envelope(tmp_path / "env", res)
    back = read_field(tmp_path / "env.mafld")
    np.testing.assert_array_equal(back.values, res.psi.values)
    meta = json.loads((tmp_path / "env.json").read_text())
    assert meta["contact_points"] == int(res.contact.sum()) and meta["n"] == 1
