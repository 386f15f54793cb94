import math
import warnings

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from membrane_cauchy import cylinder
from membrane_cauchy.shape import ShapeModel, helfrich_energy, laplace_H_residual, ode_residuals, phi_helfrich, \
    phi_willmore, psi
from membrane_cauchy.state import InvariantViolation, MaterialParams
from patches import CYLINDER_MATERIAL, CYLINDER_MODEL, WILLMORE, cylinder_patch, ellipse_patch

finite = st.floats(-3, 3, allow_nan=False)


def test_phi_examples():
    assert phi_willmore(1.0, 0.0) == pytest.approx(-0.25)
    assert phi_helfrich(1.0, 0.0, MaterialParams()) == pytest.approx(-0.25)
    assert phi_helfrich(1.0, 0.0, CYLINDER_MATERIAL) == pytest.approx(0.0, abs=1e-15)


@given(t=finite)
def test_phi_vanishes_at_umbilics(t):
    assert phi_willmore(t, t) == pytest.approx(0.0, abs=1e-12)


@given(a=finite, c=finite)
def test_phi_symmetric_and_willmore_limit(a, c):
    mp = MaterialParams(k=1.7, c0=0.4, P_pressure=-0.3, lambda_=0.2)
    assert phi_helfrich(a, c, mp) == pytest.approx(phi_helfrich(c, a, mp), rel=1e-12, abs=1e-12)
    assert phi_helfrich(a, c, MaterialParams(k=2.5)) == pytest.approx(phi_willmore(a, c), rel=1e-12, abs=1e-12)


def test_phi_matches_symbolic_expression():
    mp = MaterialParams(k=1.3, c0=0.2, P_pressure=0.1, lambda_=-0.4)
    model = ShapeModel.helfrich(mp)
    rng = np.random.default_rng(5)
    aa, cc = rng.uniform(-2, 2, (2, 100))
    env = dict(mp.as_mapping(), a=aa, c=cc)
    np.testing.assert_allclose(model.phi_expr.evaluate(env), model.phi(aa, cc), rtol=1e-12, atol=1e-12)
    # Willmore against an independent H, K transcription
    a_, c_ = sp.symbols("a c")
    H, K = (a_ + c_) / 2, a_ * c_
    ref = sp.lambdify((a_, c_), -2 * H * (H**2 - K), "numpy")
    np.testing.assert_allclose(ShapeModel.willmore().phi(aa, cc), ref(aa, cc), rtol=1e-12, atol=1e-12)


def test_psi_examples():
    zero = lambda a, c: 0.0
    assert psi(0, 0, 1.3, 0.2, 5.0, 7.0, phi_willmore) == pytest.approx(phi_willmore(1.3, 0.2))
    assert psi(1.0, 1.0, 0.0, 0.0, 3.0, 2.0, zero) == pytest.approx(-1.0)


def test_outward_flip():
    mp = MaterialParams(k=1.0, c0=0.3, P_pressure=0.2)
    out = ShapeModel.helfrich(mp).outward().material
    assert (out.c0, out.P_pressure) == (-0.3, -0.2)
    assert WILLMORE.outward() is WILLMORE


def test_laplace_state_path_is_identically_zero():
    p = ellipse_patch(64, 1 / 32, 5)
    np.testing.assert_allclose(laplace_H_residual(p, WILLMORE)["state"], 0.0, atol=1e-13)


def test_laplace_fd_path_on_cylinder():
    r = laplace_H_residual(cylinder_patch(), CYLINDER_MODEL)["fd"]
    assert np.nanmax(np.abs(r)) <= 1e-10
    assert np.isnan(r[:2]).all() and np.isnan(r[-2:]).all()


def test_laplace_fd_path_converges():
    errs = []
    for nx, dy, rows in [(128, 1 / 64, 9), (256, 1 / 128, 17)]:
        errs.append(np.nanmax(np.abs(laplace_H_residual(ellipse_patch(nx, dy, rows), WILLMORE)["fd"])))
    assert math.log2(errs[0] / errs[1]) >= 1.9


def test_laplace_rejects_umbilic_and_degenerate_patches():
    p = cylinder_patch(nx=16, n_rows=5)
    p.fiber["c"] = p.fiber["a"].copy()
    with pytest.raises(InvariantViolation):
        laplace_H_residual(p, CYLINDER_MODEL)
    p = cylinder_patch(nx=16, n_rows=5)
    p.xi1[1, 3] = 0.0
    with pytest.raises(InvariantViolation):
        laplace_H_residual(p, CYLINDER_MODEL)


def test_energy_of_cylinder():
    p = cylinder_patch(nx=64, dy=1 / 32, n_rows=33)
    L = 1.0
    e = helfrich_energy(p, CYLINDER_MATERIAL)
    assert e["bending"] == pytest.approx(math.pi * L, rel=1e-12)
    assert e["area"] == pytest.approx(2 * math.pi * L, rel=1e-12)
    assert helfrich_energy(p, MaterialParams(kbar=3.0))["gaussian"] == pytest.approx(0.0, abs=1e-14)
    assert e["volume_applicable"] is False


def test_energy_c0_delta():
    p = ellipse_patch(64, 1 / 32, 9)
    e0 = helfrich_energy(p, MaterialParams(k=2.0, c0=0.3))["bending"]
    e1 = helfrich_energy(p, MaterialParams(k=2.0, c0=0.6))["bending"]
    k, c0 = 2.0, 0.3
    area = helfrich_energy(p, MaterialParams())["area"]
    # (k/2) int [(2H + c0)^2 - (2H - c0)^2] dA = 4 k c0 int H dA
    int_H = (e0 - helfrich_energy(p, MaterialParams(k=k, c0=-c0))["bending"]) / (4 * k * c0)
    # (k/2) int [(2H + 2 c0)^2 - (2H + c0)^2] dA = (k/2) int (4 H c0 + 3 c0^2) dA
    assert e1 - e0 == pytest.approx(0.5 * k * (4 * c0 * int_H + 3 * c0**2 * area), rel=1e-12)
    H = 0.5 * (p.fiber["a"] + p.fiber["c"])
    assert int_H == pytest.approx(H.mean() * area, rel=0.05)


def test_ode_constant_solution():
    mp0 = MaterialParams(k=1.5, lambda_=0.3, c0=0.2)
    eps, k0 = -1, 0.7
    v = mp0.tension_ratio
    P = eps * mp0.k * (0.5 * k0**3 - v * k0)
    mp = MaterialParams(k=1.5, lambda_=0.3, c0=0.2, P_pressure=P)
    r = ode_residuals(np.full(32, k0), mp, eps, 0.0, period=2 * math.pi)
    assert r["eq2"] <= 1e-14
    assert r["eq1"] <= 1e-14
    assert r["mkdv"] <= 1e-14


@pytest.mark.parametrize("upsilon,rho", [(2, 0.05), (3, 0.1), (7, 0.2)])
def test_ode_chain_on_family(upsilon, rho):
    vs = cylinder.solve_phi(upsilon, rho)
    params = cylinder.CylinderParams(vs, rho, upsilon=upsilon)
    fc = cylinder.family_constants(params)
    mp = cylinder.family_material(fc)
    s = np.linspace(0, fc.omega, 256, endpoint=False)
    k = cylinder.kappa(params, s, consts=fc)
    ders = [cylinder.kappa(params, s, o, consts=fc) for o in (1, 2, 3)]
    r = ode_residuals(k, mp, -1, fc.w0, derivatives=ders)
    assert r["eq3"] <= 1e-8 and r["eq2"] <= 1e-7 and r["mkdv"] <= 1e-6
    assert r["w0_spread"] <= 1e-6
    assert r["w0_mean"] == pytest.approx(fc.w0, abs=1e-8)
    spec = ode_residuals(k, mp, -1, fc.w0, period=fc.omega)
    assert spec["eq3"] <= 1e-8 and spec["eq2"] <= 1e-7 and spec["mkdv"] <= 1e-6


def test_ode_fd_fallback_warns():
    s = np.linspace(0, 2 * math.pi, 400, endpoint=False)
    with pytest.warns(UserWarning, match="finite differences"):
        ode_residuals(np.cos(s), MaterialParams(), -1, 0.0, ds=s[1] - s[0])
    with pytest.raises(ValueError):
        ode_residuals(np.cos(s), MaterialParams(), 0, 0.0, period=1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ode_residuals(np.cos(s), MaterialParams(), -1, 0.0, period=2 * math.pi)


@settings(max_examples=30, deadline=None)
@given(vals=st.lists(finite, min_size=6, max_size=6))
def test_psi_of_model_matches_function(vals):
    p, q, a, c, a1, c2 = vals
    mp = MaterialParams(k=1.1, c0=0.1, P_pressure=0.2, lambda_=0.05)
    model = ShapeModel.helfrich(mp)
    fiber = dict(p=p, q=q, a=a, c=c, a1=a1, c2=c2)
    expect = psi(p, q, a, c, a1, c2, lambda x, y: phi_helfrich(x, y, mp))
    assert model.psi(fiber) == pytest.approx(expect, rel=1e-12, abs=1e-12)
