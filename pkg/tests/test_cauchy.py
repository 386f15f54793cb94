import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from membrane_cauchy.cauchy import (GENERATOR_NAMES, InadmissibleDataError, admissibility, build_integral_curve,
                                    cauchy_identities, corrupt, verify_integral_curve)
from membrane_cauchy.curves import JetOrderError, bishop_frame, circle, ellipse, fourier_curve, helix, \
    kappa_multiple
from membrane_cauchy.shape import ShapeModel
from membrane_cauchy.state import FIBER_NAMES, FiberPoint, FiberRow, InvariantViolation, MaterialParams

W = ShapeModel.willmore()


def _order(curve, a0, model, ns=(128, 256)):
    reps = []
    for n in ns:
        row = build_integral_curve(curve, curve.interval[0], a0, model, n=n)
        reps.append(verify_integral_curve(row, row.dx, model)["max"])
    return reps


def test_admissibility_circle():
    m = admissibility(circle(1.0).with_cauchy(0.5, 0.0), -math.pi / 2)
    np.testing.assert_allclose(m(np.linspace(0, 6, 7)), 0.5)


def test_inadmissible_circle():
    with pytest.raises(InadmissibleDataError) as info:
        admissibility(circle(1.0).with_cauchy(2.0, 0.0), -math.pi / 2)
    assert info.value.x == 0.0


def test_helix_admissibility_names_first_violation():
    c = helix(1.0, 1.0).with_cauchy(0.0, 0.0)
    with pytest.raises(InadmissibleDataError) as info:
        admissibility(c, 0.0, x=np.linspace(0, 20, 2001))
    # s(x) = -x/2, so m = -kappa sin s > 0 exactly on (0, 2 pi); sin s = 0 at x = 0 already
    assert info.value.x == 0.0
    with pytest.raises(InadmissibleDataError) as info:
        admissibility(c, 0.0, x=np.linspace(0.01, 20, 2000))
    assert info.value.x == pytest.approx(2 * math.pi, abs=0.011)


def test_missing_cauchy_functions():
    with pytest.raises(ValueError):
        build_integral_curve(circle(1.0), 0.0, -math.pi / 2, W)


def test_circle_willmore_constant_data():
    row = build_integral_curve(circle(1.0).with_cauchy(0.5, 0.0), 0.0, -math.pi / 2, W, n=64)
    expect = dict(p=0, q=0, a=1, c=0, p1=0, q2=0, r=0, a1=0, c2=0)
    for k, v in expect.items():
        np.testing.assert_allclose(row.fiber[k], v, atol=1e-15)
    # l = a'' - r (c - a) - Psi = -Phi_W(1, 0) = +1/4 for the Willmore right-hand side
    np.testing.assert_allclose(row.fiber["l"], 0.25, atol=1e-15)
    rep = verify_integral_curve(row, row.dx, W)
    assert max(rep["max"].values()) <= 1e-12


def test_planar_cylindrical_strip():
    c = fourier_curve(1.0, (0.2,), length=2 * math.pi)
    c = c.with_cauchy(kappa_multiple(c, 0.5), 0.0)
    row = build_integral_curve(c, 0.0, -math.pi / 2, W, n=64)
    np.testing.assert_allclose(row.fiber["p"], 0, atol=1e-15)
    np.testing.assert_allclose(row.fiber["c2"], 0, atol=1e-15)


def test_frame_is_bishop_frame_and_positions_on_curve():
    c = ellipse(1.5, 1.0).with_cauchy(lambda x, o=0: 0.5 * ellipse(1.5, 1.0).kappa(x, o), 0.0)
    row = build_integral_curve(c, 0.0, -math.pi / 2, W, n=32)
    fr = bishop_frame(c, 0.0, -math.pi / 2, x=row.x)
    np.testing.assert_allclose(row.A, fr.matrices)
    np.testing.assert_allclose(row.P, c.position(row.x))
    np.testing.assert_allclose(row.fiber["a"] - row.fiber["c"], 2 * admissibility(c, -math.pi / 2)(row.x),
                               rtol=1e-12)


def test_identities_and_generator_convergence_ellipse():
    el = ellipse(1.5, 1.0)
    c = el.with_cauchy(kappa_multiple(el, 0.5), 0.0)
    coarse, fine = _order(c, -math.pi / 2, W)
    for name in GENERATOR_NAMES:
        if coarse[name] > 1e-12:
            assert coarse[name] / fine[name] >= 3.8, name


def test_helix_data_convergence_helfrich():
    model = ShapeModel.helfrich(MaterialParams(k=1.0, c0=0.3, P_pressure=0.2, lambda_=0.1))
    c = helix(1.0, 0.5)
    hw = lambda x, o=0: 0.1 * np.sin(np.asarray(x) + o * math.pi / 2)
    c = c.with_cauchy(-0.5, hw)
    row = build_integral_curve(c, 0.0, 0.3, model, n=64)
    ids = cauchy_identities(row, c)
    assert ids["H"] <= 1e-12 and ids["HW"] <= 1e-12
    coarse, fine = _order(c, 0.3, model)
    for name in GENERATOR_NAMES:
        if coarse[name] > 1e-12:
            assert math.log2(coarse[name] / fine[name]) >= 1.9, name


def test_corrupted_c2_is_flagged_at_its_sample():
    row = build_integral_curve(circle(1.0).with_cauchy(0.5, 0.0), 0.0, -math.pi / 2, W, n=64)
    bad = corrupt(row, "c2", 10, 0.1)
    rep = verify_integral_curve(bad, bad.dx, W)
    assert rep["spikes"]["delta2"] == [10]
    assert abs(row.fiber["c2"][10]) < 1e-15  # original untouched
    with pytest.raises(KeyError):
        corrupt(row, "zz", 0, 1.0)


def test_jet_order_requirement():
    el = ellipse(1.5, 1.0)

    def h(x, order=0):
        return 0.5 * el.kappa(x, order)

    h.max_order = 1
    with pytest.raises(JetOrderError):
        build_integral_curve(el.with_cauchy(h, 0.0), 0.0, -math.pi / 2, W, n=16)


@settings(max_examples=25, deadline=None)
@given(frac=st.floats(-2.0, 0.95), hw=st.floats(-1, 1), radius=st.floats(0.5, 3.0))
def test_circle_identities_property(frac, hw, radius):
    # admissible iff h < 1/radius
    h = frac / radius
    c = circle(radius).with_cauchy(h, hw)
    row = build_integral_curve(c, 0.0, -math.pi / 2, W, n=16)
    f = row.fiber
    assert np.all(f["a"] - f["c"] > 0)
    np.testing.assert_allclose(0.5 * (f["a"] + f["c"]), h, atol=1e-12)
    np.testing.assert_allclose(0.5 * (f["c2"] - f["p"] * (f["c"] - f["a"])), hw, atol=1e-12)


def test_fiber_point_invariants():
    row = build_integral_curve(circle(1.0).with_cauchy(0.5, 0.0), 0.0, -math.pi / 2, W, n=8)
    pt = row[3]
    assert isinstance(pt, FiberPoint)
    pt.check()
    with pytest.raises(InvariantViolation):
        pt.replace(c=2.0).check()
    back = FiberRow.from_points(row.points())
    for k in FIBER_NAMES:
        np.testing.assert_array_equal(back.fiber[k], row.fiber[k])


def test_material_params_validation():
    with pytest.raises(InvariantViolation):
        MaterialParams(k=0.0)
    assert MaterialParams(k=2.0, c0=1.0, lambda_=0.5).tension_ratio == pytest.approx((1 + 2) / 4)
