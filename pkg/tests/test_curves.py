import math

import numpy as np
import pytest

from membrane_cauchy.curves import (DegenerateFrenetError, JetOrderError, PlanarCurvatureCurve, PlanePolyline,
                                    bishop_frame, circle, classify_plane_curve, constant_jet, ellipse,
                                    fourier_curve, helix, kappa_multiple, polynomial_jet, self_intersections)


def _speed_error(curve, n=400):
    h = 1e-5
    x = np.linspace(curve.interval[0] + h, curve.interval[1] - h, n)
    d = (curve.position(x + h) - curve.position(x - h)) / (2 * h)
    return np.abs(np.linalg.norm(d, axis=1) - 1).max()


@pytest.mark.parametrize("curve", [circle(2.0), helix(1.0, 0.5), ellipse(2.0, 1.0),
                                   fourier_curve(1.0, (0.2,), length=2 * math.pi),
                                   fourier_curve(1.0, (0.1,), tau0=0.3, length=3.0)],
                         ids=["circle", "helix", "ellipse", "fourier", "fourier3d"])
def test_unit_speed_and_frenet(curve):
    assert _speed_error(curve) < 1e-8
    x = np.linspace(curve.interval[0], curve.interval[1], 50)
    T, N, B = curve.frenet(x)
    F = np.stack([T, N, B], axis=-1)
    np.testing.assert_allclose(np.swapaxes(F, 1, 2) @ F, np.broadcast_to(np.eye(3), F.shape), atol=1e-9)
    np.testing.assert_allclose(np.linalg.det(F), 1.0, atol=1e-9)


def test_kappa_tau_against_finite_differences():
    c = ellipse(1.5, 1.0)
    x = np.linspace(0.1, 5.0, 30)
    h = 1e-4
    acc = (c.position(x + h) - 2 * c.position(x) + c.position(x - h)) / h**2
    np.testing.assert_allclose(np.linalg.norm(acc, axis=1), c.kappa(x), atol=1e-6)
    dk = (c.kappa(x + h) - c.kappa(x - h)) / (2 * h)
    np.testing.assert_allclose(c.kappa(x, 1), dk, atol=1e-6)


def test_helix_curvature_torsion():
    c = helix(2.0, 1.0)
    assert c.kappa(np.array([0.3]))[0] == pytest.approx(2 / 5)
    assert c.tau(np.array([0.3]))[0] == pytest.approx(1 / 5)


def test_jet_order_guard():
    c = ellipse(2.0, 1.0)
    with pytest.raises(JetOrderError):
        c.jet("kappa", 0.0, 3)
    assert c.jet("kappa", 0.0, 2).shape == (1,)


def test_constant_and_polynomial_jets():
    j = constant_jet(2.5)
    assert j(np.zeros(3), 0).tolist() == [2.5] * 3 and j(np.zeros(3), 1).tolist() == [0] * 3
    pj = polynomial_jet([1, 0, 3])
    np.testing.assert_allclose(pj(np.array([2.0]), 1), [12.0])


def test_bishop_circle():
    fr = bishop_frame(circle(1.0), 0.0, -math.pi / 2, n=64)
    np.testing.assert_allclose(fr.s, -math.pi / 2)
    T, N, B = circle(1.0).frenet(fr.x)
    np.testing.assert_allclose(fr.W, -B, atol=1e-15)
    np.testing.assert_allclose(fr.p, 0.0, atol=1e-15)
    np.testing.assert_allclose(fr.a, 1.0)


def test_bishop_helix_rotation_rate():
    c = helix(1.0, 0.5)
    x = np.linspace(0, 3, 7)
    fr = bishop_frame(c, 0.0, 0.2, x=x)
    np.testing.assert_allclose(fr.s, 0.2 - c.tau(x)[0] * x)


def test_bishop_invariants_and_frame_ode():
    c = fourier_curve(1.2, (0.3,), (0.1,), tau0=0.4, tau_cos=(0.2,), length=4.0)
    errs = []
    for n in (200, 400):
        x = np.linspace(0.5, 3.5, n)
        fr = bishop_frame(c, 0.5, 0.3, x=x)
        assert fr.gram_error() < 1e-9
        np.testing.assert_allclose(np.linalg.det(fr.matrices), 1.0, atol=1e-9)
        np.testing.assert_allclose(fr.p**2 + fr.a**2, fr.kappa**2, rtol=1e-9)
        dW = np.gradient(fr.W, x, axis=0)[1:-1]
        errs.append(np.abs(dW + fr.p[1:-1, None] * fr.T[1:-1]).max())
        # relative parallelism: W' has no JW component
        assert np.abs(np.sum(dW * fr.JW[1:-1], axis=1)).max() < 1e-3
    assert np.log2(errs[0] / errs[1]) > 1.8


def test_degenerate_frenet():
    with pytest.raises(DegenerateFrenetError):
        fourier_curve(0.1, (0.5,))


def test_planar_reconstruction_closes():
    pc = PlanarCurvatureCurve(lambda s, order=0: 1.0 + 0.3 * np.cos(3 * s) if order == 0 else None, 2 * np.pi)
    assert pc.closure_index == pytest.approx(1.0)
    assert np.linalg.norm(pc.position([2 * np.pi])[0]) < 1e-10


def _unit_circle(n=256, cw=False):
    t = np.linspace(0, 2 * np.pi, n, endpoint=False)
    sg = -1 if cw else 1
    return PlanePolyline(np.column_stack([np.cos(t), sg * np.sin(t)]), True, np.full(n, sg * 1.0))


def _figure_eight(n=400):
    t = np.linspace(0, 2 * np.pi, n, endpoint=False)
    x, y = np.sin(t), np.sin(t) * np.cos(t)
    dx, dy = np.cos(t), np.cos(2 * t)
    ddx, ddy = -np.sin(t), -2 * np.sin(2 * t)
    k = (dx * ddy - dy * ddx) / (dx**2 + dy**2) ** 1.5
    return PlanePolyline(np.column_stack([x, y]), True, k)


def test_classify_circle_both_orientations():
    assert classify_plane_curve(_unit_circle()) == {"turning_number": 1, "inflection_count": 0, "convexity": "strict"}
    assert classify_plane_curve(_unit_circle(cw=True))["turning_number"] == -1


def test_classify_figure_eight():
    cls = classify_plane_curve(_figure_eight())
    assert cls["inflection_count"] >= 2 and cls["convexity"] == "nonconvex"
    assert cls["turning_number"] == 0


def test_classify_needs_closed():
    with pytest.raises(ValueError):
        classify_plane_curve(PlanePolyline([[0, 0], [1, 0], [1, 1]], closed=False))


def test_turning_number_stable_under_doubling():
    assert classify_plane_curve(_figure_eight(400)) == classify_plane_curve(_figure_eight(800))


def test_self_intersections_circle_and_eight():
    assert self_intersections(_unit_circle(), 1e-9)["points"] == []
    for n in (400, 800):
        pts = self_intersections(_figure_eight(n), 1e-9)["points"]
        assert len(pts) == 1 and pts[0]["transversal"]
        np.testing.assert_allclose(pts[0]["point"], [0, 0], atol=1e-12)


pytestmark = pytest.mark.filterwarnings("ignore:polyline segments are long")


def test_grazing_crossing_is_non_transversal():
    poly = PlanePolyline([[-1, 0], [1, 0], [1, 1e-4], [-1, -1e-4]])
    pts = self_intersections(poly, 1e-9)["points"]
    assert len(pts) == 1 and not pts[0]["transversal"] and pts[0]["angle"] < 1e-3


def test_steep_crossing_is_transversal():
    poly = PlanePolyline([[-1, 0], [1, 0], [1, 1], [-1, -1]])
    pts = self_intersections(poly, 1e-9)["points"]
    assert len(pts) == 1 and pts[0]["transversal"]


def test_near_contact_reported_with_contact_tol():
    # two lobes that come within 1e-7 of each other without crossing
    poly = PlanePolyline([[0, 0], [1, 1e-7], [2, 0], [2, 1], [1, 2e-7], [0, 1]])
    assert self_intersections(poly, 1e-9)["points"] == []
    pts = self_intersections(poly, 1e-9, contact_tol=1e-6)["points"]
    assert pts and all(p["kind"] == "contact" and not p["transversal"] for p in pts)


def test_undersampling_flag():
    t = np.linspace(0, 2 * np.pi, 8, endpoint=False)
    poly = PlanePolyline(np.column_stack([np.cos(t) + 0.9 * np.cos(3 * t), np.sin(t) - 0.9 * np.sin(3 * t)]))
    with pytest.warns(UserWarning, match="long compared"):
        assert self_intersections(poly, 1e-9)["undersampled"]


def test_polyline_io_roundtrip(tmp_path):
    poly = _unit_circle(32)
    poly.to_csv(tmp_path / "c.csv")
    back = PlanePolyline.from_csv(tmp_path / "c.csv")
    np.testing.assert_allclose(back.points, poly.points, rtol=1e-15)
    np.testing.assert_allclose(back.kappa, poly.kappa)
    poly.to_svg(tmp_path / "c.svg")
    assert (tmp_path / "c.svg").read_text().startswith("<svg")


def test_polyline_rejects_repeated_points():
    with pytest.raises(ValueError):
        PlanePolyline([[0, 0], [0, 0], [1, 1]])


def test_kappa_multiple():
    c = ellipse(2.0, 1.0)
    h = kappa_multiple(c, 0.5)
    x = np.array([0.3, 1.0])
    np.testing.assert_allclose(h(x, 1), 0.5 * c.kappa(x, 1))


# --- curves from dense samples ---------------------------------------------

def test_sampled_closed_curve_matches_ellipse():
    from membrane_cauchy.curves import sampled_curve
    el = ellipse(1.5, 1.0)
    c = sampled_curve(el.position(el.sample(400)), closed=True)
    assert c.closed and c.period == pytest.approx(el.period, abs=1e-10)
    xs = np.linspace(0, c.period, 777, endpoint=False)
    np.testing.assert_allclose(c.kappa(xs), el.kappa(xs), atol=1e-6)
    np.testing.assert_allclose(c.kappa(xs, 1), el.kappa(xs, 1), atol=1e-4)
    np.testing.assert_allclose(c.tau(xs), 0.0, atol=1e-12)
    d = (c.position(xs + 1e-5) - c.position(xs - 1e-5)) / 2e-5
    np.testing.assert_allclose(np.linalg.norm(d, axis=1), 1.0, atol=1e-8)
    # periodic evaluation outside J
    np.testing.assert_allclose(c.position(xs + c.period), c.position(xs), atol=1e-12)


def test_sampled_open_helix():
    from membrane_cauchy.curves import sampled_curve
    h = helix(1.0, 0.5)
    c = sampled_curve(h.position(np.linspace(0, 12, 600)))
    xs = np.linspace(1, c.interval[1] - 1, 300)
    np.testing.assert_allclose(c.kappa(xs), h.kappa(xs), atol=1e-8)
    np.testing.assert_allclose(c.tau(xs), h.tau(xs), atol=1e-6)
    np.testing.assert_allclose(c.tau_integral(0.0, xs), h.tau_integral(0.0, xs), atol=1e-8)
    T, N, B = c.frenet(xs)
    T0, N0, B0 = h.frenet(xs)
    np.testing.assert_allclose(T, T0, atol=1e-8)
    np.testing.assert_allclose(N, N0, atol=1e-6)


def test_sampled_curve_errors():
    from membrane_cauchy.curves import sampled_curve
    with pytest.raises(ValueError):
        sampled_curve(np.zeros((5, 3)))
    line = np.column_stack([np.linspace(0, 1, 20), np.zeros(20), np.zeros(20)])
    with pytest.raises(DegenerateFrenetError):
        sampled_curve(line)
    dup = np.repeat(helix().position(np.linspace(0, 3, 10)), 2, axis=0)
    with pytest.raises(ValueError):
        sampled_curve(dup)
