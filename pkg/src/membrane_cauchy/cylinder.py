"""Cylindrical membranes: the elliptic curvature family, closure, separating values and synthesis.

The directrix curvature is::

    kappa(s) = (alpha1 cn(g s | m) + alpha2) / (beta1 cn(g s | m) + beta2)

with period ``omega = 4 K(m) / g``.  It solves
``(kappa')^2 + (kappa^4 + w2 kappa^2 + kappa + w0)/4 = 0``.  The curves are
traversed clockwise, so the closure index
``Lambda = (1/2pi) int_0^omega kappa`` is negative and a closed curve with
turning number ``mu`` and ``upsilon``-fold symmetry has ``Lambda = -mu/upsilon``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .curves import CurveJet, PlanarCurvatureCurve, PlanePolyline, classify_plane_curve, \
    self_intersections
from .elliptic import complete_K, jacobi_sncndn, quad_adaptive
from .state import InvariantViolation, MaterialParams

__all__ = [
    "ContinuationError",
    "CylinderParams",
    "FamilyConstants",
    "OutOfFamilyError",
    "PhiBranch",
    "PoleError",
    "cauchy_curve",
    "closure_index",
    "describe",
    "directrix_radius",
    "extremal_kappa",
    "extrude_cylinder",
    "family_constants",
    "family_material",
    "kappa",
    "quartic_roots_ok",
    "branch",
    "separating_values",
    "solve_phi",
    "synthesize_curve",
]


class OutOfFamilyError(InvariantViolation):
    """Parameters leave the family (negative radicand or m outside [0, 1))."""


class PoleError(ArithmeticError):
    """The denominator of the curvature formula vanishes."""


class ContinuationError(RuntimeError):
    """Root finding along the closure branch failed."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class CylinderParams:
    varsigma: float
    varrho: float
    eps: int = -1
    upsilon: int = 5
    mu: int = 1
    material: MaterialParams | None = None

    def __post_init__(self):
        if not self.varsigma < 0:
            raise OutOfFamilyError(f"varsigma must be negative, got {self.varsigma}")
        if not -1 < self.varrho < 1:
            raise OutOfFamilyError(f"varrho must lie in (-1, 1), got {self.varrho}")
        if self.eps not in (1, -1):
            raise ValueError("eps must be +1 or -1")
        if self.upsilon < 2 or self.mu < 0 or math.gcd(self.mu, self.upsilon) != 1:
            raise InvariantViolation("need upsilon >= 2, mu >= 0 and gcd(mu, upsilon) = 1")


@dataclass(frozen=True)
class FamilyConstants:
    w0: float
    w2: float
    g: float
    m: float
    A1: float
    A2: float
    B1: float
    B2: float
    alpha1: float
    alpha2: float
    beta1: float
    beta2: float
    omega: float

    @property
    def delta(self):
        return self.alpha1 * self.beta2 - self.alpha2 * self.beta1


def _sqrt(value, label):
    if value < 0:
        if value > -1e-14:
            return 0.0
        raise OutOfFamilyError(f"negative radicand in {label}: {value:.6g}")
    return math.sqrt(value)


def family_constants(params):
    """Constants of the curvature profile for ``(varsigma, varrho)``.

    ``B2`` uses the factor ``1/varsigma`` (the printed formula carries a
    stray ``p``); the choice is confirmed by the first-integral residual.
    """
    vs, vr = float(params.varsigma), float(params.varrho)
    t = (-vs) ** 1.5
    w0 = (1 + 4 * vs**3 * vr**2) * (1 + 4 * vs**3 * (vr**2 - 1)) / (16 * vs**4)
    w2 = -1 / (2 * vs**2) + vs * (2 * vr**2 - 1)
    D = 1 + vs**6 + vs**3 * (4 * vr**2 - 2)
    if D <= 0:
        raise OutOfFamilyError(f"nonpositive discriminant factor in g, m: {D:.6g}")
    g = -D**0.25 / (2 * vs)
    m = 0.5 + (vs**3 * (1 - 2 * vr**2) - 1) / (2 * math.sqrt(D))
    if -1e-14 < m < 0:
        m = 0.0
    if not 0 <= m < 1:
        raise OutOfFamilyError(f"elliptic parameter m = {m:.6g} outside [0, 1)")
    rp = _sqrt(1 - vs**3 + 2 * vr * t, "A1/B1")
    rm = _sqrt(1 - vs**3 - 2 * vr * t, "A2/B2")
    A1 = rp * (1 - 2 * vr * t) / (2 * vs**2)
    A2 = rm * (1 + 2 * vr * t) / (2 * vs**2)
    B1 = rp / vs
    B2 = rm / vs
    a1, a2 = A1 - A2, -(A1 + A2)
    b1, b2 = B1 - B2, -(B1 + B2)
    if abs(b1) >= abs(b2) - 1e-12 * abs(b2):
        raise PoleError("beta1 cn + beta2 vanishes on the period")
    omega = 4.0 * complete_K(m) / g
    return FamilyConstants(w0, w2, g, m, A1, A2, B1, B2, a1, a2, b1, b2, omega)


def family_material(params_or_consts, k=1.0, eps=-1):
    """Helfrich constants (outward normal) realising the family: ``w1 = 1``, ``c0 = 0``."""
    fc = params_or_consts if isinstance(params_or_consts, FamilyConstants) else family_constants(params_or_consts)
    return MaterialParams(k=k, kbar=0.0, c0=0.0, P_pressure=-k / (8.0 * eps), lambda_=-k * fc.w2 / 4.0)


def kappa(params, s, order=0, consts=None):
    """Signed curvature (or its derivative of ``order`` <= 3) at arclength ``s``."""
    fc = consts or family_constants(params)
    s_arr = np.asarray(s, float)
    sn, cn, dn = jacobi_sncndn(fc.g * s_arr, fc.m)
    sn, cn, dn = (np.asarray(v, float) for v in (sn, cn, dn))
    den = fc.beta1 * cn + fc.beta2
    if np.any(np.abs(den) < 1e-12):
        raise PoleError("curvature denominator below 1e-12")
    g, m = fc.g, fc.m
    if order == 0:
        out = (fc.alpha1 * cn + fc.alpha2) / den
    else:
        c1 = -g * sn * dn
        if order == 1:
            out = fc.delta * c1 / den**2
        else:
            c2 = g * g * cn * (m * sn * sn - dn * dn)
            if order == 2:
                out = fc.delta * (c2 * den - 2 * fc.beta1 * c1 * c1) / den**3
            elif order == 3:
                c3 = g**3 * sn * dn * (dn * dn + 4 * m * cn * cn - m * sn * sn)
                b1 = fc.beta1
                out = fc.delta * (c3 * den**2 - 6 * b1 * c1 * c2 * den + 6 * b1**2 * c1**3) / den**4
            else:
                raise ValueError("order must be 0..3")
    return float(out) if np.ndim(out) == 0 else out


def extremal_kappa(params, consts=None):
    """``(kappa(0), kappa(omega/2))``; the extremes of the profile over a period."""
    fc = consts or family_constants(params)
    return fc.A2 / fc.B2, fc.A1 / fc.B1


def closure_index(params, tol=1e-11, consts=None):
    """``Lambda = (1/2pi) int_0^omega kappa`` by adaptive quadrature.

    ``kappa`` is even about 0 and omega/2, so the half period is integrated
    and doubled.
    """
    fc = consts or family_constants(params)
    f = lambda s: kappa(params, s, consts=fc)
    half = quad_adaptive(f, 0.0, 0.5 * fc.omega, tol=tol * math.pi)
    return 2.0 * half / (2.0 * math.pi)


def quartic_roots_ok(params, consts=None):
    """Whether ``t^4 + w2 t^2 + t + w0`` has two distinct real roots and a complex pair.

    Equivalent to a negative discriminant, evaluated numerically.
    """
    fc = consts or family_constants(params)
    a, b, c, d, e = 1.0, 0.0, fc.w2, 1.0, fc.w0
    disc = (256 * a**3 * e**3 - 192 * a**2 * b * d * e**2 - 128 * a**2 * c**2 * e**2
            + 144 * a**2 * c * d**2 * e - 27 * a**2 * d**4 + 144 * a * b**2 * c * e**2
            - 6 * a * b**2 * d**2 * e - 80 * a * b * c**2 * d * e + 18 * a * b * c * d**3
            + 16 * a * c**4 * e - 4 * a * c**3 * d**2 - 27 * b**4 * e**2 + 18 * b**3 * c * d * e
            - 4 * b**3 * d**3 - 4 * b**2 * c**3 * e + b**2 * c**2 * d**2)
    return bool(disc < 0), float(disc)


# ---------------------------------------------------------------------------
# closure branch


def _params(vs, vr, upsilon=5, mu=1):
    return CylinderParams(vs, vr, -1, upsilon, mu)


@dataclass
class PhiBranch:
    """Continuation of ``varsigma = phi(varrho)`` solving ``Lambda = -mu/upsilon``.

    Solved points are cached, so sweeps and bisections reuse earlier work.
    The step in ``varrho`` starts at ``step`` and is halved when a bracket
    cannot be formed.
    """

    upsilon: int
    mu: int = 1
    step: float = 1e-2
    tol: float = 1e-13
    points: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)

    def __post_init__(self):
        if self.upsilon <= self.mu:
            raise ValueError("the branch needs upsilon > mu")
        # at varrho = 0 the profile is constant and Lambda = -1/sqrt(1 - varsigma^3)
        self.points[0.0] = -((self.upsilon**2 / self.mu**2 - 1) ** (1.0 / 3.0))

    @property
    def target(self):
        return -self.mu / self.upsilon

    def residual(self, vs, vr):
        return closure_index(_params(vs, vr, self.upsilon, self.mu)) - self.target

    def _root(self, vr, guess):
        f = lambda vs: self.residual(vs, vr)
        lo, hi = guess * 1.02, guess * 0.98
        flo, fhi = f(lo), f(hi)
        grow = 0
        while flo * fhi > 0:
            grow += 1
            if grow > 30:
                raise ContinuationError(f"no sign change near varsigma = {guess:.6g} at varrho = {vr}",
                                        {"varrho": vr, "guess": guess, "residuals": (flo, fhi)})
            width = (hi - lo) * 0.5
            lo, hi = lo - width, min(hi + width, -1e-6)
            flo, fhi = f(lo), f(hi)
        return brentq(f, lo, hi, xtol=self.tol, rtol=4 * np.finfo(float).eps, maxiter=200)

    def __call__(self, vr, seed=None):
        # the profile at -varrho is the half-period shift of the one at varrho
        vr = abs(float(vr))
        if not vr < 1:
            raise OutOfFamilyError(f"varrho must lie in (-1, 1), got {vr}")
        if vr in self.points:
            return self.points[vr]
        if seed is not None:
            vs = self._root(vr, float(seed))
            self.points[vr] = vs
            return vs
        known = sorted(r for r in self.points if r <= vr)
        r0 = known[-1]
        while r0 < vr:
            h = min(self.step, vr - r0)
            while True:
                r1 = r0 + h
                prev = sorted(r for r in self.points if r <= r0)
                if len(prev) >= 2:
                    ra, rb = prev[-2], prev[-1]
                    guess = self.points[rb] + (self.points[rb] - self.points[ra]) * (r1 - rb) / (rb - ra)
                else:
                    guess = self.points[r0]
                try:
                    self.points[r1] = self._root(r1, guess)
                    break
                except (ContinuationError, OutOfFamilyError, PoleError) as exc:
                    self.diagnostics.append({"varrho": r1, "step": h, "error": str(exc)})
                    h *= 0.5
                    if h < 1e-8:
                        raise ContinuationError(f"continuation broke down before varrho = {vr}",
                                                {"reached": r0, "log": self.diagnostics}) from exc
            r0 = r1
        return self.points[vr]


_BRANCHES = {}


def branch(upsilon, mu=1):
    key = (int(upsilon), int(mu))
    if key not in _BRANCHES:
        _BRANCHES[key] = PhiBranch(*key)
    return _BRANCHES[key]


def solve_phi(upsilon, rho, seed=None, mu=1):
    """``varsigma`` with ``Lambda(varsigma, rho) = -mu/upsilon`` on the branch through ``-(upsilon^2 - 1)^(1/3)``."""
    return branch(upsilon, mu)(rho, seed)


# ---------------------------------------------------------------------------
# synthesis


def _closed_form(fc, kap, dk, theta, corrected=True):
    """Closed-form directrix; ``corrected=False`` follows the printed formula."""
    if corrected:
        lead = 2 * kap**2 + fc.w2
        x = lead * np.cos(theta) - 4 * dk * np.sin(theta)
        y = lead * np.sin(theta) + 4 * dk * np.cos(theta)
    else:
        lead = 2 * kap + fc.w2
        x = lead * np.cos(theta) - 4 * dk * np.sin(theta)
        y = lead * np.sin(theta) - 4 * dk * np.cos(theta)
    return 2 * np.stack([x, y], axis=-1)


def synthesize_curve(params, n=None, periods=None):
    """Directrix as a closed polyline (or an open arc when not closed).

    The emitted path is the spectral quadrature of ``exp(i theta)``,
    rotated and translated onto the closed-form curve.  The printed and
    corrected closed forms are evaluated too and their unit-speed errors are
    reported in ``meta``.
    """
    fc = family_constants(params)
    lam = closure_index(params, consts=fc)
    if periods is None:
        periods = params.upsilon if abs(lam * params.upsilon + params.mu) < 1e-8 else 1
    if n is None:
        n = 256 * periods
    kfun = lambda s: kappa(params, s, consts=fc)
    pc = PlanarCurvatureCurve(kfun, fc.omega)
    L = periods * fc.omega
    closed = periods > 1 or abs(lam - round(lam)) < 1e-9
    s = np.linspace(0.0, L, n, endpoint=not closed)
    zq = pc.position(s)
    kap = kfun(s)
    dk = kappa(params, s, order=1, consts=fc)
    theta = pc.theta(s)
    zc = _closed_form(fc, kap, dk, theta, True)
    # tangent of the closed form is -i exp(i theta): rotate the quadrature path by -pi/2
    z = zc[0] + np.stack([zq[:, 1], -zq[:, 0]], axis=-1)
    fine = np.linspace(0.0, fc.omega, 4097)
    kf, dkf, tf = kfun(fine), kappa(params, fine, order=1, consts=fc), pc.theta(fine)
    dsf = fine[1] - fine[0]
    mid_speed = lambda zz: float(np.max(np.abs(np.linalg.norm(np.diff(zz, axis=0), axis=1) / dsf
                                                 - 1.0)))
    meta = {
        "emitted": "quadrature",
        "closure_index": lam,
        "periods": periods,
        "arclength": L,
        "closure_gap": float(np.linalg.norm(pc.position([L])[0])) if closed else None,
        "corrected_closed_form_max_deviation": float(np.max(np.abs(zc - z))),
        "closed_form_speed_error": mid_speed(_closed_form(fc, kf, dkf, tf, True)),
        "printed_closed_form_speed_error": mid_speed(_closed_form(fc, kf, dkf, tf, False)),
        "quadrature_speed_error": float(np.max(np.abs(np.linalg.norm(pc.tangent(fine), axis=1) - 1))),
    }
    # chord speeds on the fine grid carry an O(ds^2) error of about 1e-6
    meta["printed_closed_form_flagged"] = meta["printed_closed_form_speed_error"] > 1e-3
    return PlanePolyline(z, closed=closed, kappa=kap, meta=meta)


def directrix_radius(poly):
    """Mean distance of the samples from their centroid."""
    c = poly.points.mean(axis=0)
    return float(np.mean(np.linalg.norm(poly.points - c, axis=1)))


def intersection_summary(poly, tol=None, contact_tol=None):
    scale = float(np.ptp(poly.points, axis=0).max())
    tol = tol if tol is not None else 1e-6 * scale
    res = self_intersections(poly, tol=tol, contact_tol=contact_tol)
    pts = res["points"]
    return {
        "transversal": sum(p["transversal"] for p in pts),
        "non_transversal": sum(not p["transversal"] for p in pts),
        "total": len(pts),
        "undersampled": res["undersampled"],
    }


def describe(params, n=None):
    """Synthesised curve plus classification and self-intersection counts."""
    poly = synthesize_curve(params, n)
    cls = classify_plane_curve(poly)
    inter = intersection_summary(poly)
    return poly, {**cls, "self_intersections": inter["transversal"],
                  "non_transversal": inter["non_transversal"], "simple": inter["total"] == 0}


# ---------------------------------------------------------------------------
# separating values


def _count(upsilon, vr, n_per_period=400):
    vs = solve_phi(upsilon, vr)
    p = _params(vs, vr, upsilon)
    poly = synthesize_curve(p, n=n_per_period * upsilon)
    return intersection_summary(poly)["transversal"]


def separating_values(upsilon, scan_step=0.01, rho_tol=1e-6, rho_max=0.99, n_per_period=400):
    """Separating values: loss of strict convexity and jumps of the self-intersection count.

    ``rho_u`` solves ``2 rho (-phi(rho))^(3/2) = 1``, where the curvature
    maximum ``kappa(omega/2)`` reaches zero.  The ``rho_j`` are located by
    a scan of the transversal self-intersection count followed by bisection
    to ``rho_tol``.  On continuation breakdown the values found so far are
    returned with diagnostics.
    """
    out = {"upsilon": upsilon, "rho_u": None, "rho_j": [], "counts": [], "diagnostics": []}
    br = branch(upsilon)
    try:
        F = lambda vr: 2 * vr * (-br(vr)) ** 1.5 - 1.0
        grid = np.arange(scan_step, rho_max, scan_step)
        prev = 0.0
        for vr in grid:
            if F(vr) > 0:
                out["rho_u"] = brentq(F, prev, vr, xtol=1e-12)
                break
            prev = vr
        lo = out["rho_u"] or 0.0
        start = math.ceil(lo / scan_step) * scan_step
        grid = np.round(np.arange(start, rho_max + 1e-12, scan_step), 12)
        counts = [(float(r), _count(upsilon, r, n_per_period)) for r in grid]
        out["counts"] = counts
        for (r0, c0), (r1, c1) in zip(counts, counts[1:]):
            if c1 == c0:
                continue
            a, b = r0, r1
            while b - a > rho_tol:
                mid = 0.5 * (a + b)
                if _count(upsilon, mid, n_per_period) == c0:
                    a = mid
                else:
                    b = mid
            out["rho_j"].append(0.5 * (a + b))
    except (ContinuationError, OutOfFamilyError, PoleError) as exc:
        out["diagnostics"].append(str(exc))
    return out


# ---------------------------------------------------------------------------
# Cauchy data for the cylinder, meshes


def cauchy_curve(params, n_modes=None):
    """Directrix as a :class:`CurveJet` carrying cylinder Cauchy data.

    The Bishop frame with ``a0 = -pi/2`` has normal ``JW`` equal to the
    Frenet normal (pointing into the convex side), so the cylinder is
    recovered with ``h = kappa_F / 2`` and ``hw = 0``, ``kappa_F = |kappa|``
    the Frenet curvature.  With respect to that normal the shape equation is
    the Helfrich one with the signs of ``c0`` and the pressure reversed.
    Requires a strictly convex directrix.
    """
    fc = family_constants(params)
    k0, k_half = extremal_kappa(params, fc)
    if max(k0, k_half) >= 0:
        raise InvariantViolation("directrix is not strictly convex; the cylinder has umbilics")
    kfun = lambda s, order=0: kappa(params, s, order, consts=fc)
    pc = PlanarCurvatureCurve(kfun, fc.omega, n_modes)
    lam = closure_index(params, consts=fc)
    periods = params.upsilon if abs(lam * params.upsilon + params.mu) < 1e-8 else 1
    L = periods * fc.omega

    def position(x):
        xy = pc.position(x)
        return np.column_stack([xy, np.zeros(len(xy))])

    def frenet(x):
        t = pc.tangent(x)
        T = np.column_stack([t, np.zeros(len(t))])
        # clockwise: the Frenet normal is the clockwise rotation of T
        N = np.column_stack([t[:, 1], -t[:, 0], np.zeros(len(t))])
        return T, N, np.cross(T, N)

    def kappa_F(x, order=0):
        return -np.asarray(kfun(np.atleast_1d(x), order), float)

    kappa_F.max_order = 3

    def h(x, order=0):
        return 0.5 * kappa_F(x, order)

    h.max_order = 3
    zero = lambda x, order=0: np.zeros(np.shape(np.atleast_1d(x)))
    zero.max_order = math.inf
    return CurveJet("cylinder_directrix", position, frenet, kappa_F, zero,
                    lambda x0, x: np.zeros(np.shape(np.atleast_1d(x))),
                    (0.0, L), periods > 1, L if periods > 1 else None, h=h, hw=zero,
                    params={"varsigma": params.varsigma, "varrho": params.varrho,
                            "upsilon": params.upsilon})


def extrude_cylinder(base, height, n_levels, eps=None):
    """Triangulated extrusion ``f(x, y) = alpha(x) + eps y e3`` with outward normals.

    ``eps`` defaults to the orientation of ``base`` (sign of its area).
    Per-vertex attributes: principal curvatures ``(-eps kappa, 0)``, ``H``
    and ``K = 0``.
    """
    from .mesh import Mesh

    if not base.closed:
        raise ValueError("extrusion needs a closed base curve")
    P = base.points
    if eps is None:
        area = 0.5 * np.sum(P[:, 0] * np.roll(P[:, 1], -1) - np.roll(P[:, 0], -1) * P[:, 1])
        eps = 1 if area > 0 else -1
    kap = base.kappa if base.kappa is not None else base.discrete_curvature()
    n = len(P)
    ys = np.linspace(0.0, height, n_levels + 1)
    V = np.concatenate([np.column_stack([P, np.full(n, eps * y)]) for y in ys])
    faces = []
    for j in range(n_levels):
        for i in range(n):
            a, b = j * n + i, j * n + (i + 1) % n
            c, d = a + n, b + n
            faces.append((a, b, d))
            faces.append((a, d, c))
    k1 = np.tile(-eps * kap, n_levels + 1)
    attrs = {"k1": k1, "k2": np.zeros_like(k1), "H": 0.5 * k1, "K": np.zeros_like(k1)}
    return Mesh(V, np.array(faces, int), attrs, meta={"eps": eps, "levels": n_levels, "ring": n})
