"""Canonical integral curve built from Cauchy data along a space curve.

Given a unit-speed curve with Bishop frame ``(T, W, JW)``, an initial angle
``a0`` and functions ``h, hw``, the fiber coordinates along the curve are::

    m  = -h - kappa sin s                a  = -kappa sin s,   p = kappa cos s
    c  = a - 2m                          q  = -c' / (c - a)
    a1 = a'                              c2 = 2 hw + p (c - a)
    p1 = p'                              q2 = -(c2' + 2 c2 q) / (c - a)
    r  = q' + (a c + p^2 + q^2) / 2      l  = a'' - r (c - a) - Psi

All x-derivatives come from the jet evaluators, not from differencing.
"""

from __future__ import annotations

import numpy as np

from .curves import bishop_frame
from .state import FIBER_NAMES, FiberRow, InvariantViolation

__all__ = [
    "GENERATOR_NAMES",
    "InadmissibleDataError",
    "admissibility",
    "build_integral_curve",
    "cauchy_identities",
    "corrupt",
    "generator_residuals",
    "verify_integral_curve",
]

GENERATOR_NAMES = ("alpha1", "alpha2", "alpha3", "alpha4", "beta1", "beta2",
                   "gamma1", "gamma2", "delta1", "delta2")


class InadmissibleDataError(InvariantViolation):
    """The Cauchy data violate ``m = -h - kappa sin s > 0``."""

    def __init__(self, message, x):
        super().__init__(message)
        self.x = x


def _angle(curve, x0, a0, x):
    return a0 - np.asarray(curve.tau_integral(x0, x), float)


def admissibility(curve, a0, x0=None, n=512, x=None):
    """Return the function ``m(x) = -h(x) - kappa(x) sin s(x)`` after checking ``m > 0``.

    The check runs on ``n`` uniform samples of J (or on ``x``); the first
    violating sample is named in the error.
    """
    if curve.h is None:
        raise ValueError("curve has no Cauchy function h attached")
    x0 = curve.interval[0] if x0 is None else x0

    def m(xv):
        xv = np.atleast_1d(np.asarray(xv, float))
        s = _angle(curve, x0, a0, xv)
        return -curve.jet("h", xv, 0) - curve.jet("kappa", xv, 0) * np.sin(s)

    xs = curve.sample(n, x0) if x is None else np.atleast_1d(np.asarray(x, float))
    vals = m(xs)
    bad = np.flatnonzero(~(vals > 0))
    if bad.size:
        i = int(bad[0])
        raise InadmissibleDataError(
            f"inadmissible Cauchy data: m = {vals[i]:.6g} <= 0 at x = {xs[i]:.6g}", float(xs[i]))
    return m


def build_integral_curve(curve, x0, a0, model, n=512, x=None):
    """Sample the canonical integral curve; returns a :class:`FiberRow`.

    Samples are uniform over J (period-periodic for closed curves, starting
    at ``x0``), or the explicit grid ``x``.  ``model`` supplies ``Phi``.
    """
    if curve.h is None or curve.hw is None:
        raise ValueError("attach Cauchy functions with curve.with_cauchy(h, hw) first")
    xs = curve.sample(n, x0) if x is None else np.atleast_1d(np.asarray(x, float))
    admissibility(curve, a0, x0=x0, x=xs)

    fr = bishop_frame(curve, x0, a0, x=xs)
    s = fr.s
    sn, cs = np.sin(s), np.cos(s)
    k0, k1, k2 = (curve.jet("kappa", xs, o) for o in (0, 1, 2))
    t0, t1 = (curve.jet("tau", xs, o) for o in (0, 1))
    h0, h1, h2 = (curve.jet("h", xs, o) for o in (0, 1, 2))
    w0, w1 = (curve.jet("hw", xs, o) for o in (0, 1))

    pp = k0 * cs
    pp1 = k1 * cs + k0 * t0 * sn
    aa = -k0 * sn
    aa1 = -k1 * sn + k0 * t0 * cs
    aa2 = (-k2 + k0 * t0**2) * sn + (2 * k1 * t0 + k0 * t1) * cs
    m0, m1 = -h0 + aa, -h1 + aa1
    cc = 2 * h0 - aa
    cc1 = 2 * h1 - aa1
    cc2 = 2 * h2 - aa2
    qq = cc1 / (2 * m0)
    qq1 = (cc2 * m0 - cc1 * m1) / (2 * m0**2)
    c2 = 2 * w0 - 2 * m0 * pp
    c21 = 2 * w1 - 2 * m1 * pp - 2 * m0 * pp1
    q2 = (c21 + 2 * c2 * qq) / (2 * m0)
    r = qq1 + 0.5 * (aa * cc + pp**2 + qq**2)
    fiber = {"p": pp, "q": qq, "a": aa, "c": cc, "p1": pp1, "q2": q2, "r": r, "a1": aa1, "c2": c2}
    fiber["l"] = aa2 - r * (cc - aa) - model.psi(fiber)
    row = FiberRow(curve.position(xs), fr.matrices, fiber)
    row.x = xs
    row.periodic = bool(curve.closed and x is None)
    row.dx = float(xs[1] - xs[0]) if len(xs) > 1 else 0.0
    return row


def generator_residuals(fiber, theta, omega, dfiber, model):
    """Values of the ten generators on a tangent vector.

    ``theta`` = (theta^1, theta^2, theta^3), ``omega[i][j]`` = theta^i_j and
    ``dfiber`` the fiber-coordinate differentials, all as arrays.
    """
    f = fiber
    p, q, a, c = f["p"], f["q"], f["a"], f["c"]
    p1, q2, r, a1, c2, l = (f[k] for k in ("p1", "q2", "r", "a1", "c2", "l"))
    S = a * c + p * p + q * q
    ps = model.psi(f)
    t1, t2, t3 = theta
    cma = c - a
    return {
        "alpha1": t3,
        "alpha2": omega[1][0] - p * t1 - q * t2,
        "alpha3": omega[2][0] - a * t1,
        "alpha4": omega[2][1] - c * t2,
        "beta1": dfiber["p"] - p1 * t1 - (r + S / 2) * t2,
        "beta2": dfiber["q"] - (r - S / 2) * t1 - q2 * t2,
        "gamma1": dfiber["a"] - a1 * t1 + p * cma * t2,
        "gamma2": dfiber["c"] + q * cma * t1 - c2 * t2,
        "delta1": dfiber["a1"] - (l + r * cma + ps) * t1 + (p1 * cma - 2 * a1 * p) * t2,
        "delta2": dfiber["c2"] + (q2 * cma + 2 * c2 * q) * t1 + (l - r * cma - ps) * t2,
    }


def _diff2(f, dx, periodic, axis=0):
    if periodic:
        return (np.roll(f, -1, axis=axis) - np.roll(f, 1, axis=axis)) / (2 * dx)
    return np.gradient(f, dx, axis=axis, edge_order=2)


def verify_integral_curve(row, dx, model, periodic=None, spike_factor=50.0, floor=1e-8):
    """Evaluate all ten generators on the finite-difference tangent of a sampled curve.

    Second-order differences are used, so residuals fall by about 4 when
    ``dx`` halves.  Samples whose residual exceeds ``spike_factor`` times
    the median plus ``floor`` are flagged; neighbouring flags are merged and
    reported at their centre (a corrupted sample shows up at its two
    neighbours through the centred difference).
    """
    periodic = getattr(row, "periodic", False) if periodic is None else periodic
    dP = _diff2(row.P, dx, periodic)
    dA = _diff2(row.A, dx, periodic)
    A = row.A
    theta = np.einsum("nki,nk->in", A, dP)
    om = np.einsum("nki,nkj->ijn", A, dA)
    dfib = {k: _diff2(v, dx, periodic) for k, v in row.fiber.items()}
    res = generator_residuals(row.fiber, theta, om, dfib, model)
    report = {"max": {}, "spikes": {}}
    for name in GENERATOR_NAMES:
        v = np.abs(np.asarray(res[name], float))
        report["max"][name] = float(v.max())
        thresh = spike_factor * np.median(v) + floor
        flagged = np.flatnonzero(v > thresh)
        report["spikes"][name] = _merge_flags(flagged, len(v), periodic)
    report["residuals"] = res
    report["H_minus_h"] = None
    return report


def _merge_flags(idx, n, periodic):
    if idx.size == 0:
        return []
    groups = [[int(idx[0])]]
    for i in idx[1:]:
        if i - groups[-1][-1] <= 2:
            groups[-1].append(int(i))
        else:
            groups.append([int(i)])
    if periodic and len(groups) > 1 and groups[0][0] + n - groups[-1][-1] <= 2:
        last = groups.pop()
        groups[0] = [g - n for g in last] + groups[0]
    return [int(round(np.mean(g))) % n for g in groups]


def cauchy_identities(row, curve):
    """Max errors of ``(a + c)/2 = h`` and ``(c2 - p (c - a))/2 = hw`` along a built curve."""
    f = row.fiber
    h = curve.jet("h", row.x, 0)
    hw = curve.jet("hw", row.x, 0)
    return {
        "H": float(np.max(np.abs(0.5 * (f["a"] + f["c"]) - h))),
        "HW": float(np.max(np.abs(0.5 * (f["c2"] - f["p"] * (f["c"] - f["a"])) - hw))),
    }


def corrupt(row, name, index, delta):
    """Copy of a row with one fiber value perturbed (fault injection for diagnostics)."""
    out = row.copy()
    for attr in ("x", "periodic", "dx"):
        if hasattr(row, attr):
            setattr(out, attr, getattr(row, attr))
    if name not in FIBER_NAMES:
        raise KeyError(name)
    out.fiber[name][index] += delta
    return out
