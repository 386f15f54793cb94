"""Curves: analytic jets, Bishop frames, and plane-polyline classification.

A :class:`CurveJet` is a unit-speed space curve given by evaluators, plus the
two Cauchy functions ``h`` and ``hw``.  Every evaluator has the signature
``f(x, order)`` and returns the ``order``-th derivative in arclength.  The
required orders are kappa: 2, tau: 1, h: 2, hw: 1.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import make_interp_spline
from scipy.spatial import cKDTree
from scipy.special import ellipe, ellipeinc

__all__ = [
    "CurveJet",
    "DegenerateFrenetError",
    "FrameField",
    "JetOrderError",
    "PlanarCurvatureCurve",
    "PlanePolyline",
    "bishop_frame",
    "circle",
    "classify_plane_curve",
    "constant_jet",
    "ellipse",
    "fourier_curve",
    "helix",
    "kappa_multiple",
    "sampled_curve",
    "self_intersections",
]

REQUIRED_ORDERS = {"kappa": 2, "tau": 1, "h": 2, "hw": 1}


class DegenerateFrenetError(ValueError):
    """Frenet curvature vanishes, so the Frenet (and Bishop) frame is undefined."""


class JetOrderError(ValueError):
    """A jet evaluator was asked for a derivative it does not provide."""


def _arr(x):
    return np.atleast_1d(np.asarray(x, float))


def constant_jet(value):
    """Jet of a constant function."""

    def jet(x, order=0):
        x = _arr(x)
        return np.full(x.shape, float(value)) if order == 0 else np.zeros(x.shape)

    jet.max_order = math.inf
    jet.description = f"{value!r}"
    return jet


def polynomial_jet(coeffs):
    """Jet of ``sum coeffs[i] x**i``."""
    poly = np.polynomial.Polynomial(coeffs)

    def jet(x, order=0):
        return poly.deriv(order)(_arr(x)) if order else poly(_arr(x))

    jet.max_order = math.inf
    return jet


@dataclass(frozen=True)
class CurveJet:
    """Unit-speed analytic curve with Frenet apparatus and Cauchy functions.

    ``frenet(x)`` returns ``(T, N, B)`` as (n, 3) arrays.  ``tau_integral(x0, x)``
    returns ``int_{x0}^{x} tau``.  ``interval`` is the parameter interval J;
    for closed curves ``period`` is its length.
    """

    name: str
    position: object
    frenet: object
    kappa: object
    tau: object
    tau_integral: object
    interval: tuple
    closed: bool = False
    period: float | None = None
    h: object = None
    hw: object = None
    params: dict = field(default_factory=dict)

    def with_cauchy(self, h, hw):
        """Copy with Cauchy functions attached; numbers are turned into constant jets."""
        h = constant_jet(h) if np.isscalar(h) else h
        hw = constant_jet(hw) if np.isscalar(hw) else hw
        return replace(self, h=h, hw=hw)

    def jet(self, name, x, order):
        """Evaluate a named jet, checking the order it is allowed to provide."""
        fn = getattr(self, name)
        if fn is None:
            raise JetOrderError(f"curve {self.name!r} has no {name} evaluator")
        limit = getattr(fn, "max_order", REQUIRED_ORDERS.get(name, 0))
        if order > limit:
            raise JetOrderError(f"{name} provides derivatives up to order {limit}, asked for {order}")
        return np.asarray(fn(_arr(x), order), float)

    def sample(self, n, x0=None):
        """Uniform samples of J: endpoint excluded for closed curves."""
        lo, hi = self.interval
        if x0 is not None and self.closed:
            lo, hi = x0, x0 + self.period
        return np.linspace(lo, hi, n, endpoint=not self.closed)


def circle(radius=1.0, center=(0.0, 0.0, 0.0), clockwise=False):
    """Circle in the plane z = const, arclength parameter."""
    R = float(radius)
    if R <= 0:
        raise ValueError("radius must be positive")
    c = np.asarray(center, float)
    sg = -1.0 if clockwise else 1.0

    def position(x):
        t = _arr(x) / R
        return c + R * np.stack([np.cos(t), sg * np.sin(t), 0 * t], axis=-1)

    def frenet(x):
        t = _arr(x) / R
        T = np.stack([-np.sin(t), sg * np.cos(t), 0 * t], axis=-1)
        N = np.stack([-np.cos(t), -sg * np.sin(t), 0 * t], axis=-1)
        B = np.cross(T, N)
        return T, N, B

    kappa = constant_jet(1.0 / R)
    tau = constant_jet(0.0)
    L = 2 * math.pi * R
    return CurveJet("circle", position, frenet, kappa, tau, lambda x0, x: 0.0 * _arr(x),
                    (0.0, L), True, L, params={"radius": R, "clockwise": clockwise})


def helix(radius=1.0, pitch=1.0):
    """Circular helix ``(R cos t, R sin t, b t)`` reparametrized by arclength."""
    R, b = float(radius), float(pitch)
    cc = math.hypot(R, b)
    k0, t0 = R / cc**2, b / cc**2

    def position(x):
        t = _arr(x) / cc
        return np.stack([R * np.cos(t), R * np.sin(t), b * t], axis=-1)

    def frenet(x):
        t = _arr(x) / cc
        T = np.stack([-R * np.sin(t), R * np.cos(t), b + 0 * t], axis=-1) / cc
        N = np.stack([-np.cos(t), -np.sin(t), 0 * t], axis=-1)
        return T, N, np.cross(T, N)

    return CurveJet("helix", position, frenet, constant_jet(k0), constant_jet(t0),
                    lambda x0, x: t0 * (_arr(x) - x0), (0.0, 2 * math.pi * cc), False, None,
                    params={"radius": R, "pitch": b})


def ellipse(a=2.0, b=1.0):
    """Counterclockwise ellipse with semi-axes ``a >= b``, arclength parameter from (a, 0)."""
    a, b = float(a), float(b)
    if not a >= b > 0:
        raise ValueError("need a >= b > 0")
    e2 = 1.0 - (b / a) ** 2
    s_half = a * ellipe(e2)
    L = 4.0 * s_half

    def arclen(t):
        return a * (ellipeinc(t - math.pi / 2, e2) + ellipe(e2))

    def speed2(t):
        return a * a * np.sin(t) ** 2 + b * b * np.cos(t) ** 2

    def t_of_s(s):
        s = _arr(s)
        t = 2 * math.pi * s / L
        for _ in range(50):
            dt = (arclen(t) - s) / np.sqrt(speed2(t))
            t = t - dt
            if np.max(np.abs(dt)) < 1e-15:
                break
        return t

    def position(x):
        t = t_of_s(x)
        return np.stack([a * np.cos(t), b * np.sin(t), 0 * t], axis=-1)

    def frenet(x):
        t = t_of_s(x)
        sp = np.sqrt(speed2(t))
        T = np.stack([-a * np.sin(t), b * np.cos(t), 0 * t], axis=-1) / sp[:, None]
        N = np.stack([-T[:, 1], T[:, 0], 0 * t], axis=-1)
        return T, N, np.cross(T, N)

    def kappa(x, order=0):
        t = t_of_s(x)
        g = speed2(t)
        gt = (a * a - b * b) * np.sin(2 * t)
        gtt = 2 * (a * a - b * b) * np.cos(2 * t)
        k = a * b * g**-1.5
        if order == 0:
            return k
        kt = -1.5 * a * b * g**-2.5 * gt
        sig = np.sqrt(g)
        if order == 1:
            return kt / sig
        if order == 2:
            ktt = a * b * (3.75 * g**-3.5 * gt**2 - 1.5 * g**-2.5 * gtt)
            sig_t = gt / (2 * sig)
            return (ktt - kt * sig_t / sig) / g
        raise JetOrderError("ellipse curvature jet stops at order 2")

    kappa.max_order = 2
    return CurveJet("ellipse", position, frenet, kappa, constant_jet(0.0),
                    lambda x0, x: 0.0 * _arr(x), (0.0, L), True, L, params={"a": a, "b": b})


class PlanarCurvatureCurve:
    """Closed-form evaluation of the plane curve with prescribed periodic signed curvature.

    With ``theta(s) = int_0^s kappa = kbar s + periodic``, the tangent
    ``exp(i theta)`` is ``exp(i kbar s)`` times a periodic function whose
    Fourier coefficients ``E_k`` are computed once.  Then::

        z(s) = sum_k E_k (exp(i lambda_k s) - 1) / (i lambda_k),   lambda_k = kbar + k nu

    exactly, so positions are available at arbitrary ``s`` with spectral
    accuracy.  Modes with ``lambda_k = 0`` contribute ``E_k s``.
    """

    def __init__(self, kappa_fn, period, n_modes=None, tol=1e-15):
        self.kappa_fn = kappa_fn
        self.period = float(period)
        n = n_modes or 256
        while True:
            s = np.arange(n) * self.period / n
            k = np.asarray(kappa_fn(s), float)
            kh = np.fft.fft(k) / n
            self.kbar = kh[0].real
            tail = np.max(np.abs(kh[n // 4: 3 * n // 4 + 1]))
            if tail < tol * max(1.0, np.max(np.abs(kh))) or n >= 1 << 16 or n_modes:
                break
            n *= 2
        self.n = n
        nu = 2 * math.pi / self.period
        self.nu = nu
        freq = np.fft.fftfreq(n, d=1.0 / n)
        self.freq = freq
        # periodic part of theta: integrate kappa - kbar termwise
        ik = 1j * freq * nu
        ik[0] = 1.0
        th_hat = kh / ik
        th_hat[0] = 0.0
        theta_p = np.fft.ifft(th_hat * n).real
        self._theta_hat = th_hat
        self._theta0 = -theta_p[0]  # so that theta(0) = 0
        tilde = theta_p + self._theta0
        self.E = np.fft.fft(np.exp(1j * tilde)) / n
        self.lam = self.kbar + freq * nu

    @property
    def closure_index(self):
        return self.kbar * self.period / (2 * math.pi)

    def theta(self, s):
        s = _arr(s)
        phase = np.exp(1j * np.outer(s, self.freq * self.nu))
        return self.kbar * s + (phase @ self._theta_hat).real + self._theta0

    def tangent(self, s):
        th = self.theta(s)
        return np.stack([np.cos(th), np.sin(th)], axis=-1)

    def position(self, s):
        s = _arr(s)
        lam = self.lam
        small = np.abs(lam) < 1e-12
        safe = np.where(small, 1.0, lam)
        ph = np.exp(1j * np.outer(s, lam))
        terms = np.where(small[None, :], s[:, None], (ph - 1.0) / (1j * safe[None, :]))
        z = terms @ self.E
        return np.stack([z.real, z.imag], axis=-1)


def fourier_curve(kappa0, cos_coeffs=(), sin_coeffs=(), length=2 * math.pi, tau_cos=(), tau0=0.0,
                  tau_sin=(), rtol=1e-12):
    """Curve with curvature and torsion given by finite Fourier series in arclength.

    ``kappa(s) = kappa0 + sum_n (a_n cos(n nu s) + b_n sin(n nu s))`` with
    ``nu = 2 pi / length``, and likewise for ``tau``.  Without torsion the
    curve is planar and positions come from :class:`PlanarCurvatureCurve`;
    otherwise the Frenet equations are integrated once with a dense
    high-order solver.  Curvature must stay positive.
    """
    nu = 2 * math.pi / length
    kc, ks = np.asarray(cos_coeffs, float), np.asarray(sin_coeffs, float)
    tc, ts = np.asarray(tau_cos, float), np.asarray(tau_sin, float)

    def series(c0, cc, ss):
        def f(x, order=0):
            x = _arr(x)
            out = np.full(x.shape, float(c0)) if order == 0 else np.zeros(x.shape)
            for n, cn in enumerate(cc, start=1):
                w = n * nu
                out = out + cn * w**order * np.cos(w * x + order * math.pi / 2)
            for n, sn in enumerate(ss, start=1):
                w = n * nu
                out = out + sn * w**order * np.sin(w * x + order * math.pi / 2)
            return out

        f.max_order = math.inf
        return f

    kappa = series(kappa0, kc, ks)
    tau = series(tau0, tc, ts)

    def tau_int(x0, x):
        F = lambda y: tau0 * y + sum(cn / (n * nu) * np.sin(n * nu * y) for n, cn in enumerate(tc, 1)) \
            - sum(sn / (n * nu) * np.cos(n * nu * y) for n, sn in enumerate(ts, 1))
        return F(_arr(x)) - F(x0)

    probe = kappa(np.linspace(0, length, 4096))
    if np.min(probe) <= 0:
        raise DegenerateFrenetError("Fourier curvature must stay positive")
    params = {"kappa0": kappa0, "cos": kc.tolist(), "sin": ks.tolist(), "length": length,
              "tau0": tau0, "tau_cos": tc.tolist(), "tau_sin": ts.tolist()}

    if not (tau0 or tc.any() or ts.any()):
        pc = PlanarCurvatureCurve(kappa, length)

        def position(x):
            xy = pc.position(x)
            return np.column_stack([xy, np.zeros(len(xy))])

        def frenet(x):
            t2 = pc.tangent(x)
            T = np.column_stack([t2, np.zeros(len(t2))])
            N = np.column_stack([-t2[:, 1], t2[:, 0], np.zeros(len(t2))])
            return T, N, np.cross(T, N)

        closed = abs(pc.closure_index - round(pc.closure_index)) < 1e-12 and \
            np.linalg.norm(pc.position([length])[0]) < 1e-9
        return CurveJet("fourier", position, frenet, kappa, tau, tau_int, (0.0, length),
                        closed, length if closed else None, params=params)

    def rhs(s, y):
        T, N, B = y[3:6], y[6:9], y[9:12]
        k, t = kappa(s)[0], tau(s)[0]
        return np.concatenate([T, k * N, -k * T + t * B, -t * N])

    y0 = np.concatenate([np.zeros(3), np.eye(3).ravel()])
    sol = solve_ivp(rhs, (0.0, length), y0, method="DOP853", rtol=rtol, atol=rtol, dense_output=True)

    def _eval(x):
        x = _arr(x)
        if np.any((x < -1e-12) | (x > length + 1e-12)):
            raise ValueError(f"x outside the integrated interval [0, {length}]")
        return sol.sol(x).T

    def position(x):
        return _eval(x)[:, 0:3]

    def frenet(x):
        y = _eval(x)
        T, N = y[:, 3:6], y[:, 6:9]
        T = T / np.linalg.norm(T, axis=1, keepdims=True)
        N = N - np.sum(N * T, axis=1, keepdims=True) * T
        N = N / np.linalg.norm(N, axis=1, keepdims=True)
        return T, N, np.cross(T, N)

    return CurveJet("fourier", position, frenet, kappa, tau, tau_int, (0.0, length), False, None,
                    params=params)


def sampled_curve(points, closed=False, oversample=4, name="sampled"):
    """Curve from dense samples, with quintic-spline jets.

    The samples are interpolated by a quintic spline in chord length, the
    arclength is integrated (Gauss-Legendre per sub-interval) and the curve is
    resampled uniformly in arclength and interpolated again, so ``x`` is an
    arclength parameter up to the interpolation error.  ``kappa`` and ``tau``
    are splines through their values on the arclength grid.  A closed curve
    must not repeat its first sample.
    """
    P = np.asarray(points, float)
    if P.ndim != 2 or P.shape[1] != 3 or len(P) < 8:
        raise ValueError("need an (n, 3) array with at least 8 samples")
    if closed:
        P = np.vstack([P, P[:1]])
    bc = "periodic" if closed else None
    t = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(P, axis=0), axis=1))])
    if np.any(np.diff(t) <= 0):
        raise ValueError("consecutive samples must be distinct")
    chord = make_interp_spline(t, P, k=5, bc_type=bc)
    dchord = chord.derivative()

    # arclength table on a refined grid
    tf = np.linspace(0.0, t[-1], oversample * (len(t) - 1) + 1)
    gx, gw = np.polynomial.legendre.leggauss(6)
    mid, half = 0.5 * (tf[1:] + tf[:-1]), 0.5 * np.diff(tf)
    nodes = mid[:, None] + half[:, None] * gx[None, :]
    pieces = np.sum(gw * np.linalg.norm(dchord(nodes), axis=-1), axis=1) * half
    sf = np.concatenate([[0.0], np.cumsum(pieces)])
    L = float(sf[-1])
    m = len(tf) - 1 if closed else len(tf)
    s = np.linspace(0.0, L, m, endpoint=not closed)
    ts = np.interp(s, sf, tf)
    for _ in range(3):
        k = np.clip(np.searchsorted(sf, s) - 1, 0, len(pieces) - 1)
        # Newton on s(t) = target using the local speed; the residual uses Gauss-Legendre from the table node
        a = tf[k]
        h2 = 0.5 * (ts - a)
        part = np.sum(gw * np.linalg.norm(dchord((0.5 * (ts + a))[:, None] + h2[:, None] * gx[None, :]),
                                          axis=-1), axis=1) * h2
        ts = ts - (sf[k] + part - s) / np.linalg.norm(dchord(ts), axis=-1)
    Q = chord(ts)
    if closed:
        s, Q = np.append(s, L), np.vstack([Q, Q[:1]])
    arc = make_interp_spline(s, Q, k=5, bc_type=bc)
    d1, d2, d3 = (arc.derivative(j)(s) for j in (1, 2, 3))
    cr = np.cross(d1, d2)
    ncr = np.linalg.norm(cr, axis=1)
    if np.min(ncr) <= 1e-10 * np.max(ncr):
        raise DegenerateFrenetError("sampled curve has vanishing curvature")
    kap = ncr / np.linalg.norm(d1, axis=1) ** 3
    tor = np.einsum("ij,ij->i", cr, d3) / ncr**2
    if closed:
        kap[-1], tor[-1] = kap[0], tor[0]
    kspl = make_interp_spline(s, kap, k=5, bc_type=bc)
    tspl = make_interp_spline(s, tor, k=5, bc_type=bc)
    tanti = tspl.antiderivative()
    wrap = (lambda x: np.mod(_arr(x), L)) if closed else _arr
    period_turn = float(tanti(L) - tanti(0.0))

    def tau_int(x0, x):
        x0, x = float(x0), _arr(x)
        if not closed:
            return tanti(x) - tanti(x0)
        total = lambda v: np.floor_divide(v, L) * period_turn + tanti(np.mod(v, L))
        return total(x) - total(np.array([x0]))[0]

    def position(x):
        return arc(wrap(x))

    def frenet(x):
        xs = wrap(x)
        r1, r2 = arc(xs, 1), arc(xs, 2)
        T = r1 / np.linalg.norm(r1, axis=1, keepdims=True)
        B = np.cross(r1, r2)
        B /= np.linalg.norm(B, axis=1, keepdims=True)
        return T, np.cross(B, T), B

    def spline_jet(spl, top):
        def jet(x, order=0):
            return spl(wrap(x), order)

        jet.max_order = top
        return jet

    return CurveJet(name, position, frenet, spline_jet(kspl, 3), spline_jet(tspl, 2), tau_int, (0.0, L),
                    closed, L if closed else None, params={"samples": len(points), "length": L})


def kappa_multiple(curve, factor):
    """Jet ``factor * kappa`` of a curve (e.g. ``h = kappa / 2`` for cylinder data)."""

    def jet(x, order=0):
        return factor * np.asarray(curve.kappa(_arr(x), order), float)

    jet.max_order = getattr(curve.kappa, "max_order", 2)
    return jet


# ---------------------------------------------------------------------------
# Bishop frames


@dataclass
class FrameField:
    """Relatively parallel frame ``(T, W, JW)`` sampled along a curve."""

    x: np.ndarray
    T: np.ndarray
    W: np.ndarray
    JW: np.ndarray
    s: np.ndarray
    p: np.ndarray
    a: np.ndarray
    kappa: np.ndarray

    @property
    def matrices(self):
        """Frames as (n, 3, 3) arrays with columns T, W, JW."""
        return np.stack([self.T, self.W, self.JW], axis=-1)

    def gram_error(self):
        G = self.matrices
        return float(np.max(np.abs(np.swapaxes(G, 1, 2) @ G - np.eye(3))))


def bishop_frame(curve, x0, a0, x=None, n=512):
    """Bishop frame with ``s(x) = -int_{x0}^x tau + a0``, ``W = cos s N + sin s B``.

    ``p = kappa cos s`` and ``a = -kappa sin s`` are the components of
    ``T'`` along ``W`` and ``JW``.
    """
    xs = curve.sample(n, x0) if x is None else _arr(x)
    kap = curve.jet("kappa", xs, 0)
    if np.any(kap <= 0):
        i = int(np.argmax(kap <= 0))
        raise DegenerateFrenetError(f"kappa = {kap[i]:.3g} at x = {xs[i]:.6g}")
    s = a0 - np.asarray(curve.tau_integral(x0, xs), float)
    T, N, B = curve.frenet(xs)
    cs, sn = np.cos(s)[:, None], np.sin(s)[:, None]
    W = cs * N + sn * B
    JW = -sn * N + cs * B
    return FrameField(xs, T, W, JW, s, kap * np.cos(s), -kap * np.sin(s), kap)


# ---------------------------------------------------------------------------
# plane polylines


@dataclass
class PlanePolyline:
    """Ordered plane samples; closed curves do not repeat the first point."""

    points: np.ndarray
    closed: bool = True
    kappa: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.asarray(self.points, float).reshape(-1, 2)
        if self.closed and len(self.points) > 1 and np.allclose(self.points[0], self.points[-1], atol=0, rtol=0):
            self.points = self.points[:-1]
            if self.kappa is not None:
                self.kappa = np.asarray(self.kappa, float)[:-1]
        if self.kappa is not None:
            self.kappa = np.asarray(self.kappa, float)
            if self.kappa.shape != (len(self.points),):
                raise ValueError("kappa must have one value per point")
        seg = np.diff(self._cycle(), axis=0)
        if np.any(np.all(seg == 0, axis=1)):
            raise ValueError("consecutive points must be distinct")

    def __len__(self):
        return len(self.points)

    def _cycle(self):
        return np.vstack([self.points, self.points[:1]]) if self.closed else self.points

    def segments(self):
        P = self._cycle()
        return P[:-1], P[1:]

    def discrete_curvature(self):
        """Turning angle per unit length at each vertex (closed curves)."""
        P = self.points
        d_prev = P - np.roll(P, 1, axis=0)
        d_next = np.roll(P, -1, axis=0) - P
        ang = np.arctan2(_cross2(d_prev, d_next), np.sum(d_prev * d_next, axis=1))
        ds = 0.5 * (np.linalg.norm(d_prev, axis=1) + np.linalg.norm(d_next, axis=1))
        return ang / ds

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "kappa"] if self.kappa is not None else ["x", "y"])
            for i, (x, y) in enumerate(self.points):
                row = [repr(float(x)), repr(float(y))]
                if self.kappa is not None:
                    row.append(repr(float(self.kappa[i])))
                w.writerow(row)

    @classmethod
    def from_csv(cls, path, closed=True):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], np.array(rows[1:], float)
        kappa = body[:, 2] if "kappa" in header else None
        return cls(body[:, :2], closed, kappa)

    def to_svg(self, path, size=400, stroke="black"):
        P = self.points
        lo, hi = P.min(axis=0), P.max(axis=0)
        span = float(np.max(hi - lo)) or 1.0
        pad = 0.05 * span
        scale = size / (span + 2 * pad)
        Q = (P - lo + pad) * scale
        Q[:, 1] = size - Q[:, 1]
        pts = " ".join(f"{x:.4f},{y:.4f}" for x, y in Q)
        tag = "polygon" if self.closed else "polyline"
        with open(path, "w") as fh:
            fh.write(f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
                     f'viewBox="0 0 {size} {size}">\n')
            fh.write(f'  <{tag} points="{pts}" fill="none" stroke="{stroke}" stroke-width="1"/>\n')
            fh.write("</svg>\n")


def classify_plane_curve(poly, band=1e-9):
    """Turning number, inflection count and convexity class of a closed polyline.

    Signed curvature samples are used when present, otherwise the discrete
    turning curvature.  Values with ``|kappa| <= band * max|kappa|`` are
    treated as zero: they do not count as sign changes, and a curve whose
    curvature only touches zero is ``convex_degenerate``.
    """
    if not poly.closed:
        raise ValueError("turning number needs a closed polyline")
    P = poly.points
    d = np.diff(np.vstack([P, P[:1]]), axis=0)
    d_next = np.roll(d, -1, axis=0)
    turn = np.arctan2(_cross2(d, d_next), np.sum(d * d_next, axis=1))
    turning = int(round(turn.sum() / (2 * math.pi)))
    kap = poly.kappa if poly.kappa is not None else poly.discrete_curvature()
    cut = band * np.max(np.abs(kap))
    signs = np.sign(np.where(np.abs(kap) <= cut, 0.0, kap))
    nz = signs[signs != 0]
    if nz.size == 0:
        changes = 0
    else:
        changes = int(np.sum(nz != np.roll(nz, 1)))
    has_zero = bool(np.any(signs == 0))
    if changes == 0 and abs(turning) == 1:
        convexity = "convex_degenerate" if has_zero else "strict"
    else:
        convexity = "nonconvex"
    return {"turning_number": turning, "inflection_count": changes, "convexity": convexity}


def self_intersections(poly, tol=1e-9, angle_threshold=1e-3, contact_tol=None):
    """Crossings between non-adjacent segments of a polyline.

    Returns ``{"points": [...], "undersampled": bool}`` where each point is a
    dict with ``point``, ``transversal``, ``angle`` and ``kind``.  Crossings
    within ``tol`` of each other are merged; a merged cluster of several
    crossings is a near-tangency and is reported as one non-transversal
    point.  With ``contact_tol`` set, near-contacts (non-adjacent segments
    closer than ``contact_tol`` without crossing) are reported as
    non-transversal ``contact`` points too.
    """
    A, B = poly.segments()
    n = len(A)
    D = B - A
    seglen = np.linalg.norm(D, axis=1)
    mid = 0.5 * (A + B)
    reach = float(seglen.max())
    radius = reach + (contact_tol or 0.0)
    pairs = cKDTree(mid).query_pairs(r=radius, output_type="ndarray")
    if pairs.size:
        i, j = pairs[:, 0], pairs[:, 1]
        gap = np.abs(i - j)
        if poly.closed:
            gap = np.minimum(gap, n - gap)
        keep = gap > 1
        i, j = i[keep], j[keep]
    else:
        i = j = np.array([], int)

    d1, d2 = D[i], D[j]
    den = _cross2(d1, d2)
    rel = A[j] - A[i]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = _cross2(rel, d2) / den
        u = _cross2(rel, d1) / den
    hit = (den != 0) & (t >= 0) & (t < 1) & (u >= 0) & (u < 1)
    pts = A[i[hit]] + t[hit, None] * d1[hit]
    cosang = np.abs(np.sum(d1[hit] * d2[hit], axis=1)) / (seglen[i[hit]] * seglen[j[hit]])
    angles = np.arccos(np.clip(cosang, -1.0, 1.0))

    found = []
    used = np.zeros(len(pts), bool)
    for k in range(len(pts)):
        if used[k]:
            continue
        near = np.linalg.norm(pts - pts[k], axis=1) <= tol
        near &= ~used
        used |= near
        members = np.flatnonzero(near)
        ang = float(angles[members].min())
        distinct = _distinct_crossings(i[hit][members], j[hit][members], pts[members], n, 1e-9 * reach)
        transversal = distinct == 1 and ang >= angle_threshold
        found.append({"point": pts[members].mean(axis=0), "angle": ang,
                      "transversal": bool(transversal),
                      "kind": "crossing" if transversal else "tangency"})

    if contact_tol:
        crossing_pairs = set(zip(i[hit].tolist(), j[hit].tolist()))
        cand = []
        for a_, b_ in zip(i.tolist(), j.tolist()):
            if (a_, b_) in crossing_pairs:
                continue
            dist, where = _segment_distance(A[a_], B[a_], A[b_], B[b_])
            if dist <= contact_tol:
                cand.append(where)
        for where in cand:
            if all(np.linalg.norm(where - f["point"]) > max(tol, contact_tol) * 10 for f in found):
                found.append({"point": where, "angle": 0.0, "transversal": False, "kind": "contact"})
    kap = poly.kappa if poly.kappa is not None else poly.discrete_curvature()
    feature = 1.0 / np.max(np.abs(kap)) if np.max(np.abs(kap)) > 0 else math.inf
    undersampled = bool(reach > 0.5 * feature)
    if undersampled:
        warnings.warn("polyline segments are long compared with the curvature radius", stacklevel=2)
    return {"points": found, "undersampled": undersampled}


def _cross2(u, v):
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def _distinct_crossings(ii, jj, pts, n, eps):
    """Number of crossings in a cluster after merging duplicate hits.

    A crossing through a shared vertex is found by up to four adjacent
    segment pairs at the same point; those count once.  Hits of adjacent
    pairs at different points are separate crossings.
    """
    near = lambda x, y: min(abs(x - y), n - abs(x - y)) <= 1
    adjacent = lambda u, v: (near(u[0], v[0]) and near(u[1], v[1])) or (near(u[0], v[1]) and near(u[1], v[0]))
    hits = [((min(a, b), max(a, b)), p) for a, b, p in zip(ii.tolist(), jj.tolist(), pts)]
    groups = []
    for pr, p in hits:
        for g in groups:
            if any(adjacent(pr, q) and np.linalg.norm(p - w) <= eps for q, w in g):
                g.append((pr, p))
                break
        else:
            groups.append([(pr, p)])
    return len(groups)


def _segment_distance(p0, p1, q0, q1):
    """Distance between two segments and the midpoint of the closest pair."""
    best = (math.inf, None)
    for P, Q0, Q1 in ((p0, q0, q1), (p1, q0, q1)):
        d = Q1 - Q0
        t = np.clip(np.dot(P - Q0, d) / np.dot(d, d), 0, 1)
        c = Q0 + t * d
        dist = float(np.linalg.norm(P - c))
        if dist < best[0]:
            best = (dist, 0.5 * (P + c))
    for Q, P0, P1 in ((q0, p0, p1), (q1, p0, p1)):
        d = P1 - P0
        t = np.clip(np.dot(Q - P0, d) / np.dot(d, d), 0, 1)
        c = P0 + t * d
        dist = float(np.linalg.norm(Q - c))
        if dist < best[0]:
            best = (dist, 0.5 * (Q + c))
    return best
