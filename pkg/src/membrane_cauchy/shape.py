"""Membrane shape equation: right-hand sides, residuals, energy and the cylinder ODE chain.

The shape equation is written ``Delta H = Phi(a, c)`` with ``H = (a + c)/2``
and ``K = a c``.  For the Helfrich functional::

    Phi = -2 H (H^2 - K) + ((2 lambda + k c0^2) H + 2 k c0 K - P) / (2k)

and the Willmore case is ``lambda = c0 = P = 0``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import exterior
from .numerics import fd_derivative, row_derivative, spectral_derivative
from .state import InvariantViolation, MaterialParams

__all__ = [
    "ShapeModel",
    "helfrich_energy",
    "laplace_H_residual",
    "ode_residuals",
    "phi_helfrich",
    "phi_willmore",
    "psi",
]


def phi_helfrich(a, c, mp):
    h = 0.5 * (a + c)
    kk = a * c
    return -2.0 * h * (h * h - kk) + (
        (2.0 * mp.lambda_ + mp.k * mp.c0**2) * h + 2.0 * mp.k * mp.c0 * kk - mp.P_pressure
    ) / (2.0 * mp.k)


def phi_willmore(a, c):
    h = 0.5 * (a + c)
    return -2.0 * h * (h * h - a * c)


def psi(p, q, a, c, a1, c2, phi):
    """``Psi = Phi(a, c) + p c2 - q a1``; ``phi`` is a callable of ``(a, c)``."""
    return phi(a, c) + p * c2 - q * a1


@dataclass(frozen=True)
class ShapeModel:
    """A choice of right-hand side together with its material constants.

    Symbolic coefficients ``B1, B2, D1, D2`` are derived once (cached by the
    exterior engine) and compiled for numeric use.
    """

    name: str
    material: MaterialParams

    def __post_init__(self):
        if self.name not in ("willmore", "helfrich"):
            raise ValueError(f"unknown shape model {self.name!r}")

    @classmethod
    def willmore(cls):
        return cls("willmore", MaterialParams())

    @classmethod
    def helfrich(cls, material):
        return cls("helfrich", material)

    @property
    def phi_expr(self):
        return exterior.phi_willmore_expr() if self.name == "willmore" else exterior.phi_helfrich_expr()

    @property
    def coefficient_exprs(self):
        return exterior.curvature_coefficients(self.phi_expr)

    def phi(self, a, c):
        if self.name == "willmore":
            return phi_willmore(a, c)
        return phi_helfrich(a, c, self.material)

    def psi(self, fiber):
        return psi(fiber["p"], fiber["q"], fiber["a"], fiber["c"], fiber["a1"], fiber["c2"], self.phi)

    def coefficients(self, fiber):
        """Numeric ``B1, B2, D1, D2`` on (arrays of) fiber values."""
        env = dict(self.material.as_mapping())
        env.update(fiber)
        return {name: np.broadcast_to(expr.evaluate(env), np.shape(fiber["a"]))
                for name, expr in self.coefficient_exprs.items()}

    def outward(self):
        """Model for the opposite normal: ``Phi(a, c) -> -Phi(-a, -c)``.

        For Helfrich this flips the signs of ``c0`` and the pressure.
        """
        if self.name == "willmore":
            return self
        m = self.material
        return ShapeModel("helfrich", MaterialParams(m.k, m.kbar, -m.c0, -m.P_pressure, m.lambda_))


# ---------------------------------------------------------------------------
# patch residuals


def _y_derivative(field, patch):
    if patch.n_rows >= 5:
        return fd_derivative(field, patch.dy, accuracy=4, axis=0)
    return np.gradient(field, patch.dy, axis=0, edge_order=2)


def _scalar_derivatives(field, patch):
    """(d/dx, d/dy) of a gridded field (any trailing axes); y by 4th-order differences."""
    return row_derivative(field, patch.dx, patch.periodic, axis=1), _y_derivative(field, patch)


_vector_derivatives = _scalar_derivatives


def laplace_H_residual(patch, model):
    """Residual ``Delta H - Phi(a, c)`` on a patch by two independent paths.

    ``state``: from the node state, ``Delta H = (a11 + c22)/2 - r(c - a) + q a1 - p c2``
    with ``a11 = l + r(c-a) + Psi`` and ``c22 = -l + r(c-a) + Psi``.

    ``fd``: Laplace-Beltrami of ``H = (a+c)/2`` computed by finite
    differences on the metric induced by the node positions; defined on rows
    ``2 .. n_rows-3`` (NaN elsewhere).
    """
    if np.any(patch.xi1 <= 0):
        raise InvariantViolation("degenerate coordinates: xi1 <= 0")
    f = patch.fiber
    if np.any(f["a"] - f["c"] <= 0):
        raise InvariantViolation("umbilic nodes: a - c must be positive")
    ps = model.psi(f)
    cma = f["c"] - f["a"]
    a11 = f["l"] + f["r"] * cma + ps
    c22 = -f["l"] + f["r"] * cma + ps
    lap_state = 0.5 * (a11 + c22) - f["r"] * cma + f["q"] * f["a1"] - f["p"] * f["c2"]
    phi = model.phi(f["a"], f["c"])
    out = {"state": lap_state - phi, "fd": np.full(patch.shape, np.nan)}

    if patch.n_rows >= 5:
        px, py = _vector_derivatives(patch.P, patch)
        E = np.einsum("...k,...k->...", px, px)
        F = np.einsum("...k,...k->...", px, py)
        G = np.einsum("...k,...k->...", py, py)
        det = E * G - F * F
        sq = np.sqrt(det)
        H = 0.5 * (f["a"] + f["c"])
        Hx, Hy = _scalar_derivatives(H, patch)
        fx = sq * (G * Hx - F * Hy) / det
        fy = sq * (-F * Hx + E * Hy) / det
        lap = (_scalar_derivatives(fx, patch)[0] + _scalar_derivatives(fy, patch)[1]) / sq
        res = lap - phi
        res[:2] = np.nan
        res[-2:] = np.nan
        out["fd"] = res
    return out


def _integrate_grid(values, patch):
    """Integrate a gridded density over the patch (trapezoid in y, periodic sum or trapezoid in x)."""
    if patch.periodic:
        along_x = values.sum(axis=1) * patch.dx
    else:
        along_x = np.trapezoid(values, dx=patch.dx, axis=1)
    if values.shape[0] == 1:
        return 0.0
    return float(np.trapezoid(along_x, dx=patch.dy))


def helfrich_energy(patch, mp):
    """Bending energy ``(k/2) int (2H + c0)^2 dA + kbar int K dA + lambda * Area``.

    The pressure-volume term needs a closed surface, so for an open patch
    it is omitted and ``volume_applicable`` is False.
    """
    px, py = _vector_derivatives(patch.P, patch)
    E = np.einsum("...k,...k->...", px, px)
    F = np.einsum("...k,...k->...", px, py)
    G = np.einsum("...k,...k->...", py, py)
    dA = np.sqrt(E * G - F * F)
    a, c = patch.fiber["a"], patch.fiber["c"]
    H = 0.5 * (a + c)
    bending = 0.5 * mp.k * _integrate_grid((2.0 * H + mp.c0) ** 2 * dA, patch)
    gaussian = mp.kbar * _integrate_grid(a * c * dA, patch)
    area = _integrate_grid(dA, patch)
    return {
        "bending": bending,
        "gaussian": gaussian,
        "area": area,
        "tension": mp.lambda_ * area,
        "volume": None,
        "volume_applicable": False,
        "total": bending + gaussian + mp.lambda_ * area,
    }


# ---------------------------------------------------------------------------
# cylinder ODE chain


def ode_coefficients(mp, eps):
    """``(v, w1, w2)`` of the curvature ODE for material ``mp`` and orientation ``eps``."""
    v = mp.tension_ratio
    return v, -8.0 * eps * mp.P_pressure / mp.k, -2.0 * (2.0 * mp.lambda_ + mp.k * mp.c0**2) / mp.k


def ode_residuals(kappa_samples, mp, eps, w0, period=None, ds=None, derivatives=None):
    """Residuals of the curvature equations for a cylinder directrix.

    ``kappa_samples`` are uniform samples of the signed curvature.  With
    ``period`` they must cover one period with the endpoint excluded and
    derivatives are spectral; otherwise ``ds`` gives the spacing and 6th-order
    differences are used (with a warning).  ``derivatives`` may supply
    ``(k', k'', k''')`` directly.

    Returns max-abs residuals for ``eq1`` (``k'' + 2 eps Phi(-eps k, 0)``),
    ``eq2``, ``eq3`` and ``mkdv``, plus the spread of the recovered ``w0``.
    """
    if eps not in (1, -1):
        raise ValueError("eps must be +1 or -1")
    kap = np.asarray(kappa_samples, float)
    if derivatives is not None:
        k1, k2, k3 = (np.asarray(d, float) for d in derivatives)
    elif period is not None:
        k1, k2, k3 = (spectral_derivative(kap, period, order=o) for o in (1, 2, 3))
    else:
        if ds is None:
            raise ValueError("need period or ds")
        warnings.warn("no period given: using finite differences for the curvature derivatives", stacklevel=2)
        k1, k2, k3 = (fd_derivative(kap, ds, order=o) for o in (1, 2, 3))
    v, w1, w2 = ode_coefficients(mp, eps)
    eq1 = k2 + 2.0 * eps * phi_helfrich(-eps * kap, 0.0, mp)
    eq2 = k2 + 0.5 * kap**3 - v * kap - eps * mp.P_pressure / mp.k
    poly = kap**4 + w2 * kap**2 + w1 * kap
    eq3 = k1**2 + 0.25 * (poly + w0)
    mkdv = k3 + 1.5 * kap**2 * k1 - v * k1
    w0_est = -4.0 * k1**2 - poly
    return {
        "eq1": float(np.max(np.abs(eq1))),
        "eq2": float(np.max(np.abs(eq2))),
        "eq3": float(np.max(np.abs(eq3))),
        "mkdv": float(np.max(np.abs(mkdv))),
        "w0_spread": float(np.ptp(w0_est)),
        "w0_mean": float(np.mean(w0_est)),
    }
