"""Strip marching: propagate the principal-frame state off the integral curve along X2.

A row holds the position ``P``, frame ``A``, the ten fiber coordinates and
the components ``(xi1, xi2)`` of the coordinate field ``d/dx`` in the
principal frame (``d/dx = xi1 X1 + xi2 X2``).  Rows are advanced in ``y`` by
the flow of ``X2``; the derivatives of ``(p1, q2, r, l)`` come from the four
polar equations::

    P1_2 - R_1 = B1                 R_2 - Q2_1 = B2
    L_2 + (c-a)(R_2 + P1_1) = D1    (c-a)(Q2_2 + R_1) - L_1 = D2

with ``G_1 = (G_x - xi2 G_2) / xi1`` eliminated, which leaves a 4x4 linear
system per node (triangular on the initial row, where ``xi2 = 0``).
"""

from __future__ import annotations

import numpy as np

from .numerics import fd_derivative, row_derivative
from .shape import laplace_H_residual
from .state import FIBER_NAMES, FiberRow, InvariantViolation, PrincipalPatch

__all__ = [
    "UmbilicCollapseError",
    "constraint_residuals",
    "march",
    "polar_derivatives",
    "validate_patch",
]

SCHEMES = ("euler", "rk2", "rk4")


class UmbilicCollapseError(InvariantViolation):
    """``a - c`` fell below the umbilic threshold; the polar equations degenerate."""


def _row_state(row, xi=None):
    if isinstance(row, FiberRow):
        state = {"P": row.P, "A": row.A, **row.fiber}
    elif isinstance(row, dict):
        state = dict(row)
    else:
        state = _row_state(FiberRow.from_points(row), xi)
    n = len(state["P"])
    if xi is not None:
        state["xi1"], state["xi2"] = (np.broadcast_to(np.asarray(v, float), (n,)).copy() for v in xi)
    state.setdefault("xi1", np.ones(n))
    state.setdefault("xi2", np.zeros(n))
    return {k: np.asarray(v, float) for k, v in state.items()}


def polar_derivatives(row, model, dx, periodic=False, xi=None, umbilic_tol=1e-6):
    """y-derivatives (along ``X2``) of every state field of a row.

    ``row`` is a :class:`FiberRow`, a sequence of fiber points or a state
    dict; ``xi`` defaults to ``(1, 0)``.  Raises :class:`UmbilicCollapseError`
    when ``a - c < umbilic_tol`` anywhere.
    """
    s = _row_state(row, xi)
    p, q, a, c = s["p"], s["q"], s["a"], s["c"]
    p1, q2, r, a1, c2, l = (s[k] for k in ("p1", "q2", "r", "a1", "c2", "l"))
    gap = a - c
    if np.any(~(gap >= umbilic_tol)):
        i = int(np.argmin(np.where(np.isfinite(gap), gap, -np.inf)))
        raise UmbilicCollapseError(f"umbilic collapse: a - c = {gap[i]:.3g} at node {i}")
    d = -gap
    S = a * c + p * p + q * q
    fib = {k: s[k] for k in FIBER_NAMES}
    psi = model.psi(fib)
    co = model.coefficients(fib)

    u = 1.0 / s["xi1"]
    v = s["xi2"] * u
    Rx, Q2x, P1x, Lx = (row_derivative(g, dx, periodic) for g in (r, q2, p1, l))
    n = len(p)
    M = np.zeros((n, 4, 4))
    # unknowns (P1_2, Q2_2, R_2, L_2)
    M[:, 0, 0], M[:, 0, 2] = 1.0, v
    M[:, 1, 1], M[:, 1, 2] = v, 1.0
    M[:, 2, 0], M[:, 2, 2], M[:, 2, 3] = -d * v, d, 1.0
    M[:, 3, 1], M[:, 3, 2], M[:, 3, 3] = d, -d * v, v
    rhs = np.stack([
        co["B1"] + u * Rx,
        co["B2"] + u * Q2x,
        co["D1"] - d * u * P1x,
        co["D2"] + u * Lx - d * u * Rx,
    ], axis=-1)
    sol = np.linalg.solve(M, rhs[..., None])[..., 0]

    A = s["A"]
    A1, A2, A3 = A[..., 0], A[..., 1], A[..., 2]
    dA = np.stack([q[:, None] * A2, -q[:, None] * A1 + c[:, None] * A3, -c[:, None] * A2], axis=-1)
    return {
        "P": A2.copy(),
        "A": dA,
        "p": r + 0.5 * S,
        "q": q2,
        "a": -p * d,
        "c": c2,
        "a1": 2 * a1 * p - d * p1,
        "c2": -l + r * d + psi,
        "p1": sol[:, 0],
        "q2": sol[:, 1],
        "r": sol[:, 2],
        "l": sol[:, 3],
        "xi1": -p * s["xi1"],
        "xi2": -q * s["xi1"],
    }


def constraint_residuals(state, dx, periodic):
    """Row-wise constraints preserved by the flow, from one row alone.

    With ``G_1 = (G_x - xi2 G_2)/xi1`` and ``G_2`` read off the state:
    Gauss ``q_1 = r - S/2``, Codazzi ``c_1 = -q(c-a)`` and the prolongation
    identities ``a_1 = a1``, ``p_1 = p1``.  All vanish on the initial row.
    """
    s = state
    p, q, a, c = s["p"], s["q"], s["a"], s["c"]
    d = c - a
    S = a * c + p * p + q * q
    y_derivs = {"q": s["q2"], "c": s["c2"], "a": -p * d, "p": s["r"] + 0.5 * S}
    d1 = {k: (row_derivative(s[k], dx, periodic) - s["xi2"] * g2) / s["xi1"] for k, g2 in y_derivs.items()}
    return {
        "gauss": d1["q"] - (s["r"] - 0.5 * S),
        "codazzi": d1["c"] + q * d,
        "a1": d1["a"] - s["a1"],
        "p1": d1["p"] - s["p1"],
    }


def _axpy(state, k, h):
    return {key: state[key] + h * k[key] for key in state}


def _step(state, model, dx, periodic, dy, scheme, umbilic_tol):
    f = lambda st: polar_derivatives(st, model, dx, periodic, umbilic_tol=umbilic_tol)
    if scheme == "euler":
        return _axpy(state, f(state), dy)
    if scheme == "rk2":
        k1 = f(state)
        k2 = f(_axpy(state, k1, 0.5 * dy))
        return _axpy(state, k2, dy)
    k1 = f(state)
    k2 = f(_axpy(state, k1, 0.5 * dy))
    k3 = f(_axpy(state, k2, 0.5 * dy))
    k4 = f(_axpy(state, k3, dy))
    return {key: state[key] + dy / 6.0 * (k1[key] + 2 * k2[key] + 2 * k3[key] + k4[key]) for key in state}


def _reorthonormalize(A):
    U, _, Vt = np.linalg.svd(A)
    return U @ Vt


def march(row, dy, n_rows, model, scheme="rk4", dx=None, periodic=None, x0=0.0,
          umbilic_tol=1e-6, constraint_tol=1e-4):
    """March ``n_rows`` rows (``y = j dy``, ``j = 0 .. n_rows-1``) from an integral curve.

    The frame is re-orthonormalized (polar decomposition) after each step.
    A step controller stops the march, returning the rows computed so far,
    when a row is non-finite, nearly umbilic, has ``xi1 <= 0`` or its
    constraint residuals exceed ``constraint_tol`` times the curvature scale.
    ``diagnostics["stopped"]`` names the reason (None for a full march).
    """
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}")
    if n_rows < 1:
        raise ValueError("n_rows must be positive")
    dx = getattr(row, "dx", None) if dx is None else dx
    periodic = getattr(row, "periodic", False) if periodic is None else periodic
    if not dx:
        raise ValueError("row spacing dx is required")
    x0 = float(getattr(row, "x", [x0])[0])
    state = _row_state(row)
    scale = float(np.max(np.abs(state["a"]) + np.abs(state["c"]))) or 1.0
    rows = [state]
    history = [max(float(np.max(np.abs(v))) for v in constraint_residuals(state, dx, periodic).values())]
    stopped = None
    for j in range(1, n_rows):
        try:
            new = _step(rows[-1], model, dx, periodic, dy, scheme, umbilic_tol)
        except (UmbilicCollapseError, np.linalg.LinAlgError) as exc:
            stopped = f"row {j}: {exc}"
            break
        if not all(np.all(np.isfinite(v)) for v in new.values()):
            stopped = f"row {j}: non-finite values"
            break
        new["A"] = _reorthonormalize(new["A"])
        gap = new["a"] - new["c"]
        if np.min(gap) < umbilic_tol:
            stopped = f"row {j}: umbilic collapse (a - c = {np.min(gap):.3g})"
            break
        if np.min(new["xi1"]) <= 0:
            stopped = f"row {j}: coordinate degeneration (xi1 <= 0)"
            break
        res = max(float(np.max(np.abs(v))) for v in constraint_residuals(new, dx, periodic).values())
        if res > constraint_tol * scale:
            stopped = f"row {j}: constraint residual {res:.3g} above {constraint_tol * scale:.3g}"
            break
        history.append(res)
        rows.append(new)

    stack = lambda key: np.stack([r[key] for r in rows])
    return PrincipalPatch(
        stack("P"), stack("A"), {k: stack(k) for k in FIBER_NAMES}, stack("xi1"), stack("xi2"),
        float(dx), float(dy), x0, bool(periodic),
        diagnostics={"stopped": stopped, "rows": len(rows), "requested_rows": n_rows,
                     "scheme": scheme, "constraint_history": history},
    )


# ---------------------------------------------------------------------------
# validation


def _frame_derivs(g, patch):
    # 4th-order y stencils keep nested (second) derivatives at least 2nd order at the edge rows
    if patch.n_rows >= 5:
        g2 = fd_derivative(g, patch.dy, accuracy=4, axis=0)
    else:
        g2 = np.gradient(g, patch.dy, axis=0, edge_order=2)
    gx = row_derivative(g, patch.dx, patch.periodic, axis=1)
    return (gx - patch.xi2 * g2) / patch.xi1, g2


def validate_patch(patch, model):
    """Residual fields of the structure relations on a marched patch.

    All derivatives are numerical (x along rows, 4th-order differences in
    y), so the residuals measure discretization error.  Keys: ``gauss``,
    ``codazzi_a``, ``codazzi_c``, the six second-order relations
    (``a21, a12, a22, c21, c12, c11``), ``mixed_partial`` for ``g = a``,
    ``frame`` (orthonormality drift per node), ``shape`` (Laplace-Beltrami
    residual of ``H``, NaN on the two edge rows) and ``max`` (a summary).
    Patches with fewer than three rows return empty diagnostics.
    """
    if patch.n_rows < 3:
        return {"max": {}}
    f = patch.fiber
    p, q, a, c = f["p"], f["q"], f["a"], f["c"]
    p1, q2, r, a1, c2 = f["p1"], f["q2"], f["r"], f["a1"], f["c2"]
    S = a * c + p * p + q * q
    amc = a - c
    p_1, p_2 = _frame_derivs(p, patch)
    q_1, q_2 = _frame_derivs(q, patch)
    a_1, a_2 = _frame_derivs(a, patch)
    c_1, c_2 = _frame_derivs(c, patch)
    a_21, a_22 = _frame_derivs(a_2, patch)
    a_11, a_12 = _frame_derivs(a_1, patch)
    c_21, c_22 = _frame_derivs(c_2, patch)
    c_11, c_12 = _frame_derivs(c_1, patch)
    out = {
        "gauss": p_2 - q_1 - S,
        "codazzi_a": a_2 + p * (c - a),
        "codazzi_c": c_1 + q * (c - a),
        "a21": a_21 - ((p1 - p * q) * amc + p * a1),
        "a12": a_12 - (2 * p * a1 + p1 * amc),
        "a22": a_22 - ((r + 0.5 * S) * amc + p * p * amc - p * c2),
        "c21": c_21 - (q2 * amc - 2 * q * c2),
        "c12": c_12 - ((q2 + p * q) * amc - q * c2),
        "c11": c_11 - ((r - 0.5 * S) * amc + q * a1 - q * q * amc),
        "mixed_partial": a_12 - a_21 - (p * a_1 + q * a_2),
    }
    A = patch.A
    out["frame"] = np.max(np.abs(np.einsum("...ki,...kj->...ij", A, A) - np.eye(3)), axis=(-2, -1))
    out["frame_det"] = np.linalg.det(A) - 1.0
    if patch.n_rows >= 5:
        out["shape"] = laplace_H_residual(patch, model)["fd"]
    out["max"] = {k: float(np.nanmax(np.abs(v))) for k, v in out.items()}
    return out
