"""Independent numeric oracles shared by the test modules.

Nothing here imports the package's exterior engine: the coframe is realised
concretely on E(3) x R^10 through theta^i = A_i . dP and
theta^i_j = A_i . dA_j.
"""

import math

import numpy as np
from scipy.linalg import expm

FIBER = ("p", "q", "a", "c", "p1", "q2", "r", "a1", "c2", "l")


def agm(a, b):
    # iterate until the pair stops changing (the last ulp can oscillate)
    for _ in range(100):
        a_new, b_new = 0.5 * (a + b), math.sqrt(a * b)
        if (a_new, b_new) == (a, b) or abs(a_new - b_new) <= 4 * math.ulp(a_new):
            return a_new
        a, b = a_new, b_new
    return a


def agm_K(m):
    return math.pi / (2.0 * agm(1.0, math.sqrt(1.0 - m)))


def generator_values(f, dP, A, dA, df, phi):
    """Values of the ten generators on a tangent vector (numeric, hand-coded)."""
    th = A.T @ dP
    om = A.T @ dA  # om[i, j] = theta^i_j
    p, q, a, c = f["p"], f["q"], f["a"], f["c"]
    p1, q2, r, a1, c2, l = (f[k] for k in ("p1", "q2", "r", "a1", "c2", "l"))
    S = a * c + p * p + q * q
    psi = phi(a, c) + p * c2 - q * a1
    t1, t2 = th[0], th[1]
    return {
        "alpha1": th[2],
        "alpha2": om[1, 0] - p * t1 - q * t2,
        "alpha3": om[2, 0] - a * t1,
        "alpha4": om[2, 1] - c * t2,
        "beta1": df["p"] - p1 * t1 - (r + S / 2) * t2,
        "beta2": df["q"] - (r - S / 2) * t1 - q2 * t2,
        "gamma1": df["a"] - a1 * t1 + p * (c - a) * t2,
        "gamma2": df["c"] + q * (c - a) * t1 - c2 * t2,
        "delta1": df["a1"] - (l + r * (c - a) + psi) * t1 + (p1 * (c - a) - 2 * a1 * p) * t2,
        "delta2": df["c2"] + (q2 * (c - a) + 2 * c2 * q) * t1 + (l - r * (c - a) - psi) * t2,
    }


def _kernel_directions(f, phi):
    p, q, a, c = f["p"], f["q"], f["a"], f["c"]
    p1, q2, r, a1, c2, l = (f[k] for k in ("p1", "q2", "r", "a1", "c2", "l"))
    S = a * c + p * p + q * q
    psi = phi(a, c) + p * c2 - q * a1
    x1 = dict.fromkeys(FIBER, 0.0)
    x1.update(p=p1, q=r - S / 2, a=a1, c=-q * (c - a), a1=l + r * (c - a) + psi,
              c2=-(q2 * (c - a) + 2 * c2 * q))
    x2 = dict.fromkeys(FIBER, 0.0)
    x2.update(p=r + S / 2, q=q2, a=-p * (c - a), c=c2, a1=-(p1 * (c - a) - 2 * a1 * p),
              c2=-l + r * (c - a) + psi)
    s1 = np.array([[0, -p, -a], [p, 0, 0], [a, 0, 0]], float)
    s2 = np.array([[0, -q, 0], [q, 0, -c], [0, c, 0]], float)
    return x1, x2, s1, s2


def d_generator_on_kernel(point, phi, rng, h=1e-3):
    """``d eta(sigma_u, sigma_v)`` for all generators at ``point``.

    ``sigma`` is a random quadratic surface whose tangent plane at the base
    point is spanned by vectors with theta^1/theta^2 dual to (u, v), lying in
    the kernel of every generator and with zero dp1, dq2, dr, dl components.
    On such a plane the reduced derivative of beta1 evaluates to -B1, and
    similarly for the others.
    """
    x1, x2, s1, s2 = _kernel_directions(point, phi)
    A0 = np.linalg.qr(rng.normal(size=(3, 3)))[0]
    if np.linalg.det(A0) < 0:
        A0[:, 0] *= -1
    P0 = rng.normal(size=3)
    quad = {k: rng.normal(size=3) for k in FIBER}
    Pq = rng.normal(size=(3, 3))
    Sq = [rng.normal(size=(3, 3)) for _ in range(3)]
    Sq = [m - m.T for m in Sq]

    def sigma(u, v):
        f = {k: point[k] + u * x1[k] + v * x2[k]
             + quad[k][0] * u * u + quad[k][1] * u * v + quad[k][2] * v * v for k in FIBER}
        P = P0 + A0 @ (np.array([u, v, 0.0]) + Pq @ np.array([u * u, u * v, v * v]))
        S = u * s1 + v * s2 + u * u * Sq[0] + u * v * Sq[1] + v * v * Sq[2]
        A = A0 @ expm(S)
        return f, P, A

    w = np.array([1.0, -8.0, 8.0, -1.0]) / (12.0 * h)
    off = np.array([-2.0, -1.0, 1.0, 2.0]) * h

    def tangent(u, v, axis):
        pts = [sigma(u + o, v) if axis == 0 else sigma(u, v + o) for o in off]
        df = {k: sum(wi * pt[0][k] for wi, pt in zip(w, pts)) for k in FIBER}
        dP = sum(wi * pt[1] for wi, pt in zip(w, pts))
        dA = sum(wi * pt[2] for wi, pt in zip(w, pts))
        return df, dP, dA

    def eta(u, v, axis):
        f, _, A = sigma(u, v)
        df, dP, dA = tangent(u, v, axis)
        return generator_values(f, dP, A, dA, df, phi)

    ev = [eta(o, 0.0, 1) for o in off]
    eu = [eta(0.0, o, 0) for o in off]
    names = ev[0].keys()
    return {n: sum(wi * e[n] for wi, e in zip(w, ev)) - sum(wi * e[n] for wi, e in zip(w, eu)) for n in names}


def random_fiber_point(rng, umbilic_gap=0.5):
    f = {k: rng.uniform(-1, 1) for k in FIBER}
    f["c"] = f["a"] - umbilic_gap - rng.uniform(0, 1)
    return f


def order_ok(coarse, fine, min_order, floor=1e-12):
    """Richardson order check between a grid and its refinement.

    Residuals already at roundoff on the coarse grid cannot show an order
    and count as converged.
    """
    if coarse <= floor:
        return fine <= 10 * floor
    return math.log2(coarse / max(fine, 1e-300)) >= min_order
