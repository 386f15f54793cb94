"""Derivative helpers: filtered spectral differentiation and Fornberg finite differences."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = ["fd_derivative", "fornberg_weights", "row_derivative", "spectral_derivative"]

KRASNY_LEVEL = 1e-13


def spectral_derivative(f, period, order=1, axis=-1, krasny=KRASNY_LEVEL):
    """Derivative of uniformly sampled periodic data (endpoint excluded).

    Fourier modes whose magnitude is below ``krasny`` times the largest mode
    are zeroed first (Krasny filtering); that keeps round-off from being
    amplified by repeated differentiation or by an ill-posed evolution.
    """
    f = np.asarray(f, float)
    n = f.shape[axis]
    fh = np.fft.rfft(f, axis=axis)
    if krasny:
        mag = np.abs(fh)
        scale = np.max(mag, axis=axis, keepdims=True)
        fh = np.where(mag < krasny * scale, 0.0, fh)
    k = 2j * np.pi * np.fft.rfftfreq(n, d=period / n)
    if n % 2 == 0 and order % 2 == 1:
        k[-1] = 0.0  # Nyquist mode has no odd derivative
    shape = [1] * f.ndim
    shape[axis] = k.size
    fh = fh * (k**order).reshape(shape)
    return np.fft.irfft(fh, n=n, axis=axis)


@lru_cache(maxsize=256)
def fornberg_weights(z, x, m):
    """Fornberg's weights for derivatives 0..m at ``z`` from nodes ``x`` (a tuple)."""
    n = len(x)
    c = np.zeros((n, m + 1))
    c1, c4 = 1.0, x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2, c5, c4 = 1.0, c4, x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c


def fd_derivative(f, dx, order=1, accuracy=6, axis=-1, periodic=False):
    """Finite-difference derivative on a uniform grid.

    Centered stencils of the requested accuracy in the interior, one-sided
    stencils of the same width near the ends (or wrap-around when periodic).
    """
    f = np.moveaxis(np.asarray(f, float), axis, -1)
    n = f.shape[-1]
    half = accuracy // 2 + (order - 1) // 2
    width = 2 * half + 1
    if n < width:
        raise ValueError(f"need at least {width} samples for a {accuracy}th-order stencil")
    if periodic:
        centre = fornberg_weights(0.0, tuple(float(v) for v in range(-half, half + 1)), order)[:, order]
        acc = np.zeros_like(f)
        for w, off in zip(centre, range(-half, half + 1)):
            acc += w * np.roll(f, -off, axis=-1)
        return np.moveaxis(acc / dx**order, -1, axis)
    out = np.empty_like(f)
    for i in range(n):
        start = min(max(i - half, 0), n - width)
        nodes = tuple(float(v) for v in range(start - i, start - i + width))
        w = fornberg_weights(0.0, nodes, order)[:, order]
        out[..., i] = f[..., start:start + width] @ w
    return np.moveaxis(out / dx**order, -1, axis)


def row_derivative(f, dx, periodic, order=1, axis=-1):
    """x-derivative along rows: spectral when periodic, 6th-order differences otherwise."""
    if periodic:
        n = np.shape(f)[axis]
        return spectral_derivative(f, n * dx, order=order, axis=axis)
    return fd_derivative(f, dx, order=order, accuracy=6, axis=axis)
