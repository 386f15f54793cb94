"""State containers: material constants, points of the 16-dimensional manifold, and patches."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

FIBER_NAMES = ("p", "q", "a", "c", "p1", "q2", "r", "a1", "c2", "l")

__all__ = [
    "FIBER_NAMES",
    "FiberPoint",
    "FiberRow",
    "InvariantViolation",
    "MaterialParams",
    "PrincipalPatch",
]


class InvariantViolation(ValueError):
    """A documented data invariant does not hold."""


@dataclass(frozen=True)
class MaterialParams:
    """Helfrich constants.  ``P_pressure`` is the pressure difference.

    ``kbar`` only enters the energy functional; it drops out of the shape
    equation.
    """

    k: float = 1.0
    kbar: float = 0.0
    c0: float = 0.0
    P_pressure: float = 0.0
    lambda_: float = 0.0

    def __post_init__(self):
        if not self.k > 0:
            raise InvariantViolation(f"bending rigidity must be positive, got k={self.k}")

    def as_mapping(self):
        return {"k": self.k, "kbar": self.kbar, "c0": self.c0,
                "P_pressure": self.P_pressure, "lambda": self.lambda_}

    @classmethod
    def willmore(cls):
        return cls()

    @property
    def tension_ratio(self):
        """``v = (2 lambda + k c0^2) / (2k)``, the linear coefficient of the curvature ODE."""
        return (2.0 * self.lambda_ + self.k * self.c0**2) / (2.0 * self.k)


def _orthonormality_error(frame):
    frame = np.asarray(frame, float)
    gram = np.swapaxes(frame, -1, -2) @ frame
    return float(np.max(np.abs(gram - np.eye(3))))


@dataclass(frozen=True)
class FiberPoint:
    """Point of the manifold: position ``P``, frame columns ``A = (A1, A2, A3)`` and fiber coordinates."""

    P: np.ndarray
    A: np.ndarray
    p: float
    q: float
    a: float
    c: float
    p1: float
    q2: float
    r: float
    a1: float
    c2: float
    l: float

    def __post_init__(self):
        object.__setattr__(self, "P", np.asarray(self.P, float).reshape(3))
        object.__setattr__(self, "A", np.asarray(self.A, float).reshape(3, 3))

    def check(self, frame_tol=1e-9):
        if not self.a - self.c > 0:
            raise InvariantViolation(f"umbilic point: a - c = {self.a - self.c}")
        err = _orthonormality_error(self.A)
        if err > frame_tol or np.linalg.det(self.A) < 0:
            raise InvariantViolation(f"frame is not a rotation (Gram error {err:.2e})")
        return self

    @property
    def fiber(self):
        return {name: getattr(self, name) for name in FIBER_NAMES}

    def replace(self, **changes):
        return replace(self, **changes)


@dataclass
class FiberRow:
    """Struct-of-arrays version of a sequence of fiber points (one row of a patch).

    ``P`` has shape (n, 3), ``A`` has shape (n, 3, 3) with frame vectors as
    columns, and ``fiber`` maps coordinate names to length-n arrays.
    """

    P: np.ndarray
    A: np.ndarray
    fiber: dict

    def __post_init__(self):
        self.P = np.asarray(self.P, float)
        self.A = np.asarray(self.A, float)
        self.fiber = {k: np.asarray(self.fiber[k], float) for k in FIBER_NAMES}

    def __len__(self):
        return self.P.shape[0]

    def __getitem__(self, i):
        return FiberPoint(self.P[i], self.A[i], **{k: float(v[i]) for k, v in self.fiber.items()})

    def points(self):
        return [self[i] for i in range(len(self))]

    @classmethod
    def from_points(cls, pts):
        pts = list(pts)
        return cls(
            np.array([pt.P for pt in pts]),
            np.array([pt.A for pt in pts]),
            {k: np.array([getattr(pt, k) for pt in pts]) for k in FIBER_NAMES},
        )

    def copy(self):
        return FiberRow(self.P.copy(), self.A.copy(), {k: v.copy() for k, v in self.fiber.items()})


@dataclass
class PrincipalPatch:
    """Gridded surface patch in curvature-line coordinates.

    Arrays are indexed ``[j, i]`` with ``j`` the row (``y = j * dy``) and
    ``i`` the sample along the initial curve (``x = x0 + i * dx``).
    ``xi1, xi2`` are the components of the coordinate field along x in the
    principal frame.
    """

    P: np.ndarray
    A: np.ndarray
    fiber: dict
    xi1: np.ndarray
    xi2: np.ndarray
    dx: float
    dy: float
    x0: float = 0.0
    periodic: bool = False
    diagnostics: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.xi1.shape

    @property
    def n_rows(self):
        return self.xi1.shape[0]

    def row(self, j):
        return FiberRow(self.P[j], self.A[j], {k: v[j] for k, v in self.fiber.items()})

    def __getattr__(self, name):
        if name in FIBER_NAMES:
            return self.__dict__["fiber"][name]
        raise AttributeError(name)

    def point(self, j, i):
        return FiberPoint(self.P[j, i], self.A[j, i], **{k: float(v[j, i]) for k, v in self.fiber.items()})

    def check(self, frame_tol=1e-9):
        gap = self.fiber["a"] - self.fiber["c"]
        if np.any(gap <= 0):
            raise InvariantViolation("patch contains umbilic nodes (a - c <= 0)")
        if np.any(self.xi1 <= 0):
            raise InvariantViolation("coordinate field degenerates (xi1 <= 0)")
        err = _orthonormality_error(self.A)
        if err > frame_tol:
            raise InvariantViolation(f"frame orthonormality drift {err:.2e}")
        return self

    def field_names(self):
        return [f.name for f in fields(self)]
