"""Reusable patches for the tests."""

import math

from membrane_cauchy.cauchy import build_integral_curve
from membrane_cauchy.curves import circle, ellipse, kappa_multiple
from membrane_cauchy.shape import ShapeModel
from membrane_cauchy.state import MaterialParams
from membrane_cauchy.strip import march

# pressure chosen so that the unit-circle cylinder solves the shape equation
CYLINDER_MATERIAL = MaterialParams(k=1.0, c0=0.0, P_pressure=-0.5, lambda_=0.0)
CYLINDER_MODEL = ShapeModel.helfrich(CYLINDER_MATERIAL)
WILLMORE = ShapeModel.willmore()


def circle_row(model, n):
    return build_integral_curve(circle(1.0).with_cauchy(0.5, 0.0), 0.0, -math.pi / 2, model, n=n)


def cylinder_patch(nx=64, dy=1 / 64, n_rows=17):
    """Unit-radius cylinder of height ``(n_rows - 1) * dy``, marched from the circle."""
    return march(circle_row(CYLINDER_MODEL, nx), dy, n_rows, CYLINDER_MODEL)


def willmore_circle_patch(nx, dy, n_rows):
    return march(circle_row(WILLMORE, nx), dy, n_rows, WILLMORE)


def ellipse_patch(nx, dy, n_rows, model=WILLMORE, a=1.3, b=1.0):
    el = ellipse(a, b)
    row = build_integral_curve(el.with_cauchy(kappa_multiple(el, 0.5), 0.0), 0.0, -math.pi / 2, model, n=nx)
    return march(row, dy, n_rows, model)
