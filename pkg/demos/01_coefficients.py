"""Derive the curvature coefficients of the prolonged system and check one of them.

The coefficients B1, B2, D1, D2 come out of exterior differentiation of the
prolonged generators, reduced modulo the ideal.  At the constant data of
the unit circle (a = 1, everything else 0 apart from l) the B's vanish.
"""

from membrane_cauchy.exterior import VARIABLES, curvature_coefficients, phi_willmore_expr

coeffs = curvature_coefficients(phi_willmore_expr())
for name in ("B1", "B2", "D1", "D2"):
    print(f"{name} = {coeffs[name]}")

point = dict.fromkeys(VARIABLES, 0.0)
point.update(a=1.0, l=0.25)
print("\nat the circle data:", {k: float(v.evaluate(point)) for k, v in coeffs.items()})
