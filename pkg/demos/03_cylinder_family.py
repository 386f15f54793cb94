"""The five-fold family of cylindrical membranes.

Along the closure branch rho -> phi_5(rho) the directrix goes from a circle
(rho = 0) through convex, non-convex and self-intersecting shapes.  This
script prints the classification at a few values, locates the separating
values and writes SVG outlines and OBJ meshes.
"""

import sys
from pathlib import Path

from membrane_cauchy import cylinder as C

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(exist_ok=True)

print("phi_5(0) =", C.solve_phi(5, 0.0), " (-(24)^(1/3) =", -(24 ** (1 / 3)), ")")

for rho in (0.0, 0.08, 0.6, 0.8, 0.9):
    params = C.CylinderParams(C.solve_phi(5, rho), rho)
    poly, info = C.describe(params)
    print(f"rho={rho:4.2f} varsigma={params.varsigma:+.6f} {info['convexity']:>9s} "
          f"inflections={info['inflection_count']:2d} crossings={info['self_intersections']:2d}")
    poly.to_svg(out / f"directrix_{rho:.2f}.svg")
    C.extrude_cylinder(poly, 6.0, 12).to_obj(out / f"cylinder_{rho:.2f}.obj")

seps = C.separating_values(5)
print("separating values:", round(seps["rho_u"], 6), [round(r, 6) for r in seps["rho_j"]])
