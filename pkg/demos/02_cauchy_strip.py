"""From Cauchy data on a curve to a strip of surface.

We attach h = kappa/2 and h^W = 0 to an ellipse, build the integral curve,
march it a short distance with the Willmore right-hand side and look at how
the structure-equation residuals shrink as the grid is refined.
"""

import math
import sys
from pathlib import Path

from membrane_cauchy import ShapeModel, build_integral_curve, ellipse, march, validate_patch
from membrane_cauchy.curves import kappa_multiple
from membrane_cauchy.mesh import patch_mesh

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(exist_ok=True)

model = ShapeModel.willmore()
el = ellipse(1.3, 1.0)
curve = el.with_cauchy(kappa_multiple(el, 0.5), 0.0)

previous = None
for nx, dy, rows in [(128, 1 / 64, 17), (256, 1 / 128, 33), (512, 1 / 256, 65)]:
    row = build_integral_curve(curve, 0.0, -math.pi / 2, model, n=nx)
    patch = march(row, dy, rows, model)
    res = validate_patch(patch, model)["max"]
    line = f"nx={nx:4d} dy=1/{round(1 / dy):3d}  gauss {res['gauss']:.2e}  shape {res['shape']:.2e}"
    if previous:
        line += f"  orders {math.log2(previous['gauss'] / res['gauss']):.2f}, " \
                f"{math.log2(previous['shape'] / res['shape']):.2f}"
    print(line, "| stopped:", patch.diagnostics["stopped"])
    previous = res

H = 0.5 * (patch.fiber["a"] + patch.fiber["c"])
patch_mesh(patch.P, patch.periodic, {"H": H}).to_obj(out / "ellipse_strip.obj")
print("wrote", out / "ellipse_strip.obj")

# asking for far more rows than the data support: the step controller truncates the patch
row = build_integral_curve(curve, 0.0, -math.pi / 2, model, n=128)
for dy in (1 / 16, 1 / 32):
    long = march(row, dy, 2000, model)
    print(f"dy=1/{round(1 / dy)}: kept {long.n_rows} rows (y <= {(long.n_rows - 1) * dy:.3f});",
          long.diagnostics["stopped"])
