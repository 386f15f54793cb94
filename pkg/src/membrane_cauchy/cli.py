"""Command-line front end.

Subcommands: ``derive-coeffs``, ``cauchy build``, ``cauchy march``,
``cylinder solve``, ``cylinder separatrices``, ``cylinder mesh`` and
``verify``.  Exit status is 0 on success, 2 for invariant violations or bad
input and 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import cylinder as cyl
from .cauchy import build_integral_curve, cauchy_identities, verify_integral_curve
from .curves import circle, ellipse, fourier_curve, helix, sampled_curve
from .elliptic import QuadratureError
from .exterior import curvature_coefficients, phi_helfrich_expr, phi_willmore_expr
from .io import load_patch, save_patch, write_json
from .mesh import patch_mesh
from .shape import ShapeModel
from .state import FIBER_NAMES, InvariantViolation, MaterialParams
from .strip import march, validate_patch

__all__ = ["RunConfig", "build_parser", "dispatch", "main", "parse_jet"]

EXIT_OK, EXIT_INVARIANT, EXIT_NUMERICAL = 0, 2, 3
NUMERICAL_ERRORS = (cyl.ContinuationError, cyl.PoleError, QuadratureError, np.linalg.LinAlgError,
                    FloatingPointError)


class ConfigError(ValueError):
    """Malformed command-line configuration or input file."""


@dataclass
class RunConfig:
    subcommand: str
    options: dict = field(default_factory=dict)

    TOLERANCE_KEYS = ("tol", "rho_tol", "scan_step", "dy", "height")
    GRID_KEYS = ("n", "levels", "n_per_period")

    def __post_init__(self):
        for key in self.TOLERANCE_KEYS:
            v = self.options.get(key)
            if v is not None and not v > 0:
                raise ConfigError(f"--{key.replace('_', '-')} must be positive")
        for key in self.GRID_KEYS:
            v = self.options.get(key)
            if v is not None and v < 8:
                raise ConfigError(f"--{key.replace('_', '-')} must be at least 8")


# ---------------------------------------------------------------------------
# helpers


def _material(opts):
    get = lambda key, default: default if opts.get(key) is None else opts[key]
    return MaterialParams(k=get("k", 1.0), kbar=get("kbar", 0.0), c0=get("c0", 0.0),
                          P_pressure=get("pressure", 0.0), lambda_=get("lam", 0.0))


def _model(opts):
    if opts.get("phi", "willmore") == "willmore":
        return ShapeModel.willmore()
    return ShapeModel.helfrich(_material(opts))


def parse_jet(text, curve=None):
    """Jet ``f(x, order)`` from an expression in ``x`` and (optionally) ``kappa``.

    ``kappa`` is the curvature of ``curve`` as a function of ``x``; its
    derivatives are taken from the curve's own jet.
    """
    import sympy  # slow to import; only the Cauchy subcommands need it

    x = sympy.Symbol("x")
    K = sympy.Function("kappa")(x)
    try:
        expr = sympy.sympify(text, locals={"x": x, "kappa": K})
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise ConfigError(f"cannot parse expression {text!r}: {exc}") from exc
    extra = expr.free_symbols - {x}
    if extra:
        raise ConfigError(f"expression {text!r} has unknown symbols {sorted(map(str, extra))}")
    uses_kappa = expr.has(K)
    if uses_kappa and curve is None:
        raise ConfigError("kappa used without a curve")
    cache = {}

    def compiled(order):
        if order not in cache:
            d = sympy.diff(expr, x, order)
            ks = sympy.symbols(f"k0:{order + 1}")
            for j in range(order, 0, -1):
                d = d.subs(sympy.Derivative(K, (x, j)), ks[j])
            d = d.subs(K, ks[0])
            cache[order] = sympy.lambdify((x, *ks), d, "numpy")
        return cache[order]

    def jet(xv, order=0):
        xv = np.atleast_1d(np.asarray(xv, float))
        ks = [curve.kappa(xv, j) if uses_kappa else np.zeros_like(xv) for j in range(order + 1)]
        return np.broadcast_to(np.asarray(compiled(order)(xv, *ks), float), xv.shape).copy()

    jet.max_order = getattr(curve.kappa, "max_order", 2) if uses_kappa else math.inf
    jet.description = text
    return jet


def load_curve(spec):
    """Curve from a spec dict ``{"kind": "circle" | "helix" | "ellipse" | "fourier" | "sampled", ...}``.

    ``sampled`` takes ``points`` (a list of xyz triples) or ``csv`` (a file
    with x, y, z columns and a header row), plus an optional ``closed`` flag.
    """
    if isinstance(spec, str):
        try:
            with open(spec) as fh:
                spec = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read curve spec: {exc}") from exc
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind == "sampled":
        return _sampled_from_spec(spec)
    makers = {"circle": circle, "helix": helix, "ellipse": ellipse, "fourier": fourier_curve}
    if kind not in makers:
        raise ConfigError(f"curve kind must be one of {sorted(makers)}, got {kind!r}")
    try:
        return makers[kind](**spec)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {kind} curve: {exc}") from exc


def _sampled_from_spec(spec):
    closed = bool(spec.get("closed", False))
    try:
        if "csv" in spec:
            pts = np.loadtxt(spec["csv"], delimiter=",", skiprows=1, usecols=(0, 1, 2))
        else:
            pts = np.asarray(spec["points"], float)
    except KeyError as exc:
        raise ConfigError("sampled curve needs 'points' or 'csv'") from exc
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read sampled curve: {exc}") from exc
    try:
        return sampled_curve(pts, closed=closed)
    except ValueError as exc:
        raise ConfigError(f"bad sampled curve: {exc}") from exc


def _cauchy_row(opts):
    curve = load_curve(opts["curve"])
    curve = curve.with_cauchy(parse_jet(opts["h"], curve), parse_jet(opts["hw"], curve))
    model = _model(opts)
    x0 = curve.interval[0] if opts.get("x0") is None else opts["x0"]
    row = build_integral_curve(curve, x0, opts["a0"], model, n=opts["n"])
    return curve, model, row


def _write_row_csv(path, row):
    header = ["x", "Px", "Py", "Pz"] + [f"A{i}{j}" for i in range(3) for j in range(3)] + list(FIBER_NAMES)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(len(row)):
            vals = [row.x[i], *row.P[i], *row.A[i].ravel(), *(row.fiber[k][i] for k in FIBER_NAMES)]
            w.writerow([repr(float(v)) for v in vals])


# ---------------------------------------------------------------------------
# commands


def cmd_derive_coeffs(opts):
    phi = phi_willmore_expr() if opts["phi"] == "willmore" else phi_helfrich_expr()
    coeffs = curvature_coefficients(phi)
    numeric = {name: opts[key] for key, name in (("k", "k"), ("kbar", "kbar"), ("c0", "c0"),
                                                 ("pressure", "P_pressure"), ("lam", "lambda"))
               if opts.get(key) is not None and opts["phi"] == "helfrich"}
    if numeric:
        coeffs = {k: v.subs(**numeric) for k, v in coeffs.items()}
    for name in ("B1", "B2", "D1", "D2"):
        print(f"{name} = {coeffs[name]}")
    payload = {"phi": opts["phi"], "substituted": numeric,
               "text": {k: str(v) for k, v in coeffs.items()},
               "tree": {k: v.to_tree() for k, v in coeffs.items()}}
    if opts.get("out"):
        write_json(opts["out"], payload, opts)
    return payload


def cmd_cauchy_build(opts):
    curve, model, row = _cauchy_row(opts)
    report = verify_integral_curve(row, row.dx, model)
    payload = {"max": report["max"], "spikes": report["spikes"], "identities": cauchy_identities(row, curve),
               "n": len(row), "dx": row.dx, "periodic": row.periodic}
    if opts.get("out_csv"):
        _write_row_csv(opts["out_csv"], row)
    write_json(opts.get("out") or "-", payload, opts)
    return payload


def cmd_cauchy_march(opts):
    _, model, row = _cauchy_row(opts)
    patch = march(row, opts["dy"], opts["steps"] + 1, model, scheme=opts["scheme"])
    diag = validate_patch(patch, model)["max"]
    patch.diagnostics["validation"] = diag
    save_patch(patch, opts["out"], opts)
    if opts.get("obj"):
        H = 0.5 * (patch.fiber["a"] + patch.fiber["c"])
        patch_mesh(patch.P, patch.periodic, {"H": H, "a": patch.fiber["a"], "c": patch.fiber["c"]}) \
            .to_obj(opts["obj"])
    summary = {"rows": patch.n_rows, "stopped": patch.diagnostics["stopped"], "validation": diag}
    print(json.dumps(summary, indent=2, default=float))
    return summary


def _solve_one(upsilon, rho, mu=1, seed=None, n=None, with_curve=False):
    vs = cyl.solve_phi(upsilon, rho, seed=seed, mu=mu)
    params = cyl.CylinderParams(vs, rho, -1, upsilon, mu)
    fc = cyl.family_constants(params)
    lam = cyl.closure_index(params, consts=fc)
    poly, cls = cyl.describe(params, n)
    out = {
        "upsilon": upsilon, "mu": mu, "rho": rho, "varsigma": vs,
        "closure_index": lam, "closure_residual": lam + mu / upsilon,
        "constants": asdict(fc), "extremal_kappa": cyl.extremal_kappa(params, fc),
        "radius": cyl.directrix_radius(poly), "classification": cls,
        "synthesis": poly.meta,
    }
    return (out, poly) if with_curve else out


def _rho_grid(text):
    if ":" in text:
        a, b, k = text.split(":")
        return [float(v) for v in np.linspace(float(a), float(b), int(k))]
    return [float(v) for v in text.split(",") if v.strip()]


def cmd_cylinder_solve(opts):
    if opts.get("rho_grid"):
        grid = _rho_grid(opts["rho_grid"])
        with ProcessPoolExecutor(max_workers=opts.get("workers")) as pool:
            futures = [pool.submit(_solve_one, opts["upsilon"], r, opts["mu"]) for r in grid]
            results = [f.result() for f in futures]
        payload = {"sweep": results}
    else:
        payload, poly = _solve_one(opts["upsilon"], opts["rho"], opts["mu"], opts.get("seed"), opts.get("n"),
                                   with_curve=True)
        if opts.get("csv"):
            poly.to_csv(opts["csv"])
        if opts.get("svg"):
            poly.to_svg(opts["svg"])
    write_json(opts.get("out") or "-", payload, opts)
    return payload


def cmd_cylinder_separatrices(opts):
    res = cyl.separating_values(opts["upsilon"], scan_step=opts["scan_step"], rho_tol=opts["rho_tol"])
    write_json(opts.get("out") or "-", res, opts)
    if res["diagnostics"]:
        raise cyl.ContinuationError("; ".join(res["diagnostics"]))
    return res


def cmd_cylinder_mesh(opts):
    vs = cyl.solve_phi(opts["upsilon"], opts["rho"])
    params = cyl.CylinderParams(vs, opts["rho"], -1, opts["upsilon"])
    poly = cyl.synthesize_curve(params, n=opts.get("n"))
    mesh = cyl.extrude_cylinder(poly, opts["height"], opts["levels"])
    mesh.meta.update({"varsigma": vs, "rho": opts["rho"], "upsilon": opts["upsilon"]})
    mesh.to_obj(opts["out"])
    summary = {"vertices": len(mesh.vertices), "faces": len(mesh.faces), "varsigma": vs}
    print(json.dumps(summary))
    return summary


def cmd_verify(opts):
    patch = load_patch(opts["patch"])
    diag = validate_patch(patch, _model(opts))
    payload = {"shape": list(patch.shape), "max": diag["max"], "stopped": patch.diagnostics.get("stopped")}
    write_json(opts.get("out") or "-", payload, opts)
    return payload


# ---------------------------------------------------------------------------
# parser


def _add_material(p):
    p.add_argument("--phi", choices=("willmore", "helfrich"), default="willmore")
    p.add_argument("--k", type=float, default=None)
    p.add_argument("--kbar", type=float, default=None)
    p.add_argument("--c0", type=float, default=None)
    p.add_argument("--pressure", type=float, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)


def _add_cauchy(p):
    p.add_argument("--curve", required=True, help="curve spec JSON file")
    p.add_argument("--h", required=True, help="mean curvature along the curve, expression in x and kappa")
    p.add_argument("--hw", default="0", help="normal derivative datum, expression in x and kappa")
    p.add_argument("--x0", type=float, default=None)
    p.add_argument("--a0", type=float, default=-math.pi / 2)
    p.add_argument("--n", type=int, default=256)
    _add_material(p)


def build_parser():
    parser = argparse.ArgumentParser(prog="membrane-cauchy", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("derive-coeffs", help="print the derived coefficients B1, B2, D1, D2")
    _add_material(p)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_derive_coeffs, subcommand="derive-coeffs")

    cauchy = sub.add_parser("cauchy").add_subparsers(dest="action", required=True)
    p = cauchy.add_parser("build", help="build and verify the integral curve")
    _add_cauchy(p)
    p.add_argument("--out")
    p.add_argument("--out-csv")
    p.set_defaults(handler=cmd_cauchy_build, subcommand="cauchy build")
    p = cauchy.add_parser("march", help="march a strip off the integral curve")
    _add_cauchy(p)
    p.add_argument("--steps", type=int, default=16)
    p.add_argument("--dy", type=float, default=1 / 64)
    p.add_argument("--scheme", choices=("euler", "rk2", "rk4"), default="rk4")
    p.add_argument("--out", required=True)
    p.add_argument("--obj")
    p.set_defaults(handler=cmd_cauchy_march, subcommand="cauchy march")

    cyl_p = sub.add_parser("cylinder").add_subparsers(dest="action", required=True)
    p = cyl_p.add_parser("solve", help="solve the closure condition for (upsilon, rho)")
    p.add_argument("--upsilon", type=int, default=5)
    p.add_argument("--mu", type=int, default=1)
    p.add_argument("--rho", type=float, default=0.0)
    p.add_argument("--seed", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--rho-grid", help="'start:stop:count' or a comma list")
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.add_argument("--csv")
    p.add_argument("--svg")
    p.set_defaults(handler=cmd_cylinder_solve, subcommand="cylinder solve")
    p = cyl_p.add_parser("separatrices", help="separating values of rho")
    p.add_argument("--upsilon", type=int, default=5)
    p.add_argument("--scan-step", type=float, default=0.01)
    p.add_argument("--rho-tol", type=float, default=1e-6)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_cylinder_separatrices, subcommand="cylinder separatrices")
    p = cyl_p.add_parser("mesh", help="OBJ mesh of the extruded cylinder")
    p.add_argument("--upsilon", type=int, default=5)
    p.add_argument("--rho", type=float, default=0.0)
    p.add_argument("--height", type=float, default=10.0)
    p.add_argument("--levels", type=int, default=16)
    p.add_argument("--n", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_cylinder_mesh, subcommand="cylinder mesh")

    p = sub.add_parser("verify", help="residual statistics of a patch JSON")
    p.add_argument("--patch", required=True)
    _add_material(p)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_verify, subcommand="verify")
    return parser


def dispatch(config, handler):
    """Run a handler and map failures onto exit codes."""
    try:
        handler(config.options)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    opts = {k: v for k, v in vars(args).items() if k not in ("handler", "command", "action", "subcommand")}
    try:
        config = RunConfig(args.subcommand, opts)
    except ConfigError as exc:
        parser.error(str(exc))
    return dispatch(config, args.handler)


if __name__ == "__main__":
    sys.exit(main())
