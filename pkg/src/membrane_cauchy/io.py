"""JSON serialization of patches and results, with a provenance block."""

from __future__ import annotations

import hashlib
import json
from importlib import metadata

import numpy as np

from .state import FIBER_NAMES, PrincipalPatch

__all__ = ["config_hash", "load_patch", "provenance", "save_patch", "to_jsonable", "write_json"]

PATCH_SCHEMA = "membrane-cauchy/patch-1"


def _version():
    try:
        return metadata.version("membrane-cauchy")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def to_jsonable(obj):
    """Convert numpy scalars/arrays (recursively) to plain Python for ``json``."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def config_hash(config):
    canonical = json.dumps(to_jsonable(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def provenance(config):
    return {"tool": "membrane-cauchy", "version": _version(), "config": to_jsonable(config),
            "config_hash": config_hash(config)}


def write_json(path, payload, config=None):
    """Write ``payload`` with a provenance block; keys are sorted for determinism."""
    doc = dict(to_jsonable(payload))
    doc["provenance"] = provenance(config or {})
    text = json.dumps(doc, indent=2, sort_keys=True)
    if path in (None, "-"):
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return doc


def save_patch(patch, path, config=None):
    """Patch JSON: grid metadata plus per-node arrays indexed ``[row][sample]``.

    ``P`` is ``[row][sample][3]`` and ``A`` is ``[row][sample][3][3]`` with
    frame vectors as columns.
    """
    payload = {
        "schema": PATCH_SCHEMA,
        "grid": {"n_rows": patch.shape[0], "n_samples": patch.shape[1], "dx": patch.dx, "dy": patch.dy,
                 "x0": patch.x0, "periodic": patch.periodic},
        "P": patch.P,
        "A": patch.A,
        "xi1": patch.xi1,
        "xi2": patch.xi2,
        "fiber": {k: patch.fiber[k] for k in FIBER_NAMES},
        "diagnostics": patch.diagnostics,
    }
    return write_json(path, payload, config)


def load_patch(path):
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema") != PATCH_SCHEMA:
        raise ValueError(f"{path}: not a patch file (schema {doc.get('schema')!r})")
    g = doc["grid"]
    arr = lambda v: np.asarray(v, float)
    return PrincipalPatch(arr(doc["P"]), arr(doc["A"]), {k: arr(doc["fiber"][k]) for k in FIBER_NAMES},
                          arr(doc["xi1"]), arr(doc["xi2"]), float(g["dx"]), float(g["dy"]),
                          float(g["x0"]), bool(g["periodic"]), doc.get("diagnostics") or {})
