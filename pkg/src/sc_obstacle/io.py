"""JSON and CSV export of solutions and reports.

Floats are written with 17 significant digits so that a rerun with the same
inputs gives byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

__all__ = [
    "to_jsonable",
    "dumps",
    "write_json",
    "write_csv",
    "profile_rows",
    "mesh_solution_rows",
    "vortex_rows",
    "sweep_rows",
    "barrier_rows",
    "barrier_dict",
    "sweep_dict",
    "component_dict",
]


def _fmt(x):
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    text = format(x, ".17g")
    # keep floats recognisable as floats
    return text if any(ch in text for ch in ".en") else text + ".0"


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays, tuples and NamedTuples."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if hasattr(obj, "_asdict"):
        return to_jsonable(obj._asdict())
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_encode(str(k), indent, level + 1)}: {_encode(v, indent, level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent=2):
    """Deterministic JSON text with 17-digit floats (non-finite as ``NaN``/``Infinity``)."""
    return _encode(to_jsonable(obj), indent, 0) + "\n"


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj))
    return path


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return path


def _active_flags(n, plus, minus):
    flag = np.zeros(n, dtype=int)
    flag[plus] = 1
    flag[minus] = -1
    return flag


def profile_rows(p):
    """``(phi, v, active)`` rows of a 1D profile; ``active`` is +1, -1 or 0."""
    flag = _active_flags(p.phi.size, p.active_plus, p.active_minus)
    return ["phi", "v", "active"], zip(p.phi.tolist(), p.v.tolist(), flag.tolist())


def mesh_solution_rows(sol, mu):
    n = sol.V.size
    flag = _active_flags(n, sol.active_plus, sol.active_minus)
    return (["vertex", "V", "mu", "active"],
            zip(range(n), sol.V.tolist(), np.asarray(mu).tolist(), flag.tolist()))


def vortex_rows(pvs):
    rows = [(1, *map(float, p)) for p in pvs.points_plus]
    rows += [(-1, *map(float, p)) for p in pvs.points_minus]
    return ["sign", "x", "y", "z"], rows


def barrier_rows(bp, n_samples=401):
    z = np.linspace(-1.5 * bp.eta_minus, 1.5 * bp.eta_plus, n_samples)
    v, dv, ddv = bp.evaluate(z)
    return ["z", "v", "dv", "ddv"], zip(z.tolist(), v.tolist(), dv.tolist(), ddv.tolist())


def barrier_dict(bp, report=None):
    out = {k: getattr(bp, k) for k in (
        "variant", "c", "C", "beta", "k_left", "k_right", "alpha_minus", "alpha_plus",
        "eta_minus", "eta_plus", "A_minus", "B_minus", "A_plus", "B_plus")}
    out["width"] = bp.width
    if report is not None:
        out["verification"] = report._asdict()
    return out


def component_dict(report):
    return {
        "count": report.count,
        "components": [{"n_vertices": int(c.vertices.size), "area": c.area,
                        "boundary_length": c.boundary_length} for c in report.components],
    }


def _component_summary(rec):
    out = []
    for i, c in enumerate(rec.components):
        if hasattr(c, "lo"):
            item = {"lo": c.lo, "hi": c.hi, "sides": [c.side_lo, c.side_hi]}
        else:
            item = {"n_vertices": int(c.vertices.size), "area": c.area,
                    "sides": list(rec.sides[i])}
        item["width"] = rec.widths[i]
        out.append(item)
    return out


def sweep_dict(report):
    records = []
    for r in report.records:
        item = {"beta": r.beta, "count": r.count, "separation": r.separation,
                "max_gradient": r.max_gradient, "energy_F": r.energy_F, "energy_E": r.energy_E,
                "n_active_plus": r.n_active_plus, "n_active_minus": r.n_active_minus,
                "components": _component_summary(r)}
        if r.error is not None:
            item["error"] = r.error
        regime = getattr(r.solution, "regime", None)
        if regime:
            item["regime"] = regime
        records.append(item)
    return {"kind": report.kind, "solver": report.solver, "beta_c": report.beta_c,
            "h": report.h, "records": records}


def sweep_rows(report):
    header = ["beta", "count", "separation", "max_gradient", "energy_F", "energy_E", "widths"]
    rows = []
    for r in report.records:
        widths = ";".join(_fmt(float(w)) for w in r.widths)
        rows.append([r.beta, r.count, r.separation, r.max_gradient, r.energy_F, r.energy_E, widths])
    return header, rows
