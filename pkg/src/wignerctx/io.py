"""File formats (JSON states, plans, verdicts; CSV grids, pdfs, samples) and atomic writes."""

from __future__ import annotations

import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import WignerCtxError
from .measurement import BinnedPdf, EmpiricalContextModel, GaussianJoint, GridJoint
from .qcompile import CircuitPlan, Homodyne
from .states import CZ, FockDensityMatrix, GaussianState, Rot, StateHandle
from .wigner import GridSpec, NegativityReport, WignerGrid


class FormatError(WignerCtxError, ValueError):
    """A file does not follow the expected layout."""


def write_atomic(path, text: str) -> None:
    """Write ``text`` to a temporary file next to ``path`` and rename it into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent if str(path.parent) else ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _csv(header: list[str] | None, rows: np.ndarray) -> str:
    buf = io.StringIO()
    if header is not None:
        buf.write(",".join(header) + "\n")
    np.savetxt(buf, rows, fmt="%.17g", delimiter=",")
    return buf.getvalue()


# -- states ----------------------------------------------------------------------------------


def state_to_dict(state: StateHandle) -> dict:
    if isinstance(state, GaussianState):
        return {"type": "gaussian", "modes": state.modes, "mean": state.mean.tolist(), "cov": state.cov.tolist()}
    return {
        "type": "fock",
        "cutoffs": list(state.cutoffs),
        "matrix": {"re": state.matrix.real.tolist(), "im": state.matrix.imag.tolist()},
    }


def state_from_dict(d: dict) -> StateHandle:
    if not isinstance(d, dict) or "type" not in d:
        raise FormatError("state file needs a 'type' field")
    try:
        if d["type"] == "gaussian":
            mean = np.asarray(d["mean"], dtype=float)
            if int(d["modes"]) * 2 != mean.size:
                raise FormatError(f"'modes' is {d['modes']} but the mean has {mean.size} entries")
            return GaussianState(mean, np.asarray(d["cov"], dtype=float))
        if d["type"] == "fock":
            m = d["matrix"]
            rho = np.asarray(m["re"], dtype=float) + 1j * np.asarray(m["im"], dtype=float)
            return FockDensityMatrix(tuple(int(c) for c in d["cutoffs"]), rho)
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed state file: missing or invalid {exc}") from None
    raise FormatError(f"unknown state type {d['type']!r}")


def load_json(path):
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid JSON ({exc})") from None


def load_state(path) -> StateHandle:
    return state_from_dict(load_json(path))


def save_state(path, state: StateHandle) -> None:
    write_atomic(path, dumps(state_to_dict(state)))


# -- grids, pdfs, samples ---------------------------------------------------------------------


def wigner_csv(grid: WignerGrid) -> str:
    """``axis_1,...,axis_2M,W`` with one row per point, row-major in coordinate order."""
    spec = grid.spec
    D = len(spec.axes)
    mesh = np.meshgrid(*[spec.points(a) for a in range(D)], indexing="ij")
    rows = np.column_stack([m.reshape(-1) for m in mesh] + [grid.values.reshape(-1)])
    return _csv([f"axis_{a + 1}" for a in range(D)] + ["W"], rows)


def pdf_csv(pdf: BinnedPdf) -> str:
    rows = np.column_stack([pdf.edges[:-1], pdf.edges[1:], pdf.masses])
    return _csv(["bin_lo", "bin_hi", "mass"], rows)


def read_pdf_csv(path) -> BinnedPdf:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return BinnedPdf(np.append(data[:, 0], data[-1, 1]), data[:, 2])


def samples_csv(points: np.ndarray) -> str:
    D = points.shape[1]
    return _csv([f"y_{a + 1}" for a in range(D)], points)


def homodyne_csv(values: np.ndarray) -> str:
    return "".join(_fmt(v) + "\n" for v in values)


# -- reports, plans, context models -----------------------------------------------------------


def verdict_dict(kind: str, report: NegativityReport, spec: GridSpec, scope: str) -> dict:
    return {
        "verdict": kind,
        "min_wigner": report.min_value,
        "negativity_volume": report.negativity_volume,
        "grid": spec.to_dict(),
        "argmin": [float(v) for v in report.argmin],
        "total_mass": report.total_mass,
        "scope": scope,
    }


def plan_to_dict(plan: CircuitPlan) -> dict:
    gates = []
    for g in plan.gates:
        if isinstance(g, Rot):
            gates.append({"rot": {"mode": g.mode, "theta": g.theta}})
        else:
            gates.append({"cz": {"k": g.k, "l": g.l, "g": g.g}})
    return {
        "gates": gates,
        "homodyne": {"mode": plan.homodyne.mode, "phi": plan.homodyne.phi},
        "scale": plan.scale,
    }


def plan_from_dict(d: dict) -> CircuitPlan:
    try:
        gates = []
        for g in d["gates"]:
            if "rot" in g:
                gates.append(Rot(int(g["rot"]["mode"]), float(g["rot"]["theta"])))
            elif "cz" in g:
                gates.append(CZ(int(g["cz"]["k"]), int(g["cz"]["l"]), float(g["cz"]["g"])))
            else:
                raise FormatError(f"unknown gate entry {g!r}")
        h = d["homodyne"]
        return CircuitPlan(tuple(gates), Homodyne(int(h["mode"]), float(h["phi"])), float(d["scale"]))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed plan file: missing or invalid {exc}") from None


def context_model_dict(model: EmpiricalContextModel) -> dict:
    rep = model.representation
    if isinstance(rep, GaussianJoint):
        body = {"gaussian": {"mean": rep.mean.tolist(), "cov": rep.cov.tolist()}}
    else:
        assert isinstance(rep, GridJoint)
        body = {"grid": {"edges": [e.tolist() for e in rep.edges], "masses": rep.masses.tolist()}}
    return {"context": model.context.basis.tolist(), "representation": body}
