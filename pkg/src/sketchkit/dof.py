"""Degrees-of-freedom accounting for sketches and constraints.

The removed-DOF catalog equals the residual dimension of each constraint
form, which keeps this accounting and the solver consistent by design.
Redundant constraints still count; the over-constrained flag surfaces the
discrepancy. A sketch whose remaining count is 3 is fully constrained up
to a rigid-body transform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from .errors import DegenerateVariance, UnsupportedConstraint, UnsupportedPrimitive
from .model import Constraint, ConstraintType, Sketch, dof_of_primitive

CT = ConstraintType


@dataclass(frozen=True)
class DofReport:
    total_dof: int
    removed_dof: int
    remaining_dof: int
    over_constrained: bool
    uncounted_constraints: int = 0


def _entity_kind(c: Constraint, sketch: Sketch, slot: int) -> str:
    ref = c.locals[slot]
    if ref.selector is not None:
        return "P"
    return {
        "Point": "P",
        "Line": "L",
        "Circle": "C",
        "Arc": "A",
        "Ellipse": "E",
        "Spline": "S",
    }[sketch.primitives[ref.index].type.value]


def _pair_kinds(c: Constraint, sketch: Sketch) -> str:
    kinds = sorted(
        (_entity_kind(c, sketch, 0), _entity_kind(c, sketch, 1)),
        key=lambda k: {"P": 0, "L": 1, "C": 2, "A": 2, "E": 3, "S": 3}[k],
    )
    return "".join("C" if k == "A" else k for k in kinds)


def constraint_dof_removed(c: Constraint, sketch: Sketch) -> int:
    """Catalog count of scalar DOF removed; 0 for uncounted forms."""
    t = c.type
    try:
        if t is CT.COINCIDENT:
            return {"PP": 2, "PL": 1, "PC": 1, "LL": 2, "CC": 3}[_pair_kinds(c, sketch)]
        if t in (CT.HORIZONTAL, CT.VERTICAL):
            if len(c.locals) == 1:
                return 1 if _entity_kind(c, sketch, 0) == "L" else 0
            return {"PP": 1, "LL": 2}.get(_pair_kinds(c, sketch), 0)
        if t in (CT.PARALLEL, CT.PERPENDICULAR):
            return 1 if _pair_kinds(c, sketch) == "LL" else 0
        if t is CT.TANGENT:
            return 1 if _pair_kinds(c, sketch) in ("LC", "CC") else 0
        if t is CT.EQUAL:
            return 1 if _pair_kinds(c, sketch) in ("LL", "CC") else 0
        if t is CT.CONCENTRIC:
            return 2
        if t is CT.MIDPOINT:
            return 2
        if t is CT.MIRROR:
            ka = _entity_kind(c, sketch, 0)
            kb = _entity_kind(c, sketch, 1)
            if (ka, kb) == ("P", "P"):
                return 2
            if (ka, kb) == ("L", "L"):
                return 4
            if (ka, kb) == ("A", "A"):
                return 6
            if ka in ("C", "A") and kb in ("C", "A"):
                return 3
            return 0
        if t is CT.DISTANCE:
            if c.direction in ("vertical", "horizontal"):
                return 1
            return {"PP": 1, "PL": 1, "PC": 1, "LL": 2}.get(_pair_kinds(c, sketch), 0)
        if t in (CT.LENGTH, CT.RADIUS, CT.DIAMETER, CT.ANGLE):
            return 1
        if t is CT.OFFSET:
            return 2 if _pair_kinds(c, sketch) == "LL" else 0
    except KeyError:
        return 0
    return 0  # external/unsupported constraints are uncounted


def is_dof_counted(c: Constraint, sketch: Sketch) -> bool:
    return constraint_dof_removed(c, sketch) > 0


def sketch_dof_report(sketch: Sketch) -> DofReport:
    total = sum(dof_of_primitive(p) for p in sketch.primitives)
    removed = 0
    uncounted = 0
    for c in sketch.constraints:
        d = constraint_dof_removed(c, sketch)
        removed += d
        if d == 0:
            uncounted += 1
    return DofReport(total, removed, max(0, total - removed), removed > total, uncounted)


def dof_correlation(reports: Iterable[DofReport]) -> float:
    """Pearson correlation between total and removed DOF across sketches."""
    totals = []
    removed = []
    for rep in reports:
        totals.append(rep.total_dof)
        removed.append(rep.removed_dof)
    n = len(totals)
    if n < 2:
        raise DegenerateVariance("need at least two sketches")
    mt = sum(totals) / n
    mr = sum(removed) / n
    vt = sum((t - mt) ** 2 for t in totals)
    vr = sum((r - mr) ** 2 for r in removed)
    if vt == 0 or vr == 0:
        raise DegenerateVariance("zero variance in DOF counts")
    cov = sum((t - mt) * (r - mr) for t, r in zip(totals, removed))
    return cov / math.sqrt(vt * vr)


def write_dof_reports(sketches: Iterable[Sketch], path) -> int:
    """One tab-separated line per sketch: id, total, removed, remaining."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for s in sketches:
            rep = sketch_dof_report(s)
            fh.write(f"{s.id}\t{rep.total_dof}\t{rep.removed_dof}\t{rep.remaining_dof}\n")
            count += 1
    return count


def jacobian_rank_dof(sketch: Sketch, tol: float = 1e-9) -> int:
    """Diagnostic only: remaining DOF as variable count minus the numeric
    rank of the full constraint Jacobian at the current configuration."""
    import numpy as np

    from .model import standard_geometry
    from .solver import _System

    try:
        system = _System(sketch, frozenset(), standard_geometry(sketch))
    except (UnsupportedConstraint, UnsupportedPrimitive):
        raise
    if system.x0.shape[0] == 0:
        return 0
    _, J = system.jacobian(system.x0)
    if J.shape[0] == 0:
        return system.x0.shape[0]
    rank = int(np.linalg.matrix_rank(J, tol=tol))
    return system.x0.shape[0] - rank
