"""Numeric residual forms for every solver-supported constraint.

Each constraint maps to a short vector of scalars that is zero exactly
when the constraint is satisfied and smooth almost everywhere. Entities
are resolved to point/line/circle/arc views over the standard
parameterization; formulas run on floats for evaluation and on Jets for
derivative assembly.

Conventions pinned here (and in the tests):
- "left" means the positive side of an oriented line (counter-clockwise
  cross product), and the interior of a counter-clockwise circle.
- Half-space flags follow their local's slot; the flag attached to a
  point entity is ignored.
- Circle-circle tangency and mirror endpoint pairing pick the branch
  nearer zero at the reference geometry and hold it for a whole solve.
- Offset maintains the signed line-line gap measured at the reference
  geometry.
"""

from __future__ import annotations

import math
from typing import Mapping, Optional

from .errors import UnsupportedConstraint, UnsupportedPrimitive
from .jets import jatan2, jsqrt, jwrap
from .model import (
    Constraint,
    ConstraintType,
    Sketch,
    StdArc,
    StdCircle,
    StdEllipse,
    StdLine,
    StdPoint,
    standard_geometry,
)

CT = ConstraintType


class PointView:
    kind = "P"

    def __init__(self, p):
        self.p = p


class LineView:
    kind = "L"

    def __init__(self, s, e):
        self.s = s
        self.e = e


class CircleView:
    kind = "C"

    def __init__(self, c, r, clockwise=False):
        self.c = c
        self.r = r
        self.clockwise = clockwise


class ArcView(CircleView):
    kind = "A"

    def __init__(self, c, r, start, end, clockwise):
        super().__init__(c, r, clockwise)
        self.start = start
        self.end = end


def _sub(a, b):
    return (a[0] - b[0], a[1] - b[1])


def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1]


def _cross(a, b):
    return a[0] * b[1] - a[1] * b[0]


def _norm(a):
    return jsqrt(a[0] * a[0] + a[1] * a[1])


def _unit(a):
    n = _norm(a)
    return (a[0] / n, a[1] / n)


def _ldir(line):
    return _unit(_sub(line.e, line.s))


def entity_from_standard(std, selector: Optional[str]):
    """Resolve a standard primitive (plus optional sub-selector) to a view."""
    if isinstance(std, StdPoint):
        return PointView(std.p)
    if isinstance(std, StdLine):
        if selector == "start":
            return PointView(std.start)
        if selector == "end":
            return PointView(std.end)
        return LineView(std.start, std.end)
    if isinstance(std, StdCircle):
        if selector == "center":
            return PointView(std.center)
        return CircleView(std.center, std.radius)
    if isinstance(std, StdArc):
        if selector == "start":
            return PointView(std.start)
        if selector == "end":
            return PointView(std.end)
        if selector == "center":
            return PointView(std.center)
        return ArcView(std.center, std.radius, std.start, std.end, std.clockwise)
    if isinstance(std, StdEllipse):
        raise UnsupportedPrimitive("ellipses are not solver-supported")
    raise UnsupportedPrimitive(f"unsupported geometry {type(std).__name__}")


def resolve_entities(c: Constraint, geometry: Mapping) -> list:
    entities = []
    for ref in c.locals:
        if ref.index not in geometry:
            raise UnsupportedPrimitive(f"primitive {ref.index} has no solvable geometry")
        entities.append(entity_from_standard(geometry[ref.index], ref.selector))
    return entities


_RANK = {"P": 0, "L": 1, "C": 2, "A": 2}


def _ordered(e0, e1):
    """Point-first, line-second normalization; True if the pair was swapped."""
    if _RANK[e0.kind] > _RANK[e1.kind]:
        return e1, e0, True
    return e0, e1, False


def _combo(e0, e1):
    a, b, _ = _ordered(e0, e1)
    ka = "C" if a.kind == "A" else a.kind
    kb = "C" if b.kind == "A" else b.kind
    return ka + kb


def _point_line_signed(p, line):
    d = _ldir(line)
    return _cross(d, _sub(p, line.s))


def _center(e):
    if e.kind == "P":
        return e.p
    if e.kind in ("C", "A"):
        return e.c
    raise UnsupportedConstraint("entity has no center")


def _reflect(p, axis):
    d = _ldir(axis)
    v = _sub(p, axis.s)
    t = 2.0 * _dot(v, d)
    return (axis.s[0] + t * d[0] - v[0], axis.s[1] + t * d[1] - v[1])


def _coincident(e0, e1):
    a, b, _ = _ordered(e0, e1)
    combo = _combo(e0, e1)
    if combo == "PP":
        return [a.p[0] - b.p[0], a.p[1] - b.p[1]]
    if combo == "PL":
        return [_point_line_signed(a.p, b)]
    if combo == "PC":
        return [_norm(_sub(a.p, b.c)) - b.r]
    if combo == "LL":
        d = _ldir(a)
        return [_cross(d, _sub(b.s, a.s)), _cross(d, _sub(b.e, a.s))]
    if combo == "CC":
        return [a.c[0] - b.c[0], a.c[1] - b.c[1], a.r - b.r]
    raise UnsupportedConstraint(f"Coincident over {combo}")


def _axis_aligned(entities, axis: int):
    # axis 0 -> Vertical (equal x), axis 1 -> Horizontal (equal y)
    if len(entities) == 1:
        (e,) = entities
        if e.kind != "L":
            raise UnsupportedConstraint("single-entity alignment needs a line")
        return [e.e[axis] - e.s[axis]]
    a, b = entities
    if a.kind == "P" and b.kind == "P":
        return [a.p[axis] - b.p[axis]]
    if a.kind == "L" and b.kind == "L":
        return [a.e[axis] - a.s[axis], b.e[axis] - b.s[axis]]
    raise UnsupportedConstraint("alignment needs two points or two lines")


def _parallel(a, b):
    if a.kind != "L" or b.kind != "L":
        raise UnsupportedConstraint("Parallel needs two lines")
    return [_cross(_ldir(a), _ldir(b))]


def _perpendicular(a, b):
    if a.kind != "L" or b.kind != "L":
        raise UnsupportedConstraint("Perpendicular needs two lines")
    return [_dot(_ldir(a), _ldir(b))]


def _tangent(e0, e1, branch):
    a, b, _ = _ordered(e0, e1)
    combo = _combo(e0, e1)
    if combo == "LC":
        return [abs(_point_line_signed(b.c, a)) - b.r]
    if combo == "CC":
        gap = _norm(_sub(a.c, b.c))
        if branch == "internal":
            return [gap - abs(a.r - b.r)]
        return [gap - (a.r + b.r)]
    raise UnsupportedConstraint(f"Tangent over {combo}")


def _equal(a, b):
    combo = _combo(a, b)
    if combo == "LL":
        return [_norm(_sub(a.e, a.s)) - _norm(_sub(b.e, b.s))]
    if combo == "CC":
        return [a.r - b.r]
    raise UnsupportedConstraint(f"Equal over {combo}")


def _concentric(a, b):
    ca, cb = _center(a), _center(b)
    return [ca[0] - cb[0], ca[1] - cb[1]]


def _midpoint(e0, e1):
    a, b, _ = _ordered(e0, e1)
    if a.kind != "P" or b.kind != "L":
        raise UnsupportedConstraint("Midpoint needs a point and a line")
    return [
        a.p[0] - (b.s[0] + b.e[0]) / 2.0,
        a.p[1] - (b.s[1] + b.e[1]) / 2.0,
    ]


def _mirror(a, b, axis, branch):
    if axis.kind != "L":
        raise UnsupportedConstraint("Mirror axis must be a line")
    if a.kind == "P" and b.kind == "P":
        r = _reflect(a.p, axis)
        return [r[0] - b.p[0], r[1] - b.p[1]]
    if a.kind == "L" and b.kind == "L":
        rs, re = _reflect(a.s, axis), _reflect(a.e, axis)
        ts, te = (b.e, b.s) if branch == "swapped" else (b.s, b.e)
        return [rs[0] - ts[0], rs[1] - ts[1], re[0] - te[0], re[1] - te[1]]
    if a.kind == "A" and b.kind == "A":
        rs, re, rc = _reflect(a.start, axis), _reflect(a.end, axis), _reflect(a.c, axis)
        ts, te = (b.end, b.start) if branch == "swapped" else (b.start, b.end)
        return [
            rs[0] - ts[0],
            rs[1] - ts[1],
            re[0] - te[0],
            re[1] - te[1],
            rc[0] - b.c[0],
            rc[1] - b.c[1],
        ]
    if a.kind in ("C", "A") and b.kind in ("C", "A"):
        rc = _reflect(a.c, axis)
        return [rc[0] - b.c[0], rc[1] - b.c[1], a.r - b.r]
    raise UnsupportedConstraint(f"Mirror over {a.kind}{b.kind}")


def _half_space_sign(flag: Optional[str]) -> float:
    return -1.0 if flag == "right" else 1.0


def _distance(e0, e1, c: Constraint):
    target = c.length.meters
    if c.direction in ("vertical", "horizontal"):
        if e0.kind != "P" or e1.kind != "P":
            raise UnsupportedConstraint("directed distance needs two points")
        axis = 1 if c.direction == "vertical" else 0
        return [_half_space_sign(c.halfSpace0) * (e1.p[axis] - e0.p[axis]) - target]
    a, b, swapped = _ordered(e0, e1)
    hs = (c.halfSpace1, c.halfSpace0) if swapped else (c.halfSpace0, c.halfSpace1)
    combo = _combo(e0, e1)
    if combo == "PP":
        return [_norm(_sub(a.p, b.p)) - target]
    if combo == "PL":
        side = _half_space_sign(hs[1])  # the line's slot fixes the point's side
        return [side * _point_line_signed(a.p, b) - target]
    if combo == "PC":
        # left = interior for a counter-clockwise circle
        interior = (hs[1] == "left") != bool(b.clockwise)
        signed = _norm(_sub(a.p, b.c)) - b.r
        return [(-signed if interior else signed) - target]
    if combo == "LL":
        side = _half_space_sign(hs[0])
        d = _ldir(a)
        return [
            side * _cross(d, _sub(b.s, a.s)) - target,
            side * _cross(d, _sub(b.e, a.s)) - target,
        ]
    raise UnsupportedConstraint(f"Distance over {combo}")


def _length(e, c: Constraint):
    if e.kind != "L":
        raise UnsupportedConstraint("Length needs a line")
    target = c.length.meters
    if c.direction == "vertical":
        return [abs(e.e[1] - e.s[1]) - target]
    if c.direction == "horizontal":
        return [abs(e.e[0] - e.s[0]) - target]
    return [_norm(_sub(e.e, e.s)) - target]


def _radius(e, c: Constraint, diameter: bool):
    if e.kind not in ("C", "A"):
        raise UnsupportedConstraint("Radius/Diameter needs a circle or arc")
    scale = 2.0 if diameter else 1.0
    return [scale * e.r - c.length.meters]


def _angle(a, b, c: Constraint):
    if a.kind != "L" or b.kind != "L":
        raise UnsupportedConstraint("Angle needs two lines")
    d1 = _ldir(a)
    d2 = _ldir(b)
    if c.aligned is False:
        d2 = (-d2[0], -d2[1])
    theta = jatan2(_cross(d1, d2), _dot(d1, d2))
    if c.clockwise:
        theta = -theta
    return [jwrap(theta - math.radians(c.angle))]


def _offset(a, b, gap):
    if a.kind != "L" or b.kind != "L":
        raise UnsupportedConstraint("Offset needs two lines")
    d = _ldir(a)
    mid = ((b.s[0] + b.e[0]) / 2.0, (b.s[1] + b.e[1]) / 2.0)
    return [_cross(d, _ldir(b)), _cross(d, _sub(mid, a.s)) - gap]


def residual_branch(c: Constraint, geometry: Mapping) -> dict:
    """Branch decisions held fixed over a solve, taken at reference geometry."""
    if c.type is CT.TANGENT:
        e0, e1 = resolve_entities(c, geometry)
        if _combo(e0, e1) == "CC":
            a, b, _ = _ordered(e0, e1)
            gap = _norm(_sub(a.c, b.c))
            external = abs(gap - (a.r + b.r))
            internal = abs(gap - abs(a.r - b.r))
            return {"tangent": "internal" if internal < external else "external"}
        return {"tangent": "external"}
    if c.type is CT.MIRROR:
        a, b, axis = resolve_entities(c, geometry)
        if (a.kind, b.kind) in (("L", "L"), ("A", "A")):
            direct = _mirror(a, b, axis, "direct")
            swapped = _mirror(a, b, axis, "swapped")
            if sum(v * v for v in swapped) < sum(v * v for v in direct):
                return {"mirror": "swapped"}
        return {"mirror": "direct"}
    if c.type is CT.OFFSET:
        a, b = resolve_entities(c, geometry)
        if a.kind == "L" and b.kind == "L":
            d = _ldir(a)
            mid = ((b.s[0] + b.e[0]) / 2.0, (b.s[1] + b.e[1]) / 2.0)
            return {"offset_gap": _cross(d, _sub(mid, a.s))}
    return {}


def evaluate(c: Constraint, entities: list, branch: dict) -> list:
    t = c.type
    if t is CT.COINCIDENT:
        return _coincident(*entities)
    if t is CT.HORIZONTAL:
        return _axis_aligned(entities, 1)
    if t is CT.VERTICAL:
        return _axis_aligned(entities, 0)
    if t is CT.PARALLEL:
        return _parallel(*entities)
    if t is CT.PERPENDICULAR:
        return _perpendicular(*entities)
    if t is CT.TANGENT:
        return _tangent(*entities, branch.get("tangent", "external"))
    if t is CT.EQUAL:
        return _equal(*entities)
    if t is CT.CONCENTRIC:
        return _concentric(*entities)
    if t is CT.MIDPOINT:
        return _midpoint(*entities)
    if t is CT.MIRROR:
        return _mirror(*entities, branch.get("mirror", "direct"))
    if t is CT.DISTANCE:
        return _distance(entities[0], entities[1], c)
    if t is CT.LENGTH:
        return _length(entities[0], c)
    if t is CT.RADIUS:
        return _radius(entities[0], c, diameter=False)
    if t is CT.DIAMETER:
        return _radius(entities[0], c, diameter=True)
    if t is CT.ANGLE:
        return _angle(entities[0], entities[1], c)
    if t is CT.OFFSET:
        return _offset(entities[0], entities[1], branch.get("offset_gap", 0.0))
    raise UnsupportedConstraint(f"{t.value} has no residual form")


def residuals(c: Constraint, geometry: Mapping, branch: Optional[dict] = None) -> list:
    """Residual vector of c over standard geometry (index -> standard form)."""
    if branch is None:
        branch = residual_branch(c, geometry)
    return evaluate(c, resolve_entities(c, geometry), branch)


def is_satisfied(c: Constraint, sketch_or_geometry, tol: float) -> bool:
    """True iff every residual component is within tol of zero."""
    geometry = (
        standard_geometry(sketch_or_geometry)
        if isinstance(sketch_or_geometry, Sketch)
        else sketch_or_geometry
    )
    return max(abs(v) for v in residuals(c, geometry)) <= tol


def satisfaction_mask(sketch: Sketch, tol: float) -> list:
    """Per-constraint satisfaction; None where no residual form exists."""
    geometry = standard_geometry(sketch)
    mask = []
    for c in sketch.constraints:
        try:
            mask.append(max(abs(v) for v in residuals(c, geometry)) <= tol)
        except (UnsupportedConstraint, UnsupportedPrimitive):
            mask.append(None)
    return mask
