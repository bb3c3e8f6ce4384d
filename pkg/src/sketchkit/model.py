"""Core domain types for 2D parametric sketches.

Primitives keep the overparameterized CAD-solver field layout (unit
direction vectors, signed curve parameters, explicit orientation flags)
and convert to/from a minimal standard parameterization. Constraints
carry typed, schema-checked parameter sets. All lengths are stored in
meters; quantities remember the unit they were authored in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Union

from .errors import (
    DanglingReference,
    DegenerateGeometry,
    ExtraParameter,
    MissingParameter,
    NonUnitDirection,
    UnknownSchema,
    UnsupportedPrimitive,
)

UNIT_TO_METERS = {"m": 1.0, "cm": 0.01, "mm": 0.001, "in": 0.0254}

# Display/snapping preference when several units describe a value equally well.
UNIT_ORDER = ("mm", "cm", "m", "in")


@dataclass(frozen=True)
class Quantity:
    """A length with the unit it was authored in."""

    value: float
    unit: str = "m"

    def __post_init__(self):
        if self.unit not in UNIT_TO_METERS:
            raise ValueError(f"unknown unit {self.unit!r}")

    @property
    def meters(self) -> float:
        return self.value * UNIT_TO_METERS[self.unit]

    def render(self) -> Union[str, float]:
        """File form: bare float for meters, '5 mm' style otherwise."""
        if self.unit == "m":
            return self.value
        return f"{self.value:g} {self.unit}"

    @staticmethod
    def parse(raw: Union[str, float, int]) -> "Quantity":
        if isinstance(raw, (int, float)) and not isinstance(raw, bool):
            return Quantity(float(raw), "m")
        if isinstance(raw, str):
            parts = raw.split()
            if len(parts) == 2 and parts[1] in UNIT_TO_METERS:
                return Quantity(float(parts[0]), parts[1])
        raise ValueError(f"not a length quantity: {raw!r}")


def format_length(meters: float) -> str:
    """Render a length in the unit requiring the fewest digits."""
    best = None
    for unit in UNIT_ORDER:
        text = f"{meters / UNIT_TO_METERS[unit]:.6g}"
        score = sum(ch.isdigit() for ch in text)
        if best is None or score < best[0]:
            best = (score, f"{text} {unit}")
    return best[1]


# Most frequent values seen for numeric constraint parameters in large CAD
# corpora: standard part sizes for lengths, even divisions of 360 for angles.
# Ordered most to least common; used for snapping and vocabulary seeding.
COMMON_LENGTHS = (
    Quantity(5, "mm"),
    Quantity(1, "cm"),
    Quantity(3, "mm"),
    Quantity(0.5, "in"),
    Quantity(2, "mm"),
    Quantity(1, "in"),
    Quantity(2, "cm"),
    Quantity(4, "mm"),
    Quantity(8, "mm"),
    Quantity(0.25, "in"),
)

COMMON_ANGLES_DEG = (45.0, 15.0, 60.0, 120.0, 30.0, 135.0, 90.0, 10.0, 20.0, 150.0)


class PrimitiveType(Enum):
    POINT = "Point"
    LINE = "Line"
    CIRCLE = "Circle"
    ARC = "Arc"
    ELLIPSE = "Ellipse"
    SPLINE = "Spline"


_UNIT_TOL = 1e-9


def _check_unit(x: float, y: float) -> None:
    if abs(math.hypot(x, y) - 1.0) > _UNIT_TOL:
        raise NonUnitDirection(f"({x}, {y}) has norm {math.hypot(x, y)}")


@dataclass(frozen=True)
class Point:
    x: float
    y: float
    isConstruction: bool = False
    extras: dict = field(default_factory=dict, compare=False, repr=False)

    type = PrimitiveType.POINT


@dataclass(frozen=True)
class Line:
    """Infinite carrier (point + unit direction) clipped by signed parameters."""

    dirX: float
    dirY: float
    pntX: float
    pntY: float
    startParam: float
    endParam: float
    isConstruction: bool = False
    extras: dict = field(default_factory=dict, compare=False, repr=False)

    type = PrimitiveType.LINE

    def __post_init__(self):
        _check_unit(self.dirX, self.dirY)
        if self.startParam == self.endParam:
            raise DegenerateGeometry("zero-length line")


@dataclass(frozen=True)
class Circle:
    xCenter: float
    yCenter: float
    xDir: float
    yDir: float
    radius: float
    clockwise: bool = False
    isConstruction: bool = False
    extras: dict = field(default_factory=dict, compare=False, repr=False)

    type = PrimitiveType.CIRCLE

    def __post_init__(self):
        _check_unit(self.xDir, self.yDir)
        if self.radius <= 0:
            raise DegenerateGeometry("radius must be positive")


@dataclass(frozen=True)
class Arc:
    """Circle fields plus start/end angles measured from the direction vector.

    Angles sweep counter-clockwise, or clockwise when the flag is set.
    """

    xCenter: float
    yCenter: float
    xDir: float
    yDir: float
    radius: float
    clockwise: bool
    startParam: float
    endParam: float
    isConstruction: bool = False
    extras: dict = field(default_factory=dict, compare=False, repr=False)

    type = PrimitiveType.ARC

    def __post_init__(self):
        _check_unit(self.xDir, self.yDir)
        if self.radius <= 0:
            raise DegenerateGeometry("radius must be positive")


@dataclass(frozen=True)
class Ellipse:
    xCenter: float
    yCenter: float
    xDir: float
    yDir: float
    radius: float
    minorRadius: float
    clockwise: bool = False
    isConstruction: bool = False
    extras: dict = field(default_factory=dict, compare=False, repr=False)

    type = PrimitiveType.ELLIPSE

    def __post_init__(self):
        _check_unit(self.xDir, self.yDir)
        if self.radius <= 0 or self.minorRadius <= 0:
            raise DegenerateGeometry("radii must be positive")
        if self.minorRadius > self.radius:
            raise DegenerateGeometry("minorRadius exceeds major radius")


@dataclass(frozen=True)
class Spline:
    controlPoints: tuple
    isConstruction: bool = False
    extras: dict = field(default_factory=dict, compare=False, repr=False)

    type = PrimitiveType.SPLINE

    def __post_init__(self):
        object.__setattr__(
            self, "controlPoints", tuple((float(x), float(y)) for x, y in self.controlPoints)
        )


Primitive = Union[Point, Line, Circle, Arc, Ellipse, Spline]

# Sub-primitive selectors that constraints may target, per primitive type.
SELECTORS = {
    PrimitiveType.POINT: (),
    PrimitiveType.LINE: ("start", "end"),
    PrimitiveType.CIRCLE: ("center",),
    PrimitiveType.ARC: ("start", "end", "center"),
    PrimitiveType.ELLIPSE: ("center",),
    PrimitiveType.SPLINE: (),
}

_DOF = {
    PrimitiveType.POINT: 2,
    PrimitiveType.LINE: 4,
    PrimitiveType.CIRCLE: 3,
    PrimitiveType.ARC: 5,
    PrimitiveType.ELLIPSE: 5,
}


def dof_of_primitive(p: Union[Primitive, PrimitiveType]) -> int:
    """Degrees of freedom of a primitive (2 per control point for splines)."""
    if isinstance(p, PrimitiveType):
        if p is PrimitiveType.SPLINE:
            raise ValueError("spline DOF depends on its control-point count")
        return _DOF[p]
    if isinstance(p, Spline):
        return 2 * len(p.controlPoints)
    return _DOF[p.type]


# --- standard (minimal) parameterization -----------------------------------

XY = tuple  # (x, y) pair


@dataclass(frozen=True)
class StdPoint:
    p: XY


@dataclass(frozen=True)
class StdLine:
    start: XY
    end: XY


@dataclass(frozen=True)
class StdCircle:
    center: XY
    radius: float


@dataclass(frozen=True)
class StdArc:
    center: XY
    radius: float
    start: XY
    end: XY
    clockwise: bool


@dataclass(frozen=True)
class StdEllipse:
    center: XY
    majorDir: XY
    radius: float
    minorRadius: float


StandardPrimitive = Union[StdPoint, StdLine, StdCircle, StdArc, StdEllipse]

_STD_DOF = {StdPoint: 2, StdLine: 4, StdCircle: 3, StdArc: 5, StdEllipse: 5}


def dof_of_standard(s: StandardPrimitive) -> int:
    return _STD_DOF[type(s)]


_CONV_TOL = 1e-6


def to_standard(p: Primitive) -> StandardPrimitive:
    """Project the overparameterized form onto the minimal one."""
    if isinstance(p, Point):
        return StdPoint((p.x, p.y))
    if isinstance(p, Line):
        if abs(math.hypot(p.dirX, p.dirY) - 1.0) > _CONV_TOL:
            raise NonUnitDirection("line direction not unit length")
        return StdLine(
            (p.pntX + p.startParam * p.dirX, p.pntY + p.startParam * p.dirY),
            (p.pntX + p.endParam * p.dirX, p.pntY + p.endParam * p.dirY),
        )
    if isinstance(p, Circle):
        if abs(math.hypot(p.xDir, p.yDir) - 1.0) > _CONV_TOL:
            raise NonUnitDirection("circle direction not unit length")
        return StdCircle((p.xCenter, p.yCenter), p.radius)
    if isinstance(p, Arc):
        if abs(math.hypot(p.xDir, p.yDir) - 1.0) > _CONV_TOL:
            raise NonUnitDirection("arc direction not unit length")
        sense = -1.0 if p.clockwise else 1.0
        base = math.atan2(p.yDir, p.xDir)

        def at(param):
            a = base + sense * param
            return (p.xCenter + p.radius * math.cos(a), p.yCenter + p.radius * math.sin(a))

        return StdArc(
            (p.xCenter, p.yCenter), p.radius, at(p.startParam), at(p.endParam), p.clockwise
        )
    if isinstance(p, Ellipse):
        if abs(math.hypot(p.xDir, p.yDir) - 1.0) > _CONV_TOL:
            raise NonUnitDirection("ellipse direction not unit length")
        return StdEllipse((p.xCenter, p.yCenter), (p.xDir, p.yDir), p.radius, p.minorRadius)
    raise UnsupportedPrimitive(f"no standard form for {p.type.value}")


def _tau_wrap(a: float) -> float:
    """Wrap an angle into [0, 2*pi)."""
    a = math.fmod(a, math.tau)
    return a + math.tau if a < 0 else a


def from_standard(s: StandardPrimitive, is_construction: bool = False) -> Primitive:
    """Inverse of ``to_standard`` with a canonical gauge choice.

    Lines anchor at their start point with a zero start parameter; circles
    and ellipses take a counter-clockwise +x direction; arcs anchor the
    direction vector at the start point.
    """
    if isinstance(s, StdPoint):
        return Point(s.p[0], s.p[1], is_construction)
    if isinstance(s, StdLine):
        dx, dy = s.end[0] - s.start[0], s.end[1] - s.start[1]
        length = math.hypot(dx, dy)
        if length < 1e-12:
            raise DegenerateGeometry("zero-length line")
        return Line(dx / length, dy / length, s.start[0], s.start[1], 0.0, length, is_construction)
    if isinstance(s, StdCircle):
        if s.radius <= 0:
            raise DegenerateGeometry("zero radius")
        return Circle(s.center[0], s.center[1], 1.0, 0.0, s.radius, False, is_construction)
    if isinstance(s, StdArc):
        if s.radius <= 0:
            raise DegenerateGeometry("zero radius")
        ts = math.atan2(s.start[1] - s.center[1], s.start[0] - s.center[0])
        te = math.atan2(s.end[1] - s.center[1], s.end[0] - s.center[0])
        sweep = _tau_wrap(ts - te) if s.clockwise else _tau_wrap(te - ts)
        return Arc(
            s.center[0],
            s.center[1],
            math.cos(ts),
            math.sin(ts),
            s.radius,
            s.clockwise,
            0.0,
            sweep,
            is_construction,
        )
    if isinstance(s, StdEllipse):
        if s.radius <= 0 or s.minorRadius <= 0:
            raise DegenerateGeometry("zero radius")
        return Ellipse(
            s.center[0],
            s.center[1],
            s.majorDir[0],
            s.majorDir[1],
            s.radius,
            s.minorRadius,
            False,
            is_construction,
        )
    raise UnsupportedPrimitive(f"cannot build a primitive from {type(s).__name__}")


# --- constraints ------------------------------------------------------------


class ConstraintType(Enum):
    COINCIDENT = "Coincident"
    HORIZONTAL = "Horizontal"
    VERTICAL = "Vertical"
    PARALLEL = "Parallel"
    PERPENDICULAR = "Perpendicular"
    TANGENT = "Tangent"
    MIDPOINT = "Midpoint"
    EQUAL = "Equal"
    OFFSET = "Offset"
    CONCENTRIC = "Concentric"
    MIRROR = "Mirror"
    DIAMETER = "Diameter"
    RADIUS = "Radius"
    LENGTH = "Length"
    DISTANCE = "Distance"
    ANGLE = "Angle"
    # Parsed for completeness; involves geometry outside the sketch, so it
    # carries no residual form and is skipped by the solver.
    PROJECTED = "Projected"


EXTERNAL_CONSTRAINT_TYPES = frozenset({ConstraintType.PROJECTED})

DIRECTIONS = ("minimum", "vertical", "horizontal")
HALF_SPACES = ("left", "right")


@dataclass(frozen=True)
class EntityRef:
    """Reference to a primitive or one of its sub-primitives."""

    index: int
    selector: Optional[str] = None  # start | end | center

    def render(self) -> str:
        return str(self.index) if self.selector is None else f"{self.index}.{self.selector}"

    @staticmethod
    def parse(raw: Union[str, int]) -> "EntityRef":
        if isinstance(raw, int):
            return EntityRef(raw)
        text = str(raw)
        if "." in text:
            idx, sel = text.split(".", 1)
            if sel not in ("start", "end", "center"):
                raise ValueError(f"bad sub-primitive selector {sel!r}")
            return EntityRef(int(idx), sel)
        return EntityRef(int(text))


@dataclass(frozen=True)
class Constraint:
    type: ConstraintType
    locals: tuple
    length: Optional[Quantity] = None
    angle: Optional[float] = None  # degrees
    clockwise: Optional[bool] = None
    aligned: Optional[bool] = None
    direction: Optional[str] = None
    halfSpace0: Optional[str] = None
    halfSpace1: Optional[str] = None
    provenance: Optional[str] = None  # predicted | ground_truth
    extras: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "locals", tuple(self.locals))
        if self.direction is not None and self.direction not in DIRECTIONS:
            raise ValueError(f"bad direction {self.direction!r}")
        for hs in (self.halfSpace0, self.halfSpace1):
            if hs is not None and hs not in HALF_SPACES:
                raise ValueError(f"bad halfSpace {hs!r}")


_PARAM_NAMES = ("length", "angle", "clockwise", "aligned", "direction", "halfSpace0", "halfSpace1")

# (locals count, required parameter names) per constraint type. Types that
# accept both single- and two-entity forms list one schema per arity.
_SCHEMAS = {
    ConstraintType.COINCIDENT: ((2, frozenset()),),
    ConstraintType.HORIZONTAL: ((1, frozenset()), (2, frozenset())),
    ConstraintType.VERTICAL: ((1, frozenset()), (2, frozenset())),
    ConstraintType.PARALLEL: ((2, frozenset()),),
    ConstraintType.PERPENDICULAR: ((2, frozenset()),),
    ConstraintType.TANGENT: ((2, frozenset()),),
    ConstraintType.MIDPOINT: ((2, frozenset()),),
    ConstraintType.EQUAL: ((2, frozenset()),),
    ConstraintType.OFFSET: ((2, frozenset()),),
    ConstraintType.CONCENTRIC: ((2, frozenset()),),
    ConstraintType.MIRROR: ((3, frozenset()),),
    ConstraintType.DIAMETER: ((1, frozenset({"length"})),),
    ConstraintType.RADIUS: ((1, frozenset({"length"})),),
    ConstraintType.LENGTH: ((1, frozenset({"direction", "length"})),),
    ConstraintType.DISTANCE: (
        (2, frozenset({"direction", "halfSpace0", "halfSpace1", "length"})),
    ),
    ConstraintType.ANGLE: ((2, frozenset({"aligned", "clockwise", "angle"})),),
    ConstraintType.PROJECTED: ((1, frozenset()), (2, frozenset())),
}


@dataclass(frozen=True)
class Sketch:
    id: str
    primitives: tuple
    constraints: tuple
    extras: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "primitives", tuple(self.primitives))
        object.__setattr__(self, "constraints", tuple(self.constraints))


def resolve_ref(ref: EntityRef, sketch: Sketch) -> Primitive:
    """Return the referenced primitive, checking index and selector validity."""
    if not 0 <= ref.index < len(sketch.primitives):
        raise DanglingReference(f"no primitive {ref.index} in sketch {sketch.id}")
    p = sketch.primitives[ref.index]
    if ref.selector is not None and ref.selector not in SELECTORS[p.type]:
        raise DanglingReference(f"{p.type.value} has no {ref.selector!r} sub-primitive")
    return p


def validate_constraint(c: Constraint, sketch: Sketch) -> None:
    """Check c against the known parameter schemas; raises SchemaError.

    Locals are matched by count first; the present optional parameters must
    then equal the schema's required set exactly.
    """
    schemas = _SCHEMAS.get(c.type)
    if schemas is None:
        raise UnknownSchema(f"no schemas for {c.type.value}")
    matching = [req for n, req in schemas if n == len(c.locals)]
    if not matching:
        raise UnknownSchema(f"{c.type.value} does not take {len(c.locals)} locals")
    required = matching[0]
    present = {name for name in _PARAM_NAMES if getattr(c, name) is not None}
    missing = required - present
    if missing:
        raise MissingParameter(f"{c.type.value} missing {sorted(missing)[0]}")
    extra = present - required
    if extra:
        raise ExtraParameter(f"{c.type.value} does not take {sorted(extra)[0]}")
    for ref in c.locals:
        resolve_ref(ref, sketch)


def validate_sketch(sketch: Sketch) -> None:
    for c in sketch.constraints:
        validate_constraint(c, sketch)


def standard_geometry(sketch: Sketch) -> dict:
    """Standard forms of every convertible primitive, keyed by index."""
    geometry = {}
    for i, p in enumerate(sketch.primitives):
        if not isinstance(p, Spline):
            geometry[i] = to_standard(p)
    return geometry


def replace_primitive(sketch: Sketch, index: int, primitive: Primitive) -> Sketch:
    prims = list(sketch.primitives)
    prims[index] = primitive
    return replace(sketch, primitives=tuple(prims))
