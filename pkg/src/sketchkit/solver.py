"""Damped least-squares constraint solving and edit propagation.

Free primitives become a flat variable vector over the standard
parameterization (arcs as center/radius/two angles). Solving minimizes
the stacked constraint residuals with a Levenberg damping schedule
(damping x10 on a failed step, /10 on an accepted one). A soft anchor
term first selects the solution nearest the reference configuration,
then an anchor-free polish drives the constraint residuals themselves
down to tolerance; Gauss-Newton steps carry no null-space motion, so the
polish stays at the selected solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

import numpy as np

from .errors import UnsupportedPrimitive
from .jets import Jet, jcos, jsin
from .model import (
    Arc,
    Circle,
    Line,
    Point,
    PrimitiveType,
    Sketch,
    StandardPrimitive,
    StdArc,
    StdCircle,
    StdLine,
    StdPoint,
    standard_geometry,
    validate_sketch,
)
from .residuals import (  # noqa: F401  (re-exported satisfaction API)
    ArcView,
    CircleView,
    LineView,
    PointView,
    evaluate,
    entity_from_standard,
    is_satisfied,
    residual_branch,
    residuals,
    satisfaction_mask,
)

SOLVABLE_TYPES = frozenset(
    {PrimitiveType.POINT, PrimitiveType.LINE, PrimitiveType.CIRCLE, PrimitiveType.ARC}
)


@dataclass(frozen=True)
class SolveOptions:
    residual_tolerance: float = 1e-8
    max_iterations: int = 200
    anchor_weight: float = 1e-4
    damping_init: float = 1e-3

    def __post_init__(self):
        if self.residual_tolerance <= 0 or self.max_iterations <= 0 or self.damping_init <= 0:
            raise ValueError("tolerance, iterations and damping must be positive")
        if self.anchor_weight < 0:
            raise ValueError("anchor weight must be nonnegative")


@dataclass(frozen=True)
class SolveResult:
    sketch: Sketch
    converged: bool
    iterations: int
    max_abs_residual: float
    per_constraint_residuals: tuple


@dataclass(frozen=True)
class Edit:
    """Pull one primitive toward target standard parameters."""

    index: int
    target: StandardPrimitive
    stiffness: float = 1e3


def _wrap_pi(a: float) -> float:
    wrapped = math.fmod(a, math.tau)
    if wrapped > math.pi:
        wrapped -= math.tau
    elif wrapped <= -math.pi:
        wrapped += math.tau
    return wrapped


def _positive_sweep(a: float) -> float:
    a = math.fmod(a, math.tau)
    return a + math.tau if a < 0 else a


def _std_params(std: StandardPrimitive) -> list:
    if isinstance(std, StdPoint):
        return [std.p[0], std.p[1]]
    if isinstance(std, StdLine):
        return [std.start[0], std.start[1], std.end[0], std.end[1]]
    if isinstance(std, StdCircle):
        return [std.center[0], std.center[1], std.radius]
    if isinstance(std, StdArc):
        ts = math.atan2(std.start[1] - std.center[1], std.start[0] - std.center[0])
        te_raw = math.atan2(std.end[1] - std.center[1], std.end[0] - std.center[0])
        if std.clockwise:
            te = ts - _positive_sweep(ts - te_raw)
        else:
            te = ts + _positive_sweep(te_raw - ts)
        return [std.center[0], std.center[1], std.radius, ts, te]
    raise UnsupportedPrimitive(f"{type(std).__name__} is not solver-parameterizable")


def _view_from_scalars(ptype: PrimitiveType, vals, clockwise: bool):
    if ptype is PrimitiveType.POINT:
        return PointView((vals[0], vals[1]))
    if ptype is PrimitiveType.LINE:
        return LineView((vals[0], vals[1]), (vals[2], vals[3]))
    if ptype is PrimitiveType.CIRCLE:
        return CircleView((vals[0], vals[1]), vals[2], clockwise)
    cx, cy, r, ts, te = vals
    start = (cx + r * jcos(ts), cy + r * jsin(ts))
    end = (cx + r * jcos(te), cy + r * jsin(te))
    return ArcView((cx, cy), r, start, end, clockwise)


def _subview(view, selector: Optional[str]):
    if selector is None:
        return view
    if selector == "center":
        return PointView(view.c)
    if isinstance(view, ArcView):
        return PointView(view.start if selector == "start" else view.end)
    return PointView(view.s if selector == "start" else view.e)


class _Block:
    """One constraint's residual rows plus their local Jacobian."""

    def __init__(self, c, layout, sketch, geometry):
        self.c = c
        self.branch = residual_branch(c, geometry)
        self.refs = c.locals
        prims = []
        for ref in self.refs:
            if ref.index not in prims:
                prims.append(ref.index)
        self.free = [i for i in prims if i in layout]
        self.slots = {}
        self.var_indices = []
        for i in self.free:
            offset, width = layout[i]
            self.slots[i] = (len(self.var_indices), width)
            self.var_indices.extend(range(offset, offset + width))
        self.static_views = {}
        for i in prims:
            if i in layout:
                continue
            if i not in geometry:
                raise UnsupportedPrimitive(f"primitive {i} has no solvable geometry")
            self.static_views[i] = entity_from_standard(geometry[i], None)
        self.types = {i: sketch.primitives[i].type for i in prims}
        self.cw = {
            i: bool(getattr(sketch.primitives[i], "clockwise", False)) for i in prims
        }
        self.layout = layout
        self.dim = 0  # set by the first evaluation

    def _views(self, x, as_jets: bool):
        width = len(self.var_indices)
        views = dict(self.static_views)
        for i in self.free:
            local, count = self.slots[i]
            offset = self.layout[i][0]
            if as_jets:
                vals = [Jet.variable(x[offset + j], local + j, width) for j in range(count)]
            else:
                vals = [x[offset + j] for j in range(count)]
            views[i] = _view_from_scalars(self.types[i], vals, self.cw[i])
        return [_subview(views[ref.index], ref.selector) for ref in self.refs]

    def eval(self, x) -> list:
        out = evaluate(self.c, self._views(x, as_jets=False), self.branch)
        self.dim = len(out)
        return out

    def eval_with_jacobian(self, x):
        rows = evaluate(self.c, self._views(x, as_jets=True), self.branch)
        vals = [r.val if isinstance(r, Jet) else float(r) for r in rows]
        width = len(self.var_indices)
        jac = np.zeros((len(rows), width))
        for k, r in enumerate(rows):
            if isinstance(r, Jet):
                jac[k] = r.grad
        self.dim = len(rows)
        return vals, jac


class _System:
    def __init__(self, sketch: Sketch, fixed: frozenset, geometry: dict):
        self.layout = {}
        x0 = []
        for i, p in enumerate(sketch.primitives):
            if i in fixed or p.type not in SOLVABLE_TYPES:
                continue
            params = _std_params(geometry[i])
            self.layout[i] = (len(x0), len(params))
            x0.extend(params)
        self.x0 = np.array(x0, dtype=float)
        self.blocks = [_Block(c, self.layout, sketch, geometry) for c in sketch.constraints]
        for block in self.blocks:
            block.eval(self.x0)  # fixes dims, surfaces unsupported forms early
        self.rows = sum(b.dim for b in self.blocks)

    def residual_vector(self, x) -> np.ndarray:
        out = np.empty(self.rows)
        at = 0
        for b in self.blocks:
            vals = b.eval(x)
            out[at : at + len(vals)] = vals
            at += len(vals)
        return out

    def jacobian(self, x):
        r = np.empty(self.rows)
        J = np.zeros((self.rows, self.x0.shape[0]))
        at = 0
        for b in self.blocks:
            vals, jac = b.eval_with_jacobian(x)
            r[at : at + len(vals)] = vals
            if b.var_indices:
                J[np.arange(at, at + len(vals))[:, None], b.var_indices] = jac
            at += len(vals)
        return r, J

    def per_constraint(self, x) -> tuple:
        return tuple(tuple(float(v) for v in b.eval(x)) for b in self.blocks)


def _max_abs(r: np.ndarray) -> float:
    return float(np.max(np.abs(r))) if r.size else 0.0


class _Anchors:
    """Quadratic pull of selected variables toward targets."""

    def __init__(self, indices, targets, weights):
        self.indices = np.asarray(indices, dtype=int)
        self.targets = np.asarray(targets, dtype=float)
        self.sqrt_w = np.sqrt(np.asarray(weights, dtype=float))

    def residual(self, x) -> np.ndarray:
        return self.sqrt_w * (x[self.indices] - self.targets)

    def jacobian_rows(self, n: int) -> np.ndarray:
        J = np.zeros((self.indices.shape[0], n))
        J[np.arange(self.indices.shape[0]), self.indices] = self.sqrt_w
        return J


def _lm_phase(system, x, anchors, opts, budget):
    """Run one damped least-squares phase; returns (x, used, satisfied)."""
    n = x.shape[0]
    tol = opts.residual_tolerance

    def full_residual(xv):
        r = system.residual_vector(xv)
        if anchors is None:
            return r, r
        return r, np.concatenate([r, anchors.residual(xv)])

    used = 0
    mu = opts.damping_init
    constraint_r, r = full_residual(x)
    cost = float(r @ r)
    while used < budget:
        if _max_abs(constraint_r) <= tol:
            return x, used, True
        _, J = system.jacobian(x)
        if anchors is not None:
            J = np.vstack([J, anchors.jacobian_rows(n)])
        g = J.T @ r
        A = J.T @ J
        accepted = False
        while used < budget:
            used += 1
            try:
                delta = np.linalg.solve(A + mu * np.eye(n), -g)
            except np.linalg.LinAlgError:
                delta = np.linalg.lstsq(A + mu * np.eye(n), -g, rcond=None)[0]
            x_new = x + delta
            constraint_new, r_new = full_residual(x_new)
            cost_new = float(r_new @ r_new)
            if math.isfinite(cost_new) and cost_new < cost:
                x, r, constraint_r, cost = x_new, r_new, constraint_new, cost_new
                mu = max(mu * 0.1, 1e-15)
                accepted = True
                break
            mu *= 10.0
            if mu > 1e12:
                return x, used, _max_abs(constraint_r) <= tol
        if not accepted:
            break
        step = float(np.linalg.norm(delta))
        if step <= 1e-14 * (1.0 + float(np.linalg.norm(x))):
            break
    return x, used, _max_abs(constraint_r) <= tol


def _write_back(p, vals) -> "Point | Line | Circle | Arc":
    if isinstance(p, Point):
        return replace(p, x=float(vals[0]), y=float(vals[1]))
    if isinstance(p, Line):
        sx, sy, ex, ey = (float(v) for v in vals)
        length = math.hypot(ex - sx, ey - sy)
        return replace(
            p,
            dirX=(ex - sx) / length,
            dirY=(ey - sy) / length,
            pntX=sx,
            pntY=sy,
            startParam=0.0,
            endParam=length,
        )
    if isinstance(p, Circle):
        return replace(
            p, xCenter=float(vals[0]), yCenter=float(vals[1]), radius=float(vals[2])
        )
    cx, cy, r, ts, te = (float(v) for v in vals)
    base = math.atan2(p.yDir, p.xDir)
    sense = -1.0 if p.clockwise else 1.0
    sp = _wrap_pi(sense * (ts - base))
    return replace(
        p,
        xCenter=cx,
        yCenter=cy,
        radius=r,
        startParam=sp,
        endParam=sp + sense * (te - ts),
    )


def _solved_sketch(sketch: Sketch, layout: dict, x: np.ndarray) -> Sketch:
    prims = list(sketch.primitives)
    for i, (offset, width) in layout.items():
        prims[i] = _write_back(prims[i], x[offset : offset + width])
    return replace(sketch, primitives=tuple(prims))


def _run(
    sketch: Sketch,
    fixed: frozenset,
    opts: SolveOptions,
    anchor_overrides: Optional[dict] = None,
) -> SolveResult:
    validate_sketch(sketch)
    geometry = standard_geometry(sketch)
    system = _System(sketch, fixed, geometry)
    x = system.x0.copy()
    r0 = system.residual_vector(x)
    if _max_abs(r0) <= opts.residual_tolerance or x.shape[0] == 0:
        return SolveResult(
            sketch,
            _max_abs(r0) <= opts.residual_tolerance,
            0,
            _max_abs(r0),
            system.per_constraint(x),
        )

    indices = []
    targets = []
    weights = []
    overrides = anchor_overrides or {}
    for i, (offset, width) in system.layout.items():
        target, weight = overrides.get(i, (None, opts.anchor_weight))
        values = system.x0[offset : offset + width] if target is None else target
        if weight <= 0:
            continue
        for j in range(width):
            indices.append(offset + j)
            targets.append(values[j])
            weights.append(weight)
    anchors = _Anchors(indices, targets, weights) if indices else None

    budget = opts.max_iterations
    used = 0
    if anchors is not None:
        x, spent, satisfied = _lm_phase(system, x, anchors, opts, budget // 2)
        used += spent
        if not satisfied:
            x, spent, satisfied = _lm_phase(system, x, None, opts, budget - used)
            used += spent
    else:
        x, used, satisfied = _lm_phase(system, x, None, opts, budget)

    final = system.residual_vector(x)
    return SolveResult(
        _solved_sketch(sketch, system.layout, x),
        _max_abs(final) <= opts.residual_tolerance,
        used,
        _max_abs(final),
        system.per_constraint(x),
    )


def solve(
    sketch: Sketch,
    fixed: Iterable[int] = (),
    options: Optional[SolveOptions] = None,
) -> SolveResult:
    """Adjust free primitives so every constraint holds, staying as close to
    the input configuration as the anchor weight asks for."""
    return _run(sketch, frozenset(fixed), options or SolveOptions())


def edit_propagate(
    sketch: Sketch,
    edits: Iterable[Edit],
    fixed: Iterable[int] = (),
    options: Optional[SolveOptions] = None,
) -> SolveResult:
    """Re-solve after user edits: strong anchors pull the edited primitives
    toward their targets while the imposed constraints stay hard."""
    opts = options or SolveOptions()
    overrides = {}
    for e in edits:
        overrides[e.index] = (_std_params(e.target), e.stiffness)
    if not overrides:
        return solve(sketch, fixed, opts)
    return _run(sketch, frozenset(fixed), opts, overrides)
