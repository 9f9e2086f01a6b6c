"""The uncertain scalar-coupled system family, its constraint sets, and stage cost.

The dynamics are ``x+ = (u, alpha*x2 + u + w)`` with box state bounds, an
interval control set U, and an interval disturbance set W.  On the domain of
interval boxes, reachability of a target box B from a source box A ("B is a
one-step successor of A") has an exact linear description: there exist edge
controls ``v1`` (applied on the lower x2-edge of A) and ``v2`` (upper edge)
such that the rows of :func:`build_g_block` hold; intermediate states use the
control interpolated linearly in x2.  That description is adopted here as the
defining encoding of the transition relation for this family.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .interval_sets import IntervalBox, subset
from .qp_solver import (
    DEFAULT_SETTINGS,
    QpBuilder,
    QpStatus,
    SolverFailure,
    SolverSettings,
    solve,
)

__all__ = [
    "ProblemSpec",
    "GConstraintBlock",
    "GRow",
    "ConfigError",
    "build_g_block",
    "install_slot_row",
    "transition_feasible",
    "stage_cost",
    "is_rci",
    "dynamics",
    "interpolated_control",
]

_INF = float("inf")

# a slot is either a builder variable index (int) or a fixed numeric value
Slot = Union[int, float]


class ConfigError(ValueError):
    """Malformed problem or run configuration."""


@dataclass(frozen=True)
class ProblemSpec:
    """Dynamics coefficient, constraint sets, and stage-cost coefficients.

    The stage cost on a box with corner vector a is
    ``L(a) = cost_linear . a + sum_i cost_quad[i] * a[i]**2``.
    Defaults reproduce the reference instance used throughout the tests.
    """

    alpha: float = 0.5
    x_bounds: IntervalBox = IntervalBox(lo=(-5.0, -5.0), hi=(5.0, 5.0))
    u_bounds: tuple[float, float] = (-5.0, 5.0)
    w_bounds: tuple[float, float] = (-1.0, 1.0)
    cost_linear: tuple[float, float, float, float] = (0.0, 2.0, 0.0, 0.0)
    cost_quad: tuple[float, float, float, float] = (0.15, 0.05, 0.1, 0.05)

    def __post_init__(self):
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "u_bounds", tuple(float(v) for v in self.u_bounds))
        object.__setattr__(self, "w_bounds", tuple(float(v) for v in self.w_bounds))
        object.__setattr__(self, "cost_linear", tuple(float(v) for v in self.cost_linear))
        object.__setattr__(self, "cost_quad", tuple(float(v) for v in self.cost_quad))
        if not math.isfinite(self.alpha) or self.alpha <= 0.0:
            # the edge-control encoding interpolates controls monotonically in
            # x2, which requires a positive dynamics coefficient
            raise ConfigError(f"alpha must be finite and positive, got {self.alpha}")
        if len(self.u_bounds) != 2 or self.u_bounds[0] > self.u_bounds[1]:
            raise ConfigError(f"u_bounds must be a nonempty interval, got {self.u_bounds}")
        if len(self.w_bounds) != 2 or self.w_bounds[0] > self.w_bounds[1]:
            raise ConfigError(f"w_bounds must be a nonempty interval, got {self.w_bounds}")
        if len(self.cost_linear) != 4 or len(self.cost_quad) != 4:
            raise ConfigError("cost_linear and cost_quad must have length 4")
        if any(d <= 0.0 for d in self.cost_quad):
            raise ConfigError("cost_quad entries must be positive (strict convexity)")

    @property
    def w_lo(self) -> float:
        return self.w_bounds[0]

    @property
    def w_hi(self) -> float:
        return self.w_bounds[1]

    @property
    def u_lo(self) -> float:
        return self.u_bounds[0]

    @property
    def u_hi(self) -> float:
        return self.u_bounds[1]

    @classmethod
    def default(cls) -> "ProblemSpec":
        return cls()

    def to_json_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "x_bounds": self.x_bounds.to_json_obj(),
            "u_bounds": list(self.u_bounds),
            "w_bounds": list(self.w_bounds),
            "cost_linear": list(self.cost_linear),
            "cost_quad": list(self.cost_quad),
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "ProblemSpec":
        known = {"alpha", "x_bounds", "u_bounds", "w_bounds", "cost_linear", "cost_quad"}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown problem config keys: {sorted(unknown)}")
        kwargs: dict = {}
        if "alpha" in obj:
            kwargs["alpha"] = obj["alpha"]
        if "x_bounds" in obj:
            kwargs["x_bounds"] = IntervalBox.from_json_obj(obj["x_bounds"])
        for key in ("u_bounds", "w_bounds", "cost_linear", "cost_quad"):
            if key in obj:
                kwargs[key] = tuple(obj[key])
        return cls(**kwargs)

    @classmethod
    def from_json_file(cls, path) -> "ProblemSpec":
        with open(path) as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
        return cls.from_json_dict(obj)


def stage_cost(spec: ProblemSpec, a: IntervalBox) -> float:
    """Stage cost of a box, evaluated on its corner vector."""
    c = a.corners()
    q = spec.cost_linear
    d = spec.cost_quad
    return sum(q[i] * c[i] + d[i] * c[i] * c[i] for i in range(4))


def dynamics(spec: ProblemSpec, x: Sequence[float], u: float, w: float) -> tuple[float, float]:
    """One step of the underlying point dynamics."""
    return (u, spec.alpha * x[1] + u + w)


def interpolated_control(spec: ProblemSpec, a: IntervalBox, v1: float, v2: float, x2: float) -> float:
    """Edge-control interpolation: v1 at the lower x2-edge of A, v2 at the upper.

    This is the constructive witness for "every state of A admits a control":
    states in between the edges use the linear interpolant.
    """
    lo, hi = a.lo[1], a.hi[1]
    if hi <= lo:
        return v1
    t = (x2 - lo) / (hi - lo)
    return v1 + (v2 - v1) * t


# ---------------------------------------------------------------------------
# transition-feasibility rows


def install_slot_row(builder: QpBuilder, coeffs, lo: float, hi: float) -> None:
    """Install one two-sided row whose terms reference variable or fixed slots.

    Fixed slots fold into the bounds; single-variable rows become box bounds;
    rows with no variables remain as constant feasibility assertions.
    """
    const = 0.0
    terms: dict[int, float] = {}
    for slot, coef in coeffs:
        if isinstance(slot, (int, np.integer)) and not isinstance(slot, bool):
            terms[int(slot)] = terms.get(int(slot), 0.0) + coef
        else:
            const += coef * float(slot)
    lo, hi = lo - const, hi - const
    if not terms:
        builder.add_row({}, lo, hi)
    elif len(terms) == 1:
        ((ix, coef),) = terms.items()
        if coef > 0:
            builder.bound(ix, lo / coef, hi / coef)
        else:
            builder.bound(ix, hi / coef, lo / coef)
    else:
        builder.add_row(terms, lo, hi)


@dataclass(frozen=True)
class GRow:
    """One two-sided row ``lo <= sum(coef * slot) <= hi`` over a/b/v slots."""

    coeffs: tuple[tuple[Slot, float], ...]
    lo: float
    hi: float


@dataclass(frozen=True)
class GConstraintBlock:
    """The linear rows encoding "B is reachable from A" with edge controls v.

    Rows reference slots, each of which is either a builder variable index or
    a fixed value; :meth:`install` resolves fixed slots into constants.  The
    block also carries the source-box state-bound rows, matching the
    convention that the transition constraint set restricts A to the state
    bounds while leaving B free.
    """

    rows: tuple[GRow, ...]

    def install(self, builder: QpBuilder) -> None:
        for row in self.rows:
            install_slot_row(builder, row.coeffs, row.lo, row.hi)

    def has_row(self, coeffs: dict[Slot, float], lo: float, hi: float, tol: float = 1e-12) -> bool:
        """True iff some row equals the given coefficients and bounds."""
        want = {k: v for k, v in coeffs.items() if v != 0.0}
        for row in self.rows:
            got: dict[Slot, float] = {}
            for slot, coef in row.coeffs:
                got[slot] = got.get(slot, 0.0) + coef
            got = {k: v for k, v in got.items() if v != 0.0}
            if set(got) != set(want):
                continue
            if any(abs(got[k] - want[k]) > tol for k in want):
                continue
            lo_ok = (math.isinf(lo) and math.isinf(row.lo)) or abs(row.lo - lo) <= tol
            hi_ok = (math.isinf(hi) and math.isinf(row.hi)) or abs(row.hi - hi) <= tol
            if lo_ok and hi_ok:
                return True
        return False


def build_g_block(
    spec: ProblemSpec,
    a_vars: Sequence[Slot],
    b_vars: Sequence[Slot],
    v_vars: Sequence[Slot],
) -> GConstraintBlock:
    """Rows stating that box b is a one-step successor of box a.

    ``a_vars``/``b_vars`` are the four corner slots of each box, ``v_vars``
    the two edge-control slots.  With w the disturbance bounds and alpha the
    dynamics coefficient the rows are

        b3 <= alpha*a3 + v1 + w_lo
        b4 >= alpha*a4 + v2 + w_hi
        a4 >= (1/alpha)*(v1 - v2) + a3
        b1 <= v1 <= b2,  b1 <= v2 <= b2
        v1, v2 in U
        a within the state bounds (including a1 <= a2, a3 <= a4)
    """
    a1, a2, a3, a4 = a_vars
    b1, b2, b3, b4 = b_vars
    v1, v2 = v_vars
    al = spec.alpha
    xb = spec.x_bounds
    rows = (
        GRow(((b3, 1.0), (a3, -al), (v1, -1.0)), -_INF, spec.w_lo),
        GRow(((a4, al), (v2, 1.0), (b4, -1.0)), -_INF, -spec.w_hi),
        GRow(((v1, 1.0 / al), (v2, -1.0 / al), (a3, 1.0), (a4, -1.0)), -_INF, 0.0),
        GRow(((b1, 1.0), (v1, -1.0)), -_INF, 0.0),
        GRow(((v1, 1.0), (b2, -1.0)), -_INF, 0.0),
        GRow(((b1, 1.0), (v2, -1.0)), -_INF, 0.0),
        GRow(((v2, 1.0), (b2, -1.0)), -_INF, 0.0),
        GRow(((v1, 1.0),), spec.u_lo, spec.u_hi),
        GRow(((v2, 1.0),), spec.u_lo, spec.u_hi),
        GRow(((a1, 1.0),), xb.lo[0], _INF),
        GRow(((a1, 1.0), (a2, -1.0)), -_INF, 0.0),
        GRow(((a2, 1.0),), -_INF, xb.hi[0]),
        GRow(((a3, 1.0),), xb.lo[1], _INF),
        GRow(((a3, 1.0), (a4, -1.0)), -_INF, 0.0),
        GRow(((a4, 1.0),), -_INF, xb.hi[1]),
    )
    return GConstraintBlock(rows=rows)


def transition_feasible(
    spec: ProblemSpec,
    a: IntervalBox,
    b: IntervalBox,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> bool:
    """Decide whether b is a one-step successor of a, via a feasibility QP.

    Solver non-convergence raises :class:`SolverFailure` rather than being
    reported as infeasibility.
    """
    builder = QpBuilder()
    v = builder.new_vars(2)
    block = build_g_block(spec, a.corners(), b.corners(), v)
    block.install(builder)
    sol = solve(builder.build(), settings)
    if sol.status is QpStatus.OPTIMAL:
        return True
    if sol.status is QpStatus.INFEASIBLE:
        return False
    raise SolverFailure(f"transition feasibility check did not converge: {sol.status}")


def is_rci(spec: ProblemSpec, a: IntervalBox, settings: SolverSettings = DEFAULT_SETTINGS) -> bool:
    """True iff a is a self-successor within the state bounds."""
    return subset(a, spec.x_bounds) and transition_feasible(spec, a, a, settings)
