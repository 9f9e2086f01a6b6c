"""Storage functions and separability certificates for the transition system.

A storage candidate is affine in the corner vector on boxes inside the state
bounds and constant outside.  Separability of the one-step cost-to-travel
function with respect to such a candidate W means

    V(A, B, 1) - V* >= W(B) - W(A)    for all boxes A, B,

which is certified here by minimizing ``L(a) + W(a) - W(b)`` over a relaxed
superset of the one-step transition constraints: if even the relaxed minimum
reaches V*, the inequality holds on the full domain.  Strictness (uniqueness
of the minimizing pair) is probed by seeded sampling, not certified; the
relaxed program is degenerate in several target coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cost_to_travel import eval_v, optimal_rci
from .interval_sets import IntervalBox, hausdorff, subset
from .problem import ProblemSpec
from .qp_solver import (
    DEFAULT_SETTINGS,
    QpBuilder,
    QpStatus,
    SolverFailure,
    SolverSettings,
    solve,
)
from .sampling import feasible_pair

__all__ = [
    "StorageFunction",
    "SeparabilityReport",
    "StrictnessSummary",
    "eval_storage",
    "verify_separability",
    "check_strictness",
    "storage_min_on_domain",
]

_INF = float("inf")


@dataclass(frozen=True)
class StorageFunction:
    """Affine-in-corners storage candidate with a domain indicator.

    Evaluates to ``offset + linear_coeffs . corners(A)`` when A lies within
    the state bounds and to ``outside_value`` otherwise.
    """

    offset: float
    linear_coeffs: tuple[float, float, float, float]
    outside_value: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "offset", float(self.offset))
        object.__setattr__(self, "linear_coeffs", tuple(float(c) for c in self.linear_coeffs))
        object.__setattr__(self, "outside_value", float(self.outside_value))
        if len(self.linear_coeffs) != 4:
            raise ValueError("linear_coeffs must have length 4")

    @classmethod
    def reference(cls) -> "StorageFunction":
        """The reference storage candidate: 16 + 1.6*(a3 - a2) inside the bounds."""
        return cls(offset=16.0, linear_coeffs=(0.0, -1.6, 1.6, 0.0))

    @classmethod
    def zero(cls) -> "StorageFunction":
        return cls(offset=0.0, linear_coeffs=(0.0, 0.0, 0.0, 0.0))

    def to_json_dict(self) -> dict:
        return {
            "offset": self.offset,
            "linear": list(self.linear_coeffs),
            "outside_value": self.outside_value,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "StorageFunction":
        known = {"offset", "linear", "outside_value"}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown storage keys: {sorted(unknown)}")
        return cls(
            offset=obj.get("offset", 0.0),
            linear_coeffs=tuple(obj.get("linear", (0.0, 0.0, 0.0, 0.0))),
            outside_value=obj.get("outside_value", 0.0),
        )


def eval_storage(sf: StorageFunction, spec: ProblemSpec, a: IntervalBox) -> float:
    if not subset(a, spec.x_bounds):
        return sf.outside_value
    c = a.corners()
    return sf.offset + sum(sf.linear_coeffs[i] * c[i] for i in range(4))


def storage_min_on_domain(
    spec: ProblemSpec,
    sf: StorageFunction,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> float:
    """Minimum of the affine storage form over all boxes within the bounds.

    A linear program over the corner polytope; nonnegativity of the storage
    candidate on its domain is ``min >= 0`` together with a nonnegative
    outside value.
    """
    builder = QpBuilder()
    a = builder.new_vars(4)
    xb = spec.x_bounds
    builder.bound(a[0], xb.lo[0], xb.hi[0])
    builder.bound(a[1], xb.lo[0], xb.hi[0])
    builder.bound(a[2], xb.lo[1], xb.hi[1])
    builder.bound(a[3], xb.lo[1], xb.hi[1])
    builder.add_row({a[0]: 1.0, a[1]: -1.0}, -_INF, 0.0)
    builder.add_row({a[2]: 1.0, a[3]: -1.0}, -_INF, 0.0)
    for i in range(4):
        builder.add_lin(a[i], sf.linear_coeffs[i])
    builder.add_const(sf.offset)
    sol = solve(builder.build(), settings)
    if sol.status is not QpStatus.OPTIMAL:
        raise SolverFailure(f"storage minimization did not converge: {sol.status}")
    return float(sol.objective)


@dataclass(frozen=True)
class StrictnessSummary:
    """Sampled margins of the separability inequality away from the minimizer."""

    n_samples: int
    min_margin: float
    n_nonpositive: int
    worst_pair: Optional[tuple[IntervalBox, IntervalBox]]

    def to_json_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "min_margin": self.min_margin,
            "n_nonpositive": self.n_nonpositive,
            "worst_pair": None
            if self.worst_pair is None
            else [self.worst_pair[0].to_json_obj(), self.worst_pair[1].to_json_obj()],
        }


@dataclass(frozen=True)
class SeparabilityReport:
    qp_min_value: float
    minimizer_a: Optional[tuple[float, float, float, float]]
    minimizer_b: Optional[tuple[float, float, float, float]]
    minimizer_v: Optional[float]
    v_star: float
    gap: float
    passed: bool
    unbounded_ray: Optional[tuple[float, ...]] = None
    strictness: Optional[StrictnessSummary] = None

    def to_json_dict(self) -> dict:
        return {
            "qp_min_value": None if math.isinf(self.qp_min_value) else self.qp_min_value,
            "minimizer_a": list(self.minimizer_a) if self.minimizer_a else None,
            "minimizer_b": list(self.minimizer_b) if self.minimizer_b else None,
            "minimizer_v": self.minimizer_v,
            "v_star": self.v_star,
            "gap": None if math.isinf(self.gap) else self.gap,
            "passed": self.passed,
            "unbounded": self.unbounded_ray is not None,
            "strictness": None if self.strictness is None else self.strictness.to_json_dict(),
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "SeparabilityReport":
        strict = obj.get("strictness")
        return cls(
            qp_min_value=-_INF if obj["qp_min_value"] is None else float(obj["qp_min_value"]),
            minimizer_a=None if obj["minimizer_a"] is None else tuple(obj["minimizer_a"]),
            minimizer_b=None if obj["minimizer_b"] is None else tuple(obj["minimizer_b"]),
            minimizer_v=obj["minimizer_v"],
            v_star=float(obj["v_star"]),
            gap=-_INF if obj["gap"] is None else float(obj["gap"]),
            passed=bool(obj["passed"]),
            unbounded_ray=None,
            strictness=None
            if strict is None
            else StrictnessSummary(
                n_samples=strict["n_samples"],
                min_margin=strict["min_margin"],
                n_nonpositive=strict["n_nonpositive"],
                worst_pair=None
                if strict["worst_pair"] is None
                else (
                    IntervalBox.from_json_obj(strict["worst_pair"][0]),
                    IntervalBox.from_json_obj(strict["worst_pair"][1]),
                ),
            ),
        )


def verify_separability(
    spec: ProblemSpec,
    sf: StorageFunction,
    tol: float = 1e-6,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> SeparabilityReport:
    """Certify the separability inequality by one relaxed convex QP.

    The program minimizes ``L(a) + coeffs.a - coeffs.b`` over source corners
    a, target corners b, and one edge control, keeping only the relaxed rows

        b3 <= alpha*a3 + v1 + w_lo,   v1 <= b2,   a1 <= a2,   v1 in U.

    The relaxed feasible set contains every true transition pair, so a
    minimum of at least V* proves the inequality everywhere.  An unbounded
    relaxation rejects the candidate and reports the certified ray.
    """
    _, v_star = optimal_rci(spec, settings)
    ell = sf.linear_coeffs

    builder = QpBuilder()
    a = builder.new_vars(4)
    b = builder.new_vars(4)
    v1 = builder.new_var(spec.u_lo, spec.u_hi)
    builder.add_row({b[2]: 1.0, a[2]: -spec.alpha, v1: -1.0}, -_INF, spec.w_lo)
    builder.add_row({v1: 1.0, b[1]: -1.0}, -_INF, 0.0)
    builder.add_row({a[0]: 1.0, a[1]: -1.0}, -_INF, 0.0)
    for i in range(4):
        builder.add_lin(a[i], spec.cost_linear[i] + ell[i])
        builder.add_quad(a[i], spec.cost_quad[i])
        builder.add_lin(b[i], -ell[i])

    sol = solve(builder.build(), settings)
    if sol.status is QpStatus.UNBOUNDED:
        return SeparabilityReport(
            qp_min_value=-_INF,
            minimizer_a=None,
            minimizer_b=None,
            minimizer_v=None,
            v_star=v_star,
            gap=-_INF,
            passed=False,
            unbounded_ray=tuple(float(v) for v in sol.unbounded_ray),
        )
    if sol.status is not QpStatus.OPTIMAL:
        raise SolverFailure(f"separability certificate solve did not converge: {sol.status}")

    qp_min = float(sol.objective)
    gap = qp_min - v_star
    return SeparabilityReport(
        qp_min_value=qp_min,
        minimizer_a=tuple(float(sol.x[i]) for i in a),
        minimizer_b=tuple(float(sol.x[i]) for i in b),
        minimizer_v=float(sol.x[v1]),
        v_star=v_star,
        gap=gap,
        passed=bool(gap >= -tol),
    )


def check_strictness(
    spec: ProblemSpec,
    sf: StorageFunction,
    n_samples: int,
    seed: int,
    exclusion_tol: float = 1e-4,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> StrictnessSummary:
    """Sample feasible transition pairs and report the inequality margins.

    Pairs within ``exclusion_tol`` (Hausdorff) of the stationary pair at the
    optimal invariant box are excluded; there the margin is zero by
    definition.  Deterministic for a fixed seed.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    x_star, v_star = optimal_rci(spec, settings)
    rng = np.random.default_rng(seed)
    min_margin = _INF
    n_nonpos = 0
    worst = None
    drawn = 0
    while drawn < n_samples:
        a, b = feasible_pair(spec, rng)
        if hausdorff(a, x_star) <= exclusion_tol and hausdorff(b, x_star) <= exclusion_tol:
            continue
        value = eval_v(spec, a, b, 1, settings).value
        margin = value - v_star - eval_storage(sf, spec, b) + eval_storage(sf, spec, a)
        drawn += 1
        if margin < min_margin:
            min_margin = margin
            worst = (a, b)
        if margin <= 0.0:
            n_nonpos += 1
    return StrictnessSummary(
        n_samples=n_samples,
        min_margin=float(min_margin),
        n_nonpositive=n_nonpos,
        worst_pair=worst,
    )
