"""Closed-loop simulation under the tube controller, and enclosure stability.

The loop measures the state, solves the horizon problem, applies the
extracted control, and records the first tube box as the enclosure of the
next measurement.  Stability of the enclosure sequence is judged by its
Hausdorff distance to the optimal invariant box: a trace is absorbed once the
distance stays at zero (to tolerance) for the rest of the trace.

The rotated one-step cost ``E(A) - E(B) + V(A,B,1) - V*`` summed along a tube
is the decrease certificate recorded at every step; with a separable initial
cost it is nonnegative and strictly decreasing until absorption.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .cost_to_travel import eval_v, optimal_rci
from .dissipativity import eval_storage
from .interval_sets import IntervalBox, contains, hausdorff, subset
from .problem import ProblemSpec, dynamics
from .qp_solver import DEFAULT_SETTINGS, SolverSettings
from .tube_mpc import TubeMpcConfig, solve_tmpc, _resolved

__all__ = [
    "ExtremePolicy",
    "UniformRandomPolicy",
    "AdversarialPolicy",
    "DisturbancePolicy",
    "TraceStep",
    "SimulationTrace",
    "EnclosureStabilityReport",
    "simulate",
    "check_enclosure_stability",
    "rotated_cost",
    "lyapunov_value",
]

_INF = float("inf")


@dataclass(frozen=True)
class ExtremePolicy:
    """Cycles through a fixed sign pattern of extreme disturbances."""

    signs: tuple[int, ...] = (1,)

    def __post_init__(self):
        if not self.signs or any(s not in (-1, 1) for s in self.signs):
            raise ValueError("signs must be a nonempty sequence of +1/-1")

    def describe(self) -> str:
        return "extreme:" + "".join("+" if s > 0 else "-" for s in self.signs)


@dataclass(frozen=True)
class UniformRandomPolicy:
    """Independent uniform draws from the disturbance interval."""

    seed: int = 0

    def describe(self) -> str:
        return f"random:{self.seed}"


@dataclass(frozen=True)
class AdversarialPolicy:
    """Picks the extreme disturbance maximizing the next enclosure distance.

    One-step lookahead: both extreme candidates are simulated and the next
    controller problem solved for each; ties resolve to the lower extreme.
    The restriction to extremes is a documented assumption for this
    scalar-disturbance affine family.
    """

    def describe(self) -> str:
        return "adversarial"


DisturbancePolicy = Union[ExtremePolicy, UniformRandomPolicy, AdversarialPolicy]


@dataclass(frozen=True)
class TraceStep:
    k: int
    y: tuple[float, float]
    tube: tuple[IntervalBox, ...]
    enclosure: IntervalBox
    dist_to_terminal: float
    lyapunov: float
    rotated_legs: tuple[float, ...]
    u: Optional[float] = None
    w: Optional[float] = None


@dataclass(frozen=True)
class SimulationTrace:
    y0: tuple[float, float]
    policy: str
    steps: tuple[TraceStep, ...]
    failure_step: Optional[int] = None

    def states(self) -> list[tuple[float, float]]:
        return [s.y for s in self.steps]

    def csv_rows(self) -> list[dict]:
        rows = []
        for s in self.steps:
            a1, a2, a3, a4 = s.enclosure.corners()
            rows.append(
                {
                    "k": s.k,
                    "y1": s.y[0],
                    "y2": s.y[1],
                    "u": s.u,
                    "w": s.w,
                    "Y_a1": a1,
                    "Y_a2": a2,
                    "Y_a3": a3,
                    "Y_a4": a4,
                    "dH": s.dist_to_terminal,
                    "lyapunov": s.lyapunov,
                }
            )
        return rows


def rotated_cost(
    spec: ProblemSpec,
    cfg: TubeMpcConfig,
    a: IntervalBox,
    b: IntervalBox,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> float:
    """One-step rotated cost ``E(A) - E(B) + V(A,B,1) - V*``; +inf if infeasible."""
    value = eval_v(spec, a, b, 1, settings).value
    if math.isinf(value):
        return _INF
    _, v_star = optimal_rci(spec, settings)
    _, storage = _resolved(spec, cfg)
    e_a = eval_storage(storage, spec, a) if storage is not None else 0.0
    e_b = eval_storage(storage, spec, b) if storage is not None else 0.0
    return e_a - e_b + value - v_star


def lyapunov_value(
    spec: ProblemSpec,
    cfg: TubeMpcConfig,
    tube: Sequence[IntervalBox],
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> float:
    """Sum of rotated costs along consecutive tube boxes; +inf propagates."""
    total = 0.0
    for a, b in zip(tube[:-1], tube[1:]):
        leg = rotated_cost(spec, cfg, a, b, settings)
        if math.isinf(leg):
            return _INF
        total += leg
    return total


def _rotated_legs(spec, cfg, tube, settings) -> tuple[float, ...]:
    return tuple(rotated_cost(spec, cfg, a, b, settings) for a, b in zip(tube[:-1], tube[1:]))


def simulate(
    spec: ProblemSpec,
    cfg: TubeMpcConfig,
    y0: Sequence[float],
    steps: int,
    policy: DisturbancePolicy,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> SimulationTrace:
    """Run the receding-horizon loop for ``steps`` transitions.

    The trace records one entry per visited state, including the final one
    (which carries no action).  Controller infeasibility at any state
    truncates the trace with an explicit failure marker.
    """
    x_star, _ = optimal_rci(spec, settings)
    rng = np.random.default_rng(policy.seed) if isinstance(policy, UniformRandomPolicy) else None
    y = (float(y0[0]), float(y0[1]))
    records: list[TraceStep] = []
    failure = None

    for k in range(steps + 1):
        sol = solve_tmpc(spec, cfg, y, settings)
        if not sol.feasible:
            failure = k
            break
        enclosure = sol.tube[0]
        legs = _rotated_legs(spec, cfg, sol.tube, settings)
        lyap = _INF if any(math.isinf(v) for v in legs) else sum(legs)
        dist = hausdorff(enclosure, x_star)
        if k == steps:
            records.append(
                TraceStep(k=k, y=y, tube=sol.tube, enclosure=enclosure,
                          dist_to_terminal=dist, lyapunov=lyap, rotated_legs=legs)
            )
            break
        u = sol.u0
        w = _draw_disturbance(spec, cfg, policy, rng, k, y, u, settings)
        records.append(
            TraceStep(k=k, y=y, tube=sol.tube, enclosure=enclosure,
                      dist_to_terminal=dist, lyapunov=lyap, rotated_legs=legs, u=u, w=w)
        )
        y = dynamics(spec, y, u, w)

    return SimulationTrace(
        y0=(float(y0[0]), float(y0[1])),
        policy=policy.describe(),
        steps=tuple(records),
        failure_step=failure,
    )


def _draw_disturbance(spec, cfg, policy, rng, k, y, u, settings) -> float:
    if isinstance(policy, ExtremePolicy):
        sign = policy.signs[k % len(policy.signs)]
        return spec.w_hi if sign > 0 else spec.w_lo
    if isinstance(policy, UniformRandomPolicy):
        return float(rng.uniform(spec.w_lo, spec.w_hi))
    if isinstance(policy, AdversarialPolicy):
        x_star, _ = optimal_rci(spec, settings)
        best_w = spec.w_lo
        best_d = -_INF
        for w in (spec.w_lo, spec.w_hi):
            y_next = dynamics(spec, y, u, w)
            nxt = solve_tmpc(spec, cfg, y_next, settings)
            d = hausdorff(nxt.tube[0], x_star) if nxt.feasible else _INF
            if d > best_d:
                best_d, best_w = d, w
        return best_w
    raise TypeError(f"unknown policy {policy!r}")


@dataclass(frozen=True)
class EnclosureStabilityReport:
    containment_ok: bool
    containment_violation_step: Optional[int]
    absorbed: bool
    absorption_step: Optional[int]
    verdict: str  # "absorbed" | "decreasing" | "unstable"
    violation_step: Optional[int]
    disjoint_steps: tuple[int, ...]
    escaped_terminal: bool
    max_distance: float

    @property
    def stable(self) -> bool:
        return self.absorbed and self.containment_ok and not self.escaped_terminal

    def to_json_dict(self) -> dict:
        return {
            "containment_ok": self.containment_ok,
            "containment_violation_step": self.containment_violation_step,
            "absorbed": self.absorbed,
            "absorption_step": self.absorption_step,
            "verdict": self.verdict,
            "violation_step": self.violation_step,
            "disjoint_steps": list(self.disjoint_steps),
            "escaped_terminal": self.escaped_terminal,
            "max_distance": self.max_distance,
        }


def _separated(a: IntervalBox, b: IntervalBox, tol: float) -> bool:
    """True iff the boxes are disjoint with a gap larger than ``tol``."""
    return (
        a.lo[0] > b.hi[0] + tol
        or b.lo[0] > a.hi[0] + tol
        or a.lo[1] > b.hi[1] + tol
        or b.lo[1] > a.hi[1] + tol
    )


def check_enclosure_stability(
    trace: SimulationTrace,
    spec: ProblemSpec,
    tol: float = 1e-9,
) -> EnclosureStabilityReport:
    """Verify state containment and absorption of the enclosure sequence.

    Absorption is the finite-trace surrogate for convergence: the report
    gives the first index after which the enclosure distance stays at zero
    (within ``tol``).  An enclosure that starts inside the optimal invariant
    box and later separates from it witnesses instability regardless of the
    rest of the trace; the disjoint steps are listed in the report.  Without
    absorption the verdict distinguishes a monotonically decreasing distance
    from an outright increase.
    """
    if not trace.steps:
        raise ValueError("empty trace")
    x_star, _ = optimal_rci(spec)

    containment_ok = True
    containment_violation = None
    for s in trace.steps:
        if not contains(s.enclosure, s.y, tol=tol):
            containment_ok = False
            containment_violation = s.k
            break

    dists = [s.dist_to_terminal for s in trace.steps]
    disjoint = tuple(s.k for s in trace.steps if _separated(s.enclosure, x_star, tol))
    started_inside = subset(trace.steps[0].enclosure, x_star, tol=tol)
    escaped = started_inside and any(k > trace.steps[0].k for k in disjoint)

    absorption = None
    for k in range(len(dists)):
        if all(d <= tol for d in dists[k:]):
            absorption = trace.steps[k].k
            break

    if not containment_ok:
        verdict, violation = "unstable", containment_violation
    elif trace.failure_step is not None:
        verdict, violation = "unstable", trace.failure_step
        absorption = None
    elif escaped:
        verdict = "unstable"
        violation = next(k for k in disjoint if k > trace.steps[0].k)
    elif absorption is not None:
        verdict, violation = "absorbed", None
    else:
        increase = next(
            (trace.steps[i + 1].k for i in range(len(dists) - 1) if dists[i + 1] > dists[i] + tol),
            None,
        )
        if increase is None:
            verdict, violation = "decreasing", None
        else:
            verdict, violation = "unstable", increase

    return EnclosureStabilityReport(
        containment_ok=containment_ok,
        containment_violation_step=containment_violation,
        absorbed=absorption is not None,
        absorption_step=absorption,
        verdict=verdict,
        violation_step=violation,
        disjoint_steps=disjoint,
        escaped_terminal=escaped,
        max_distance=float(max(dists)),
    )
