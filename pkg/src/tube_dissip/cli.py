"""Command-line front end.

Subcommands: ``rci``, ``eval-v``, ``check-storage``, ``control``, ``sweep``,
``simulate``, ``verify-all``.  JSON outputs re-parse into the emitting types;
CSV uses '.' decimals and 12 significant digits.  Exit codes: 0 on success,
1 on a domain failure (infeasible problem or failed certificate), 2 on usage
or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional, Sequence

import numpy as np

from .acceptance import run_acceptance
from .closed_loop import (
    AdversarialPolicy,
    ExtremePolicy,
    UniformRandomPolicy,
    check_enclosure_stability,
    simulate,
)
from .cost_to_travel import RciNotFound, eval_v, optimal_rci
from .dissipativity import StorageFunction, check_strictness, verify_separability
from .interval_sets import IntervalBox
from .problem import ConfigError, ProblemSpec
from .qp_solver import SolverSettings
from .tube_mpc import TubeMpcConfig, solve_tmpc, sweep_feedback
from dataclasses import replace

DEFAULT_SEED = 0


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def _write_output(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _csv(rows: list[dict], columns: list[str]) -> str:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(row.get(c)) for c in columns))
    return "\n".join(lines) + "\n"


class RunConfig:
    """Problem, controller, tolerance, and seed settings shared by commands."""

    KNOWN_KEYS = {"problem", "controller", "tolerances", "seed", "output"}
    CONTROLLER_KEYS = {"horizon", "use_initial_cost", "terminal_equality", "storage", "terminal_set"}
    TOLERANCE_KEYS = {"kkt_tol", "feas_tol", "max_iter"}
    OUTPUT_KEYS = {"path", "format"}

    def __init__(self, obj: Optional[dict] = None):
        obj = obj or {}
        unknown = set(obj) - self.KNOWN_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        problem = obj.get("problem", {})
        if isinstance(problem, str):
            self.spec = ProblemSpec.from_json_file(problem)
        else:
            self.spec = ProblemSpec.from_json_dict(problem)
        ctrl = obj.get("controller", {})
        unknown = set(ctrl) - self.CONTROLLER_KEYS
        if unknown:
            raise ConfigError(f"unknown controller config keys: {sorted(unknown)}")
        kwargs = {}
        for key in ("horizon", "use_initial_cost", "terminal_equality"):
            if key in ctrl:
                kwargs[key] = ctrl[key]
        if "storage" in ctrl and ctrl["storage"] is not None:
            kwargs["storage"] = StorageFunction.from_json_dict(ctrl["storage"])
        if "terminal_set" in ctrl and ctrl["terminal_set"] is not None:
            kwargs["terminal_set"] = IntervalBox.from_json_obj(ctrl["terminal_set"])
        self.controller = TubeMpcConfig(**kwargs)
        tols = obj.get("tolerances", {})
        unknown = set(tols) - self.TOLERANCE_KEYS
        if unknown:
            raise ConfigError(f"unknown tolerance config keys: {sorted(unknown)}")
        self.settings = replace(SolverSettings(), **tols)
        out = obj.get("output", {})
        unknown = set(out) - self.OUTPUT_KEYS
        if unknown:
            raise ConfigError(f"unknown output config keys: {sorted(unknown)}")
        self.output_path = out.get("path")
        self.output_format = out.get("format", "json")
        env_seed = os.environ.get("TUBE_DISSIP_SEED")
        self.seed = int(obj.get("seed", env_seed if env_seed is not None else DEFAULT_SEED))

    @classmethod
    def load(cls, path: Optional[str]) -> "RunConfig":
        if path is None:
            return cls()
        with open(path) as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
        return cls(obj)


def _parse_point(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError(f"expected 'x1,x2', got {text!r}")
    return (float(parts[0]), float(parts[1]))


def _parse_box(text: str) -> IntervalBox:
    try:
        return IntervalBox.from_json_obj(json.loads(text))
    except (json.JSONDecodeError, ValueError, TypeError) as exc:
        raise ConfigError(f"expected a box like [[lo1,hi1],[lo2,hi2]], got {text!r}: {exc}") from exc


def _parse_policy(text: str, default_seed: int):
    if text == "adversarial":
        return AdversarialPolicy()
    if text.startswith("random"):
        _, _, seed = text.partition(":")
        return UniformRandomPolicy(seed=int(seed) if seed else default_seed)
    if text.startswith("extreme:"):
        pattern = text.split(":", 1)[1]
        if not pattern or any(c not in "+-" for c in pattern):
            raise ConfigError(f"extreme policy pattern must be +/- signs, got {text!r}")
        return ExtremePolicy(signs=tuple(1 if c == "+" else -1 for c in pattern))
    raise ConfigError(f"unknown policy {text!r} (adversarial | random:SEED | extreme:+-+)")


def _controller_config(run: RunConfig, args) -> TubeMpcConfig:
    cfg = run.controller
    if getattr(args, "no_initial_cost", False):
        cfg = replace(cfg, use_initial_cost=False)
    if getattr(args, "horizon", None):
        cfg = replace(cfg, horizon=args.horizon)
    return cfg


def _cmd_rci(run: RunConfig, args) -> int:
    try:
        box, v_star = optimal_rci(run.spec, run.settings)
    except RciNotFound as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _write_output(
        json.dumps({"corners": list(box.corners()), "box": box.to_json_obj(), "v_star": v_star}),
        args.output or run.output_path,
    )
    return 0


def _cmd_eval_v(run: RunConfig, args) -> int:
    result = eval_v(run.spec, _parse_box(args.a), _parse_box(args.b), args.n, run.settings)
    _write_output(json.dumps(result.to_json_dict()), args.output or run.output_path)
    return 0 if result.feasible else 1


def _cmd_check_storage(run: RunConfig, args) -> int:
    if args.storage == "default":
        sf = StorageFunction.reference()
    else:
        with open(args.storage) as fh:
            sf = StorageFunction.from_json_dict(json.load(fh))
    report = verify_separability(run.spec, sf, settings=run.settings)
    if args.strictness:
        strict = check_strictness(run.spec, sf, args.strictness, seed=run.seed, settings=run.settings)
        report = replace(report, strictness=strict)
    _write_output(json.dumps(report.to_json_dict()), args.output or run.output_path)
    return 0 if report.passed else 1


def _cmd_control(run: RunConfig, args) -> int:
    cfg = _controller_config(run, args)
    sol = solve_tmpc(run.spec, cfg, _parse_point(args.z), run.settings)
    _write_output(json.dumps(sol.to_json_dict()), args.output or run.output_path)
    return 0 if sol.feasible else 1


def _cmd_sweep(run: RunConfig, args) -> int:
    cfg = _controller_config(run, args)
    xb = run.spec.x_bounds
    grid = [
        (z1, z2)
        for z1 in np.linspace(xb.lo[0], xb.hi[0], args.grid)
        for z2 in np.linspace(xb.lo[1], xb.hi[1], args.grid)
    ]
    points = sweep_feedback(run.spec, cfg, grid, run.settings)
    rows = [
        {
            "z1": p.z[0],
            "z2": p.z[1],
            "u0": p.u0,
            "objective": p.objective,
            "status": p.status.value,
        }
        for p in points
    ]
    _write_output(_csv(rows, ["z1", "z2", "u0", "objective", "status"]), args.output or run.output_path)
    return 0


def _trace_csv_rows(trace) -> list[dict]:
    return trace.csv_rows()


def _cmd_simulate(run: RunConfig, args) -> int:
    cfg = _controller_config(run, args)
    columns = ["k", "y1", "y2", "u", "w", "Y_a1", "Y_a2", "Y_a3", "Y_a4", "dH", "lyapunov"]
    if args.fig2:
        # bundled demonstration preset: the two corner starts under the
        # adversarial policy
        rows = []
        ok = True
        for y0 in ((5.0, -5.0), (-5.0, 5.0)):
            trace = simulate(run.spec, cfg, y0, args.steps, AdversarialPolicy(), run.settings)
            report = check_enclosure_stability(trace, run.spec)
            ok = ok and report.stable
            for row in trace.csv_rows():
                row = {"y0": _fmt(y0[0]) + ";" + _fmt(y0[1]), **row}
                rows.append(row)
        _write_output(_csv(rows, ["y0"] + columns), args.output or run.output_path)
        return 0 if ok else 1
    if args.y0 is None:
        print("error: --y0 is required without --fig2", file=sys.stderr)
        return 2
    policy = _parse_policy(args.policy, run.seed)
    trace = simulate(run.spec, cfg, _parse_point(args.y0), args.steps, policy, run.settings)
    _write_output(_csv(trace.csv_rows(), columns), args.output or run.output_path)
    return 0 if trace.failure_step is None else 1


def _cmd_verify_all(run: RunConfig, args) -> int:
    results = run_acceptance(seed=run.seed, spec=run.spec)
    width = max(len(r.key) for r in results)
    lines = []
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        lines.append(f"[{mark}] {r.key.ljust(width)}  {r.detail}")
    ok = all(r.passed for r in results)
    lines.append(f"{sum(r.passed for r in results)}/{len(results)} criteria passed")
    _write_output("\n".join(lines) + "\n", args.output or run.output_path)
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tube-dissip",
        description="Set-valued cost-to-travel analysis, storage certificates, and tube MPC on interval boxes.",
    )
    parser.add_argument("--config", help="JSON run configuration file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rci", help="compute the optimal robust control invariant box")
    p.add_argument("--output")
    p.set_defaults(func=_cmd_rci)

    p = sub.add_parser("eval-v", help="evaluate the N-step cost-to-travel value between two boxes")
    p.add_argument("--a", required=True, help="source box [[lo1,hi1],[lo2,hi2]]")
    p.add_argument("--b", required=True, help="target box [[lo1,hi1],[lo2,hi2]]")
    p.add_argument("--n", type=int, default=1, help="number of steps (default 1)")
    p.add_argument("--output")
    p.set_defaults(func=_cmd_eval_v)

    p = sub.add_parser("check-storage", help="certify a storage candidate by the relaxed QP")
    p.add_argument("--storage", default="default", help="'default' or a JSON file {offset, linear}")
    p.add_argument("--strictness", type=int, default=0, help="also sample N strictness margins")
    p.add_argument("--output")
    p.set_defaults(func=_cmd_check_storage)

    p = sub.add_parser("control", help="solve the controller at one state")
    p.add_argument("--z", required=True, help="state 'x1,x2'")
    p.add_argument("--no-initial-cost", action="store_true")
    p.add_argument("--horizon", type=int)
    p.add_argument("--output")
    p.set_defaults(func=_cmd_control)

    p = sub.add_parser("sweep", help="controller sweep over an n-by-n state grid (CSV)")
    p.add_argument("--grid", type=int, default=21)
    p.add_argument("--no-initial-cost", action="store_true")
    p.add_argument("--horizon", type=int)
    p.add_argument("--output")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("simulate", help="closed-loop simulation (CSV trace)")
    p.add_argument("--y0", help="initial state 'x1,x2'")
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--policy", default="adversarial", help="adversarial | random:SEED | extreme:+-+")
    p.add_argument("--no-initial-cost", action="store_true")
    p.add_argument("--horizon", type=int)
    p.add_argument("--fig2", action="store_true", help="run the two bundled corner-start demonstrations")
    p.add_argument("--output")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("verify-all", help="run the acceptance battery and print a pass/fail table")
    p.add_argument("--output")
    p.set_defaults(func=_cmd_verify_all)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        run = RunConfig.load(args.config)
        return args.func(run, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
