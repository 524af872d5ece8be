"""Command-line front end.

Exit codes: 0 when every verdict is True or Inconclusive on a nonempty
trace (or the parameters are feasible), 1 on a False verdict, an empty
trace or infeasible parameters, 2 on usage and I/O errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
import time
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analysis, behaviors, contracts, executive
from .mcl import BindError, MCLSyntaxError, Verdict, eventually_witness, parse

log = logging.getLogger("multiclock")

CSV_COLUMNS = ["t_r", "theta", "theta_dot", "u", "theta_d", "e_norm", "m_tick", "l_tick", "upd"]


class UsageError(Exception):
    pass


def trace_rows(beh) -> list:
    r = beh.traces["r"].columns
    upd = beh.traces["l"].columns["upd"]
    rows = []
    for k in range(beh.length("r")):
        x = np.asarray(r["x"][k])
        ref = np.asarray(r["ref"][k])
        l_tick = beh.tau("r", "l", k)
        has_ref = bool(np.all(np.isfinite(ref)))
        rows.append([
            k * beh.h, x[0], x[1], r["u"][k],
            ref[0] if has_ref else "",
            float(np.linalg.norm(x - ref)) if has_ref else "",
            beh.tau("r", "m", k), l_tick, upd[l_tick] if l_tick >= 0 else -1,
        ])
    return rows


def trace_csv(beh) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in trace_rows(beh):
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _scenario(args):
    sc = executive.load_scenario(args.scenario) if args.scenario else executive.nominal_scenario()
    if args.seed is not None:
        sc.seed = args.seed
    return sc


def _env_for(sc) -> dict:
    return {"x_i": np.asarray(sc.x_i, dtype=float)}


def _monitor(beh, cs, sc, mode: str):
    reg = sc.registry()
    env = _env_for(sc)
    if sc.params is not None:
        env = {**sc.params.bindings(), **env}
    reports = []
    for c in cs:
        # explicit contract params win over scenario-wide bindings
        merged = {**env, **c.params}
        reports.append(contracts.satisfies([beh], c, merged, reg, mode))
    return reports


def _write(path: Path, text: str) -> None:
    path.write_text(text)
    log.info("wrote %s", path)


def _format_reports(reports) -> str:
    return "".join(r.to_text() for r in reports)


def _any_false(reports) -> bool:
    return any(r.verdict is Verdict.FALSE for r in reports)


# commands


def cmd_simulate(args) -> int:
    sc = _scenario(args)
    out = _out_dir(args)
    code = 0
    try:
        beh = executive.run(sc)
    except executive.SolverFailure as err:
        print(f"simulation stopped: {err}", file=sys.stderr)
        beh, code = err.behavior, 1
    behaviors.save(beh, out / "trace.mct")
    if args.format == "csv":
        _write(out / "trace.csv", trace_csv(beh))
    th = np.abs(np.asarray(beh.traces["r"].columns["x"])[:, 0]).max()
    print(f"{sc.name}: {beh.length('r')} grid points, {beh.length('l')} l ticks, "
          f"{beh.length('m')} m ticks, max |theta| {th:.4f}")
    return code


def cmd_monitor(args) -> int:
    if not args.trace:
        raise UsageError("monitor needs --trace")
    if not args.contract:
        raise UsageError("monitor needs at least one --contract")
    beh = behaviors.load(args.trace[0])
    cs = [contracts.load_contract(p) for p in args.contract]
    sc = _scenario(args)
    if args.params:
        sc.params = analysis.load_params(args.params)
    if beh.length("r") == 0:
        print("empty trace: inconclusive")
        return 1
    reports = _monitor(beh, cs, sc, args.mode)
    text = _format_reports(reports)
    print(text, end="")
    if args.out:
        _write(_out_dir(args) / "monitor.txt", text)
    return 1 if _any_false(reports) else 0


def cmd_compose(args) -> int:
    if len(args.contract) < 2:
        raise UsageError("compose needs at least two --contract files")
    cs = [contracts.load_contract(p) for p in args.contract]
    comp = contracts.compose_all(cs, name="composite")
    text = contracts.dump_contract(comp)
    print(text, end="")
    if args.out:
        _write(_out_dir(args) / "composite.contract", text)
    return 0


def cmd_refine(args) -> int:
    if len(args.contract) != 2:
        raise UsageError("refine needs exactly two --contract files (refined, abstract)")
    if not args.trace:
        raise UsageError("refine needs at least one --trace")
    c, c2 = (contracts.load_contract(p) for p in args.contract)
    corpus = [behaviors.load(p) for p in args.trace]
    sc = _scenario(args)
    res = contracts.refines_on(c, c2, corpus, _env_for(sc), sc.registry(), args.mode)
    if res.holds:
        text = f"{c.name} refines {c2.name} on {len(corpus)} behavior(s)\n"
    else:
        text = f"counterexample: trace {args.trace[res.index]}: {res.reason}\n"
    print(text, end="")
    if args.out:
        _write(_out_dir(args) / "refine.txt", text)
    return 0 if res.holds else 1


def cmd_check_params(args) -> int:
    if not args.params:
        raise UsageError("check-params needs --params")
    p = analysis.load_params(args.params)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", analysis.NegativeFloorArg)
        rep = analysis.check_constraints(p)
        analysis.delta_T_m(p)
    for w in caught[:1]:
        print(f"warning: {w.message}", file=sys.stderr)
    text = rep.to_csv() if args.format == "csv" else rep.to_text()
    print(text, end="")
    if args.out:
        ext = "csv" if args.format == "csv" else "txt"
        _write(_out_dir(args) / f"constraints.{ext}", text)
    return 0 if rep.feasible else 1


def cmd_demo(args) -> int:
    sc = _scenario(args)
    params = sc.params or analysis.load_params(executive.data_path("nominal.params"))
    if args.variant == "delayed":
        sc = executive.delayed_scenario(sc)
        params = params.replace(T_fresh_l=2 * sc.clock_m.T_min)
    sc.params = params
    out = _out_dir(args)
    t0 = time.perf_counter()
    beh = executive.run(sc)
    elapsed = time.perf_counter() - t0
    behaviors.save(beh, out / "trace.mct")
    _write(out / "trace.csv", trace_csv(beh))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", analysis.NegativeFloorArg)
        rep = analysis.check_constraints(params)
    _write(out / "constraints.txt", rep.to_text())
    _write(out / "constraints.csv", rep.to_csv())

    reports = _monitor(beh, list(contracts.shipped_contracts().values()), sc, args.mode)
    for r in reports:
        _write(out / f"{r.contract}.report.txt", r.to_text())

    stab = parse("@l. F G Cost(x)")
    witness = eventually_witness(stab, beh, _env_for(sc), sc.registry())
    theta = np.abs(np.asarray(beh.traces["r"].columns["x"])[:, 0])
    outside = int(np.sum(theta > sc.plant.theta_max))
    summary = [
        f"variant: {args.variant}",
        f"simulated {sc.duration:g} s in {elapsed:.2f} s",
        f"max |theta| = {theta.max():.4f} (bound {sc.plant.theta_max:.4f}), "
        f"{outside} grid points outside",
        f"constraints feasible: {'yes' if rep.feasible else 'no'}"
        + ("" if rep.feasible else f" (violated: {', '.join(c.id for c in rep.violated)})"),
    ]
    summary += [f"{r.contract}: {r.verdict}" for r in reports]
    summary.append(f"eventually always cost zero: witness l tick {witness}")
    text = "\n".join(summary) + "\n"
    _write(out / "summary.txt", text)
    print(text, end="")
    print(rep.to_text(), end="")
    for r in reports:
        if r.verdict is Verdict.FALSE:
            print(r.to_text(), end="")
    return 1 if (_any_false(reports) or not rep.feasible) else 0


# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="scenario file (TOML); default: shipped nominal")
    common.add_argument("--trace", action="append", default=[], help="trace file (repeatable)")
    common.add_argument("--contract", action="append", default=[], help="contract file (repeatable)")
    common.add_argument("--params", help="parameter set file")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="override the scenario seed")
    common.add_argument("--format", choices=("text", "csv"), default="text")
    common.add_argument("--mode", choices=("finite", "horizon"), default="horizon",
                        help="how unbounded modalities treat the end of the trace")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="multiclock", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="run a scenario and record the trace")
    sub.add_parser("monitor", parents=[common], help="check contracts on a trace")
    sub.add_parser("compose", parents=[common], help="compose contracts")
    sub.add_parser("refine", parents=[common], help="check refinement on a trace corpus")
    sub.add_parser("check-params", parents=[common], help="check parameter constraints")
    d = sub.add_parser("demo", parents=[common], help="nominal or delayed end-to-end run")
    d.add_argument("variant", choices=("nominal", "delayed"))
    return p


COMMANDS = {
    "simulate": cmd_simulate,
    "monitor": cmd_monitor,
    "compose": cmd_compose,
    "refine": cmd_refine,
    "check-params": cmd_check_params,
    "demo": cmd_demo,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command in ("simulate", "demo") and not args.out:
        args.out = f"multiclock-{args.command}" + (f"-{args.variant}" if args.command == "demo" else "")
    try:
        return COMMANDS[args.command](args)
    except UsageError as err:
        print(f"multiclock: {err}", file=sys.stderr)
        return 2
    except (OSError, MCLSyntaxError, contracts.ContractFormatError, behaviors.BehaviorError,
            executive.ScenarioInvalid, analysis.MissingParameter, ValueError, BindError) as err:
        print(f"multiclock: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
