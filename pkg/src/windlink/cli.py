"""Command-line entry point: ``size``, ``dispatch``, ``sweep`` and ``compare``.

Exit codes: 0 success, 1 invalid input or usage, 2 solver failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

from .dispatch import DispatchError, DispatchProblem, lp_debug_dump, solve_dispatch, summarize, verify_tightness
from .io import (DEFAULT_SEED, InputError, RunConfig, config_hash, dump_json, load_inputs)
from .lp import LPError
from .model import CaseId, ValidationError
from .physics import PhysicsError
from .sizing import decision_from_report, format_table, optimize_sizing, report_dict
from .sweeps import (AXES, AXIS_ALIASES, PRESETS, SweepSpec, apply_preset, compare_cases, find_crossover,
                     run_sweep, with_efficiency)

OUTPUT_ENV = "WINDLINK_OUTPUT_DIR"
EXIT_OK, EXIT_INVALID, EXIT_SOLVER = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from exc


def _case(text: str) -> CaseId:
    try:
        return CaseId.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--scenario", help="scenario YAML (default: bundled)")
    common.add_argument("--catalog", help="component catalog YAML (default: bundled)")
    common.add_argument("--day", help="day profile CSV (default: bundled)")
    common.add_argument("--synthetic", action="store_true", help="generate the day profile from --seed")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--output-dir", help=f"output directory (env {OUTPUT_ENV}, default ./out)")
    common.add_argument("--preset", default="current", choices=sorted(PRESETS))
    common.add_argument("--efficiency", type=float, help="round-trip efficiency override (fuel-cell yield / intensity)")
    common.add_argument("--segments", type=int, default=10, help="chord sample points for loss curves")

    p = _Parser(prog="windlink", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", metavar="{size,dispatch,sweep,compare}", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("size", parents=[common], help="optimal sizing for one case")
    s.add_argument("--case", required=True, type=_case)

    d = sub.add_parser("dispatch", parents=[common], help="hourly dispatch profile for one case")
    d.add_argument("--case", required=True, type=_case)
    d.add_argument("--sizing", help="sizing report JSON to dispatch (default: optimise first)")
    d.add_argument("--dump-lp", action="store_true", help="also write the dispatch LP in LP text format")

    w = sub.add_parser("sweep", parents=[common], help="one-axis scenario sweep")
    w.add_argument("--axis", required=True, choices=sorted([*AXES, *AXIS_ALIASES]))
    w.add_argument("--values", required=True, type=_floats)
    w.add_argument("--cases", default="HVDC,HYBRID,HP")
    w.add_argument("--crossover", help="case pair A,B whose crossing is refined by bisection")
    w.add_argument("--workers", type=int, default=1)

    sub.add_parser("compare", parents=[common], help="size and rank all three cases")
    return p


def _output_dir(args) -> Path:
    return Path(args.output_dir or os.environ.get(OUTPUT_ENV) or "out")


def _inputs(args):
    cfg = RunConfig(args.scenario, args.catalog, args.day, str(_output_dir(args)), args.seed, args.synthetic)
    s, c, day = load_inputs(cfg)
    return cfg, s, c, day


def _catalog(args, c):
    c = apply_preset(c, args.preset)
    return with_efficiency(c, args.efficiency) if args.efficiency is not None else c


def _options(args) -> dict:
    skip = {"scenario", "catalog", "day", "output_dir", "seed", "synthetic", "workers"}
    return {k: (v.value if isinstance(v, CaseId) else v) for k, v in sorted(vars(args).items()) if k not in skip}


class Writer:
    """Writes artifacts and records each one in ``manifest.json``."""

    def __init__(self, out: Path, command: str, cfg_hash: str, seed: int):
        self.out, self.command, self.cfg_hash, self.seed = out, command, cfg_hash, seed
        self.files: dict[str, str] = {}

    def write(self, name: str, text: str) -> None:
        self.out.mkdir(parents=True, exist_ok=True)
        data = text.encode()
        (self.out / name).write_bytes(data)
        self.files[name] = hashlib.sha256(data).hexdigest()

    def close(self) -> None:
        path = self.out / "manifest.json"
        manifest = {"files": {}}
        if path.exists():
            try:
                manifest = json.loads(path.read_text())
            except json.JSONDecodeError:
                pass
        for name, digest in self.files.items():
            manifest.setdefault("files", {})[name] = {
                "sha256": digest, "command": self.command, "config_hash": self.cfg_hash, "seed": self.seed}
        self.out.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _writer(args, cfg) -> Writer:
    return Writer(_output_dir(args), args.command, config_hash(cfg, _options(args)), args.seed)


def cmd_size(args) -> int:
    cfg, s, c, day = _inputs(args)
    c = _catalog(args, c)
    r = optimize_sizing(args.case, s, c, day, segments=args.segments)
    table = format_table([(r.case, r.decision, r.net_benefit)])
    w = _writer(args, cfg)
    name = f"size_{r.case.value.lower()}"
    w.write(f"{name}.json", dump_json(report_dict(r, s)))
    w.write(f"{name}.txt", table)
    w.close()
    print(table, end="")
    return EXIT_OK


def cmd_dispatch(args) -> int:
    cfg, s, c, day = _inputs(args)
    c = _catalog(args, c)
    if args.sizing:
        try:
            decision = decision_from_report(json.loads(Path(args.sizing).read_text()))
        except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
            raise InputError(f"{args.sizing}: cannot read sizing report ({exc})") from exc
    else:
        decision = optimize_sizing(args.case, s, c, day, segments=args.segments).decision
    problem = DispatchProblem(args.case, s, c, decision, day, args.segments)
    result = solve_dispatch(problem)
    tight = verify_tightness(result, problem)
    summary = {**summarize(result), "decision": decision.to_dict(),
               "tightness_ok": tight.ok, "tightness_violations": tight.violations}
    w = _writer(args, cfg)
    name = f"dispatch_{args.case.value.lower()}"
    w.write(f"{name}.csv", result.to_csv())
    w.write(f"{name}.json", dump_json(summary))
    if args.dump_lp:
        w.write(f"{name}.lp", lp_debug_dump(problem))
    w.close()
    print(f"{args.case.value}: day revenue {result.day_revenue_usd:,.0f} USD, "
          f"curtailed {result.curtailed_mwh:,.1f} MWh")
    if not tight.ok:
        print("relaxation not tight:\n  " + "\n  ".join(tight.violations), file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg, s, c, day = _inputs(args)
    cases = tuple(CaseId.parse(k) for k in args.cases.split(",") if k.strip())
    spec = SweepSpec(args.axis, tuple(args.values), s, c, day, cases, args.preset, args.efficiency, args.segments)
    result = run_sweep(spec, workers=args.workers)
    payload = result.to_dict()
    if args.crossover:
        a, b = (CaseId.parse(k) for k in args.crossover.split(","))
        refined = find_crossover(result, a, b)
        payload["refined_crossovers"] = [
            {"case_a": x.case_a.value, "case_b": x.case_b.value, "lower": x.lower, "upper": x.upper,
             "direction": x.direction} for x in refined]
    w = _writer(args, cfg)
    stem = f"sweep_{spec.axis}"
    table = result.table_csv()
    w.write(f"{stem}.csv", table)
    w.write(f"{stem}.json", dump_json(payload))
    for k in spec.cases:
        w.write(f"{stem}_{k.value.lower()}_plot.csv", result.plot_csv(k))
    w.close()
    print(table, end="")
    for x in payload.get("refined_crossovers", []):
        print(f"crossover {x['case_a']}/{x['case_b']}: [{x['lower']:.4g}, {x['upper']:.4g}]")
    if result.errors:
        for cell in result.errors:
            print(cell.error, file=sys.stderr)
        return EXIT_INVALID if all(cell.error_kind == "validation" for cell in result.errors) else EXIT_SOLVER
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg, s, c, day = _inputs(args)
    c = _catalog(args, c)
    comp = compare_cases(s, c, day, segments=args.segments)
    w = _writer(args, cfg)
    w.write("compare.json", dump_json(comp.to_dict()))
    w.write("compare.txt", comp.text())
    w.close()
    print(comp.text(), end="")
    return EXIT_OK


COMMANDS = {"size": cmd_size, "dispatch": cmd_dispatch, "sweep": cmd_sweep, "compare": cmd_compare}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    try:
        return COMMANDS[args.command](args)
    except (DispatchError, LPError, PhysicsError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValidationError, InputError, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
