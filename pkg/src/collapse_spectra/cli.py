"""Command-line entry point.

Exit status: 0 when every claim attached to the run passes, 2 when a claim
fails, 1 on usage or validation errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bounds, flat, sheaf
from .scenarios import (
    SCENARIOS,
    ResultRow,
    Scenario,
    ScenarioError,
    emit,
    evaluate,
    get_scenario,
    load_scenario,
)

log = logging.getLogger("collapse_spectra")

DEFAULT_SCENARIO = {"scan": "example4-scan", "ss": "ex5-e2", "gysin": "gysin-hopf"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}") from None


def _common(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--scenario", help="bundled scenario name (see `list`)")
    src.add_argument("--file", help="JSON scenario file (or complex file for `gysin`, inputs for `bounds`)")
    p.add_argument("--model", help="registry key for a single model")
    p.add_argument("--t", type=_floats, help="comma-separated collapse parameters")
    p.add_argument("--p", type=_ints, help="comma-separated form degrees")
    p.add_argument("--k", type=int, help="number of eigenvalues")
    p.add_argument("--cutoff", type=float, help="starting dual-lattice radius for flat spectra")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", help="output path (stdout if omitted)")
    p.add_argument("--tol", type=float, help="claim tolerance override")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="collapse-spectra", description="Spectra and spectral sequences of collapsing flat models.")
    parser.add_argument("--list", action="store_true", help="print bundled scenarios and exit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, text in (("spectrum", "Hodge spectrum of a flat manifold or a scenario"),
                       ("scan", "run a scenario over its t grid"),
                       ("ss", "E2 table of a stratified interval sheaf"),
                       ("gysin", "Euler-class multiplication ranks"),
                       ("bounds", "evaluate the quantitative estimates from a JSON file")):
        _common(sub.add_parser(name, help=text))
    sub.add_parser("list", help="print bundled scenarios")
    return parser


def _print_list(out) -> None:
    for s in SCENARIOS.values():
        out.write(f"{s.name}\n  anchor: {s.anchor}\n  claim:  {s.claim}\n")


def _scenario_from(args, command: str) -> Scenario | None:
    if args.file:
        s = load_scenario(args.file)
    elif args.scenario:
        s = get_scenario(args.scenario)
    elif command in DEFAULT_SCENARIO and not args.model:
        s = get_scenario(DEFAULT_SCENARIO[command])
    else:
        return None
    return s.with_grid(args.t, args.p, args.k, args.cutoff, args.tol)


def _spectrum_rows(args) -> list[ResultRow]:
    if not args.model:
        raise UsageError("spectrum needs --scenario, --file or --model")
    names = [f"{args.model}({t!r})" for t in args.t] if args.t else [args.model]
    rows = []
    k = args.k or 1
    for name in names:
        m = flat.manifold(name)
        t = float(name[name.index("(") + 1:-1]) if "(" in name else None
        degrees = args.p if args.p is not None else range(m.dimension + 1)
        for p in degrees:
            vals = flat.hodge_spectrum(m, p, k, args.cutoff).values()[:k]
            rows += [ResultRow(f"spectrum[{args.model}]", t, p, j, float(v), "flat-spectra")
                     for j, v in enumerate(vals, 1)]
    return sorted(rows, key=lambda r: (r.t or 0.0, r.p, r.j))


def _ss_rows(args) -> list[ResultRow]:
    sh = sheaf.sheaf_by_name(args.model)
    e2 = sheaf.interval_sheaf_e2(sh)
    return [ResultRow(f"ss[{args.model}]", None, p, q + 1, float(v), "sheaf-ss") for (p, q), v in sorted(e2.items())]


def _gysin_file(args) -> tuple[list[ResultRow], bool]:
    x, s, chi = sheaf.load_complex(args.file)
    degrees = args.p if args.p is not None else range(x.dimension + 3)
    rows = [ResultRow(f"gysin[{x.name}]", None, p, 1, float(sheaf.euler_mult_rank(x, s, chi, p)), "sheaf-ss")
            for p in degrees]
    for p in degrees:
        log.info("p=%d criterion=%s budget=%d", p, sheaf.tcor7_criterion(x, s, chi, p), sheaf.small_eig_budget(x, s, p))
    return rows, True


def _bounds(args, out) -> None:
    if not args.file:
        raise UsageError("bounds needs --file with a JSON object of inputs")
    data = json.loads(Path(args.file).read_text())
    result = {}
    if "gap" in data:
        result["gap_threshold"] = bounds.gap_threshold(bounds.GapInputs(**data["gap"]))
    if "perturbation" in data:
        d = data["perturbation"]
        r = bounds.perturbation_check(bounds.PerturbationInputs(tuple(d["lam1"]), tuple(d["lam2"]),
                                                                d["opnorm"], d.get("eps", 0.0)))
        result["perturbation"] = {"holds": r.holds, "margin": r.margin, "worst_index": r.worst_index}
    if "tcor2" in data:
        result["tcor2_budget"] = bounds.tcor2_budget(**data["tcor2"])
    if "tcor3" in data:
        result["tcor3_budget"] = bounds.tcor3_budget(data["tcor3"]["dims"], data["tcor3"]["p"])
    out.write(json.dumps(result, indent=1) + "\n")


def _write(rows, args, out) -> None:
    text = emit(rows, args.format, args.out)
    if not args.out:
        out.write(text)


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.list or args.command == "list":
        _print_list(out)
        return 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        if args.command == "bounds":
            _bounds(args, out)
            return 0
        if args.command == "gysin" and args.file:
            rows, _ = _gysin_file(args)
            _write(rows, args, out)
            return 0
        scenario = _scenario_from(args, args.command)
        if scenario is None:
            rows = _spectrum_rows(args) if args.command == "spectrum" else _ss_rows(args)
            _write(rows, args, out)
            return 0
        rows, claim = evaluate(scenario)
        _write(rows, args, out)
    except (UsageError, ScenarioError, KeyError, ValueError, OSError, flat.CutoffInsufficient) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 1
    status = "PASS" if claim.passed else "FAIL"
    print(f"[{status}] {scenario.name}: {claim.detail}", file=sys.stderr)
    return 0 if claim.passed else 2


if __name__ == "__main__":
    sys.exit(main())
