"""Batch command-line front end.

Exit codes: 0 success, 1 graph fails validation, 2 unreadable or malformed
input, 3 size guard or unsupported party count, 4 bad command line.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path
from typing import Sequence

from . import bell, ccproblem, graphs, protocols, quantum

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2
EXIT_GUARD = 3
EXIT_USAGE = 4


class CLIError(Exception):
    def __init__(self, message: str, code: int) -> None:
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: usage error: {message}\n")


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("bellcc") / "data" / name))


def _resolve(path: str) -> Path:
    p = Path(path)
    if not p.exists() and not p.is_absolute() and bundled_path(p.name).exists() and p.parent == Path("."):
        return bundled_path(p.name)
    return p


def _read_json(path: str) -> dict:
    try:
        with open(_resolve(path)) as fh:
            return json.load(fh)
    except OSError as exc:
        raise CLIError(f"cannot read {path}: {exc.strerror}", EXIT_IO) from None
    except json.JSONDecodeError as exc:
        raise CLIError(f"{path}: malformed JSON: {exc}", EXIT_IO) from None


def _load_graph(path: str) -> graphs.ExperimentalGraph:
    data = _read_json(path)
    if isinstance(data, dict) and "graph" in data:
        data = data["graph"]
    try:
        return graphs.ExperimentalGraph.from_dict(data)
    except graphs.GraphError as exc:
        raise CLIError(f"{path}: {exc}", EXIT_IO) from None


def _load_valid_graph(path: str) -> graphs.ExperimentalGraph:
    graph = _load_graph(path)
    report = graphs.validate(graph)
    if not report.ok:
        raise CLIError(f"{path}: invalid graph: " + "; ".join(report.violations), EXIT_INVALID)
    return graph


def _load_strategy(path: str) -> quantum.QuantumStrategy:
    try:
        return quantum.QuantumStrategy.from_dict(_read_json(path))
    except (quantum.QuantumError, KeyError, TypeError, ValueError) as exc:
        raise CLIError(f"{path}: bad strategy: {exc}", EXIT_IO) from None


def round_sig(obj, digits: int = 9):
    """Round every float in a JSON-like tree to ``digits`` significant digits."""
    if isinstance(obj, float):
        return float(f"{obj:.{digits}g}")
    if isinstance(obj, dict):
        return {k: round_sig(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_sig(v, digits) for v in obj]
    return obj


def _default_quantum(graph, args) -> tuple[str, quantum.QuantumStrategy] | None:
    """Best available explicit strategy: the cycle strategy or the optimizer."""
    if graph.parties != 2:
        return None
    if graphs.check_testability(graph).is_cycle:
        try:
            return "cycle", quantum.cycle_strategy_for(graph)
        except quantum.QuantumError:
            pass
    strat, _ = quantum.optimize_planar_strategy(
        graph, args.resolution, args.sweeps, seed=args.opt_seed
    )
    return "optimizer", strat


def cmd_validate(args) -> tuple[object, int]:
    graph = _load_graph(args.input)
    report = graphs.validate(graph)
    out = {"valid": report.ok, "violations": report.violations}
    if report.ok:
        out["testability"] = graphs.check_testability(graph).to_dict()
    return out, EXIT_OK if report.ok else EXIT_INVALID


def cmd_bounds(args) -> tuple[object, int]:
    graph = _load_valid_graph(args.input)
    if args.strategy:
        candidates = [("file", _load_strategy(args.strategy))]
    else:
        found = _default_quantum(graph, args)
        candidates = [found] if found else []
    try:
        bounds = bell.compute_bounds(graph, candidates)
    except quantum.QuantumError as exc:
        raise CLIError(f"strategy does not fit graph: {exc}", EXIT_IO) from None
    return bounds.to_dict(), EXIT_OK


def cmd_compile(args) -> tuple[object, int]:
    return ccproblem.compile_problem(_load_valid_graph(args.input)).to_dict(), EXIT_OK


def cmd_table(args) -> tuple[object, int]:
    problem = ccproblem.compile_problem(_load_valid_graph(args.input))
    if problem.parties != 2:
        raise CLIError("value tables exist for two-party problems only", EXIT_GUARD)
    return ccproblem.value_table(problem).to_csv(), EXIT_OK


def cmd_simulate(args) -> tuple[object, int]:
    if args.seed is None:
        raise CLIError("simulate requires --seed", EXIT_USAGE)
    if args.samples < 1:
        raise CLIError("--samples must be >= 1", EXIT_USAGE)
    problem = ccproblem.compile_problem(_load_valid_graph(args.input))
    if args.protocol == "classical":
        strategy = protocols.optimal_classical(problem)
    elif args.protocol == "quantum":
        if args.strategy:
            strategy = _load_strategy(args.strategy)
        else:
            found = _default_quantum(problem.graph, args)
            if found is None:
                raise CLIError("n-party quantum simulation needs --strategy", EXIT_GUARD)
            strategy = found[1]
    else:
        if problem.parties != 2:
            raise CLIError("the PR box is defined for two parties only", EXIT_GUARD)
        strategy = protocols.PRBox(problem.graph)
    try:
        outcome = protocols.simulate(problem, strategy, args.samples, args.seed)
    except quantum.QuantumError as exc:
        raise CLIError(f"strategy does not fit graph: {exc}", EXIT_IO) from None
    if args.out and args.out.endswith(".csv"):
        return outcome.summary_csv(), EXIT_OK
    return outcome.to_dict(), EXIT_OK


def cmd_optimize(args) -> tuple[object, int]:
    graph = _load_valid_graph(args.input)
    if graph.parties != 2:
        raise CLIError("the planar optimizer handles two-party graphs only", EXIT_GUARD)
    strat, value = quantum.optimize_planar_strategy(
        graph, args.resolution, args.sweeps, seed=args.opt_seed
    )
    return {"value": value, "strategy": strat.to_dict()}, EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "bounds": cmd_bounds,
    "compile": cmd_compile,
    "table": cmd_table,
    "simulate": cmd_simulate,
    "optimize": cmd_optimize,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bellcc", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("input", help="graph JSON (bundled names like chsh.json also work)")
    parser.add_argument("--protocol", choices=["classical", "quantum", "prbox"], default="quantum")
    parser.add_argument("--samples", type=int, default=100_000)
    parser.add_argument("--seed", type=int, default=None, help="simulation seed (required)")
    parser.add_argument("--strategy", help="quantum strategy JSON")
    parser.add_argument("--resolution", type=int, default=720)
    parser.add_argument("--sweeps", type=int, default=50)
    parser.add_argument("--opt-seed", type=int, default=0, help="optimizer restart seed")
    parser.add_argument("--out", help="write output here instead of stdout")
    return parser


def _render(payload) -> str:
    if isinstance(payload, str):
        return payload
    return json.dumps(round_sig(payload), indent=2) + "\n"


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        payload, code = COMMANDS[args.command](args)
    except CLIError as exc:
        print(f"bellcc {args.command}: {exc}", file=sys.stderr)
        return exc.code
    except bell.SizeGuardError as exc:
        print(f"bellcc {args.command}: size guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    text = _render(payload)
    if args.out:
        try:
            Path(args.out).write_text(text)
        except OSError as exc:
            print(f"bellcc {args.command}: cannot write {args.out}: {exc.strerror}", file=sys.stderr)
            return EXIT_IO
    else:
        sys.stdout.write(text)
    if code == EXIT_INVALID:
        print(f"bellcc {args.command}: graph failed validation", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
