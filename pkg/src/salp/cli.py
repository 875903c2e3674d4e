"""Command-line driver for the analysis and transformation pipeline.

Exit codes: 0 success, 1 analysis-negative (no schedule in the template
family, a failed validity check, an oracle mismatch), 2 internal error,
64 usage error (bad flags or unreadable input).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, fields, replace
from fractions import Fraction
from pathlib import Path

from .cad import CadConfig, tree_to_json
from .depend import build_graph, integer_points_at
from .errors import IntegerValidityFailed, ParseError, SalpError
from .loopir import (
    LoopProgram,
    PerfectNest,
    RootBound,
    Unbounded,
    parse_program,
    program_to_text,
)
from .oracle import dependences_bruteforce, schedule_valid
from .poly import parse_polynomial, poly_to_text
from .sas import system_to_text
from .schedule import (
    default_template,
    integer_grid_points,
    maximize_parallelism,
    pick_schedule,
)
from .transform import check_integer_validity, concrete_template, emit, transform

CONFIG_ENV = "SALP_CONFIG"

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_ERROR = 2
EXIT_USAGE = 64


@dataclass(frozen=True)
class Config:
    """Run-wide knobs; all budgets strictly positive.

    Defaults: projection_cap=512, refine_budget=64, enumeration_bound=32,
    node_budget=500000, template_degree=1, n_grid=(1,2,3,4), format="dsl",
    seed=0.
    """

    projection_cap: int = 512
    refine_budget: int = 64
    enumeration_bound: int = 32
    node_budget: int = 500_000
    template_degree: int = 1
    n_grid: tuple[int, ...] = (1, 2, 3, 4)
    format: str = "dsl"
    seed: int = 0

    def __post_init__(self):
        for name in (
            "projection_cap",
            "refine_budget",
            "enumeration_bound",
            "node_budget",
            "template_degree",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def cad(self) -> CadConfig:
        return CadConfig(
            projection_cap=self.projection_cap, refine_budget=self.refine_budget
        )


def load_config(path: str | None) -> Config:
    if path is None:
        path = os.environ.get(CONFIG_ENV)
    if path is None:
        return Config()
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    allowed = {f.name for f in fields(Config)}
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ValueError(f"unknown config keys {unknown}")
    if "n_grid" in raw:
        raw["n_grid"] = tuple(int(v) for v in raw["n_grid"])
    return Config(**raw)


def _dump(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True)


def _read_program(path: str) -> LoopProgram:
    text = Path(path).read_text(encoding="utf-8")
    return parse_program(text)


def _bound_json(b) -> str:
    if isinstance(b, Unbounded):
        return "inf" if b.positive else "-inf"
    if isinstance(b, RootBound):
        return f"root({poly_to_text(b.poly)}, {b.root_index})"
    return poly_to_text(b.poly)


def _program_json(prog: LoopProgram) -> dict:
    nests = []
    for nest in prog.nests:
        nests.append(
            {
                "params": {
                    "names": list(nest.params.names),
                    "constraint": system_to_text(nest.params.constraint),
                },
                "loops": [
                    {
                        "var": l.var,
                        "lower": _bound_json(l.lower),
                        "upper": _bound_json(l.upper),
                        "lower_closed": l.lower_closed,
                        "upper_closed": l.upper_closed,
                        "parallel": l.parallel,
                    }
                    for l in nest.loops
                ],
                "stmt": {
                    "write": _access_json(nest.stmt.write),
                    "reads": [_access_json(a) for a in nest.stmt.reads],
                    "combinator": nest.stmt.combinator,
                    "reduction": nest.stmt.reduction.value,
                },
            }
        )
    return {"schema": "program/1", "nests": nests}


def _access_json(acc) -> dict:
    return {"array": acc.array, "indices": [poly_to_text(g) for g in acc.indices]}


# ---------------------------------------------------------------------------
# subcommands


def _cmd_parse(args, config: Config) -> int:
    prog = _read_program(args.file)
    if args.json:
        print(_dump(_program_json(prog)))
    else:
        print(program_to_text(prog), end="")
    return EXIT_OK


def _cmd_analyze(args, config: Config) -> int:
    prog = _read_program(args.file)
    graph = build_graph(prog, config.cad())
    edges = []
    for edge in graph.edges:
        entry = {
            "kind": edge.kind.value,
            "access_index": edge.access_index,
            "nest": edge.nest_index,
            "pairs": system_to_text(edge.ds),
            "empty_real": edge.empty_real,
            "present": not edge.absent,
        }
        counts = {}
        for n in config.n_grid:
            n_values = {name: n for name in prog.nests[edge.nest_index].params.names}
            pts = integer_points_at(
                edge.ds,
                n_values,
                bound=config.enumeration_bound,
                node_budget=config.node_budget,
            )
            counts[str(n)] = len(pts)
        entry["integer_pairs"] = counts
        edges.append(entry)
    doc = {
        "schema": "analyze/1",
        "nests": len(prog.nests),
        "edges": edges,
        "present_edges": sum(1 for e in graph.edges if not e.absent),
    }
    print(_dump(doc))
    return EXIT_OK


def _template_for(nest: PerfectNest, config: Config):
    return default_template(
        nest, degree=config.template_degree, include_constant=True
    )


def _cmd_schedule(args, config: Config) -> int:
    prog = _read_program(args.file)
    nest = prog.nests[args.nest]
    graph = build_graph(prog, config.cad())
    edges = [e for e in graph.edges if e.nest_index == args.nest]
    template = _template_for(nest, config)
    k, region = maximize_parallelism(edges, template, nest, config.cad())
    doc = {
        "schema": "schedule/1",
        "template_degree": config.template_degree,
        "coefficients": list(template.params),
        "level": k,
        "region": system_to_text(region.system),
        "witness": None,
        "schedule": None,
    }
    if k > 0 and region.witness is not None:
        witness = {v: region.witness[v] for v in template.params}
        doc["witness"] = {v: str(witness[v]) for v in template.params}
        doc["schedule"] = [
            poly_to_text(m) for m in template.concretize(witness)
        ]
    print(_dump(doc))
    return EXIT_OK if k > 0 else EXIT_NEGATIVE


def _parse_schedule(text: str, nest: PerfectNest):
    comps = [parse_polynomial(part, nest.order()) for part in text.split(",")]
    return concrete_template(nest, comps)


def _cmd_transform(args, config: Config) -> int:
    prog = _read_program(args.file)
    nest = prog.nests[args.nest]
    n_grid = [{name: n for name in nest.params.names} for n in config.n_grid]
    parallel: frozenset[int] = frozenset()
    region = None
    if args.schedule:
        template = _parse_schedule(args.schedule, nest)
    elif args.auto:
        graph = build_graph(prog, config.cad())
        edges = [e for e in graph.edges if e.nest_index == args.nest]
        family = _template_for(nest, config)
        k, region = maximize_parallelism(edges, family, nest, config.cad())
        if k == 0:
            print(
                _dump({"schema": "transform/1", "error": "no valid schedule"}),
                file=sys.stderr,
            )
            return EXIT_NEGATIVE
        # full parametric decomposition is hopeless for larger templates,
        # so the emitted program is the concrete one at the picked witness
        point = pick_schedule(region, family, nondegenerate=True)
        template = concrete_template(nest, family.concretize(point))
        region = None
        parallel = frozenset(range(1, len(nest.loops) + 1)) - {k}
        if not [e for e in edges if not e.absent]:
            parallel = frozenset(range(1, len(nest.loops) + 1))
    else:
        raise UsageError("one of --schedule or --auto is required")
    result = transform(nest, template, region, parallel, config.cad())
    if args.dump_cad:
        Path(args.dump_cad).write_text(
            _dump(tree_to_json(result.t_l)), encoding="utf-8"
        )
    chosen = None
    reports = []
    for idx, case in enumerate(result.cases):
        try:
            check_integer_validity(
                result, nest, template, case.v_values, n_grid,
                bound=config.enumeration_bound,
            )
            reports.append({"case": idx, "integer_valid": True})
            if chosen is None:
                chosen = idx
        except IntegerValidityFailed as exc:
            reports.append(
                {"case": idx, "integer_valid": False, "detail": str(exc)}
            )
    fmt = args.format or config.format
    if chosen is None:
        print(
            _dump(
                {
                    "schema": "transform/1",
                    "error": "no integer-valid case",
                    "validity": reports,
                }
            ),
            file=sys.stderr,
        )
        return EXIT_NEGATIVE
    if fmt == "json":
        doc = json.loads(emit(result, "json"))
        doc["validity"] = reports
        doc["chosen_case"] = chosen
        print(_dump(doc))
    else:
        print(emit(result, "dsl", case_index=chosen), end="")
    return EXIT_OK


def _cmd_verify(args, config: Config) -> int:
    fixtures = sorted(Path(args.fixtures).glob("*.loop"))
    if not fixtures:
        raise UsageError(f"no .loop fixtures under {args.fixtures!r}")
    all_ok = True
    entries = []
    for path in fixtures:
        entry, ok = _verify_fixture(path, config)
        entries.append(entry)
        all_ok = all_ok and ok
    doc = {
        "schema": "verify/1",
        "seed": config.seed,
        "n_grid": list(config.n_grid),
        "fixtures": entries,
        "ok": all_ok,
    }
    print(_dump(doc))
    return EXIT_OK if all_ok else EXIT_NEGATIVE


def _verify_fixture(path: Path, config: Config) -> tuple[dict, bool]:
    prog = parse_program(path.read_text(encoding="utf-8"))
    nest = prog.nests[0]
    graph = build_graph(prog, config.cad())
    ok = True
    edge_entries = []
    for n in config.n_grid:
        n_values = {name: n for name in nest.params.names}
        expected = dependences_bruteforce(nest, n_values, config.enumeration_bound)
        got: set[tuple] = set()
        for edge in graph.edges:
            pts = integer_points_at(
                edge.ds,
                n_values,
                bound=config.enumeration_bound,
                node_budget=config.node_budget,
            )
            s = len(nest.loops)
            for pt in pts:
                src = pt[:s]
                dst = pt[s:]
                got.add((edge.kind.value, edge.access_index, src, dst))
        # the oracle reports no read slot for write-write pairs; edges use 0
        want = {
            (p.kind.value, p.access_index or 0, p.src.coords, p.dst.coords)
            for p in expected
        }
        match = got == want
        ok = ok and match
        edge_entries.append({"n": n, "pairs": len(want), "match": match})
    sched_entry = _verify_schedule(nest, graph, config)
    ok = ok and sched_entry["valid"]
    entry = {
        "fixture": path.name,
        "edges": sorted(
            {f"{e.kind.value}:{e.access_index}" for e in graph.edges if not e.absent}
        ),
        "dependences": edge_entries,
        "schedule": sched_entry,
    }
    return entry, ok


def _verify_schedule(nest, graph, config: Config) -> dict:
    template = default_template(nest, degree=1, include_constant=True)
    edges = [e for e in graph.edges if e.nest_index == 0]
    k, region = maximize_parallelism(edges, template, nest, config.cad())
    entry = {
        "level": k,
        "region": system_to_text(region.system),
        "valid": True,
        "checked_points": 0,
    }
    if k == 0:
        entry["valid"] = False
        return entry
    samples = [region.witness] if region.witness is not None else []
    samples.extend(integer_grid_points(region.system, radius=2, count=4))
    checked = 0
    for point in samples:
        values = {v: Fraction(point[v]) for v in template.params}
        m_polys = template.concretize(values)
        for n in config.n_grid:
            n_values = {name: n for name in nest.params.names}
            good, violations = schedule_valid(
                dependences_bruteforce(nest, n_values, config.enumeration_bound),
                m_polys,
                nest,
                n_values,
            )
            checked += 1
            if not good:
                entry["valid"] = False
                entry["violation"] = {
                    "point": {v: str(values[v]) for v in sorted(values)},
                    "n": n,
                    "count": len(violations),
                }
                return entry
    entry["checked_points"] = checked
    return entry


# ---------------------------------------------------------------------------
# argument plumbing


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="salp", description=__doc__)
    parser.add_argument("--config", help=f"config JSON (default: ${CONFIG_ENV})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="echo the canonical form of a program")
    p.add_argument("file")
    p.add_argument("--json", action="store_true", help="emit the IR as JSON")

    p = sub.add_parser("analyze", help="dependence analysis report")
    p.add_argument("file")

    p = sub.add_parser("schedule", help="most-parallel valid schedule family")
    p.add_argument("file")
    p.add_argument("--nest", type=int, default=0)
    p.add_argument("--template-degree", type=int, dest="template_degree")

    p = sub.add_parser("transform", help="apply a schedule and emit the program")
    p.add_argument("file")
    p.add_argument("--nest", type=int, default=0)
    p.add_argument("--schedule", help="comma-separated schedule components")
    p.add_argument("--auto", action="store_true", help="use the schedule search")
    p.add_argument("--n-grid", dest="n_grid", help="comma-separated parameter values")
    p.add_argument("--bound", type=int, help="enumeration bound")
    p.add_argument("--format", choices=("dsl", "json"))
    p.add_argument("--dump-cad", dest="dump_cad", help="write the full tree as JSON")

    p = sub.add_parser("verify", help="oracle cross-checks over a fixture corpus")
    p.add_argument("--fixtures", default="fixtures")
    p.add_argument("--n-grid", dest="n_grid")
    p.add_argument("--seed", type=int)
    return parser


_COMMANDS = {
    "parse": _cmd_parse,
    "analyze": _cmd_analyze,
    "schedule": _cmd_schedule,
    "transform": _cmd_transform,
    "verify": _cmd_verify,
}


def _apply_overrides(args, config: Config) -> Config:
    if getattr(args, "n_grid", None):
        config = replace(
            config, n_grid=tuple(int(v) for v in args.n_grid.split(","))
        )
    if getattr(args, "bound", None):
        config = replace(config, enumeration_bound=args.bound)
    if getattr(args, "template_degree", None):
        config = replace(config, template_degree=args.template_degree)
    if getattr(args, "seed", None) is not None and args.seed is not None:
        config = replace(config, seed=args.seed)
    return config


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        config = _apply_overrides(args, load_config(args.config))
        return _COMMANDS[args.command](args, config)
    except UsageError as exc:
        print(f"salp: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"salp: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"salp: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (SalpError, ValueError) as exc:
        print(f"salp: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
