"""Command-line entry point.

Exit codes: 0 the checked property holds, 1 it does not, 2 bad input or
usage, 3 numeric trouble (a pole on every retried grid, degree overflow).
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .abstraction import Partition, abstract, check_indirect_observations, results_agree
from .errors import (
    DegreeOverflow,
    DimensionMismatch,
    InvalidTransformation,
    ModelFormatError,
    NetworkError,
    NoFeasibleSelection,
    PoleAtPoint,
    RankDeficient,
    SelfLoopSingular,
    SingularMatrix,
)
from .graph import (
    InvarianceQuery,
    StructuralGraph,
    check_immersion_invariance,
    has_disjoint_observation_paths,
    select_nodes,
    to_dot,
    violating_path,
)
from .identifiability import (
    check_excitation_conditions,
    concrete_pattern,
    conforms,
    excitation_template,
    has_leading_diagonal,
    r_check_structure,
    support_of,
    v_check_structure,
)
from .modelio import dumps, load_model, model_to_dict, parse_matrix, read_json
from .network import (
    FrequencyGrid,
    NetworkModel,
    SelectionMatrix,
    check_abstraction,
    check_equivalence,
    exact_abstraction_twr,
    validate_model,
)
from .transform import apply_transformation, is_valid_transformation, transformation_between

SCHEMA = 1
EXIT_HOLDS, EXIT_FAILS, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("netabstraction")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    inputs: list = field(default_factory=list)
    partition: dict = field(default_factory=dict)
    target: Optional[tuple] = None
    grid: int = 32
    tol: float = 1e-9
    seed: int = 0
    out: Optional[str] = None

    def __post_init__(self):
        if not self.tol > 0:
            raise UsageError("--tol must be positive")
        if self.grid < 8:
            raise UsageError("--grid must be at least 8")

    def frequency_grid(self) -> FrequencyGrid:
        return FrequencyGrid.default(self.grid)


# ---------------------------------------------------------------------------
# Argument helpers
# ---------------------------------------------------------------------------


def _tokens(text: Optional[str]) -> Optional[list]:
    if text is None:
        return None
    return [t for t in (s.strip() for s in text.split(",")) if t]


def _resolve(m: NetworkModel, tokens) -> list:
    try:
        return [m.index_of(t) for t in tokens]
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None


def partition_from_args(m: NetworkModel, named: dict, required=()) -> Partition:
    groups = {name: _resolve(m, named.get(name) or []) for name in ("s_tilde", "l_set", "v_set")}
    for k in required:
        if not any(k in g for g in groups.values()) and k not in _resolve(m, named.get("z_tilde") or []):
            groups["s_tilde"].append(k)
    z = named.get("z_tilde")
    z = None if z is None else _resolve(m, z)
    try:
        return Partition.complete(m.L, groups["s_tilde"], groups["l_set"], groups["v_set"], z)
    except ModelFormatError as exc:
        raise UsageError(str(exc)) from None


def _emit(cfg: RunConfig, payload: dict, model: Optional[NetworkModel] = None) -> None:
    doc = {"schema": SCHEMA, "command": cfg.command}
    doc.update(payload)
    if model is not None:
        doc["model"] = model_to_dict(model)
        if cfg.out:
            Path(cfg.out).write_text(dumps(model_to_dict(model)))
        sys.stdout.write(dumps(doc))
    elif cfg.out:
        Path(cfg.out).write_text(dumps(doc))
    else:
        sys.stdout.write(dumps(doc))


def _labels(m: NetworkModel, idx) -> list:
    return [m.node_labels[k] for k in idx]


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_validate(cfg: RunConfig) -> int:
    m = load_model(cfg.inputs[0])
    rep = validate_model(m)
    _emit(cfg, {"valid": rep.ok, "L": m.L, "K": m.K, **rep.to_dict()})
    return EXIT_HOLDS if rep.ok else EXIT_FAILS


def cmd_transform(cfg: RunConfig, p_file: Optional[str], target_file: Optional[str]) -> int:
    m = load_model(cfg.inputs[0])
    if (p_file is None) == (target_file is None):
        raise UsageError("give exactly one of --p or --target")
    if p_file:
        doc = read_json(p_file)
        if not isinstance(doc, dict) or "P" not in doc:
            raise ModelFormatError("transformation file needs a 'P' sparse map")
        P = parse_matrix(doc["P"], m.L, m.L, "P")
    else:
        P = transformation_between(m.G, load_model(target_file).G)
    if not is_valid_transformation(P, m):
        _emit(cfg, {"valid_transformation": False, "error": "P is singular or leaves self-loops"})
        return EXIT_FAILS
    m2 = apply_transformation(m, P)
    eq = check_equivalence(m, m2, cfg.frequency_grid(), cfg.tol, cfg.seed)
    _emit(cfg, {"valid_transformation": True, "equivalent": eq}, m2)
    return EXIT_HOLDS if eq else EXIT_FAILS


def cmd_abstract(cfg: RunConfig, method: str) -> int:
    m = load_model(cfg.inputs[0])
    p = partition_from_args(m, cfg.partition)
    if method == "both":
        r1 = abstract(m, p, "transform")
        r2 = abstract(m, p, "substitute")
        agree = results_agree(r1, r2)
        if not agree:
            sys.stderr.write("error: substitution and transformation results differ\n")
            _emit(cfg, {"report": r1.report, "methods_agree": False})
            return EXIT_FAILS
        result = r1
    else:
        result = abstract(m, p, "transform" if method == "transform" else "substitute")
        agree = None
    certified = check_abstraction(m, result.abstracted, SelectionMatrix(p.kept), cfg.frequency_grid(), cfg.tol, cfg.seed, strict=False)
    report = dict(result.report)
    report["method"] = method
    report["certified"] = certified
    if agree is not None:
        report["methods_agree"] = agree
    _emit(cfg, {"report": report}, result.abstracted)
    return EXIT_HOLDS if certified else EXIT_FAILS


def cmd_invariance(cfg: RunConfig, verify: bool) -> int:
    m = load_model(cfg.inputs[0])
    i, j = cfg.target
    p = partition_from_args(m, cfg.partition, required=(i, j))
    try:
        q = InvarianceQuery(i, j, p)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    g = StructuralGraph.from_model(m)
    path = violating_path(g, q)
    structural = path is None
    observed = check_indirect_observations(m, p, cfg.seed)
    payload = {
        "module": {"input": m.node_labels[i], "output": m.node_labels[j]},
        "partition": p.labelled(m.node_labels),
        "structural": structural,
        "indirect_observations_full_rank": observed,
        "disjoint_observation_paths": has_disjoint_observation_paths(g, p),
        "unblocked_path": _labels(m, path) if path else None,
    }
    if not p.l_set and not p.v_set:
        payload["immersion_conditions"] = check_immersion_invariance(g, i, j, p.s_tilde)
    verdict = structural and observed
    if verify:
        if not observed:
            payload["exact"] = None
        else:
            a = abstract(m, p).abstracted
            kept = list(p.kept)
            exact = a.G[kept.index(j), kept.index(i)] == m.G[j, i]
            payload["exact"] = exact
            verdict = exact
    payload["invariant"] = verdict
    _emit(cfg, payload)
    return EXIT_HOLDS if verdict else EXIT_FAILS


def cmd_select(cfg: RunConfig, measurable: Optional[list], max_results: Optional[int]) -> int:
    m = load_model(cfg.inputs[0])
    i, j = cfg.target
    g = StructuralGraph.from_model(m)
    meas = None if measurable is None else _resolve(m, measurable)
    try:
        plans = select_nodes(g, i, j, meas, max_results)
    except NoFeasibleSelection as exc:
        _emit(cfg, {"selections": [], "error": str(exc)})
        return EXIT_FAILS
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = []
    for p in plans:
        d = p.labelled(m.node_labels)
        d["measured"] = len(p.s_tilde) + len(p.l_set)
        out.append(d)
    _emit(cfg, {"module": {"input": m.node_labels[i], "output": m.node_labels[j]}, "selections": out})
    return EXIT_HOLDS


def cmd_identifiability(cfg: RunConfig, leading_mode: str) -> int:
    m = load_model(cfg.inputs[0])
    p = partition_from_args(m, cfg.partition)
    cond = check_excitation_conditions(m, p)
    payload = {"partition": p.labelled(m.node_labels), "conditions": cond.to_dict()}
    if m.K == m.L:
        predicted = r_check_structure(m, p)
        payload["predicted_excitation_pattern"] = predicted.render().splitlines()
        payload["predicted_noise_pattern"] = v_check_structure(m, p).render().splitlines() if m.noise.F.cols == m.L else None
        payload["matches_template"] = conforms(predicted, excitation_template(p))
        payload["predicted_leading_diagonal"] = has_leading_diagonal(predicted, leading_mode)
    result = abstract(m, p)
    R = result.abstracted.R
    if m.K == m.L:
        payload["excitation_pattern"] = concrete_pattern(R, p).render().splitlines()
    holds = has_leading_diagonal(support_of(R), leading_mode)
    payload["leading_diagonal"] = holds
    payload["leading_mode"] = leading_mode
    _emit(cfg, payload)
    return EXIT_HOLDS if holds else EXIT_FAILS


def cmd_equivalence(cfg: RunConfig, selection: Optional[list], exact: bool) -> int:
    a = load_model(cfg.inputs[0])
    b = load_model(cfg.inputs[1])
    grid = cfg.frequency_grid()
    if selection is None and a.L == b.L:
        relation = "equivalent"
        holds = check_equivalence(a, b, grid, cfg.tol, cfg.seed)
        kept = list(range(a.L))
    else:
        if selection is None:
            missing = [lab for lab in b.node_labels if lab not in a.node_labels]
            if missing:
                raise UsageError(f"cannot match nodes {missing}; pass --selection")
            kept = [a.node_labels.index(lab) for lab in b.node_labels]
        else:
            kept = _resolve(a, selection)
        relation = "abstraction"
        holds = check_abstraction(a, b, SelectionMatrix(tuple(kept)), grid, cfg.tol, cfg.seed, strict=False)
    payload = {"relation": relation, "selection": _labels(a, kept), "holds": holds}
    if exact:
        payload["exact_response_match"] = exact_abstraction_twr(a, b, SelectionMatrix(tuple(kept)))
        holds = holds and payload["exact_response_match"]
    _emit(cfg, payload)
    return EXIT_HOLDS if holds else EXIT_FAILS


def cmd_export_dot(cfg: RunConfig) -> int:
    m = load_model(cfg.inputs[0])
    g = StructuralGraph.from_model(m)
    p = partition_from_args(m, cfg.partition) if any(v is not None for v in cfg.partition.values()) else None
    text = to_dot(g, p)
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_HOLDS


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--grid", type=int, default=32, help="frequency points (default 32)")
    sp.add_argument("--tol", type=float, default=1e-9, help="relative tolerance (default 1e-9)")
    sp.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    sp.add_argument("--out", help="output path")


def _partition_flags(sp: argparse.ArgumentParser) -> None:
    g = sp.add_argument_group("partition", "comma-separated node labels or 1-based indices")
    g.add_argument("--s-tilde", help="directly measured nodes that are kept")
    g.add_argument("--l-set", help="measured nodes used as indirect observations")
    g.add_argument("--v-set", help="unmeasured nodes reconstructed from --l-set")
    g.add_argument("--z-tilde", help="nodes eliminated outright (default: all others)")


def _target_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--i", required=True, help="input node of the module of interest")
    sp.add_argument("--j", required=True, help="output node of the module of interest")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="netabstraction", description="Abstraction and invariance analysis of linear dynamic networks.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("validate", help="check that a model file describes a valid network")
    sp.add_argument("model")
    _common(sp)

    sp = sub.add_parser("transform", help="apply an equivalence transformation")
    sp.add_argument("model")
    sp.add_argument("--p", dest="p_file", help="JSON file with a sparse 'P' map")
    sp.add_argument("--target", help="model whose modules the result should have")
    _common(sp)

    sp = sub.add_parser("abstract", help="remove nodes while keeping the responses of the others")
    sp.add_argument("model")
    sp.add_argument("--method", choices=("transform", "substitute", "both"), default="transform")
    _partition_flags(sp)
    _common(sp)

    sp = sub.add_parser("invariance", help="does a module survive the abstraction unchanged")
    sp.add_argument("model")
    _target_flags(sp)
    sp.add_argument("--verify", action="store_true", help="also compare the abstracted module exactly")
    _partition_flags(sp)
    _common(sp)

    sp = sub.add_parser("select", help="propose measurement plans that keep a module invariant")
    sp.add_argument("model")
    _target_flags(sp)
    sp.add_argument("--measurable", help="nodes that can be measured (default: all)")
    sp.add_argument("--max", type=int, dest="max_results", help="return at most this many plans")
    _common(sp)

    sp = sub.add_parser("identifiability", help="excitation structure of the abstracted network")
    sp.add_argument("model")
    sp.add_argument("--leading", choices=("private", "triangular", "matching"), default="private")
    _partition_flags(sp)
    _common(sp)

    sp = sub.add_parser("equivalence", help="compare two models (equal size) or a model and its abstraction")
    sp.add_argument("model_a")
    sp.add_argument("model_b")
    sp.add_argument("--selection", help="nodes of model_a kept in model_b, in order")
    sp.add_argument("--exact", action="store_true", help="also compare responses symbolically")
    _common(sp)

    sp = sub.add_parser("export-dot", help="Graphviz rendering of the network topology")
    sp.add_argument("model")
    _partition_flags(sp)
    _common(sp)
    return ap


def _config(args: argparse.Namespace) -> RunConfig:
    inputs = [getattr(args, k) for k in ("model", "model_a", "model_b") if getattr(args, k, None)]
    part = {k: _tokens(getattr(args, k, None)) for k in ("s_tilde", "l_set", "v_set", "z_tilde")}
    return RunConfig(args.command, inputs, part, None, args.grid, args.tol, args.seed, args.out)


def _dispatch(args: argparse.Namespace) -> int:
    cfg = _config(args)
    if args.command in ("invariance", "select"):
        m = load_model(cfg.inputs[0])
        (i,), (j,) = _resolve(m, [args.i]), _resolve(m, [args.j])
        if i == j:
            raise UsageError("--i and --j must differ")
        cfg.target = (i, j)
    if args.command == "validate":
        return cmd_validate(cfg)
    if args.command == "transform":
        return cmd_transform(cfg, args.p_file, args.target)
    if args.command == "abstract":
        return cmd_abstract(cfg, args.method)
    if args.command == "invariance":
        return cmd_invariance(cfg, args.verify)
    if args.command == "select":
        return cmd_select(cfg, _tokens(args.measurable), args.max_results)
    if args.command == "identifiability":
        return cmd_identifiability(cfg, args.leading)
    if args.command == "equivalence":
        return cmd_equivalence(cfg, _tokens(args.selection), args.exact)
    if args.command == "export-dot":
        return cmd_export_dot(cfg)
    raise UsageError(f"unknown command {args.command}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return _dispatch(args)
    except (UsageError, ModelFormatError, DimensionMismatch) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except (PoleAtPoint, DegreeOverflow) as exc:
        sys.stderr.write(f"numeric error: {exc}\n")
        return EXIT_NUMERIC
    except (SingularMatrix, RankDeficient, SelfLoopSingular, InvalidTransformation) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_FAILS
    except NetworkError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_FAILS


if __name__ == "__main__":
    sys.exit(main())
