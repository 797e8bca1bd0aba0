"""Command-line front end.

Subcommands: validate, graph, augment, simulate, export-bn, infer,
count-dist, dsep, impact, impact-matrix, paper-study.  Firm indices are
1-based on the command line and in every output; network files use 0-based
indices (see netmodel).

Exit codes: 0 success, 1 validation failure, 2 I/O or parse error, 3 query
error (for example conditioning on a zero-probability event).  Errors print
a human-readable message plus a machine-readable JSON object on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .augment import acyclic_augmentation, to_dot
from .bayesnet import bn_to_dict, build_dag_bn, build_mild_bn, build_strict_bn
from .cascade import mild_cascade, sample_assets, strict_cascade
from .dsep import firm_independence, map_firms_to_copies
from .inference import (
    CountDistribution,
    Query,
    ZeroEvidenceError,
    count_distribution,
    mc_estimate,
    query_prob,
)
from .netmodel import (
    FinancialNetwork,
    FirmParams,
    build_redemption_graph,
    dumps_network,
    is_dag,
    load_network,
    save_network,
    scc_decompose,
    validate_network,
)
from .sysimpact import impact_matrix, impact_report

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2
EXIT_QUERY = 3


@dataclass(frozen=True)
class CorePeripheryParams:
    """Parameters of the bundled core-periphery case study.

    Core banks form a complete lending network with mutual loans; each core
    bank additionally borrows from its own disjoint group of periphery
    lenders.  Defaults reproduce the bundled 100-bank study.
    """

    mu_core: float = 0.1
    sigma_core: float = 0.2
    x_core: float = 2000.0
    f_core: float = 500.0
    loan_core_core: float = 400.0
    mu_periphery: float = 0.05
    sigma_periphery: float = 0.1
    x_periphery: float = 80.0
    f_periphery: float = 90.0
    loan_periphery_core: float = 35.0
    cash: float = 0.0
    horizon: float = 1.0
    riskless_rate: float = 0.0
    external_rate: float = 0.0
    loan_rate: float = 0.0


def generate_core_periphery(
    n_core: int,
    n_periphery_per_core: int,
    params: CorePeripheryParams = CorePeripheryParams(),
) -> FinancialNetwork:
    """Complete core digraph plus disjoint periphery lender groups.

    Core banks are firms 0..n_core-1; the periphery lenders of core c are
    the block n_core + c*k .. n_core + (c+1)*k - 1.
    """
    if n_core < 1 or n_periphery_per_core < 0:
        raise ValueError("need at least one core bank and nonnegative periphery count")
    n = n_core + n_core * n_periphery_per_core
    firms = []
    for _ in range(n_core):
        firms.append(
            FirmParams(params.x_core, params.cash, params.f_core, params.mu_core, params.sigma_core)
        )
    for _ in range(n - n_core):
        firms.append(
            FirmParams(
                params.x_periphery,
                params.cash,
                params.f_periphery,
                params.mu_periphery,
                params.sigma_periphery,
            )
        )
    liab = np.zeros((n, n))
    rates = np.full((n, n), params.loan_rate)
    for a in range(n_core):
        for b in range(n_core):
            if a != b:
                liab[a, b] = params.loan_core_core
    for c in range(n_core):
        for k in range(n_periphery_per_core):
            p = n_core + c * n_periphery_per_core + k
            liab[p, c] = params.loan_periphery_core
    return FinancialNetwork(
        firms,
        liab,
        rates,
        riskless_rate=params.riskless_rate,
        external_rate=params.external_rate,
        horizon=params.horizon,
    )


def _fail(kind: str, message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    print(json.dumps({"error": {"kind": kind, "message": message}}), file=sys.stderr)
    return code


def _load(args) -> FinancialNetwork:
    return load_network(args.network)


def _write_text(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _emit_json(path: str | None, doc) -> None:
    _write_text(path, json.dumps(doc, indent=2, sort_keys=False) + "\n")


def _build_bn(net: FinancialNetwork, rule: str):
    if rule == "mild":
        return build_mild_bn(net)
    if rule == "strict":
        return build_strict_bn(net)
    if rule == "dag":
        return build_dag_bn(net)
    raise ValueError(f"unknown rule {rule!r}")


def _fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def _cmd_validate(args) -> int:
    net = _load(args)
    report = validate_network(net)
    print(report)
    if not report.ok:
        doc = [
            {"kind": i.kind, "firms": [f + 1 for f in i.firms], "message": i.message}
            for i in report.issues
        ]
        print(json.dumps({"error": {"kind": "invalid_network", "issues": doc}}), file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def _cmd_graph(args) -> int:
    net = _load(args)
    g = build_redemption_graph(net)
    scc = scc_decompose(g)
    doc = {
        "num_firms": g.num_vertices,
        "edges": sorted([a + 1, b + 1] for a, b in g.edges),
        "is_dag": is_dag(g),
        "components": [sorted(v + 1 for v in comp) for comp in scc.components],
    }
    _emit_json(args.out, doc)
    return EXIT_OK


def _cmd_augment(args) -> int:
    net = _load(args)
    g = build_redemption_graph(net)
    gbar = acyclic_augmentation(g, scc_decompose(g))
    if args.dot:
        _write_text(args.out, to_dot(gbar))
    else:
        doc = {
            "vertices": [[v[0] + 1, v[1]] for v in gbar.vertices],
            "edges": sorted([[a[0] + 1, a[1]], [b[0] + 1, b[1]]] for a, b in gbar.edges),
        }
        _emit_json(args.out, doc)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    net = _load(args)
    resolve = mild_cascade if args.rule == "mild" else strict_cascade
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["seed", "firm", "terminal_assets", "defaulted", "round"])
    for k in range(args.samples):
        seed = args.seed + k
        scenario = sample_assets(net, seed)
        outcome = resolve(net, scenario)
        for i in range(net.num_firms):
            rnd = outcome.round_of[i]
            writer.writerow(
                [
                    seed,
                    i + 1,
                    _fmt_float(scenario.terminal_assets[i]),
                    int(outcome.defaults[i]),
                    "" if rnd is None else rnd,
                ]
            )
    _write_text(args.out, buf.getvalue())
    return EXIT_OK


def _cmd_export_bn(args) -> int:
    net = _load(args)
    bn = _build_bn(net, args.rule)
    doc = bn_to_dict(bn)
    doc["vertices"] = [[f + 1, c] for f, c in doc["vertices"]]
    doc["edges"] = [[[a[0] + 1, a[1]], [b[0] + 1, b[1]]] for a, b in doc["edges"]]
    for cpt in doc["cpts"]:
        cpt["vertex"] = [cpt["vertex"][0] + 1, cpt["vertex"][1]]
        cpt["parents"] = [[p[0] + 1, p[1]] for p in cpt["parents"]]
    _emit_json(args.out, doc)
    return EXIT_OK


def _parse_query(text: str) -> Query:
    doc = json.loads(text)
    targets = {int(k) - 1: int(v) for k, v in doc.get("targets", {}).items()}
    evidence = {int(k) - 1: int(v) for k, v in doc.get("evidence", {}).items()}
    return Query(targets=targets, evidence=evidence, rule=doc.get("rule"))


def _cmd_infer(args) -> int:
    net = _load(args)
    query = _parse_query(args.query)
    rule = query.rule or args.rule
    query = Query(query.targets, query.evidence, rule)
    if args.mc:
        p, se = mc_estimate(net, query, samples=args.samples, seed=args.seed, threads=args.threads)
        _emit_json(args.out, {"probability": p, "method": "monte-carlo", "stderr": se})
    else:
        bn = _build_bn(net, rule)
        p = query_prob(bn, query)
        _emit_json(args.out, {"probability": p, "method": "exact"})
    return EXIT_OK


def _count_csv(dist: CountDistribution) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["n", "probability", "method", "stderr"])
    for k, p in enumerate(dist.probabilities):
        se = "" if dist.stderr is None else _fmt_float(dist.stderr[k])
        writer.writerow([k, _fmt_float(p), dist.method, se])
    return buf.getvalue()


def _cmd_count_dist(args) -> int:
    net = _load(args)
    bn = _build_bn(net, args.rule)
    dist = count_distribution(bn, samples=args.samples, seed=args.seed, force_mc=args.mc)
    _write_text(args.out, _count_csv(dist))
    return EXIT_OK


def _parse_firms(text: str) -> list[int]:
    if not text:
        return []
    return [int(tok) - 1 for tok in text.split(",") if tok.strip()]


def _cmd_dsep(args) -> int:
    net = _load(args)
    g = build_redemption_graph(net)
    gbar = acyclic_augmentation(g, scc_decompose(g))
    v1 = _parse_firms(args.v1)
    v2 = _parse_firms(args.v2)
    v0 = _parse_firms(args.given)
    separated = firm_independence(g, gbar, v1, v2, v0)
    doc = {"separated": separated}
    if separated:
        q = map_firms_to_copies(gbar, v1, v2, v0)
        doc["gbar_statement"] = {
            "v1": sorted([f + 1, c] for f, c in q.v1),
            "v2": sorted([f + 1, c] for f, c in q.v2),
            "given": sorted([f + 1, c] for f, c in q.v0),
        }
    _emit_json(args.out, doc)
    return EXIT_OK


def _cmd_impact(args) -> int:
    net = _load(args)
    bn = _build_bn(net, args.rule)
    report = impact_report(bn, _parse_firms(args.source), _parse_firms(args.target))
    _emit_json(
        args.out,
        {
            "asi": report.asi,
            "rsi": report.rsi,
            "argmax": [[f + 1, int(v)] for f, v in report.argmax_assignment],
            "rule": report.rule,
        },
    )
    return EXIT_OK


def _cmd_impact_matrix(args) -> int:
    net = _load(args)
    bn = _build_bn(net, args.rule)
    firms = _parse_firms(args.firms) if args.firms else list(range(net.num_firms))
    reports = impact_matrix(bn, firms)
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["source", "target", "asi", "rsi"])
    for r in reports:
        (i,) = r.source_set
        (j,) = r.target_set
        writer.writerow([i + 1, j + 1, _fmt_float(r.asi), _fmt_float(r.rsi)])
    _write_text(args.out, buf.getvalue())
    return EXIT_OK


def _cmd_paper_study(args) -> int:
    params = CorePeripheryParams()
    net = generate_core_periphery(args.cores, args.periphery_per_core, params)
    os.makedirs(args.outdir, exist_ok=True)
    save_network(net, os.path.join(args.outdir, "network.json"))

    bn = _build_bn(net, args.rule)
    dist = count_distribution(bn)
    _write_text(os.path.join(args.outdir, f"count_dist_{args.rule}.csv"), _count_csv(dist))

    cores = list(range(args.cores))
    core_law = count_distribution_subset_csv(bn, cores)
    _write_text(os.path.join(args.outdir, f"core_count_dist_{args.rule}.csv"), core_law)

    # representative firms: two cores, two lenders of the first core, one of the second
    rows = []
    c0, c1 = 0, 1 if args.cores > 1 else 0
    p0 = args.cores                      # periphery lender of core 0
    p2 = args.cores + 1                  # second lender of core 0
    p1 = args.cores + args.periphery_per_core  # lender of core 1
    pairs = []
    if args.cores > 1:
        pairs += [(c0, c1), (c0, p0), (c0, p1), (p0, c0), (p0, c1), (p0, p1), (p0, p2)]
    for i, j in pairs:
        r = impact_report(bn, [i], [j])
        rows.append((i, j, r.asi, r.rsi))
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["source", "target", "asi", "rsi"])
    for i, j, a, r in rows:
        writer.writerow([i + 1, j + 1, _fmt_float(a), _fmt_float(r)])
    _write_text(os.path.join(args.outdir, f"impact_{args.rule}.csv"), buf.getvalue())

    summary = {
        "rule": args.rule,
        "num_firms": net.num_firms,
        "p_no_default": float(dist.probabilities[0]),
        "impact_pairs": [
            {"source": i + 1, "target": j + 1, "asi": a, "rsi": r} for i, j, a, r in rows
        ],
    }
    _emit_json(os.path.join(args.outdir, "summary.json"), summary)
    print(f"study artifacts written to {args.outdir}/")
    return EXIT_OK


def count_distribution_subset_csv(bn, subset) -> str:
    from .inference import core_count_distribution

    law = core_count_distribution(bn, subset)
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["n", "probability", "method", "stderr"])
    for k, p in enumerate(law):
        writer.writerow([k, _fmt_float(p), "exact", ""])
    return buf.getvalue()


def _add_common(p: argparse.ArgumentParser, network: bool = True) -> None:
    if network:
        p.add_argument("network", help="network JSON file")
    p.add_argument("--out", default=None, help="output path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contagionbn",
        description="Default contagion analysis via Bayesian network compilation",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    default_threads = int(os.environ.get("CONTAGIONBN_THREADS", "1"))
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check model constraints; exit 1 on violations")
    _add_common(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("graph", help="redemption graph edges and components")
    _add_common(p)
    p.set_defaults(func=_cmd_graph)

    p = sub.add_parser("augment", help="acyclic augmentation (JSON or DOT)")
    _add_common(p)
    p.add_argument("--dot", action="store_true", help="emit Graphviz DOT text")
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("simulate", help="sample scenarios and resolve cascades to CSV")
    _add_common(p)
    p.add_argument("--rule", choices=["mild", "strict"], default="mild")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=1)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("export-bn", help="compiled network (vertices, edges, CPTs) as JSON")
    _add_common(p)
    p.add_argument("--rule", choices=["mild", "strict", "dag"], default="mild")
    p.set_defaults(func=_cmd_export_bn)

    p = sub.add_parser("infer", help="probability query, exact or Monte-Carlo")
    _add_common(p)
    p.add_argument("--query", required=True, help='JSON: {"targets": {"1": 1}, "evidence": {}, "rule": "mild"}')
    p.add_argument("--rule", choices=["mild", "strict", "dag"], default="mild")
    p.add_argument("--mc", action="store_true", help="estimate by cascade simulation")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=default_threads)
    p.set_defaults(func=_cmd_infer)

    p = sub.add_parser("count-dist", help="distribution of the number of defaults (CSV)")
    _add_common(p)
    p.add_argument("--rule", choices=["mild", "strict", "dag"], default="mild")
    p.add_argument("--mc", action="store_true", help="force the Monte-Carlo path")
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_count_dist)

    p = sub.add_parser("dsep", help="d-separation verdict for firm groups")
    _add_common(p)
    p.add_argument("--v1", required=True, help="comma-separated firm indices (1-based)")
    p.add_argument("--v2", required=True)
    p.add_argument("--given", default="")
    p.set_defaults(func=_cmd_dsep)

    p = sub.add_parser("impact", help="ASI/RSI of one firm set on another")
    _add_common(p)
    p.add_argument("--from", dest="source", required=True, help="source firms (1-based)")
    p.add_argument("--to", dest="target", required=True, help="target firms (1-based)")
    p.add_argument("--rule", choices=["mild", "strict", "dag"], default="mild")
    p.set_defaults(func=_cmd_impact)

    p = sub.add_parser("impact-matrix", help="pairwise single-firm ASI/RSI table (CSV)")
    _add_common(p)
    p.add_argument("--firms", default="", help="comma-separated firm subset (default: all)")
    p.add_argument("--rule", choices=["mild", "strict", "dag"], default="mild")
    p.set_defaults(func=_cmd_impact_matrix)

    p = sub.add_parser("paper-study", help="regenerate the bundled core-periphery study")
    p.add_argument("--rule", choices=["mild", "strict"], default="mild")
    p.add_argument("--cores", type=int, default=5)
    p.add_argument("--periphery-per-core", type=int, default=19)
    p.add_argument("--outdir", default="study_out")
    p.set_defaults(func=_cmd_paper_study)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        return _fail("io", f"cannot read {exc.filename}: {exc.strerror}", EXIT_IO)
    except (OSError, json.JSONDecodeError) as exc:
        return _fail("io", str(exc), EXIT_IO)
    except ZeroEvidenceError as exc:
        return _fail("zero_probability_evidence", str(exc), EXIT_QUERY)
    except (ValueError, KeyError) as exc:
        return _fail("query", str(exc), EXIT_QUERY)


if __name__ == "__main__":
    raise SystemExit(main())
