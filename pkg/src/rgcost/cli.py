"""Unified command-line front end.

Exit codes: 0 success, 1 analysis failure, 2 input error.  All randomized
analyses require a seed; identical spec plus identical seed produces
byte-identical outputs.  RGCOST_THREADS caps parallelism across independent
graphs (analyses are deterministic either way; outputs are ordered by input
index).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional, Sequence

from . import graph_core, local_stats, rewiring, schreier, trichotomy
from .graph_core import Graph, GraphFormatError
from .schreier import PresentationFormatError

EXIT_OK = 0
EXIT_ANALYSIS = 1
EXIT_INPUT = 2


class InputError(Exception):
    pass


class AnalysisError(Exception):
    pass


def _worker_count() -> int:
    raw = os.environ.get("RGCOST_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _map_indexed(fn: Callable, items: Sequence):
    workers = _worker_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _atomic_write(path: str, data: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".rgcost-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(path: str, command: str, params: dict,
                    inputs: Sequence[str], outputs: Sequence[str]) -> None:
    from . import __version__

    manifest = {
        "version": __version__,
        "command": command,
        "params": params,
        "inputs": {p: _sha256(p) for p in inputs},
        "outputs": sorted(outputs),
    }
    _atomic_write(path, json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def _load_graph(path: str) -> Graph:
    try:
        return graph_core.load_graph(path)
    except FileNotFoundError:
        raise InputError(f"graph file not found: {path}") from None
    except GraphFormatError as exc:
        raise InputError(f"{path}: {exc}") from None


def _load_presentation(path: str) -> schreier.Presentation:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return schreier.parse_presentation(fh.read())
    except FileNotFoundError:
        raise InputError(f"presentation file not found: {path}") from None
    except PresentationFormatError as exc:
        raise InputError(f"{path}: {exc}") from None


def _load_schreier(path: str) -> schreier.SchreierGraph:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return schreier.SchreierGraph.from_json(fh.read())
    except FileNotFoundError:
        raise InputError(f"schreier file not found: {path}") from None
    except (ValueError, KeyError) as exc:
        raise InputError(f"{path}: {exc}") from None


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        _atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _plot_path(out: Optional[str], suffix: str) -> Optional[str]:
    if out is None:
        return None
    base, _ext = os.path.splitext(out)
    return f"{base}.{suffix}.dat"


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------


def _cmd_stats(args) -> int:
    g = _load_graph(args.graph)
    if args.coloring:
        col_values = json.loads(open(args.coloring, encoding="utf-8").read())
        col = graph_core.Coloring(tuple(col_values), max(col_values))
        dist = local_stats.colored_neighborhood_distribution(g, args.r, col)
    else:
        dist = local_stats.neighborhood_distribution(g, args.r)
    _emit(dist.to_json() + "\n", args.out)
    return EXIT_OK


def _cmd_bsdist(args) -> int:
    graphs = [_load_graph(p) for p in args.graphs]
    if len(graphs) < 2:
        raise InputError("bsdist needs at least two graphs")
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["graph_i", "graph_j", "bs_distance"])
    for i in range(len(graphs)):
        for j in range(i + 1, len(graphs)):
            d = local_stats.bs_distance(graphs[i], graphs[j], args.rmax)
            writer.writerow([args.graphs[i], args.graphs[j], float(d)])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def _cmd_lgdist(args) -> int:
    g1 = _load_graph(args.g1)
    g2 = _load_graph(args.g2)
    lower, upper = local_stats.lg_distance_estimate(
        g1, g2, args.r, args.k, budget=args.budget, seed=args.seed
    )
    payload = {
        "heuristic_lower": float(lower),
        "upper": float(upper),
        "r": args.r,
        "k": args.k,
        "note": "lower is a modeling residual, certified only if modeling were exact",
    }
    _emit(json.dumps(payload, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def _cmd_rewire(args) -> int:
    g = _load_graph(args.graph)
    h, cert = rewiring.optimize_rewiring(g, args.L, budget=args.budget, seed=args.seed)
    if args.out:
        _atomic_write(args.out, graph_core.format_graph(h))
    report = {
        "L": args.L,
        "valid": cert.valid,
        "density_in": float(rewiring.edge_density(g)),
        "density_out": float(rewiring.edge_density(h)),
        "edges_in": g.edge_count,
        "edges_out": h.edge_count,
        "seed": args.seed,
        "budget": args.budget,
    }
    if args.report:
        _atomic_write(args.report, json.dumps(report, sort_keys=True, indent=2) + "\n")
    if not args.out and not args.report:
        sys.stdout.write(json.dumps(report, sort_keys=True) + "\n")
    return EXIT_OK


def _cmd_ccost(args) -> int:
    graphs = [_load_graph(p) for p in args.graphs]

    def optimize(item):
        idx, g = item
        h, _cert = rewiring.optimize_rewiring(
            g, args.L, budget=args.budget, seed=args.seed + idx
        )
        return h

    rewired = _map_indexed(optimize, list(enumerate(graphs)))
    rep = rewiring.density_report(rewired)
    if args.format == "json":
        payload = {
            "L": args.L,
            "densities": [float(d) for d in rep.densities],
            "running_min": [float(d) for d in rep.running_min],
            "liminf_proxy": float(rep.liminf_proxy),
        }
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["graph", "density", "running_min"])
        for path, d, m in zip(args.graphs, rep.densities, rep.running_min):
            writer.writerow([path, float(d), float(m)])
        writer.writerow(["liminf_proxy", float(rep.liminf_proxy), ""])
        text = buf.getvalue()
    _emit(text, args.out)
    if args.plot:
        data = "".join(
            f"{i} {float(d)} {float(m)}\n"
            for i, (d, m) in enumerate(zip(rep.densities, rep.running_min))
        )
        plot = _plot_path(args.out, "densities") or "ccost.densities.dat"
        _atomic_write(plot, "# index density running_min\n" + data)
    return EXIT_OK


def _cmd_transfer(args) -> int:
    try:
        g1_path, h1_path = args.source.split(",")
    except ValueError:
        raise InputError("--from takes 'g1.elist,h1.elist'") from None
    g1 = _load_graph(g1_path)
    h1 = _load_graph(h1_path)
    g2 = _load_graph(args.to)
    try:
        h2, cert, report = rewiring.transfer_rewiring(
            g1, h1, g2, args.L, budget=args.budget, seed=args.seed
        )
    except ValueError as exc:
        raise AnalysisError(str(exc)) from None
    if args.out:
        _atomic_write(args.out, graph_core.format_graph(h2))
    payload = dict(report.to_dict(), valid=cert.valid)
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if args.report:
        _atomic_write(args.report, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_enumerate(args) -> int:
    p = _load_presentation(args.presentation)
    words: tuple[str, ...] = ()
    if args.subgroup:
        try:
            with open(args.subgroup, "r", encoding="utf-8") as fh:
                words = schreier.parse_subgroup_words(fh.read())
        except FileNotFoundError:
            raise InputError(f"subgroup file not found: {args.subgroup}") from None
        except PresentationFormatError as exc:
            raise InputError(f"{args.subgroup}: {exc}") from None
    try:
        sch = schreier.todd_coxeter(p, words, max_cosets=args.max_cosets)
    except schreier.CosetLimitError as exc:
        raise AnalysisError(str(exc)) from None
    _emit(sch.to_json() + "\n", args.out)
    return EXIT_OK


def _cmd_rs_presentation(args) -> int:
    p = _load_presentation(args.presentation)
    sch = _load_schreier(args.schreier)
    try:
        sp = schreier.reidemeister_schreier(sch, p)
    except ValueError as exc:
        raise AnalysisError(str(exc)) from None
    payload = {
        "index": sch.n,
        "generator_count": sp.generator_count,
        "generators": list(sp.generator_words),
        "transversal": list(sp.transversal),
        "relators": [list(w) for w in sp.relators],
        "abelianized_rank": schreier.abelianized_rank(sp),
    }
    _emit(json.dumps(payload, sort_keys=True, indent=2) + "\n", args.out)
    return EXIT_OK


def _resolve_family(args) -> schreier.Family:
    params = tuple(int(x) for x in args.params.split(","))
    return schreier.builtin_family(args.family, params, seed=args.seed)


def _cmd_rankgrad(args) -> int:
    if args.family:
        fam = _resolve_family(args)
        p, graphs, certs = fam.presentation, fam.graphs, fam.certified_words
    else:
        if not args.presentation or not args.graphs:
            raise InputError("rankgrad needs --family or --presentation with --graphs")
        p = _load_presentation(args.presentation)
        graphs = tuple(_load_schreier(path) for path in args.graphs)
        certs = tuple(None for _ in graphs)
    try:
        rows = schreier.rank_gradient_table(p, graphs, certs)
    except (ValueError, schreier.CosetLimitError) as exc:
        raise AnalysisError(str(exc)) from None
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["index", "d_lower", "d_upper", "r_lower", "r_upper", "d_exact"])
    for row in rows:
        writer.writerow([row.index, row.d_lower, row.d_upper,
                         float(row.r_lower), float(row.r_upper), row.d_exact])
    _emit(buf.getvalue(), args.out)
    if args.plot:
        data = "".join(
            f"{row.index} {float(row.r_lower)} {float(row.r_upper)}\n" for row in rows
        )
        plot = _plot_path(args.out, "rankgrad") or "rankgrad.dat"
        _atomic_write(plot, "# index r_lower r_upper\n" + data)
    return EXIT_OK


def _cmd_farber(args) -> int:
    sch = _load_schreier(args.schreier)
    radius = [int(x) for x in args.radius.split(",")] if args.radius else None
    try:
        rows = schreier.farber_statistic(
            sch, words=args.words or None, radius=radius, cayley=args.cayley
        )
    except ValueError as exc:
        raise AnalysisError(str(exc)) from None
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["kind", "key", "fraction"])
    for row in rows:
        writer.writerow([row.kind, row.key, float(row.fraction)])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def _cmd_family(args) -> int:
    fam = _resolve_family(args)
    os.makedirs(args.out_dir, exist_ok=True)
    outputs = []
    pres_path = os.path.join(args.out_dir, f"{fam.name}.pres")
    _atomic_write(pres_path, schreier.format_presentation(fam.presentation))
    outputs.append(pres_path)
    for param, sch in zip(fam.params, fam.graphs):
        path = os.path.join(args.out_dir, f"{fam.name}-{param}.schreier.json")
        _atomic_write(path, sch.to_json() + "\n")
        outputs.append(path)
        gpath = os.path.join(args.out_dir, f"{fam.name}-{param}.elist")
        _atomic_write(gpath, graph_core.format_graph(sch.to_graph()))
        outputs.append(gpath)
    sys.stdout.write("\n".join(outputs) + "\n")
    return EXIT_OK


def _cmd_partition(args) -> int:
    g = _load_graph(args.graph)
    part = trichotomy.balanced_partition(
        g, args.k, args.eps, budget=args.budget, seed=args.seed
    )
    payload = {
        "k": part.block_count,
        "epsilon": part.epsilon,
        "block_sizes": [len(b) for b in part.blocks],
        "boundary_vertex_sum": part.boundary_vertex_sum,
        "boundary_edges": len(part.boundary_edges),
        "sizes_ok": part.sizes_ok,
        "boundary_ok": part.boundary_ok,
        "conditions_hold": part.conditions_hold,
        "assignment": list(part.assignment),
    }
    _emit(json.dumps(payload, sort_keys=True, indent=2) + "\n", args.out)
    return EXIT_OK


def _cmd_trichotomy(args) -> int:
    if args.family:
        fam = _resolve_family(args)
        p, graphs, certs = fam.presentation, fam.graphs, fam.certified_words
    else:
        if not args.presentation or not args.graphs:
            raise InputError("trichotomy needs --family or --presentation with --graphs")
        p = _load_presentation(args.presentation)
        graphs = tuple(_load_schreier(path) for path in args.graphs)
        certs = tuple(None for _ in graphs)
    try:
        entries = trichotomy.trichotomy_report(
            p, graphs, args.c, certificates=certs, budget=args.budget, seed=args.seed
        )
    except (ValueError, schreier.CosetLimitError) as exc:
        raise AnalysisError(str(exc)) from None
    payload = [e.to_dict() for e in entries]
    _emit(json.dumps(payload, sort_keys=True, indent=2) + "\n", args.out)
    return EXIT_OK


def _cmd_run(args) -> int:
    try:
        with open(args.spec, "r", encoding="utf-8") as fh:
            spec = json.load(fh)
    except FileNotFoundError:
        raise InputError(f"spec file not found: {args.spec}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{args.spec}: invalid JSON: {exc}") from None
    seed = spec.get("seed")
    analyses = spec.get("analyses", [])
    out_dir = spec.get("out_dir", ".")
    os.makedirs(out_dir, exist_ok=True)
    input_files: list[str] = []
    outputs: list[str] = []
    errors: list[dict] = []
    for i, analysis in enumerate(analyses):
        kind = analysis.get("kind")
        params = dict(analysis)
        params.pop("kind", None)
        randomized = kind in ("rewire", "ccost", "transfer", "lgdist",
                              "partition", "trichotomy")
        if randomized and "seed" not in params:
            if seed is None:
                errors.append({"analysis": i, "kind": kind,
                               "error": "seed required for randomized analysis"})
                continue
            params["seed"] = seed
        out = params.setdefault("out", os.path.join(out_dir, f"{i:02d}-{kind}.out"))
        argv = [kind]
        for key, value in params.items():
            flag = "--" + key.replace("_", "-")
            if isinstance(value, bool):
                if value:
                    argv.append(flag)
            elif isinstance(value, list):
                argv.append(flag)
                argv.extend(str(v) for v in value)
            else:
                argv.extend([flag, str(value)])
        try:
            code = main(argv)
        except SystemExit as exc:  # argparse errors inside sub-run
            code = int(exc.code or 0)
        if code != EXIT_OK:
            errors.append({"analysis": i, "kind": kind, "error": f"exit {code}"})
        else:
            outputs.append(out)
        for key in ("graph", "graphs", "g1", "g2", "presentation", "schreier"):
            val = analysis.get(key)
            if isinstance(val, str):
                input_files.append(val)
            elif isinstance(val, list):
                input_files.extend(val)
    manifest_path = os.path.join(out_dir, "manifest.json")
    _write_manifest(
        manifest_path, "run",
        {"spec": args.spec, "seed": seed},
        [p for p in dict.fromkeys(input_files) if os.path.exists(p)],
        outputs,
    )
    if errors:
        _atomic_write(os.path.join(out_dir, "errors.json"),
                      json.dumps(errors, sort_keys=True, indent=2) + "\n")
        return EXIT_ANALYSIS
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rgcost",
        description="Combinatorial cost, local-global statistics, and rank "
                    "gradients of finite graph sequences",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("stats", help="neighborhood statistics of a graph")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--r", type=int, required=True)
    sp.add_argument("--coloring", help="JSON list of vertex colors")
    sp.add_argument("--out")
    sp.set_defaults(fn=_cmd_stats)

    sp = sub.add_parser("bsdist", help="pairwise local statistic distances")
    sp.add_argument("--graphs", nargs="+", required=True)
    sp.add_argument("--rmax", type=int, default=2)
    sp.add_argument("--out")
    sp.set_defaults(fn=_cmd_bsdist)

    sp = sub.add_parser("lgdist", help="local-global distance estimate")
    sp.add_argument("--g1", required=True)
    sp.add_argument("--g2", required=True)
    sp.add_argument("--r", type=int, default=1)
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--budget", type=int, default=8000)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out")
    sp.set_defaults(fn=_cmd_lgdist)

    sp = sub.add_parser("rewire", help="optimize a bi-Lipschitz rewiring")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--L", type=int, required=True)
    sp.add_argument("--budget", type=int, default=20000)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out")
    sp.add_argument("--report")
    sp.set_defaults(fn=_cmd_rewire)

    sp = sub.add_parser("ccost", help="density report over optimized rewirings")
    sp.add_argument("--graphs", nargs="+", required=True)
    sp.add_argument("--L", type=int, required=True)
    sp.add_argument("--budget", type=int, default=20000)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--out")
    sp.add_argument("--plot", action="store_true")
    sp.set_defaults(fn=_cmd_ccost)

    sp = sub.add_parser("transfer", help="transfer a rewiring between graphs")
    sp.add_argument("--from", dest="source", required=True,
                    metavar="G1,H1", help="source pair g1.elist,h1.elist")
    sp.add_argument("--to", required=True)
    sp.add_argument("--L", type=int, required=True)
    sp.add_argument("--budget", type=int, default=4000)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out")
    sp.add_argument("--report")
    sp.set_defaults(fn=_cmd_transfer)

    sp = sub.add_parser("enumerate", help="Todd-Coxeter coset enumeration")
    sp.add_argument("--presentation", required=True)
    sp.add_argument("--subgroup")
    sp.add_argument("--max-cosets", type=int, default=schreier.DEFAULT_MAX_COSETS)
    sp.add_argument("--out")
    sp.set_defaults(fn=_cmd_enumerate)

    sp = sub.add_parser("rs-presentation", help="Reidemeister-Schreier presentation")
    sp.add_argument("--presentation", required=True)
    sp.add_argument("--schreier", required=True)
    sp.add_argument("--out")
    sp.set_defaults(fn=_cmd_rs_presentation)

    sp = sub.add_parser("rankgrad", help="rank gradient table")
    sp.add_argument("--presentation")
    sp.add_argument("--graphs", nargs="*")
    sp.add_argument("--family")
    sp.add_argument("--params", default="")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.add_argument("--plot", action="store_true")
    sp.set_defaults(fn=_cmd_rankgrad)

    sp = sub.add_parser("farber", help="Farber diagnostics")
    sp.add_argument("--schreier", required=True)
    sp.add_argument("--words", nargs="*")
    sp.add_argument("--radius", help="comma-separated radii for ball matching")
    sp.add_argument("--cayley", help="free or free-abelian")
    sp.add_argument("--out")
    sp.set_defaults(fn=_cmd_farber)

    sp = sub.add_parser("family", help="emit a built-in family to files")
    sp.add_argument("--family", required=True, dest="family")
    sp.add_argument("--params", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out-dir", required=True)
    sp.set_defaults(fn=_cmd_family)

    sp = sub.add_parser("partition", help="almost-invariant partition search")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--budget", type=int, default=20000)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out")
    sp.set_defaults(fn=_cmd_partition)

    sp = sub.add_parser("trichotomy", help="trichotomy case report")
    sp.add_argument("--presentation")
    sp.add_argument("--graphs", nargs="*")
    sp.add_argument("--family")
    sp.add_argument("--params", default="")
    sp.add_argument("--c", type=float, required=True)
    sp.add_argument("--budget", type=int, default=20000)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out")
    sp.set_defaults(fn=_cmd_trichotomy)

    sp = sub.add_parser("run", help="run an experiment spec (JSON)")
    sp.add_argument("--spec", required=True)
    sp.set_defaults(fn=_cmd_run)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except InputError as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return EXIT_INPUT
    except AnalysisError as exc:
        sys.stderr.write(f"analysis error: {exc}\n")
        return EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())
