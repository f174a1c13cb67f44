"""Command-line interface: ``ssx <command> [options]``.

Exit codes: 0 success, 2 invalid input or usage, 1 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from ssx import __version__
from ssx.bench import bench
from ssx.complex import DirectedGraph, build_flag_complex, dumps_complex
from ssx.dac import DynamicBinaryDigraph, lift_dac
from ssx.errors import ResourceError, ValidationError
from ssx.experiments import directed_sample, run_directional
from ssx.fixtures import fixtures
from ssx.invariants import KINDS, InvariantSpec, global_invariant, invariant_matrix
from ssx.io import dumps_activations, dumps_edge_list, parse_activations, parse_edge_list, read_text
from ssx.synthetic import SyntheticTaskSpec, generate_synthetic
from ssx.train import TrainConfig, dumps_checkpoint, loads_checkpoint, metrics_csv
from ssx.wl import dir_wl_compare, sswl_compare

SCHEMA_VERSION = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage errors exit 2 like validation failures
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _emit(rows: list[dict], fmt: str, out=None) -> None:
    out = out or sys.stdout
    if fmt == "jsonl":
        for row in rows:
            out.write(json.dumps({"schema_version": SCHEMA_VERSION, **row}, default=_json_default) + "\n")
        return
    if not rows:
        return
    cols = ["schema_version", *rows[0].keys()]
    w = csv.writer(out, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([SCHEMA_VERSION, *(_cell(row[c]) for c in cols[1:])])


def _json_default(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(type(x))


def _cell(v):
    if isinstance(v, (list, tuple, np.ndarray)):
        return " ".join(str(_cell(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return v


def _threads(value: str | None) -> int:
    raw = value if value is not None else os.environ.get("SSX_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError(f"thread count must be an integer, got {raw!r}") from None
    if n < 1:
        raise ValidationError("thread count must be >= 1")
    return n


def _load_dynamic(args) -> DynamicBinaryDigraph:
    graph = parse_edge_list(read_text(args.edges), name=str(args.edges))
    if args.activations:
        return parse_activations(read_text(args.activations), graph, name=str(args.activations))
    return DynamicBinaryDigraph(graph, np.ones((graph.num_vertices, 1), dtype=np.uint8))


# -- commands ----------------------------------------------------------------------------


def cmd_lift(args) -> None:
    dac = lift_dac(_load_dynamic(args), args.max_dim)
    if args.output:
        Path(args.output).write_text(dumps_complex(dac.complex))
    _emit([{"dim": n, "count": c} for n, c in enumerate(dac.complex.sizes)], args.format)


def cmd_invariants(args) -> None:
    dac = lift_dac(_load_dynamic(args), args.max_dim)
    spec = InvariantSpec(args.kind, args.k, args.n, args.i, args.j)
    label = spec.label()
    bins = {f"t{t + 1}": None for t in range(dac.T)}
    if args.phi != "none" or spec.kind == "ec":
        phi = "sum" if args.phi == "none" else args.phi
        value = global_invariant(dac, spec, phi)
        if phi == "sorted-multiset":
            rows = [{"id": k, "kind": label, **dict(zip(bins, row))} for k, row in enumerate(value)]
        else:
            rows = [{"id": "global" if spec.kind == "ec" else phi, "kind": label, **dict(zip(bins, np.asarray(value).tolist()))}]
    else:
        m = invariant_matrix(dac, spec)
        rows = [{"id": f"{spec.carrier_dim}:{k}", "kind": label, **dict(zip(bins, r))} for k, r in enumerate(m.tolist())]
    _emit(rows, args.format)


def _pair_graphs(args) -> tuple[str, DirectedGraph, DirectedGraph]:
    if len(args.pair) == 1:
        fx = fixtures()
        if args.pair[0] not in fx:
            raise ValidationError(f"unknown fixture {args.pair[0]!r}; choose from {sorted(fx)}")
        p = fx[args.pair[0]]
        return p.name, p.a, p.b
    if len(args.pair) == 2:
        a, b = (parse_edge_list(read_text(f), name=f) for f in args.pair)
        return f"{args.pair[0]}|{args.pair[1]}", a, b
    raise ValidationError("--pair takes a fixture name or two edge-list files")


def cmd_wl_test(args) -> None:
    name, a, b = _pair_graphs(args)
    if args.family == "dir":
        res = dir_wl_compare(a, b)
    else:
        res = sswl_compare(build_flag_complex(a, args.max_dim), build_flag_complex(b, args.max_dim), args.family)
    hist = [";".join(f"{c}x{n}" for c, n in h.counts) for h in res.histograms]
    _emit(
        [{
            "pair": name,
            "family": args.family,
            "verdict": "SEPARATED" if res.separated else "NOT-SEPARATED",
            "rounds": res.rounds,
            "histogram_a": hist[0],
            "histogram_b": hist[1],
        }],
        args.format,
    )


def cmd_ssn_forward(args) -> None:
    model = loads_checkpoint(read_text(args.checkpoint))
    g = _load_dynamic(args)
    if model.config.num_dims != 3:
        raise ValidationError("ssn-forward expects a model over dimensions 0..2")
    sample = directed_sample(g)
    if sample.X.shape[1] != model.config.layers[0].d_in:
        raise ValidationError(f"model expects {model.config.layers[0].d_in} input channels, data has {sample.X.shape[1]}")
    r = model.readout(sample.structure, sample.X)
    row = {"readout": r.tolist(), "simplices": list(sample.structure.sizes)}
    if model.config.num_classes:
        logits = r @ model.params["head.W"] + model.params["head.b"]
        row.update(logits=logits.tolist(), prediction=int(np.argmax(logits)))
    _emit([row], args.format)


def _task(args) -> SyntheticTaskSpec:
    return SyntheticTaskSpec(
        seed=args.seed,
        vertices=args.vertices,
        triangles=args.triangles,
        density=args.density,
        reciprocity=args.reciprocity,
        T=args.T,
        activity=args.activity,
        motif_bias=tuple(args.bias),
        num_classes=len(args.bias),
        samples_per_class=args.samples,
    )


def cmd_train(args) -> None:
    task = _task(args)
    cfg = TrainConfig(lr=args.lr, epochs=args.epochs, batch_size=args.batch, seed=args.seed, optimizer=args.optimizer)
    res = run_directional(args.seed, task, cfg, width=args.width)
    if args.metrics:
        Path(args.metrics).write_text(metrics_csv(res.directed_trace))
    if args.checkpoint:
        Path(args.checkpoint).write_text(dumps_checkpoint(res.directed_model))
    _emit(
        [
            {"model": "directed", "params": res.directed_params, "test_accuracy": res.directed_acc},
            {"model": "symmetric", "params": res.symmetric_params, "test_accuracy": res.symmetric_acc},
        ],
        args.format,
    )


def cmd_gen(args) -> None:
    task = _task(args)
    data = generate_synthetic(task)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for k, s in enumerate(data):
        stem = f"sample{k:05d}"
        (out / f"{stem}.edges").write_text(dumps_edge_list(s.graph.graph))
        (out / f"{stem}.act").write_text(dumps_activations(s.graph))
        rows.append({"sample": stem, "label": s.label, "edges": s.graph.graph.num_edges})
    with open(out / "labels.csv", "w") as fh:
        _emit(rows, "csv", fh)
    _emit(rows, args.format)


def cmd_bench(args) -> None:
    rep = bench(args.edge_counts, N=args.N, widths=args.widths, reps=args.reps, seed=args.seed)
    rows = [{"N": r.N, "E": r.E, "D": r.D, "seconds": r.seconds, "iqr": r.iqr, "reps": r.reps} for r in rep.runs]
    _emit(rows, args.format)
    sys.stderr.write(f"edge exponent {rep.edge_exponent:.3f}; fit residual {rep.residual:.3f}\n")


def cmd_fixtures(args) -> None:
    fx = fixtures()
    names = [args.name] if args.name else sorted(fx)
    rows = []
    for name in names:
        if name not in fx:
            raise ValidationError(f"unknown fixture {name!r}")
        p = fx[name]
        for side, g in (("a", p.a), ("b", p.b)):
            if args.out:
                Path(args.out).mkdir(parents=True, exist_ok=True)
                (Path(args.out) / f"{name}_{side}.edges").write_text(dumps_edge_list(g))
            rows.append({"fixture": name, "side": side, "vertices": g.num_vertices, "edges": [f"{u}>{v}" for u, v in g.edges.tolist()]})
    _emit(rows, args.format)


# -- argument parsing ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    common.add_argument("--threads", default=None, help="worker threads (default: $SSX_THREADS or 1)")

    graph_in = _Parser(add_help=False)
    graph_in.add_argument("--edges", required=True, help="edge-list file")
    graph_in.add_argument("--activations", help="activation file (default: one all-active bin)")
    graph_in.add_argument("--max-dim", type=int, default=2)

    task = _Parser(add_help=False)
    task.add_argument("--seed", type=int, default=0)
    task.add_argument("--vertices", type=int, default=16)
    task.add_argument("--triangles", type=int, default=6)
    task.add_argument("--density", type=float, default=0.08)
    task.add_argument("--reciprocity", type=float, default=0.0)
    task.add_argument("--T", type=int, default=2)
    task.add_argument("--activity", type=float, default=0.7)
    task.add_argument("--bias", type=float, nargs="+", default=[0.9, 0.1], help="per-class transitive-orientation probability")
    task.add_argument("--samples", type=int, default=100, help="samples per class")

    p = _Parser(prog="ssx", description="Directed flag complexes, relational WL and semi-simplicial networks.")
    p.add_argument("--version", action="version", version=f"ssx {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("lift", parents=[common, graph_in], help="build the flag complex and print simplex counts")
    s.add_argument("--output", help="also write the complex in text form")
    s.set_defaults(func=cmd_lift)

    s = sub.add_parser("invariants", parents=[common, graph_in], help="per-carrier invariant time series")
    s.add_argument("--kind", choices=KINDS, required=True)
    s.add_argument("--k", type=int, default=1)
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--i", type=int, default=0)
    s.add_argument("--j", type=int, default=2)
    s.add_argument("--phi", choices=("none", "sum", "mean", "sorted-multiset"), default="none")
    s.set_defaults(func=cmd_invariants)

    s = sub.add_parser("wl-test", parents=[common], help="joint colour refinement on a pair")
    s.add_argument("--family", choices=("D", "U", "dir"), required=True)
    s.add_argument("--pair", nargs="+", required=True, help="fixture name, or two edge-list files")
    s.add_argument("--max-dim", type=int, default=2)
    s.set_defaults(func=cmd_wl_test)

    s = sub.add_parser("ssn-forward", parents=[common, graph_in], help="run a checkpointed model on one structure")
    s.add_argument("--checkpoint", required=True)
    s.set_defaults(func=cmd_ssn_forward)

    s = sub.add_parser("train", parents=[common, task], help="directional synthetic task: directed SSN vs r_sym baseline")
    s.add_argument("--epochs", type=int, default=30)
    s.add_argument("--lr", type=float, default=0.01)
    s.add_argument("--batch", type=int, default=16)
    s.add_argument("--width", type=int, default=8)
    s.add_argument("--optimizer", choices=("sgd", "adam"), default="adam")
    s.add_argument("--metrics", help="write the directed model's epoch,split,loss,accuracy trace here")
    s.add_argument("--checkpoint", help="write the trained directed model here")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("gen", parents=[common, task], help="write a synthetic dataset to a directory")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("bench", parents=[common], help="forward-pass timing against N D^2 + E D")
    s.add_argument("--N", type=int, default=2048)
    s.add_argument("--widths", type=int, nargs="+", default=[8])
    s.add_argument("--edge-counts", type=int, nargs="+", default=[2**18, 2**19, 2**20, 2**21])
    s.add_argument("--reps", type=int, default=7)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("fixtures", parents=[common], help="list (or write) the fixture digraph pairs")
    s.add_argument("--name")
    s.add_argument("--out", help="directory for <name>_<a|b>.edges files")
    s.set_defaults(func=cmd_fixtures)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _threads(args.threads)
        args.func(args)
    except (ValidationError, ResourceError) as exc:
        sys.stderr.write(f"ssx: error: {exc}\n")
        return 2
    except Exception as exc:  # noqa: BLE001
        sys.stderr.write(f"ssx: internal error: {type(exc).__name__}: {exc}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
