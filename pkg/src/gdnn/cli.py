"""Command-line surface: group listings, counting, building, training, audits.

Machine-readable output (CSV/JSON) goes to stdout, diagnostics to stderr.
Exit codes: 0 success, 1 audit/report failures, 2 usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from gdnn import group_core as gc
from gdnn import admissibility as adm
from gdnn.reps import LayerRep, irrep
from gdnn.group_core import SubgroupPair, UnknownName


def _err(msg):
    print(msg, file=sys.stderr)


def cmd_groups(args):
    if args.action == "list":
        print("name,order,degree,subgroups")
        for name in gc.NAMED_GROUPS:
            G = gc.named_group(name)
            # subgroup enumeration is exponential for the large product group
            count = len(G.subgroups()) if G.order <= 64 else ""
            print(f"{name},{G.order},{G.degree},{count}")
        return 0
    try:
        G = gc.named_group(args.name)
    except UnknownName:
        _err(f"unknown group: {args.name}")
        return 2
    info = {
        "name": args.name,
        "order": G.order,
        "degree": G.degree,
        "generators": [g.to_json() for g in G.generators],
    }
    if G.order <= 64:
        info["subgroups"] = len(G.subgroups())
        info["pair_classes"] = len(gc.pair_conjugacy_classes(G.subgroup_pairs()))
    print(json.dumps(info, indent=2))
    return 0


def cmd_count(args):
    try:
        G = gc.named_group(args.group)
    except UnknownName:
        _err(f"unknown group: {args.group}")
        return 2
    rows = adm.count_architectures(G, mode=args.mode, max_depth=args.max_depth)
    sys.stdout.write(adm.count_rows_to_csv(rows))
    return 0


def _layers_from_choices(G, choices):
    """choices: list of lists of (pair json, mult)."""
    layers = []
    for layer_spec in choices:
        summands = []
        for entry in layer_spec:
            H = G.subgroup(entry["H"])
            K = G.subgroup(entry["K"])
            summands.append((irrep(SubgroupPair(H, K)), entry.get("mult", 1)))
        layers.append(LayerRep(summands))
    return layers


def cmd_build(args):
    try:
        G = gc.named_group(args.group)
    except UnknownName:
        _err(f"unknown group: {args.group}")
        return 2
    if args.preset:
        from gdnn.train import binprod_architectures

        if not args.group.startswith("BinProd("):
            _err("--preset applies to the BinProd groups")
            return 2
        archs = binprod_architectures(G.degree)
        if args.preset not in archs:
            _err(f"unknown preset: {args.preset}; choose from {sorted(archs)}")
            return 2
        sys.stdout.write(archs[args.preset].to_json_str())
        return 0
    if not args.spec and G.order > 64:
        _err("interactive build needs full pair enumeration; use --spec or --preset for large groups")
        return 2
    if args.spec:
        with open(args.spec) as f:
            obj = json.load(f)
        arch = adm.ArchitectureSpec.from_json(obj, group=G if isinstance(obj.get("group"), str) else None)
        report = adm.is_admissible(arch)
        if not report.admissible:
            _err(f"not admissible: fails at (layer, summand) {report.failing}")
            print(json.dumps(report.to_json(), indent=2))
            return 1
        sys.stdout.write(arch.to_json_str())
        return 0
    # interactive/scripted: read one line per layer from stdin with the index
    # of the chosen class (from the printed admissible list); blank to finish
    layers = []
    while True:
        options = adm.admissible_next([l for l in layers], G)
        _err("admissible next-layer classes:")
        for i, p in enumerate(options):
            _err(f"  [{i}] degree={p.rep_degree} type={p.index} |H|={p.H.order} |K|={p.K.order}")
        _err("choose index (blank to finish with the trivial layer):")
        line = sys.stdin.readline()
        if not line:
            break
        line = line.strip()
        if not line:
            break
        try:
            chosen = options[int(line)]
        except (ValueError, IndexError):
            _err("invalid choice")
            return 2
        layers.append(LayerRep([(irrep(chosen), 1)]))
        if chosen.rep_degree == 1 and chosen.H.order == G.order and chosen.K.order == G.order:
            break
    trivial = LayerRep([(irrep(SubgroupPair(G.full_subgroup(), G.full_subgroup())), 1)])
    if not layers or layers[-1].summands[0][0].pair.key() != trivial.summands[0][0].pair.key():
        layers.append(trivial)
    arch = adm.ArchitectureSpec(G, layers)
    report = adm.is_admissible(arch)
    if not report.admissible:
        _err(f"not admissible: fails at {report.failing}")
        return 1
    sys.stdout.write(arch.to_json_str())
    return 0


def cmd_train_binprod(args):
    from gdnn import train as T

    config = T.TrainConfig(
        lr=args.lr,
        batch_size=args.batch_size,
        epochs=args.epochs,
        lr_decay_per_step=args.lr_decay,
    )
    wanted = args.arch.split(",") if args.arch else None
    rows = T.run_binprod_experiment(
        m=args.m, seeds=range(args.seeds), config=config, architectures=wanted,
        threads=getattr(args, "threads", None),
    )
    sys.stdout.write(T.metrics_to_csv(rows) if args.per_seed else T.summary_to_csv(rows))
    summary = T.summarize(rows)
    for name, stats in summary.items():
        _err(
            f"{name}: final {stats['final_train'][0]:.3f}+-{stats['final_train'][1]:.3f} "
            f"acc {stats['accuracy'][0]:.3f}"
        )
    return 0


def cmd_audit(args):
    from gdnn import audits

    with open(args.spec) as f:
        arch = adm.ArchitectureSpec.from_json(json.load(f))
    results = audits.run_all(arch, seed=args.seed)
    print(json.dumps(results, indent=2))
    return 0 if all(r["passed"] for r in results["checks"]) else 1


def cmd_serve(args):
    import uvicorn

    from gdnn.service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="gdnn", description=__doc__)
    p.add_argument("--threads", type=int, default=None, help="worker pool bound for count/train")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("groups", help="list or show built-in groups")
    g.add_argument("action", choices=["list", "show"])
    g.add_argument("name", nargs="?")
    g.set_defaults(func=cmd_groups)

    c = sub.add_parser("count", help="admissible/total architecture counts")
    c.add_argument("--group", required=True)
    c.add_argument("--mode", choices=["gdnn", "crelu"], default="gdnn")
    c.add_argument("--max-depth", type=int, default=None)
    c.add_argument("--out", default=None)
    c.set_defaults(func=cmd_count)

    b = sub.add_parser("build", help="build or validate an architecture spec")
    b.add_argument("--group", required=True)
    b.add_argument("--spec", default=None, help="validate this spec file instead of interactive build")
    b.add_argument("--preset", default=None, help="emit a benchmark architecture: type1, type2, unraveled")
    b.set_defaults(func=cmd_build)

    t = sub.add_parser("train", help="training experiments")
    tsub = t.add_subparsers(dest="experiment", required=True)
    tb = tsub.add_parser("binprod", help="binary multiplication benchmark")
    tb.add_argument("--arch", default=None, help="comma list: type1,type2,unraveled,unraveled-type2init")
    tb.add_argument("--m", type=int, default=16)
    tb.add_argument("--seeds", type=int, default=24)
    tb.add_argument("--epochs", type=int, default=5)
    tb.add_argument("--lr", type=float, default=0.01)
    tb.add_argument("--lr-decay", type=float, default=0.99)
    tb.add_argument("--batch-size", type=int, default=64)
    tb.add_argument("--per-seed", action="store_true", help="one CSV row per seed instead of aggregates")
    tb.set_defaults(func=cmd_train_binprod)

    a = sub.add_parser("audit", help="run property audits on a spec")
    a.add_argument("--spec", required=True)
    a.add_argument("--seed", type=int, default=0)
    a.set_defaults(func=cmd_audit)

    s = sub.add_parser("serve", help="start the HTTP service")
    s.add_argument("--port", type=int, default=8080)
    s.add_argument("--host", default="127.0.0.1")
    s.set_defaults(func=cmd_serve)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    out_path = getattr(args, "out", None)
    if out_path:
        import io
        from contextlib import redirect_stdout

        buf = io.StringIO()
        with redirect_stdout(buf):
            code = args.func(args)
        with open(out_path, "w") as f:
            f.write(buf.getvalue())
        return code
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
