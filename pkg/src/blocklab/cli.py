"""Command-line harness.

Subcommands cover sampling (`gen`), single BP runs (`bp`), directed-edge
spectra (`spectrum`), tree reconstruction curves (`tree`), config-driven
grids (`sweep`), the bisection overfitting demo (`bisect`), second-moment
scans (`moments`), and SVG rendering (`plot`).  Every run is seeded and
every output (stdout and files) is byte-identical across repeats with the
same flags.

Exit codes: 0 success; 2 parameter/usage error; 3 IO error; 4 the run
finished but did not converge (outputs are still written).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import os
import sys

import numpy as np

from .bisection import min_bisection_local_search
from .bp import overlap, run_bp
from .graphs import (
    Graph,
    read_edge_list,
    read_labels,
    sample_er,
    sample_regular,
    write_edge_list,
    write_labels,
)
from .moments import contiguity_verdict, maximize_rate
from .nonbacktracking import build_nb, full_spectrum, leading_spectrum
from .plotting import emit_plot
from .sbm import SbmParams, sample_sbm
from .sweep import load_config, run_sweep
from .trees import reconstruction_curve

__all__ = ["main"]


def _fl(x: float) -> str:
    return repr(float(x))


def _sbm_params(args) -> SbmParams:
    if args.cin is None or args.cout is None:
        raise ValueError("this command needs --cin and --cout")
    return SbmParams.symmetric(q=args.q, n=args.n, c_in=args.cin, c_out=args.cout)


def _load_or_sample(args) -> tuple[Graph, np.ndarray | None]:
    """Graph from --graph/--labels files, else a fresh SBM sample."""
    if args.graph:
        g = read_edge_list(args.graph)
        truth = read_labels(args.labels) if getattr(args, "labels", None) else None
        return g, truth
    g, truth = sample_sbm(_sbm_params(args), seed=args.seed)
    return g, truth


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    partial = path + ".partial"
    with open(partial, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    os.replace(partial, path)


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------


def _cmd_gen(args) -> int:
    if args.model == "sbm":
        g, labels = sample_sbm(_sbm_params(args), seed=args.seed)
    elif args.model == "er":
        if args.c is None:
            raise ValueError("er model needs --c (mean degree)")
        g = sample_er(args.n, args.c, seed=args.seed)
        labels = None
    else:
        g = sample_regular(args.n, args.degree, seed=args.seed)
        labels = None
    if not args.out:
        raise ValueError("gen needs --out")
    write_edge_list(g, args.out)
    print(f"graph n={g.n} m={g.m} -> {args.out}")
    if labels is not None and args.labels_out:
        write_labels(labels, args.labels_out)
        print(f"labels -> {args.labels_out}")
    return 0


def _cmd_bp(args) -> int:
    g, truth = _load_or_sample(args)
    p = _sbm_params(args)
    if p.n != g.n:
        raise ValueError(f"--n {p.n} does not match graph size {g.n}")
    res = run_bp(
        g,
        p,
        init=args.init,
        seed=args.seed,
        truth=truth,
        tol=args.tol,
        max_sweeps=args.max_sweeps,
    )
    ov = _fl(overlap(res.hard_labels, truth, p.q)) if truth is not None else "na"
    print(
        f"converged={'true' if res.converged else 'false'} "
        f"sweeps={res.sweeps} overlap={ov} bethe_f={_fl(res.bethe_free_energy)}"
    )
    if args.out:
        rows = [
            [i] + [_fl(v) for v in res.marginals.per_vertex[i]]
            for i in range(g.n)
        ]
        _write_csv(
            args.out, ["vertex"] + [f"p{r}" for r in range(p.q)], rows
        )
        print(f"marginals -> {args.out}")
    return 0 if res.converged else 4


def _cmd_spectrum(args) -> int:
    g, _ = _load_or_sample(args)
    op = build_nb(g)
    if args.full:
        vals = full_spectrum(op, g)
        order = np.lexsort((-vals.imag, -vals.real, -np.abs(vals)))
        vals = vals[order]
        converged = True
    else:
        spec = leading_spectrum(op, g, k=args.k, seed=args.seed)
        vals = spec.eigenvalues
        converged = spec.converged
    shown = ", ".join(
        f"{v.real:.6f}{v.imag:+.6f}j" for v in np.asarray(vals)[: args.k]
    )
    print(f"eigenvalues: {shown}")
    if args.out:
        _write_csv(
            args.out,
            ["re", "im"],
            [[_fl(v.real), _fl(v.imag)] for v in np.asarray(vals)],
        )
        print(f"spectrum -> {args.out}")
    return 0 if converged else 4


def _cmd_tree(args) -> int:
    depths = [int(s) for s in args.depths.split(",") if s.strip()]
    if not depths:
        raise ValueError("--depths must list at least one depth")
    estimators = ["majority", "bp"] if args.estimator == "both" else [args.estimator]
    points = []
    for est in estimators:
        points.extend(
            reconstruction_curve(
                args.c,
                args.lam,
                args.q,
                depths,
                args.trials,
                estimator=est,
                seed=args.seed,
                model=args.model,
            )
        )
    points.sort(key=lambda pt: (pt.depth, pt.estimator))
    for pt in points:
        print(
            f"depth={pt.depth} estimator={pt.estimator} "
            f"p_hat={_fl(pt.p_hat)} std_err={_fl(pt.std_err)}"
        )
    if args.out:
        _write_csv(
            args.out,
            ["depth", "estimator", "successes", "trials", "p_hat", "std_err"],
            [
                [
                    pt.depth,
                    pt.estimator,
                    pt.successes,
                    pt.trials,
                    _fl(pt.p_hat),
                    _fl(pt.std_err),
                ]
                for pt in points
            ],
        )
        print(f"curve -> {args.out}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    if args.out:
        cfg = dataclasses.replace(cfg, out=args.out)
    if args.jobs:
        cfg = dataclasses.replace(cfg, jobs=args.jobs)
    rows = run_sweep(cfg)
    bad = sum(1 for r in rows if not r["converged"])
    print(f"rows={len(rows)} nonconverged={bad} -> {cfg.out}")
    return 0 if bad == 0 else 4


def _cmd_bisect(args) -> int:
    rows = []
    fracs = []
    overlaps = []
    for i in range(args.pairs):
        g = sample_regular(args.n, args.degree, seed=args.seed + i)
        b1 = min_bisection_local_search(g, seed=2 * i)
        b2 = min_bisection_local_search(g, seed=2 * i + 1)
        ov = overlap(b1.sides.astype(np.int64), b2.sides.astype(np.int64), 2)
        rows.append(
            [
                i,
                b1.cut,
                b2.cut,
                _fl(b1.cut / g.m),
                _fl(b2.cut / g.m),
                _fl(ov),
            ]
        )
        fracs += [b1.cut / g.m, b2.cut / g.m]
        overlaps.append(ov)
    print(
        f"pairs={args.pairs} mean_cut_fraction={_fl(float(np.mean(fracs)))} "
        f"mean_overlap={_fl(float(np.mean(overlaps)))}"
    )
    if args.out:
        _write_csv(
            args.out,
            ["pair", "cut_a", "cut_b", "cut_frac_a", "cut_frac_b", "overlap"],
            rows,
        )
        print(f"table -> {args.out}")
    return 0


def _cmd_moments(args) -> int:
    lams = [float(s) for s in args.lambdas.split(",") if s.strip()]
    if not lams:
        raise ValueError("--lambdas must list at least one value")
    header = (
        ["c", "lambda", "q", "f_star"]
        + [f"alpha_{r}{s}" for r in range(args.q) for s in range(args.q)]
        + ["verdict"]
    )
    rows = []
    for lam in lams:
        alpha, fstar = maximize_rate(args.c, lam, args.q, seed=args.seed)
        verdict = contiguity_verdict(args.c, lam, args.q, seed=args.seed)
        print(
            f"c={_fl(args.c)} lambda={_fl(lam)} f_star={_fl(fstar)} "
            f"verdict={verdict}"
        )
        rows.append(
            [_fl(args.c), _fl(lam), args.q, _fl(fstar)]
            + [_fl(v) for v in alpha.ravel()]
            + [verdict]
        )
    if args.out:
        _write_csv(args.out, header, rows)
        print(f"scan -> {args.out}")
    return 0


def _cmd_plot(args) -> int:
    emit_plot(args.input, args.kind, args.out, bulk_c=args.c)
    print(f"plot -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_model_flags(sp, with_bp: bool = False) -> None:
    sp.add_argument("--n", type=int, default=1000)
    sp.add_argument("--q", type=int, default=2)
    sp.add_argument("--cin", type=float, default=None)
    sp.add_argument("--cout", type=float, default=None)
    sp.add_argument("--seed", type=int, default=0)
    if with_bp:
        sp.add_argument(
            "--init", choices=["random", "uniform", "planted"], default="random"
        )
        sp.add_argument("--tol", type=float, default=1e-6)
        sp.add_argument("--max-sweeps", type=int, default=1000)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blocklab",
        description="Block-model experiments: sampling, BP, spectra, sweeps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("gen", help="sample a graph to an edge-list file")
    sp.add_argument("--model", choices=["sbm", "er", "regular"], default="sbm")
    _add_model_flags(sp)
    sp.add_argument("--c", type=float, default=None, help="mean degree (er)")
    sp.add_argument("--degree", type=int, default=3, help="degree (regular)")
    sp.add_argument("--out", default=None)
    sp.add_argument("--labels-out", default=None)
    sp.set_defaults(func=_cmd_gen)

    sp = sub.add_parser("bp", help="run BP once and report the fixed point")
    _add_model_flags(sp, with_bp=True)
    sp.add_argument("--graph", default=None, help="edge-list file instead of sampling")
    sp.add_argument("--labels", default=None, help="planted labels for --graph")
    sp.add_argument("--out", default=None, help="write per-vertex marginals CSV")
    sp.set_defaults(func=_cmd_bp)

    sp = sub.add_parser("spectrum", help="directed-edge operator eigenvalues")
    _add_model_flags(sp)
    sp.add_argument("--graph", default=None)
    sp.add_argument("--labels", default=None, help=argparse.SUPPRESS)
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--full", action="store_true", help="all 2m eigenvalues (small n)")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=_cmd_spectrum)

    sp = sub.add_parser("tree", help="root reconstruction success curves")
    sp.add_argument("--c", type=float, default=2.0)
    sp.add_argument("--lambda", dest="lam", type=float, default=0.28)
    sp.add_argument("--q", type=int, default=2)
    sp.add_argument("--depths", default="12")
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument(
        "--estimator", choices=["majority", "bp", "both"], default="majority"
    )
    sp.add_argument("--model", choices=["fixed", "poisson"], default="fixed")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=_cmd_tree)

    sp = sub.add_parser("sweep", help="run a config-driven parameter grid")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", default=None, help="override the config out path")
    sp.add_argument("--jobs", type=int, default=None)
    sp.set_defaults(func=_cmd_sweep)

    sp = sub.add_parser("bisect", help="min-bisection local search demo")
    sp.add_argument("--n", type=int, default=300)
    sp.add_argument("--degree", type=int, default=3)
    sp.add_argument("--pairs", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=_cmd_bisect)

    sp = sub.add_parser("moments", help="second-moment rate-function scan")
    sp.add_argument("--q", type=int, default=2)
    sp.add_argument("--c", type=float, default=3.0)
    sp.add_argument("--lambdas", default="0.5")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=_cmd_moments)

    sp = sub.add_parser("plot", help="render a CSV to SVG")
    sp.add_argument("--kind", choices=["spectrum", "sweep", "tree"], required=True)
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--c", type=float, default=None, help="bulk circle radius^2")
    sp.set_defaults(func=_cmd_plot)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"io error: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
