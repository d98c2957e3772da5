"""Command-line interface: ``hiernet <command> [options]``.

Exit codes: 0 success, 1 invalid input (including Markov violations),
2 computational failure (core cap exceeded, nonexistent MLE, non-convergence),
64 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import DEFAULT_CORE_CAP, DEFAULT_MEM_BUDGET, get_limits, set_limits
from .errors import ComputationError, MarkovViolationError, ValidationError
from .estimation import FitOptions, FitStatus, backward_select, fit_er, fit_hbeta, fit_her, lrt
from .graphs import core_decompose, enumerate_cliques, validate_markov
from .io import (
    format_dependency_graph,
    format_network,
    parse_params,
    read_dependency_graph,
    read_network,
)
from .p1 import P1Params, p1_log_unnorm, p1_psi_enum, parse_directed_network
from .partition import HBetaParams, HERParams, psi_hbeta, psi_her
from .simulate import (
    DEFAULT_SHIFT,
    StudyConfig,
    atomic_write,
    enforce_zeros,
    random_spd,
    run_study,
    sample_exact_her,
    sample_gaussian_threshold,
    write_study_csv,
)
from .suffstats import er_stats, hbeta_stats, her_stats

EXIT_OK, EXIT_INVALID, EXIT_COMPUTE, EXIT_USAGE = 0, 1, 2, 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _global_flags(p: argparse.ArgumentParser, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=d(0), help="random seed (default 0)")
    p.add_argument(
        "--core-cap", type=int, default=d(DEFAULT_CORE_CAP),
        help=f"largest enumerated core size m' (default {DEFAULT_CORE_CAP})",
    )
    p.add_argument(
        "--mem-budget", type=int, default=d(DEFAULT_MEM_BUDGET),
        help=f"bytes for the cached core table (default {DEFAULT_MEM_BUDGET})",
    )


def _fit_flags(p):
    p.add_argument("--tol", type=float, default=1e-8, help="gradient sup-norm tolerance (default 1e-8)")
    p.add_argument("--max-iter", type=int, default=10000, help="iteration limit (default 10000)")
    p.add_argument("--bound", type=float, default=30.0, help="parameter magnitude bound (default 30)")
    p.add_argument(
        "--method", choices=["newton", "gradient"], default="newton",
        help="ascent direction (default newton)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hiernet", description="Hierarchical network models with exact likelihoods.")
    parser.add_argument("--version", action="version", version=f"hiernet {__version__}")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, metavar="<command>")

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        _global_flags(p, suppress=True)
        return p

    p = add("validate-dep", "check a dependency graph for the Markov dependence property")
    p.add_argument("--dep", required=True)

    p = add("stats", "sufficient statistics of a network as TSV")
    p.add_argument("--network", required=True)
    p.add_argument("--dep", help="dependency graph (default: empty)")
    p.add_argument("--model", choices=["her", "hbeta", "er", "all"], default="all")

    p = add("psi", "log-partition function and expected statistics as TSV")
    p.add_argument("--model", choices=["her", "hbeta"], required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--dep", required=True)

    p = add("fit", "maximum-likelihood fit, JSON result")
    p.add_argument("--model", choices=["er", "her", "hbeta"], required=True)
    p.add_argument("--network", required=True, nargs="+", help="one or more networks (pooled iid sample)")
    p.add_argument("--dep", help="dependency graph (default: empty)")
    p.add_argument("--allow-nonexistent", action="store_true", help="exit 0 when the MLE does not exist")
    _fit_flags(p)

    p = add("lrt", "likelihood-ratio statistic against Erdos-Renyi, JSON result")
    p.add_argument("--network", required=True, nargs="+")
    p.add_argument("--dep", required=True)
    p.add_argument("--allow-extended", action="store_true", help="use likelihood suprema when an MLE does not exist")
    _fit_flags(p)

    p = add("select", "backward dependency-graph selection; prints the selected graph")
    p.add_argument("--network", required=True, nargs="+")
    p.add_argument("--dep", required=True)
    p.add_argument("--alpha", type=float, default=0.05, help="test level (default 0.05)")
    p.add_argument("--trace", action="store_true", help="print the test at each step to stderr")
    _fit_flags(p)

    p = add("simulate", "simulate networks into numbered files")
    p.add_argument("--method", choices=["exact", "gaussian"], required=True)
    p.add_argument("--dep", required=True)
    p.add_argument("--params", help="HER parameters (exact method)")
    p.add_argument("--alpha", type=float, help="correlation mixing weight in [0, 1) (gaussian method)")
    p.add_argument("--shift", type=float, default=DEFAULT_SHIFT, help=f"common correlation shift (default {DEFAULT_SHIFT})")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")

    p = add("study", "replicated likelihood-ratio study, CSV output")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, help="worker threads (default HIERNET_THREADS or 1)")

    p = add("p1-eval", "evaluate the hierarchical p1 model on a directed network, JSON result")
    p.add_argument("--network", required=True)
    p.add_argument("--dep", required=True)
    p.add_argument("--params", required=True)
    return parser


# ----------------------------------------------------------------------


def _catalog(args, n=None):
    from .graphs import DependencyGraph

    if getattr(args, "dep", None):
        dep = read_dependency_graph(args.dep)
    else:
        dep = DependencyGraph.empty(n)
    if n is not None and dep.n != n:
        raise ValidationError(f"dependency graph has n={dep.n} but the network has n={n}")
    return dep, enumerate_cliques(dep)


def _networks(paths):
    nets = [read_network(p) for p in paths]
    if len({x.n for x in nets}) != 1:
        raise ValidationError("all networks must have the same node count")
    return nets


def _opts(args):
    return FitOptions(tol=args.tol, max_iter=args.max_iter, bound=args.bound, method=args.method)


def _print_json(obj):
    print(json.dumps(obj, indent=2))


def _fmt(v):
    return repr(float(v))


def cmd_validate_dep(args):
    dep = read_dependency_graph(args.dep)
    bad = validate_markov(dep)
    if bad:
        for a, b in bad:
            print(f"violation: {a} {b}", file=sys.stderr)
        return EXIT_INVALID
    print(f"ok: n={dep.n}, {len(dep.edges)} edges, core size {core_decompose(dep).core_size}")
    return EXIT_OK


def cmd_stats(args):
    x = read_network(args.network)
    _, cat = _catalog(args, x.n)
    lines = []
    if args.model in ("er", "all"):
        lines.append(f"e\t{er_stats(x)}")
    if args.model in ("her", "all"):
        st = her_stats(x, cat)
        lines += [f"s\t{r}\t{v}" for r, v in enumerate(st.s, 1)]
        lines.append(f"st\t{st.s_t}")
    if args.model in ("hbeta", "all"):
        hb = hbeta_stats(x, cat)
        for i in range(cat.n):
            lines += [f"d\t{i + 1}\t{r}\t{v}" for r, v in enumerate(hb.d_stats[i], 1)]
        lines += [f"dt\t{i}\t{v}" for i, v in enumerate(hb.d_t, 1)]
    print("\n".join(lines))
    return EXIT_OK


def cmd_psi(args):
    _, cat = _catalog(args)
    params = _load_params(args.params, cat)
    lines = []
    if args.model == "her":
        if not isinstance(params, HERParams):
            raise ValidationError("model her needs parameters {'q': [...], 't': ...}")
        lp = psi_her(params, None, cat)
        lines.append(f"psi\t{_fmt(lp.value)}")
        lines += [f"E_s\t{r}\t{_fmt(v)}" for r, v in enumerate(lp.expectations[:-1], 1)]
        lines.append(f"E_st\t{_fmt(lp.expectations[-1])}")
    else:
        if not isinstance(params, HBetaParams):
            raise ValidationError("model hbeta needs parameters {'beta': [[...]], 'tau': [...]}")
        lp = psi_hbeta(params, None, cat)
        n, d = cat.n, cat.d
        lines.append(f"psi\t{_fmt(lp.value)}")
        E = lp.expectations
        for i in range(n):
            lines += [f"E_d\t{i + 1}\t{r + 1}\t{_fmt(E[i * d + r])}" for r in range(d)]
        lines += [f"E_dt\t{i + 1}\t{_fmt(E[n * d + i])}" for i in range(n)]
    print("\n".join(lines))
    return EXIT_OK


def _load_params(path, cat):
    try:
        obj = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
    return parse_params(obj, cat.n, cat.d)


def cmd_fit(args):
    nets = _networks(args.network)
    if args.model == "er":
        _print_json(fit_er(nets).to_json())
        return EXIT_OK
    _, cat = _catalog(args, nets[0].n)
    fit = fit_her if args.model == "her" else fit_hbeta
    res = fit(nets, cat, opts=_opts(args))
    _print_json(res.to_json())
    if res.status is FitStatus.SUSPECT_NONEXISTENT and not args.allow_nonexistent:
        print("error: the maximum likelihood estimate does not exist", file=sys.stderr)
        return EXIT_COMPUTE
    if res.status is FitStatus.MAX_ITERATIONS:
        print("error: iteration limit reached before convergence", file=sys.stderr)
        return EXIT_COMPUTE
    return EXIT_OK


def cmd_lrt(args):
    nets = _networks(args.network)
    _, cat = _catalog(args, nets[0].n)
    rep = lrt(nets, cat, opts=_opts(args), allow_extended=args.allow_extended)
    _print_json(rep.to_json())
    return EXIT_OK


def cmd_select(args):
    nets = _networks(args.network)
    dep, _ = _catalog(args, nets[0].n)
    trace = []
    out = backward_select(nets, dep, alpha=args.alpha, opts=_opts(args), trace=trace)
    if args.trace:
        from .graphs import dyad_label

        for step in trace:
            a, b = step["edge"]
            info = " ".join(f"{k}={v}" for k, v in step.items() if k != "edge")
            print(f"{dyad_label(a, dep.n)} {dyad_label(b, dep.n)} {info}", file=sys.stderr)
    sys.stdout.write(format_dependency_graph(out))
    return EXIT_OK


def cmd_simulate(args):
    dep, cat = _catalog(args)
    if args.count < 0:
        raise ValidationError("--count must be nonnegative")
    rng = np.random.default_rng(args.seed)
    if args.method == "exact":
        if not args.params:
            raise ValidationError("--method exact needs --params")
        params = _load_params(args.params, cat)
        if not isinstance(params, HERParams):
            raise ValidationError("exact simulation needs HER parameters {'q': [...], 't': ...}")
        nets = sample_exact_her(params, cat, count=args.count, seed=rng)
    else:
        if args.alpha is None:
            raise ValidationError("--method gaussian needs --alpha")
        spec = enforce_zeros(random_spd(dep.m, args.alpha, rng, shift=args.shift), dep)
        nets = sample_gaussian_threshold(spec, args.count, rng, n=dep.n)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    width = max(4, len(str(args.count)))
    for k, x in enumerate(nets, 1):
        atomic_write(out / f"net_{k:0{width}d}.net", format_network(x))
    print(f"wrote {len(nets)} networks to {out}")
    return EXIT_OK


def cmd_study(args):
    path = Path(args.config)
    try:
        obj = json.loads(path.read_text())
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ValidationError("study config must be a JSON object")
    if "seed" not in obj:
        obj = dict(obj, seed=args.seed)
    config = StudyConfig.from_json(obj, base_dir=path.parent)
    enumerate_cliques(config.D)  # reject invalid graphs before any work
    result = run_study(config, workers=args.workers)
    write_study_csv(result, args.out)
    for alpha in config.arms:
        print(
            f"alpha={alpha}: median S {result.median_S(alpha):.6g}, "
            f"{result.discard_count(alpha)}/{config.replicates} discarded"
        )
    return EXIT_OK


def cmd_p1_eval(args):
    try:
        text = Path(args.network).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {args.network}: {exc.strerror}") from exc
    x = parse_directed_network(text)
    _, cat = _catalog(args, x.n)
    try:
        obj = json.loads(Path(args.params).read_text())
    except OSError as exc:
        raise ValidationError(f"cannot read {args.params}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{args.params}: invalid JSON: {exc}") from exc
    params = P1Params.from_json(obj, cat.n, cat.d)
    lu = p1_log_unnorm(x, params, cat)
    psi = p1_psi_enum(params, cat)
    _print_json({"log_unnorm": lu, "psi": psi, "prob": float(np.exp(lu - psi))})
    return EXIT_OK


COMMANDS = {
    "validate-dep": cmd_validate_dep,
    "stats": cmd_stats,
    "psi": cmd_psi,
    "fit": cmd_fit,
    "lrt": cmd_lrt,
    "select": cmd_select,
    "simulate": cmd_simulate,
    "study": cmd_study,
    "p1-eval": cmd_p1_eval,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    saved = get_limits()
    try:
        set_limits(core_cap=args.core_cap, mem_budget=args.mem_budget)
        return COMMANDS[args.command](args)
    except MarkovViolationError as exc:
        for a, b in exc.violations:
            print(f"violation: {a} {b}", file=sys.stderr)
        return EXIT_INVALID
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ComputationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    finally:
        set_limits(core_cap=saved.core_cap, mem_budget=saved.mem_budget)


def run():
    sys.exit(main())


__all__ = ["main", "build_parser", "run"]
