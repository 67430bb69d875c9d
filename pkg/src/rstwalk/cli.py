"""Command-line interface: ``rstwalk {sample,resist,gadget,verify,bench}``.

Exit status is 0 on success, 1 when a verification fails and 2 on bad input.
Reports are ``key: value`` lines; without ``--seed`` a seed is drawn and
reported so every run can be replayed.
"""

from __future__ import annotations

import argparse
import math
import secrets
import sys
import time
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import gadget as gd
from .exact import ExactTreeSampler, enumerate_trees
from .exceptions import GraphError, SamplingError, SolverError
from .generators import graph_family, random_small_graph
from .graph import read_graph, serialize_graph
from .isotropic import build_isotropic_view, marginal_bound_check
from .ledger import QueryLedger
from .multisample import k_subset_sample
from .resistance import EffectiveResistance
from .verify import (
    chi_square_uniform,
    distribution_report,
    is_nonincreasing,
    marginal_check,
    mixing_curve,
    plateau_iteration,
)
from .walk import DownUpTreeSampler, chain_stationarity_check, default_iterations

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


@dataclass
class RunReport:
    command: str
    seed: int
    config: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    ledger: dict = field(default_factory=dict)

    def to_text(self) -> str:
        lines = [f"command: {self.command}", f"seed: {self.seed}"]
        lines += [f"config.{k}: {v}" for k, v in self.config.items()]
        lines += [f"{k}: {v}" for k, v in self.outputs.items()]
        lines += [f"{k}: {v}" for k, v in self.ledger.items()]
        return "\n".join(lines) + "\n"


def _seed(args) -> int:
    return args.seed if args.seed is not None else secrets.randbits(63)


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def _make_sampler(args, seed):
    if args.method == "walk":
        return DownUpTreeSampler(epsilon=args.epsilon, n_iter=args.n_iter, C=args.C, k_fresh=args.k_fresh,
                                 lambda_mode=args.lambda_mode, oracle=args.oracle,
                                 oracle_epsilon=args.oracle_epsilon, random_state=seed,
                                 n_jobs=getattr(args, "jobs", None))
    return ExactTreeSampler(method=args.method, random_state=seed)


def _sampler_config(args) -> dict:
    cfg = {"method": args.method}
    if args.method == "walk":
        cfg.update(epsilon=args.epsilon, C=args.C, n_iter=args.n_iter, k_fresh=args.k_fresh,
                   lambda_mode=args.lambda_mode, oracle=args.oracle, oracle_epsilon=args.oracle_epsilon)
    return cfg


def _walk_outputs(sampler) -> dict:
    if not isinstance(sampler, DownUpTreeSampler):
        return {}
    return {"walk.n_iter": sampler.n_iter_, "walk.k_fresh": sampler.k_fresh_,
            "walk.m_prime": sampler.view_.m_prime, "walk.lambda": _fmt(sampler.view_.lambda_)}


def _emit_report(report: RunReport, args, out=None):
    text = report.to_text()
    if getattr(args, "report", None):
        with open(args.report, "w") as fh:
            fh.write(text)
    else:
        (out or sys.stderr).write(text)


def cmd_sample(args) -> int:
    seed = _seed(args)
    G = read_graph(args.graph)
    sampler = _make_sampler(args, seed).fit(G)
    trees = sampler.sample(args.count)
    sys.stdout.write("".join(" ".join(map(str, t)) + "\n" for t in trees.tolist()))
    ledger = sampler.ledger_.summary(args.timings) if args.method == "walk" else {}
    report = RunReport("sample", seed, _sampler_config(args),
                       {"graph.n": G.n, "graph.m": G.m, "trees": len(trees), **_walk_outputs(sampler)},
                       ledger)
    _emit_report(report, args)
    return EXIT_OK


def cmd_resist(args) -> int:
    seed = _seed(args)
    G = read_graph(args.graph)
    est = EffectiveResistance(args.oracle, args.epsilon, random_state=seed).fit(G)
    if args.all_pairs:
        R = est.oracle_.all_pairs()
        rows = [(a, b, R[a, b]) for a in range(G.n) for b in range(a + 1, G.n)]
    else:
        rows = [(int(a), int(b), r) for a, b, r in zip(G.u, G.v, est.edge_resistances())]
    sys.stdout.write("".join(f"{a} {b} {r:.17g}\n" for a, b, r in rows))
    return EXIT_OK


def _read_matrix(path) -> np.ndarray:
    with open(path) as fh:
        rows = [line.split() for line in fh if line.strip() and not line.startswith("#")]
    try:
        return np.array([[int(x) for x in r] for r in rows])
    except ValueError:
        raise GraphError(f"{path}: matrix entries must be integers") from None


def _read_tree(path) -> list[int]:
    with open(path) as fh:
        for line in fh:
            tok = line.split()
            if tok and all(t.isdigit() for t in tok):
                return [int(t) for t in tok]
    raise GraphError(f"{path}: no tree line found")


def cmd_gadget(args) -> int:
    if args.action == "recover":
        if not args.tree:
            raise GraphError("gadget recover needs --tree")
        M = gd.recover_matrix(_read_tree(args.tree), args.rows, args.cols)
        sys.stdout.write("".join(" ".join(map(str, r)) + "\n" for r in M.tolist()))
        return EXIT_OK
    if args.matrix:
        M = gd.check_search_matrix(_read_matrix(args.matrix))
    else:
        M = gd.random_search_matrix(args.rows, args.cols, _seed(args))
    G = gd.build_gadget(M, refined=args.refined)
    header = "".join("# " + " ".join(map(str, r)) + "\n" for r in M.tolist())
    sys.stdout.write(header + serialize_graph(G))
    return EXIT_OK


def _verdict(report: RunReport, ok: bool) -> int:
    report.outputs["result"] = "pass" if ok else "fail"
    sys.stdout.write(report.to_text())
    return EXIT_OK if ok else EXIT_FAIL


def _graph_arg(args, rng):
    if args.graph:
        return read_graph(args.graph)
    return random_small_graph(rng)


def verify_dist(args, seed):
    G = _graph_arg(args, seed)
    sampler = _make_sampler(args, seed).fit(G)
    trees = sampler.sample(args.samples or 50000)
    rep = distribution_report(trees, G)
    report = RunReport("verify dist", seed, {**_sampler_config(args), "tolerance": args.tol},
                       {k: _fmt(v) for k, v in rep.items()})
    return report, rep["tv"] < args.tol and rep["outside_support"] == 0


def verify_marginals(args, seed):
    G = _graph_arg(args, seed)
    sampler = _make_sampler(args, seed).fit(G)
    rep = marginal_check(sampler.sample(args.samples or 20000), G)
    out = {"samples": rep.samples, "edges": G.m, "fraction_within_3sigma": _fmt(rep.fraction_within),
           "flagged": " ".join(map(str, rep.flagged.tolist())) or "-",
           "frequency_sum": _fmt(rep.frequency_sum), "l1_error": _fmt(rep.l1_error)}
    report = RunReport("verify marginals", seed, _sampler_config(args), out)
    return report, rep.fraction_within >= 0.95


def verify_iso(args, seed):
    G = _graph_arg(args, seed)
    est = EffectiveResistance(args.oracle, args.oracle_epsilon, random_state=seed).fit(G)
    lam = None if args.lambda_mode == "norm" else float(G.n)
    view = build_isotropic_view(G, est.oracle_, lam)
    rep = marginal_bound_check(view)
    out = {"m": rep.m, "m_prime": rep.m_prime, "lambda": _fmt(rep.lambda_),
           "leverage_norm": _fmt(rep.leverage_norm), "max_marginal": _fmt(rep.max_marginal),
           "marginal_bound": _fmt(rep.marginal_bound), "size_ok": rep.size_ok,
           "marginal_ok": rep.marginal_ok}
    report = RunReport("verify iso", seed, {"oracle": args.oracle, "lambda_mode": args.lambda_mode}, out)
    return report, rep.ok


def verify_multisample(args, seed):
    q = [int(x) for x in args.domain.split(",")]
    k = args.k
    rng = np.random.default_rng(seed)
    samples = args.samples or 100000
    N = sum(q)
    counts = Counter(k_subset_sample(q, k, rng) for _ in range(samples))
    cats = math.comb(N, k)
    p = chi_square_uniform(counts, cats)
    report = RunReport("verify multisample", seed, {"domain": args.domain, "k": k},
                       {"samples": samples, "subsets": cats, "observed_subsets": len(counts),
                        "chi2_pvalue": _fmt(p)})
    return report, p > 1e-3


def verify_mixing(args, seed):
    G = _graph_arg(args, seed)
    args.method = "walk"
    sampler = _make_sampler(args, seed).fit(G)
    M_default = default_iterations(G.n, args.epsilon, args.C)
    grid = sorted({int(x) for x in args.grid.split(",")} | {M_default}) if args.grid else \
        sorted({0, 1, 2, 4, 8, 16, 32, M_default})
    curve = mixing_curve(sampler, grid, args.samples or 5000, random_state=seed)
    plateau = plateau_iteration(curve)
    mono = is_nonincreasing(curve)
    series = ",".join(f"{p.n_iter}:{p.value:.6g}" for p in curve)
    out = {"metric": curve[0].metric, "series": series, "noise_floor": _fmt(curve[0].floor),
           "noise_sd": _fmt(curve[0].floor_sd), "default_n_iter": M_default,
           "plateau_n_iter": plateau if plateau is not None else "none", "nonincreasing": mono}
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write("n_iter,metric,value,floor,floor_sd\n")
            fh.writelines(f"{p.n_iter},{p.metric},{p.value:.9g},{p.floor:.9g},{p.floor_sd:.9g}\n"
                          for p in curve)
    report = RunReport("verify mixing", seed, _sampler_config(args), out)
    return report, mono and plateau is not None and plateau <= M_default


def verify_chain(args, seed):
    G = _graph_arg(args, seed)
    rep = chain_stationarity_check(G, args.t)
    out = {"states": len(rep.states), "stationarity_residual": f"{rep.stationarity_residual:.3e}",
           "complement_residual": f"{rep.complement_residual:.3e}",
           "limit_residual": f"{rep.limit_residual:.3e}", "tv_monotone": rep.monotone,
           "tv_curve": ",".join(f"{x:.3e}" for x in rep.tv_curve[:10])}
    return RunReport("verify chain", seed, {"t": args.t if args.t else G.n + 1}, out), rep.ok


def verify_gadget(args, seed):
    rng = np.random.default_rng(seed)
    M = gd.random_search_matrix(args.rows, args.cols, rng)
    G = gd.build_gadget(M, refined=args.refined)
    args.method = "walk"
    sampler = _make_sampler(args, seed).fit(G)
    samples = args.samples or (1000 if args.refined else 20)
    trees = sampler.sample(samples)
    hits = 0
    for t in trees:
        try:
            hits += bool(np.array_equal(gd.recover_matrix(t, args.rows, args.cols), M))
        except gd.RecoveryError:
            pass
    out = {"samples": samples, "recovered": hits, "rate": _fmt(hits / samples)}
    if args.refined:
        p = gd.refined_success_probability(M)
        out["exact_probability"] = _fmt(p)
        ok = abs(hits / samples - p) <= 0.03
    else:
        enum = enumerate_trees(G)
        out["support_size"] = len(enum)
        ok = hits == samples and enum == [(gd.planted_tree(M), 1.0)]
    return RunReport("verify gadget", seed, {"rows": args.rows, "cols": args.cols,
                                             "refined": args.refined}, out), ok


SUITES = {
    "dist": verify_dist,
    "marginals": verify_marginals,
    "iso": verify_iso,
    "multisample": verify_multisample,
    "mixing": verify_mixing,
    "chain": verify_chain,
    "gadget": verify_gadget,
}


def cmd_verify(args) -> int:
    seed = _seed(args)
    report, ok = SUITES[args.suite](args, seed)
    return _verdict(report, ok)


def cmd_bench(args) -> int:
    seed = _seed(args)
    sizes = [int(x) for x in args.sizes.split(",") if x.strip()] if args.sizes else []
    methods = [m for m in args.methods.split(",") if m]
    out = ["method,family,n,m,m_prime,n_iter,k_fresh,samples,wall_seconds,classical_calls,charged_queries"]
    ss = np.random.SeedSequence(seed)
    for n, child in zip(sizes, ss.spawn(len(sizes))):
        G = graph_family(args.family, n, np.random.default_rng(child))
        for method in methods:
            args.method = method
            t0 = time.perf_counter()
            sampler = _make_sampler(args, np.random.default_rng(child)).fit(G)
            sampler.sample(args.samples)
            wall = time.perf_counter() - t0
            if method == "walk":
                led: QueryLedger = sampler.ledger_
                row = [method, args.family, n, G.m, sampler.view_.m_prime, sampler.n_iter_,
                       sampler.k_fresh_, args.samples, f"{wall:.4f}", led.total_classical,
                       f"{led.total_charged:.6f}"]
            else:
                row = [method, args.family, n, G.m, "", "", "", args.samples, f"{wall:.4f}", "", ""]
            out.append(",".join(map(str, row)))
    sys.stdout.write("\n".join(out) + "\n")
    sys.stderr.write(f"seed: {seed}\n")
    return EXIT_OK


def _add_walk_options(p):
    p.add_argument("--method", choices=("walk", "wilson", "aldous"), default="walk")
    p.add_argument("--epsilon", type=float, default=0.05, help="target TV accuracy (default 0.05)")
    p.add_argument("--C", type=float, default=2.0, help="walk-length constant (default 2)")
    p.add_argument("--n-iter", type=int, default=None, help="override the walk length")
    p.add_argument("--k-fresh", type=int, default=None, help="fresh copies per step (default 2n)")
    p.add_argument("--lambda", dest="lambda_mode", choices=("norm", "n"), default="norm")
    p.add_argument("--oracle", choices=("sketch", "exact"), default="sketch")
    p.add_argument("--oracle-epsilon", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rstwalk", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="sample spanning trees of a graph file")
    p.add_argument("graph")
    _add_walk_options(p)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--report", help="write the run report here instead of stderr")
    p.add_argument("--timings", action="store_true", help="include wall-clock per phase")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("resist", help="effective resistances as 'u v R' lines")
    p.add_argument("graph")
    p.add_argument("--all-pairs", action="store_true")
    p.add_argument("--oracle", choices=("sketch", "exact"), default="exact")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_resist)

    p = sub.add_parser("gadget", help="build a search-matrix gadget graph or recover its matrix")
    p.add_argument("action", nargs="?", choices=("build", "recover"), default="build")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", type=int, required=True)
    p.add_argument("--refined", action="store_true")
    p.add_argument("--matrix")
    p.add_argument("--tree")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_gadget)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", choices=sorted(SUITES))
    p.add_argument("--graph")
    _add_walk_options(p)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--tol", type=float, default=0.02)
    p.add_argument("--domain", default="1,1,1,1", help="copy counts for the multisample suite")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--grid", help="comma-separated walk lengths for the mixing suite")
    p.add_argument("--csv", help="write the mixing curve here")
    p.add_argument("--t", type=int, default=None, help="extended-set size for the chain suite")
    p.add_argument("--rows", type=int, default=3)
    p.add_argument("--cols", type=int, default=3)
    p.add_argument("--refined", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="wall-clock and charged-query table over graph sizes")
    p.add_argument("--family", choices=("dense", "sparse", "complete"), default="dense")
    p.add_argument("--sizes", default="50,100,200")
    p.add_argument("--methods", default="walk,wilson")
    p.add_argument("--samples", type=int, default=1)
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--C", type=float, default=2.0)
    p.add_argument("--n-iter", type=int, default=None)
    p.add_argument("--k-fresh", type=int, default=None)
    p.add_argument("--lambda", dest="lambda_mode", choices=("norm", "n"), default="norm")
    p.add_argument("--oracle", choices=("sketch", "exact"), default="sketch")
    p.add_argument("--oracle-epsilon", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (GraphError, OSError, ValueError) as exc:
        sys.stderr.write(f"rstwalk: error: {exc}\n")
        return EXIT_INPUT
    except (SamplingError, SolverError) as exc:
        sys.stderr.write(f"rstwalk: error: {exc}\n")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
