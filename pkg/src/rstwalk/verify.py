"""Distribution metrics and statistical checks for spanning-tree samplers."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .exact import MultigraphView, count_weighted_trees, enumerate_trees
from .graph import WeightedGraph
from .resistance import ResistanceOracle, build_exact_oracle

NORM_TOL = 1e-9
CHI2_ALPHA = 1e-3


def _as_dict(p):
    if isinstance(p, dict):
        return p
    if isinstance(p, EmpiricalDistribution):
        return p.probabilities()
    return dict(enumerate(np.asarray(p, dtype=float).tolist()))


def _check_normalized(p, name):
    s = math.fsum(p.values())
    if abs(s - 1.0) > NORM_TOL or any(x < 0 for x in p.values()):
        raise ValueError(f"{name} is not a probability distribution (sums to {s!r})")


def tv_distance(mu, nu) -> float:
    """Half the L1 distance; missing keys count as probability zero.

    Accepts dicts keyed by outcome, arrays over a shared index, or
    :class:`EmpiricalDistribution` objects.
    """
    mu, nu = _as_dict(mu), _as_dict(nu)
    _check_normalized(mu, "mu")
    _check_normalized(nu, "nu")
    keys = set(mu) | set(nu)
    return 0.5 * math.fsum(abs(mu.get(x, 0.0) - nu.get(x, 0.0)) for x in keys)


def kl_divergence(mu, nu) -> float:
    """``sum mu log(mu / nu)`` in nats, with ``0 log 0 = 0``."""
    mu, nu = _as_dict(mu), _as_dict(nu)
    _check_normalized(mu, "mu")
    _check_normalized(nu, "nu")
    total = []
    for x, p in mu.items():
        if p == 0:
            continue
        q = nu.get(x, 0.0)
        if q == 0:
            raise ValueError(f"outcome {x!r} has mass under mu but not under nu")
        total.append(p * math.log(p / q))
    return max(0.0, math.fsum(total))


class EmpiricalDistribution:
    """Counts of sampled trees keyed by their sorted edge-index tuple."""

    def __init__(self, counts=None):
        self.counts = Counter(counts or {})

    @classmethod
    def from_trees(cls, trees) -> "EmpiricalDistribution":
        return cls(Counter(tuple(sorted(int(e) for e in t)) for t in trees))

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def update(self, trees):
        self.counts.update(tuple(sorted(int(e) for e in t)) for t in trees)
        return self

    def probabilities(self) -> dict:
        tot = self.total
        return {k: c / tot for k, c in self.counts.items()}

    def edge_frequencies(self, m: int) -> np.ndarray:
        freq = np.zeros(m)
        for tree, c in self.counts.items():
            freq[list(tree)] += c
        return freq / self.total


def reference_distribution(G: WeightedGraph) -> dict:
    return dict(enumerate_trees(G))


def chi_square_pvalue(observed, expected_probs) -> float:
    observed = np.asarray(observed, dtype=float)
    expected = np.asarray(expected_probs, dtype=float) * observed.sum()
    if observed.size < 2:
        return 1.0
    return float(stats.chisquare(observed, expected).pvalue)


def chi_square_uniform(counts, n_categories: int) -> float:
    """p-value of a chi-square test that ``counts`` (a Counter or sequence
    over ``n_categories`` outcomes, missing outcomes zero) is uniform."""
    if isinstance(counts, dict):
        obs = list(counts.values())
        obs += [0] * (n_categories - len(obs))
    else:
        obs = list(counts)
    return chi_square_pvalue(obs, np.full(n_categories, 1.0 / n_categories))


def distribution_report(trees, G: WeightedGraph) -> dict:
    """TV and chi-square of sampled trees against exact enumeration."""
    ref = reference_distribution(G)
    emp = EmpiricalDistribution.from_trees(trees)
    keys = sorted(ref)
    obs = [emp.counts.get(k, 0) for k in keys]
    stray = emp.total - sum(obs)
    return {
        "trees": len(ref),
        "samples": emp.total,
        "tv": tv_distance(emp, ref),
        "chi2_pvalue": chi_square_pvalue(obs, [ref[k] for k in keys]) if stray == 0 else 0.0,
        "outside_support": stray,
    }


@dataclass
class MarginalReport:
    frequency: np.ndarray
    expected: np.ndarray
    stderr: np.ndarray
    samples: int
    sigmas: float = 3.0

    @property
    def z(self) -> np.ndarray:
        dev = self.frequency - self.expected
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(self.stderr > 0, dev / self.stderr, np.where(np.abs(dev) > 1e-12, np.inf, 0.0))
        return z

    @property
    def flagged(self) -> np.ndarray:
        return np.flatnonzero(np.abs(self.z) > self.sigmas)

    @property
    def fraction_within(self) -> float:
        return 1.0 - len(self.flagged) / max(1, len(self.expected))

    @property
    def l1_error(self) -> float:
        return float(np.abs(self.frequency - self.expected).sum())

    @property
    def frequency_sum(self) -> float:
        return float(self.frequency.sum())


def leverage_exact(G: WeightedGraph, oracle: ResistanceOracle | None = None) -> np.ndarray:
    oracle = oracle if oracle is not None else build_exact_oracle(G)
    lev = np.zeros(G.m)
    pos = G.w > 0
    lev[pos] = G.w[pos] * oracle.query_pairs(G.u[pos], G.v[pos])
    return np.clip(lev, 0.0, 1.0)


def marginal_check(samples, G: WeightedGraph, oracle: ResistanceOracle | None = None,
                   sigmas: float = 3.0) -> MarginalReport:
    """Per-edge tree-membership frequency against the leverage score ``w_e R_e``."""
    if not isinstance(samples, EmpiricalDistribution):
        samples = EmpiricalDistribution.from_trees(samples)
    expected = leverage_exact(G, oracle)
    s = samples.total
    return MarginalReport(
        frequency=samples.edge_frequencies(G.m),
        expected=expected,
        stderr=np.sqrt(expected * (1 - expected) / s),
        samples=s,
        sigmas=sigmas,
    )


def marginal_noise_floor(expected, samples: int) -> tuple[float, float]:
    """Mean and standard deviation of the L1 marginal error of exact samples
    (normal approximation, edges treated as independent)."""
    var = np.asarray(expected) * (1 - np.asarray(expected)) / samples
    mean = float(np.sqrt(2.0 / np.pi * var).sum())
    sd = float(np.sqrt(((1 - 2.0 / np.pi) * var).sum()))
    return mean, sd


def tv_noise_floor(probs, samples: int) -> tuple[float, float]:
    """Same for the TV distance of an empirical law from ``probs``."""
    mean, sd = marginal_noise_floor(probs, samples)
    return 0.5 * mean, 0.5 * sd


@dataclass
class CurvePoint:
    n_iter: int
    metric: str
    value: float
    floor: float
    floor_sd: float


def mixing_curve(sampler, grid, samples: int, random_state=None, enumerable_limit: int = 10**5):
    """Distance to the weighted-uniform law after each walk length in ``grid``.

    ``sampler`` is a fitted :class:`~rstwalk.walk.DownUpTreeSampler`. Each
    walk is recorded at every grid point, so a single pass of ``max(grid)``
    iterations serves the whole curve. The metric is TV against enumeration
    when the graph has at most ``enumerable_limit`` trees, otherwise the L1
    error of the edge marginals.
    """
    grid = sorted(set(int(x) for x in grid))
    snaps = sampler.sample(samples, random_state=random_state, snapshots=grid)
    return curve_from_snapshots(sampler.graph_, grid, snaps, enumerable_limit)


def curve_from_snapshots(G: WeightedGraph, grid, snaps, enumerable_limit: int = 10**5):
    """Mixing curve from an ``(samples, len(grid), n - 1)`` snapshot array."""
    samples = snaps.shape[0]
    unit = MultigraphView(G.n, G.u[G.w > 0], G.v[G.w > 0], np.ones(int((G.w > 0).sum())), ())
    enumerable = count_weighted_trees(unit) <= enumerable_limit
    out = []
    if enumerable:
        ref = reference_distribution(G)
        floor, sd = tv_noise_floor(list(ref.values()), samples)
        for i, M in enumerate(grid):
            val = tv_distance(EmpiricalDistribution.from_trees(snaps[:, i]), ref)
            out.append(CurvePoint(M, "tv", val, floor, sd))
    else:
        expected = leverage_exact(G)
        floor, sd = marginal_noise_floor(expected, samples)
        for i, M in enumerate(grid):
            rep = marginal_check(EmpiricalDistribution.from_trees(snaps[:, i]), G)
            out.append(CurvePoint(M, "marginal_l1", rep.l1_error, floor, sd))
    return out


def plateau_iteration(curve, bands: float = 3.0):
    """Smallest grid point from which every value stays within ``bands``
    noise standard deviations of the floor; ``None`` if never."""
    hit = None
    for p in reversed(curve):
        if p.value <= p.floor + bands * p.floor_sd:
            hit = p.n_iter
        else:
            break
    return hit


def is_nonincreasing(curve, bands: float = 2.0) -> bool:
    """Every later point's noise band overlaps every earlier point's band,
    bands being ``value +- bands * floor_sd``."""
    for i, a in enumerate(curve):
        for b in curve[i + 1:]:
            if b.value - bands * b.floor_sd > a.value + bands * a.floor_sd:
                return False
    return True
