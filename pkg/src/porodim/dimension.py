"""Entropy, Lyapunov exponents, and packing-dimension estimation along
mu-random paths.

All per-node quantities are in nats.  Every dimension quotient uses the
positive quantity log(1/side) in its denominator, so ratios land in [0, d];
the per-step length increments Mbar_n = log(side(R_n)/side(R_{n+1})) telescope
to log(1/side(R_n)), which keeps the running quotient D_n and the terminal
entropy-average estimator consistent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bounds import LOG2, psi
from .dyadic import CubeAddress, CubePartition
from .measure import _PATH_STREAM, TreeMeasure, Weights, derived_rng
from .porosity import PorosityParams, porous_retree, porous_walk


def entropy(weights: Weights) -> float:
    """Shannon entropy in nats, 0 log 0 = 0."""
    return math.fsum(psi(w) for w in weights)


@dataclass(frozen=True)
class NodeStats:
    """Entropy H, Lyapunov exponent lambda, and their ratio at one node."""

    H: float
    lam: float
    ratio: float


def node_stats(partition: CubePartition, dist: Weights) -> NodeStats:
    """H = E(-log w), lambda = E(log side(parent)/side(child)), ratio = H/lambda.

    The ratio is a discrete dimension for the offspring distribution: 0 only
    for a point mass, d only when each child's mass is its relative volume.
    """
    if len(dist) != len(partition.children):
        raise ValueError(
            f"distribution has {len(dist)} entries for "
            f"{len(partition.children)} children"
        )
    h = entropy(dist)
    parent_level = partition.parent.level
    lam = math.fsum(
        w * (c.level - parent_level) * LOG2
        for w, c in zip(dist, partition.children)
    )
    return NodeStats(H=h, lam=lam, ratio=0.0 if h == 0.0 else h / lam)


@dataclass(frozen=True)
class PathTrajectory:
    """Per-step statistics along one lineage.

    Arrays are indexed by step; ``I[n]`` is the information -log of the
    conditional weight taken at step n, ``L[n]`` the log length drop (equal to
    ``Mbar[n]`` on the dyadic frame), ``D[n]`` the running entropy-average
    quotient after n+1 steps, and ``res_H``/``res_L`` the martingale residuals
    (1/n)(sum I - sum H) and (1/n)(sum L - sum lambda).
    """

    levels: np.ndarray
    I: np.ndarray
    L: np.ndarray
    H: np.ndarray
    lam: np.ndarray
    Mbar: np.ndarray
    porous: np.ndarray
    D: np.ndarray
    res_H: np.ndarray
    res_L: np.ndarray

    @property
    def steps(self) -> int:
        return len(self.I)

    @property
    def terminal_D(self) -> float:
        """Terminal quotient from compensated sums."""
        return math.fsum(self.H) / math.fsum(self.Mbar)

    @property
    def porous_partial_sums(self) -> tuple[float, float]:
        """(H_P, Mbar_P): entropy and length sums over porous steps."""
        hp = math.fsum(h for h, p in zip(self.H, self.porous) if p)
        mp = math.fsum(m for m, p in zip(self.Mbar, self.porous) if p)
        return hp, mp

    def csv_rows(self):
        """Rows n,I,L,H,lambda,Mbar,Dn,resH,resL,porous."""
        for n in range(self.steps):
            yield (
                n,
                self.I[n],
                self.L[n],
                self.H[n],
                self.lam[n],
                self.Mbar[n],
                self.D[n],
                self.res_H[n],
                self.res_L[n],
                int(self.porous[n]),
            )


def _trajectory_from_steps(steps) -> PathTrajectory:
    n = len(steps)
    I = np.empty(n)
    L = np.empty(n)
    H = np.empty(n)
    lam = np.empty(n)
    porous = np.zeros(n, dtype=bool)
    levels = np.empty(n + 1, dtype=np.int64)
    for i, (node, part, w, idx) in enumerate(steps):
        child = part.children[idx]
        wi = w[idx]
        if wi <= 0.0:
            raise ValueError("path steps through a zero-weight child")
        I[i] = -math.log(wi)
        L[i] = (child.level - node.level) * LOG2
        H[i] = entropy(w)
        lam[i] = math.fsum(
            wj * (c.level - node.level) * LOG2 for wj, c in zip(w, part.children)
        )
        porous[i] = part.hole is not None
        levels[i] = node.level
    levels[n] = steps[-1][1].children[steps[-1][3]].level if n else 0
    Mbar = L.copy()
    counts = np.arange(1, n + 1, dtype=float)
    D = np.cumsum(H) / np.cumsum(Mbar)
    res_H = (np.cumsum(I) - np.cumsum(H)) / counts
    res_L = (np.cumsum(L) - np.cumsum(lam)) / counts
    return PathTrajectory(
        levels=levels,
        I=I,
        L=L,
        H=H,
        lam=lam,
        Mbar=Mbar,
        porous=porous,
        D=D,
        res_H=res_H,
        res_L=res_L,
    )


def _steps_along(mu: TreeMeasure, path: list[CubeAddress]):
    steps = []
    for node, nxt in zip(path, path[1:]):
        part, w = mu.offspring(node)
        idx = part.children.index(nxt)
        steps.append((node, part, w, idx))
    return steps


def path_trajectory(
    mu: TreeMeasure,
    path: list[CubeAddress],
    classifier: PorosityParams | None = None,
) -> PathTrajectory:
    """Trajectory statistics along a lineage of ``mu``.

    Without a classifier, ``path`` must be a lineage in mu's own tree (dyadic
    or re-treed).  With a classifier, ``mu`` must be a dyadic measure and
    ``path`` a dyadic lineage; the walk is projected onto the porous re-tree
    at (classifier.k, classifier.eps), so porous steps jump k levels.
    """
    if classifier is None:
        steps = _steps_along(mu, path)
    else:
        view = porous_retree(mu, classifier.k, classifier.eps)
        steps = porous_walk(view, path, classifier.k)
    if not steps:
        raise ValueError("path has no usable steps")
    return _trajectory_from_steps(steps)


@dataclass(frozen=True)
class DimensionEstimate:
    """Entropy-average packing-dimension estimate over sampled paths.

    ``value`` is the sample maximum of the terminal quotients: the estimator
    targets an essential supremum, which finite sampling can only
    under-estimate, so mean and 95th percentile are reported alongside.
    """

    value: float
    mean: float
    p95: float
    per_path: tuple[float, ...]
    depth: int
    paths: int


def sampled_trajectory(
    mu: TreeMeasure, depth: int, seed: int | np.random.Generator
) -> PathTrajectory:
    """Sample one lineage and record its trajectory in a single pass."""
    steps = list(mu.walk(seed, steps=depth))
    if not steps:
        raise ValueError("empty walk")
    return _trajectory_from_steps(steps)


def estimate_packing_dim(
    mu: TreeMeasure, depth: int, paths: int, seed: int
) -> DimensionEstimate:
    """Sample ``paths`` lineages of ``depth`` steps and aggregate terminal
    entropy-average quotients sum H(R_i) / log(1/side(R_n))."""
    if paths < 1:
        raise ValueError("need at least one path")
    terms = []
    for i in range(paths):
        traj = sampled_trajectory(mu, depth, derived_rng(seed, _PATH_STREAM, i))
        terms.append(traj.terminal_D)
    arr = np.asarray(terms)
    return DimensionEstimate(
        value=float(arr.max()),
        mean=float(arr.mean()),
        p95=float(np.percentile(arr, 95)),
        per_path=tuple(terms),
        depth=depth,
        paths=paths,
    )


@dataclass(frozen=True)
class ConverseBound:
    """Minimal offspring entropy under a floor, and the induced dimension
    lower bound for measures that fail to be porous often."""

    hmin: float
    lower_bound: float


def hmin_and_converse(d: int, eps: float, eta: float) -> ConverseBound:
    """H_min(eps) = psi(1 - (2^d - 1) eps) + (2^d - 1) psi(eps), the smallest
    entropy of a 2^d-vector with all entries >= eps (attained at an extreme
    point of the constraint polytope), and the bound (1 - eta) H_min / log 2.

    H_min(2^-d) = d log 2: the floor forces the uniform vector.
    """
    if d < 1:
        raise ValueError(f"need d >= 1, got {d}")
    hi = 2.0 ** -d
    if not 0.0 <= eps <= hi * (1.0 + 1e-12):
        raise ValueError(f"eps must lie in [0, 2^-d] = [0, {hi}], got {eps}")
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    n = 1 << d
    hmin = psi(1.0 - (n - 1) * min(eps, hi)) + (n - 1) * psi(min(eps, hi))
    return ConverseBound(hmin=hmin, lower_bound=(1.0 - eta) * hmin / LOG2)
