"""Dyadic porosity detection and porous-scale statistics.

The central test: a node Q is porous at (k, eps) when some dyadic descendant
at relative depth k carries at most an eps-fraction of Q's mass.  Around that
test this module provides the hole-depth function por2, the porous/uniform
re-treeing that drives dimension-drop experiments, per-scale fraction
bookkeeping, an approximate (one-sided) Euclidean porosity estimator, and the
random-translation experiment that transfers Euclidean porosity to the dyadic
frame.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .dyadic import CubeAddress, CubePartition, porous_split, subdivide_uniform
from .measure import (
    _PATH_STREAM,
    _TRIAL_STREAM,
    Homothety,
    TreeMeasure,
    Weights,
    apply_homothety,
    derived_rng,
)

#: Default search cap for por2; deeper holes are reported as the inf sentinel.
DEFAULT_POR2_CAP = 8


@dataclass(frozen=True)
class PorosityParams:
    """Hole depth k, mass threshold eps, and (for Euclidean use) hole size alpha."""

    k: int
    eps: float
    alpha: float | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not 0.0 <= self.eps < 1.0:
            raise ValueError(f"eps must lie in [0, 1), got {self.eps}")
        if self.alpha is not None and not 0.0 < self.alpha <= 0.5:
            raise ValueError(f"alpha must lie in (0, 1/2], got {self.alpha}")


@dataclass(frozen=True)
class PorosityCheck:
    """Outcome of the porous test at one node."""

    porous: bool
    hole: CubeAddress | None
    hole_ratio: float | None


def _warn_if_inadmissible(k: int, eps: float, d: int) -> None:
    if eps > 2.0 ** (-k * d):
        warnings.warn(
            f"eps={eps} exceeds 2^-kd={2.0 ** (-k * d)}; dyadic porosity at "
            f"(k={k}, d={d}) is vacuous above that threshold",
            stacklevel=3,
        )


def _require_dyadic(mu: TreeMeasure) -> None:
    if not mu.dyadic_splits:
        raise TypeError(
            "porosity probes run on full dyadic trees; pass the measure's "
            "dyadic base, not a porous re-tree"
        )


def _extend_frontier(
    mu: TreeMeasure, frontier: dict[CubeAddress, float]
) -> dict[CubeAddress, float]:
    """One dyadic level deeper; zero-ratio nodes expand without realization."""
    new: dict[CubeAddress, float] = {}
    for node, ratio in frontier.items():
        if ratio == 0.0:
            for j in range(1 << node.d):
                new[node.uniform_child(j)] = 0.0
        else:
            part, w = mu.offspring(node)
            for child, wj in zip(part.children, w):
                new[child] = ratio * wj
    return new


def _min_entry(frontier: dict[CubeAddress, float]) -> tuple[CubeAddress, float]:
    """Smallest ratio; ties broken by lexicographic address order."""
    best_addr, best = None, math.inf
    for addr, ratio in frontier.items():
        if ratio < best or (ratio == best and addr.coords < best_addr.coords):
            best_addr, best = addr, ratio
    return best_addr, best


def _classify_full(
    mu: TreeMeasure, q: CubeAddress, k: int, eps: float
) -> tuple[PorosityCheck, list[dict[CubeAddress, float]]]:
    """Classification plus the per-level conditional-mass frontiers 1..k."""
    frontiers = []
    frontier = {q: 1.0}
    for _ in range(k):
        frontier = _extend_frontier(mu, frontier)
        frontiers.append(frontier)
    hole, ratio = _min_entry(frontiers[-1])
    if ratio <= eps:
        return PorosityCheck(True, hole, ratio), frontiers
    return PorosityCheck(False, None, None), frontiers


def classify_porous(
    mu: TreeMeasure, q: CubeAddress, k: int, eps: float
) -> PorosityCheck:
    """Is some R in D_k(q) an eps-hole (conditional mass <= eps)?

    Returns the selected hole: the depth-k descendant of minimal conditional
    mass, ties broken by lexicographic address order, so runs are
    reproducible.  The caller is responsible for q having positive mass;
    conditional ratios below q are well defined regardless.
    """
    _require_dyadic(mu)
    _warn_if_inadmissible(k, eps, mu.d)
    check, _ = _classify_full(mu, q, k, eps)
    return check


def por2_depth(
    mu: TreeMeasure,
    x_path: list[CubeAddress],
    n: int,
    eps: float,
    cap: int = DEFAULT_POR2_CAP,
) -> float:
    """Least k <= cap such that D_k(x_path[n]) contains an eps-hole.

    Returns math.inf when no hole exists up to the cap (the capped sentinel,
    never a number).  Once a hole exists at depth j it persists at all deeper
    depths, so the first hit is the minimum.
    """
    _require_dyadic(mu)
    frontier = {x_path[n]: 1.0}
    for j in range(1, cap + 1):
        frontier = _extend_frontier(mu, frontier)
        if _min_entry(frontier)[1] <= eps:
            return j
    return math.inf


def por2_profile(
    mu: TreeMeasure,
    x_path: list[CubeAddress],
    n_max: int,
    eps: float,
    cap: int = DEFAULT_POR2_CAP,
) -> tuple[float, ...]:
    """por2 at every level 0..n_max-1 along the lineage."""
    return tuple(por2_depth(mu, x_path, n, eps, cap) for n in range(n_max))


# ---------------------------------------------------------------------------
# Porous re-treeing (the partition operator driving the dimension bound)


def porous_retree(
    base: TreeMeasure,
    k: int,
    eps: float,
    depth: int | None = None,
    *,
    cache: bool = False,
) -> TreeMeasure:
    """View of ``base`` re-treed by the porous/uniform partition policy.

    Porous nodes split into the depth-k hole plus the per-level cubes
    avoiding it; non-porous nodes split uniformly.  Offspring weights are the
    conditional masses of the children under ``base``.  The view is
    2^-k-regular.
    """
    _require_dyadic(base)
    _warn_if_inadmissible(k, eps, base.d)

    def realizer(q: CubeAddress) -> tuple[CubePartition, Weights]:
        check, frontiers = _classify_full(base, q, k, eps)
        if not check.porous:
            part = subdivide_uniform(q, base.max_level)
            return part, base.offspring_weights(q)
        part = porous_split(q, check.hole, k, base.max_level)
        w = tuple(
            frontiers[child.level - q.level - 1][child] for child in part.children
        )
        return part, w

    return TreeMeasure(
        base.d,
        base.depth if depth is None else depth,
        realizer,
        max_level=base.max_level,
        cache=cache,
        dyadic_splits=False,
        base=base,
    )


def porous_walk(
    view: TreeMeasure, x_path: list[CubeAddress], k: int
) -> list[tuple[CubeAddress, CubePartition, Weights, int]]:
    """Project a dyadic lineage onto a porous re-tree.

    Returns per-step (node, partition, weights, chosen child index); the walk
    stops as soon as the lineage might be too shallow to identify the next
    child (a porous step can descend k levels at once).
    """
    steps = []
    top = len(x_path) - 1
    cur = x_path[0]
    while cur.level + k <= top:
        part, w = view.offspring(cur)
        idx = None
        for j, child in enumerate(part.children):
            if x_path[child.level] == child:
                idx = j
                break
        if idx is None:
            raise ValueError("lineage is not consistent with the re-tree")
        steps.append((cur, part, w, idx))
        cur = part.children[idx]
    return steps


# ---------------------------------------------------------------------------
# Per-scale fraction bookkeeping


@dataclass(frozen=True)
class ScaleReport:
    """Porous-scale statistics along one lineage.

    The dyadic arrays follow the full-dyadic-scale count (one flag per dyadic
    level); the rstep arrays follow the re-tree walk, where a porous step
    advances k levels at once.  ``eta[n-1] = 1 - N_n / M_n`` with N_n the
    non-porous steps among the first n and M_n the dyadic level reached.
    """

    k: int
    eps: float
    por2: tuple[float, ...]
    dyadic_flags: tuple[bool, ...]
    dyadic_fraction: tuple[float, ...]
    rstep_porous: tuple[bool, ...]
    nonporous_counts: tuple[int, ...]
    dyadic_levels: tuple[int, ...]
    eta: tuple[float, ...]


def porous_fraction_trajectory(
    mu: TreeMeasure,
    x_path: list[CubeAddress],
    k: int,
    eps: float,
    n_max: int | None = None,
    por2_cap: int | None = None,
) -> ScaleReport:
    """Running porous-scale fractions along a lineage of ``mu``.

    ``dyadic_fraction[n-1]`` is (1/n) |{i in [n] : por2(mu, x, i, eps) <= k}|;
    the rstep fields track the induced porous/uniform walk.
    """
    _require_dyadic(mu)
    _warn_if_inadmissible(k, eps, mu.d)
    if n_max is None:
        n_max = min(len(x_path) - 1, mu.max_level) - k
    if n_max < 1:
        raise ValueError("lineage too shallow for any porous-scale statistics")
    if n_max + k > mu.max_level:
        raise ValueError(
            f"probing depth {k} below level {n_max} exceeds the measure's "
            f"maximum level {mu.max_level}"
        )
    # The sentinel cap cannot reach past the realizable depth.
    cap = max(k, DEFAULT_POR2_CAP if por2_cap is None else por2_cap)
    cap = min(cap, mu.max_level - n_max)
    por2 = por2_profile(mu, x_path, n_max, eps, cap)
    flags = tuple(p <= k for p in por2)
    running = []
    hits = 0
    for n, flag in enumerate(flags, start=1):
        hits += flag
        running.append(hits / n)

    view = porous_retree(mu, k, eps)
    walk = porous_walk(view, x_path[: n_max + k + 1], k)
    rflags, ncounts, levels, eta = [], [], [], []
    nonporous = 0
    for node, part, w, idx in walk:
        porous = part.hole is not None
        rflags.append(porous)
        nonporous += not porous
        ncounts.append(nonporous)
        levels.append(part.children[idx].level)
        eta.append(1.0 - nonporous / levels[-1])

    return ScaleReport(
        k=k,
        eps=eps,
        por2=por2,
        dyadic_flags=flags,
        dyadic_fraction=tuple(running),
        rstep_porous=tuple(rflags),
        nonporous_counts=tuple(ncounts),
        dyadic_levels=tuple(levels),
        eta=tuple(eta),
    )


# ---------------------------------------------------------------------------
# Euclidean porosity: a certified lower bound


def _cube_bounds(addr: CubeAddress) -> tuple[tuple[float, ...], tuple[float, ...]]:
    s = 2.0 ** -addr.level
    lo = tuple(c * s for c in addr.coords)
    return lo, tuple(l + s for l in lo)


def _cube_outside_ball(addr, x, r2) -> bool:
    lo, hi = _cube_bounds(addr)
    dist2 = 0.0
    for xi, l, h in zip(x, lo, hi):
        if xi < l:
            dist2 += (l - xi) ** 2
        elif xi > h:
            dist2 += (xi - h) ** 2
    return dist2 > r2


def _cube_inside_ball(addr, x, r2) -> bool:
    lo, hi = _cube_bounds(addr)
    far2 = 0.0
    for xi, l, h in zip(x, lo, hi):
        far2 += max(abs(xi - l), abs(xi - h)) ** 2
    return far2 <= r2


def euclid_por_lower_bound(
    mu: TreeMeasure,
    x: tuple[float, ...],
    r: float,
    eps: float,
    resolution: int,
) -> float:
    """Certified lower bound on the Euclidean porosity por(mu, x, r, eps).

    Searches dyadic cubes of side >= r/resolution inside B(x, r) whose mass is
    at most eps * (a lower bound on mu(B(x, r))) and reports the largest alpha
    such that a ball of radius alpha*r fits in the certified empty region.
    One-sided by construction: no upper-bound search over ball centers is
    attempted.  In d = 1 adjacent empty cubes are merged, so non-dyadic gaps
    (two half-gaps meeting at a dyadic point) are certified at full size.
    """
    _require_dyadic(mu)
    d = mu.d
    if len(x) != d:
        raise ValueError("point dimension does not match the measure")
    if r <= 0.0:
        raise ValueError("radius must be positive")
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    m_max = max(0, math.floor(math.log2(resolution / r)))
    if m_max > mu.max_level:
        raise ValueError(
            f"resolution needs dyadic level {m_max}, beyond the measure's "
            f"maximum {mu.max_level}"
        )
    r2 = r * r

    def ball_mass_lower(node: CubeAddress, node_mass: float) -> float:
        if node_mass == 0.0 or _cube_outside_ball(node, x, r2):
            return 0.0
        if _cube_inside_ball(node, x, r2):
            return node_mass
        if node.level >= m_max:
            return 0.0  # boundary cube dropped: stay a lower bound
        part, w = mu.offspring(node)
        return math.fsum(
            ball_mass_lower(c, node_mass * wj) for c, wj in zip(part.children, w)
        )

    mu_ball = ball_mass_lower(mu.root, 1.0)
    if mu_ball <= 0.0:
        raise ValueError(
            "no positive lower bound on the ball mass at this resolution; "
            "porosity statistics are defined only at positive-mass balls"
        )
    threshold = eps * mu_ball

    holes: list[CubeAddress] = []

    def collect(node: CubeAddress, node_mass: float) -> None:
        if _cube_outside_ball(node, x, r2):
            return
        if _cube_inside_ball(node, x, r2) and node_mass <= threshold:
            holes.append(node)
            return
        if node.level >= m_max:
            return
        if node_mass == 0.0:
            for j in range(1 << d):
                collect(node.uniform_child(j), 0.0)
            return
        part, w = mu.offspring(node)
        for c, wj in zip(part.children, w):
            collect(c, node_mass * wj)

    collect(mu.root, 1.0)
    if not holes:
        return 0.0

    best_radius = max(2.0 ** -(h.level + 1) for h in holes)
    if d == 1:
        units = sorted(
            (h.coords[0] << (m_max - h.level), (h.coords[0] + 1) << (m_max - h.level))
            for h in holes
        )
        run_lo, run_hi = units[0]
        best_run = run_hi - run_lo
        for lo_u, hi_u in units[1:]:
            if lo_u == run_hi:
                run_hi = hi_u
            else:
                run_lo, run_hi = lo_u, hi_u
            best_run = max(best_run, run_hi - run_lo)
        best_radius = max(best_radius, best_run * 2.0 ** -(m_max + 1))
    return best_radius / r


# ---------------------------------------------------------------------------
# Random-translation experiment


@dataclass(frozen=True)
class TranslationTrial:
    trial: int
    translation: tuple[float, ...]
    fraction: float


@dataclass(frozen=True)
class TranslationReport:
    k: int
    eps: float
    ratio: float
    depth: int
    trials: tuple[TranslationTrial, ...]
    mean_fraction: float
    min_fraction: float
    threshold: float | None
    passed: bool | None


def hole_depth_for(alpha: float, r: float, d: int) -> int:
    """Dyadic hole depth matching Euclidean holes: any ball of radius
    alpha*r*2^-i contains a dyadic cube of side 2^-(i+k) for this k."""
    if not 0.0 < alpha <= 0.5:
        raise ValueError(f"alpha must lie in (0, 1/2], got {alpha}")
    return math.ceil(abs(math.log2(alpha * r / math.sqrt(d))))


def run_translation_trials(
    mu: TreeMeasure,
    r: float,
    alpha: float,
    eps: float,
    depth: int,
    seed: int,
    indices,
) -> list[TranslationTrial]:
    """The trials with the given absolute indices; seeds are per-index, so any
    partition of the index set over workers reproduces the serial run."""
    _require_dyadic(mu)
    if not 1 <= depth <= 50:
        raise ValueError("depth must lie in [1, 50] so grid translations stay exact")
    d = mu.d
    k = hole_depth_for(alpha, r, d)
    if depth <= k:
        raise ValueError(f"depth {depth} too small to resolve k={k} hole levels")
    out = []
    for i in indices:
        rng = derived_rng(seed, _TRIAL_STREAM, i)
        t_units = rng.integers(0, 1 << (depth - 1), size=d)
        t = tuple(float(u) * 2.0 ** -depth for u in t_units)
        nu = apply_homothety(mu, Homothety(r / 2.0, t), depth + k)
        path = nu.sample_path(derived_rng(seed, _PATH_STREAM, i), steps=depth + k)
        report = porous_fraction_trajectory(nu, path, k, eps, n_max=depth, por2_cap=k)
        out.append(TranslationTrial(i, t, report.dyadic_fraction[-1]))
    return out


def translation_experiment(
    mu: TreeMeasure,
    r: float,
    alpha: float,
    eps: float,
    trials: int,
    depth: int,
    seed: int,
    eta_target: float | None = None,
) -> TranslationReport:
    """Monte Carlo probe of the porosity-transfer statement: the homothetic
    copies r*mu + t should be dyadic porous at (k(alpha, r), eps) on at least
    a (1-2r)^d fraction of scales, for typical grid translations t.

    The input is rescaled to [0, 1/2)^d first, so the effective map is
    x -> (r/2) x + t; translations are sampled uniformly on the grid of
    multiples of 2^-depth inside [0, 1/2)^d.  ``eta_target`` is the known or
    measured mean-porosity level of ``mu``; when given, the report checks the
    mean fraction against (1-2r)^d * eta_target.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    out = run_translation_trials(mu, r, alpha, eps, depth, seed, range(trials))
    k = hole_depth_for(alpha, r, mu.d)
    fractions = [tr.fraction for tr in out]
    mean_fraction = math.fsum(fractions) / len(fractions)
    threshold = None if eta_target is None else (1.0 - 2.0 * r) ** mu.d * eta_target
    passed = None if threshold is None else mean_fraction >= threshold
    return TranslationReport(
        k=k,
        eps=eps,
        ratio=r,
        depth=depth,
        trials=tuple(out),
        mean_fraction=mean_fraction,
        min_fraction=min(fractions),
        threshold=threshold,
        passed=passed,
    )
