"""Tree measures on the dyadic frame: generators, mass queries, path
sampling, and exact pushforwards under dyadic homotheties.

A tree measure assigns every realized node a partition of its cube and a
probability vector over the partition's children (the conditional mass
splits); the mass of a node is the product of the conditional weights along
its lineage.  Realization is lazy: node data is produced on demand by a
deterministic realizer keyed by (seed, node address) through a counter-based
generator (numpy Philox), so parallel and serial builds agree bit for bit and
rebuilding with the same seed is identical.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .dyadic import (
    DEFAULT_MAX_LEVEL,
    CubeAddress,
    CubePartition,
    root,
    subdivide_uniform,
)

Weights = tuple[float, ...]

#: Stream tags keeping node draws, path draws and trial draws independent.
_NODE_STREAM = 0
_PATH_STREAM = 1
_TRIAL_STREAM = 2

#: Above this lineage length, masses are accumulated in log space.
_LOG_SPACE_DEPTH = 40

_WEIGHT_SUM_TOL = 1e-12


class UnrealizedNodeError(LookupError):
    """A positive-mass node was queried beyond the realized/realizable tree."""


def _u64(seed: int) -> int:
    return seed & 0xFFFFFFFFFFFFFFFF


def node_rng(seed: int, q: CubeAddress, stream: int = _NODE_STREAM) -> np.random.Generator:
    """Counter-based generator keyed by (seed, stream, node address)."""
    entropy = (_u64(seed), stream, q.level, *q.coords)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def derived_rng(seed: int, stream: int, index: int) -> np.random.Generator:
    """Generator for the ``index``-th path/trial, independent of schedule."""
    entropy = (_u64(seed), stream, index)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def _check_weights(w: Sequence[float], n: int, what: str) -> Weights:
    w = tuple(float(x) for x in w)
    if len(w) != n:
        raise ValueError(f"{what} must have {n} entries, got {len(w)}")
    if any(x < 0.0 for x in w):
        raise ValueError(f"{what} has negative entries")
    if abs(math.fsum(w) - 1.0) > _WEIGHT_SUM_TOL:
        raise ValueError(f"{what} does not sum to 1 (got {math.fsum(w)!r})")
    return w


# ---------------------------------------------------------------------------
# Offspring-distribution generators


@dataclass(frozen=True)
class Uniform:
    """Every child gets mass 2^-d: Lebesgue measure."""


@dataclass(frozen=True)
class Bernoulli:
    """The same fixed offspring vector at every node (a product measure)."""

    weights: Weights

    def __post_init__(self):
        object.__setattr__(
            self, "weights", _check_weights(self.weights, len(self.weights), "weights")
        )


@dataclass(frozen=True)
class CascadeFiniteMixture:
    """Each node independently draws one of ``components`` by ``probs``."""

    components: tuple[Weights, ...]
    probs: Weights

    def __post_init__(self):
        if not self.components:
            raise ValueError("mixture needs at least one component")
        n = len(self.components[0])
        comps = tuple(
            _check_weights(c, n, f"mixture component {i}")
            for i, c in enumerate(self.components)
        )
        probs = _check_weights(self.probs, len(comps), "mixture probabilities")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "probs", probs)


@dataclass(frozen=True)
class CascadeDirichlet:
    """Each node independently draws its offspring vector from a Dirichlet."""

    concentration: tuple[float, ...]

    def __post_init__(self):
        conc = tuple(float(x) for x in self.concentration)
        if not conc or any(a <= 0.0 for a in conc):
            raise ValueError(f"concentration must be positive, got {self.concentration}")
        object.__setattr__(self, "concentration", conc)


@dataclass(frozen=True)
class CantorMiddleHalf:
    """The middle-half Cantor measure on [0,1): keep the outer quarters.

    Deterministic address rule: even levels split mass (1/2, 1/2); at odd
    levels the mass sits entirely in the outer child (left child of an even
    coordinate, right child of an odd one).  d = 1 only.
    """


GeneratorModel = (
    Uniform | Bernoulli | CascadeFiniteMixture | CascadeDirichlet | CantorMiddleHalf
)


@dataclass(frozen=True)
class GeneratorSpec:
    """A reproducible recipe for a dyadic tree measure."""

    d: int
    model: GeneratorModel
    seed: int = 0

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"ambient dimension must be >= 1, got {self.d}")
        n = 1 << self.d
        m = self.model
        if isinstance(m, Bernoulli) and len(m.weights) != n:
            raise ValueError(f"weights must have {n} entries for d={self.d}")
        if isinstance(m, CascadeFiniteMixture) and len(m.components[0]) != n:
            raise ValueError(f"mixture components must have {n} entries for d={self.d}")
        if isinstance(m, CascadeDirichlet) and len(m.concentration) != n:
            raise ValueError(f"concentration must have {n} entries for d={self.d}")
        if isinstance(m, CantorMiddleHalf) and self.d != 1:
            raise ValueError("the middle-half Cantor measure is 1-dimensional")
        if not isinstance(m, GeneratorModel):
            raise TypeError(f"unknown generator model {m!r}")

    @property
    def is_random(self) -> bool:
        return isinstance(self.model, (CascadeFiniteMixture, CascadeDirichlet))


def node_weights(spec: GeneratorSpec, q: CubeAddress) -> Weights:
    """Offspring vector at node ``q``; a pure function of (spec, q)."""
    m = spec.model
    if isinstance(m, Uniform):
        return (2.0 ** -spec.d,) * (1 << spec.d)
    if isinstance(m, Bernoulli):
        return m.weights
    if isinstance(m, CantorMiddleHalf):
        if q.level % 2 == 0:
            return (0.5, 0.5)
        return (1.0, 0.0) if q.coords[0] % 2 == 0 else (0.0, 1.0)
    rng = node_rng(spec.seed, q)
    if isinstance(m, CascadeFiniteMixture):
        u = rng.random()
        acc = 0.0
        for comp, p in zip(m.components, m.probs):
            acc += p
            if u < acc:
                return comp
        return m.components[-1]
    if isinstance(m, CascadeDirichlet):
        w = rng.dirichlet(m.concentration)
        return tuple(float(x) for x in w)
    raise TypeError(f"unknown generator model {m!r}")


# ---------------------------------------------------------------------------
# Tree measures


class TreeMeasure:
    """An immutable measure realized as a partition tree.

    ``realizer(q) -> (CubePartition, Weights)`` supplies node data on demand;
    explicit trees pass ``nodes`` instead.  ``depth`` bounds the number of
    tree steps along any path, ``max_level`` the dyadic level of any node.

    Concurrent reads are safe: realizers are deterministic, so readers racing
    to fill the cache compute identical values and the last write wins.
    """

    def __init__(
        self,
        d: int,
        depth: int,
        realizer: Callable[[CubeAddress], tuple[CubePartition, Weights]] | None = None,
        *,
        nodes: dict[CubeAddress, tuple[CubePartition, Weights]] | None = None,
        max_level: int | None = None,
        cache: bool = False,
        dyadic_splits: bool = True,
        base: "TreeMeasure | None" = None,
    ):
        if depth < 0:
            raise ValueError("depth must be >= 0")
        if realizer is None and nodes is None:
            raise ValueError("need a realizer or an explicit node map")
        self.root = root(d)
        self.d = d
        self.depth = depth
        self.max_level = depth if max_level is None else max_level
        self._realizer = realizer
        self._nodes: dict[CubeAddress, tuple[CubePartition, Weights]] = (
            dict(nodes) if nodes else {}
        )
        self._cache = cache or realizer is None
        #: True when every partition is the uniform dyadic split.
        self.dyadic_splits = dyadic_splits
        #: For derived trees (porous re-trees), the underlying dyadic measure.
        self.base = base

    def offspring(self, q: CubeAddress) -> tuple[CubePartition, Weights]:
        """Partition and conditional offspring vector at ``q``."""
        hit = self._nodes.get(q)
        if hit is not None:
            return hit
        if self._realizer is None:
            raise UnrealizedNodeError(f"node {q.serialize()} is not realized")
        if q.level >= self.max_level:
            raise UnrealizedNodeError(
                f"node {q.serialize()} is at the measure's maximum level "
                f"{self.max_level}"
            )
        part, w = self._realizer(q)
        if self._cache:
            self._nodes[q] = (part, w)
        return part, w

    def offspring_weights(self, q: CubeAddress) -> Weights:
        return self.offspring(q)[1]

    def lineage_weights(self, q: CubeAddress) -> list[float]:
        """Conditional weights along the lineage root -> q."""
        out = []
        cur = self.root
        while cur.level < q.level:
            part, w = self.offspring(cur)
            for idx, child in enumerate(part.children):
                if child.contains(q):
                    out.append(w[idx])
                    cur = child
                    break
            else:
                raise UnrealizedNodeError(
                    f"{q.serialize()} is not on this measure's node lattice"
                )
            if out[-1] == 0.0 and cur != q:
                # Zero-mass subtrees are truncated: stop realizing, the
                # remaining factors cannot change the zero product.
                out.append(0.0)
                return out
        if cur != q:
            raise UnrealizedNodeError(f"{q.serialize()} is not a node of this tree")
        return out

    def mass(self, q: CubeAddress) -> float:
        """Product of conditional weights along the lineage; mass(root) = 1."""
        ws = self.lineage_weights(q)
        if len(ws) <= _LOG_SPACE_DEPTH:
            m = 1.0
            for w in ws:
                m *= w
            return m
        return math.exp(self.log_mass(q))

    def log_mass(self, q: CubeAddress) -> float:
        """log of mass(q); -inf for exact-zero nodes."""
        total = 0.0
        for w in self.lineage_weights(q):
            if w == 0.0:
                return -math.inf
            total += math.log(w)
        return total

    def walk(self, seed: int | np.random.Generator, steps: int | None = None):
        """Single-pass mu-random walk; yields (node, partition, weights, idx).

        Each child is drawn with its conditional probability, so the visited
        lineage is distributed as the cubes around a mu-random point.
        """
        if steps is None:
            steps = self.depth
        rng = seed if isinstance(seed, np.random.Generator) else derived_rng(
            seed, _PATH_STREAM, 0
        )
        us = rng.random(steps)
        cur = self.root
        for n in range(steps):
            part, w = self.offspring(cur)
            total = math.fsum(w)
            if total <= 0.0:
                raise ValueError(
                    f"all-zero offspring vector at {cur.serialize()}: malformed measure"
                )
            target = us[n] * total
            acc = 0.0
            idx = None
            for j, wj in enumerate(w):
                if wj > 0.0:
                    acc += wj
                    if acc > target:
                        idx = j
                        break
                    idx = j  # fall back to the last positive child
            yield cur, part, w, idx
            cur = part.children[idx]

    def sample_path(
        self, seed: int | np.random.Generator, steps: int | None = None
    ) -> list[CubeAddress]:
        """A mu-random lineage root = Q_0, ..., Q_steps; reproducible from seed."""
        path = [self.root]
        for _, part, _, idx in self.walk(seed, steps):
            path.append(part.children[idx])
        return path


def mass(mu: TreeMeasure, q: CubeAddress) -> float:
    return mu.mass(q)


def sample_path(
    mu: TreeMeasure, seed: int | np.random.Generator, steps: int | None = None
) -> list[CubeAddress]:
    return mu.sample_path(seed, steps)


def build_tree_measure(
    spec: GeneratorSpec,
    rule: str = "uniform",
    depth: int = DEFAULT_MAX_LEVEL,
    *,
    max_level: int | None = None,
) -> TreeMeasure:
    """Dyadic tree measure realized lazily from ``spec`` to ``depth`` levels.

    Under cascade specs the offspring vectors of distinct nodes are
    independent samples, reproducible from the seed.  ``rule`` is "uniform"
    here; porous re-treeing lives in porosity.porous_retree, which this
    module intentionally does not import.
    """
    if rule != "uniform":
        raise ValueError(
            "build_tree_measure builds the dyadic frame; use "
            "porosity.porous_retree for the porous-split policy"
        )
    cap = DEFAULT_MAX_LEVEL if max_level is None else max_level
    if depth > cap:
        raise ValueError(
            f"requested depth {depth} exceeds the configured maximum {cap}; "
            f"pass max_level explicitly to allow it"
        )

    def realizer(q: CubeAddress) -> tuple[CubePartition, Weights]:
        return subdivide_uniform(q, cap), node_weights(spec, q)

    return TreeMeasure(
        spec.d,
        depth,
        realizer,
        max_level=depth,
        cache=False,
        dyadic_splits=True,
    )


def from_nodes(
    d: int, nodes: dict[CubeAddress, tuple[CubePartition, Weights]], depth: int
) -> TreeMeasure:
    """Explicit tree measure from a realized node map."""
    dyad = all(p.is_uniform and p.hole is None for p, _ in nodes.values())
    return TreeMeasure(d, depth, nodes=nodes, dyadic_splits=dyad)


# ---------------------------------------------------------------------------
# JSON configuration

_SCHEMA_HINT = (
    '{"d": int, "seed": int, "depth": int, "generator": {"type": '
    '"uniform"|"bernoulli"|"mixture"|"dirichlet"|"cantor_middle_half", ...}}'
)


def spec_from_json(data: str | dict) -> tuple[GeneratorSpec, int | None]:
    """Parse a generator config; returns (spec, depth or None).

    See docs/generator-config.schema.json for the documented schema.
    """
    obj = json.loads(data) if isinstance(data, str) else data
    try:
        d = int(obj["d"])
        gen = obj["generator"]
        typ = gen["type"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed generator config (expected {_SCHEMA_HINT})") from exc
    if typ == "uniform":
        model: GeneratorModel = Uniform()
    elif typ == "bernoulli":
        model = Bernoulli(tuple(gen["weights"]))
    elif typ == "mixture":
        comps = tuple(tuple(item["weights"]) for item in gen["mixture"])
        probs = tuple(item["prob"] for item in gen["mixture"])
        model = CascadeFiniteMixture(comps, probs)
    elif typ == "dirichlet":
        model = CascadeDirichlet(tuple(gen["concentration"]))
    elif typ == "cantor_middle_half":
        model = CantorMiddleHalf()
    else:
        raise ValueError(f"unknown generator type {typ!r}")
    seed = int(obj.get("seed", 0))
    depth = obj.get("depth")
    return GeneratorSpec(d, model, seed), (None if depth is None else int(depth))


def spec_to_json(spec: GeneratorSpec, depth: int | None = None) -> str:
    m = spec.model
    if isinstance(m, Uniform):
        gen: dict = {"type": "uniform"}
    elif isinstance(m, Bernoulli):
        gen = {"type": "bernoulli", "weights": list(m.weights)}
    elif isinstance(m, CascadeFiniteMixture):
        gen = {
            "type": "mixture",
            "mixture": [
                {"weights": list(c), "prob": p}
                for c, p in zip(m.components, m.probs)
            ],
        }
    elif isinstance(m, CascadeDirichlet):
        gen = {"type": "dirichlet", "concentration": list(m.concentration)}
    else:
        gen = {"type": "cantor_middle_half"}
    obj: dict = {"d": spec.d, "seed": spec.seed, "generator": gen}
    if depth is not None:
        obj["depth"] = depth
    return json.dumps(obj, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# Homotheties: exact dyadic pushforwards


@dataclass(frozen=True)
class Homothety:
    """The map x -> ratio * x + translation with a dyadic ratio.

    ``ratio`` must be a power of two in (0, 1/2) so that dyadic cubes pull
    back to dyadic boxes and the pushforward stays exact on the dyadic frame.
    Translations are dyadic rationals (every float is); the image box must
    stay inside the unit cube, so componentwise t + ratio <= 1.  The
    random-translation experiment samples its t from [0, 1/2)^d, but general
    pushforwards may translate anywhere the image fits.
    """

    ratio: float
    translation: tuple[float, ...]

    def __post_init__(self):
        if not 0.0 < self.ratio < 0.5:
            raise ValueError(f"ratio must lie strictly inside (0, 1/2): {self.ratio}")
        mant, _ = math.frexp(self.ratio)
        if mant != 0.5:
            raise ValueError(f"ratio must be a power of two, got {self.ratio}")
        for t in self.translation:
            if not 0.0 <= t < 1.0:
                raise ValueError(f"translation component {t} outside [0, 1)")

    @property
    def log2_ratio(self) -> int:
        """m with ratio = 2^-m."""
        return -(math.frexp(self.ratio)[1] - 1)

    def translation_grid(self) -> tuple[tuple[int, ...], int]:
        """Translation as integer numerators over a common 2^-grid."""
        parts = [t.as_integer_ratio() for t in self.translation]
        grid = max((den.bit_length() - 1 for _, den in parts), default=0)
        nums = tuple(num << (grid - (den.bit_length() - 1)) for num, den in parts)
        return nums, grid


def _box_mass(
    mu: TreeMeasure, lo: tuple[int, ...], hi: tuple[int, ...], scale: int
) -> float:
    """mu of the box prod [lo_i 2^-scale, hi_i 2^-scale), exactly on addresses.

    Recurses through the source tree; a node is either disjoint from the box,
    contained in it, or splits further (box corners are integers at ``scale``,
    so level-``scale`` nodes never straddle).
    """
    d = mu.d
    if any(h <= l for l, h in zip(lo, hi)):
        return 0.0

    def rec(node: CubeAddress, node_mass: float) -> float:
        if node_mass == 0.0:
            return 0.0
        shift = scale - node.level
        inside = True
        for c, l, h in zip(node.coords, lo, hi):
            nlo = c << shift
            nhi = nlo + (1 << shift)
            if nhi <= l or h <= nlo:
                return 0.0
            if not (l <= nlo and nhi <= h):
                inside = False
        if inside:
            return node_mass
        part, w = mu.offspring(node)
        return sum(rec(ch, node_mass * wj) for ch, wj in zip(part.children, w))

    return rec(mu.root, 1.0)


def apply_homothety(mu: TreeMeasure, h: Homothety, depth: int) -> TreeMeasure:
    """Pushforward of ``mu`` under x -> ratio*x + t on the standard dyadic
    frame, realized lazily to ``depth`` dyadic levels.

    Total mass is preserved; dyadic cubes of side 2^-m map onto dyadic cubes
    of side 2^-(m + log2(1/ratio)) whenever the translation lies on the
    matching grid, and masses come out exact because box/cube intersections
    are resolved in integer coordinates.
    """
    if not mu.dyadic_splits:
        raise ValueError("apply_homothety needs a dyadic-split source measure")
    if len(h.translation) != mu.d:
        raise ValueError("translation dimension does not match the measure")
    m = h.log2_ratio
    t_num, t_grid = h.translation_grid()
    for t in h.translation:
        if t + h.ratio > 1.0:
            raise ValueError("image support would leave the unit cube")
    # Deepest source level any realization can touch.
    need = max(depth, t_grid) - m
    if need > mu.max_level:
        raise ValueError(
            f"pushforward to depth {depth} needs the source realized to level "
            f"{need}, above its maximum {mu.max_level}"
        )

    masses: dict[CubeAddress, float] = {}

    def nu_mass(q: CubeAddress) -> float:
        hit = masses.get(q)
        if hit is not None:
            return hit
        n = q.level
        scale = max(n - m, t_grid - m, 0)
        lo, hi = [], []
        for c, tn in zip(q.coords, t_num):
            l = (c << (scale + m - n)) - (tn << (scale + m - t_grid))
            lo.append(l)
            hi.append(l + (1 << (scale + m - n)))
        # Clip to the source domain [0, 2^scale)^d.
        dom = 1 << scale
        lo = tuple(max(l, 0) for l in lo)
        hi = tuple(min(x, dom) for x in hi)
        val = _box_mass(mu, lo, hi, scale)
        masses[q] = val
        return val

    masses[root(mu.d)] = 1.0

    def realizer(q: CubeAddress) -> tuple[CubePartition, Weights]:
        part = subdivide_uniform(q, depth)
        parent_mass = nu_mass(q)
        child_masses = [nu_mass(c) for c in part.children]
        if parent_mass <= 0.0:
            raise UnrealizedNodeError(
                f"zero-mass node {q.serialize()} is not expanded"
            )
        total = math.fsum(child_masses)
        if abs(total - parent_mass) > 1e-10 * parent_mass:
            raise ArithmeticError(
                f"mass conservation violated at {q.serialize()}: "
                f"{total} vs {parent_mass}"
            )
        w = tuple(cm / total for cm in child_masses)
        return part, w

    return TreeMeasure(
        mu.d, depth, realizer, max_level=depth, cache=True, dyadic_splits=True
    )
