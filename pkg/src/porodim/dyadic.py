"""Dyadic cube addressing and partition arithmetic.

A cube is the half-open box prod_i [c_i 2^-level, (c_i + 1) 2^-level) inside
the unit cube of R^d, identified by its level and integer coordinates.  All
disjointness, cover and regularity checks run on integer addresses, never on
floats, so they are exact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

#: Default cap on dyadic levels.  2^-60 is far below any experiment's
#: resolution; callers that genuinely need deeper trees pass a larger cap.
DEFAULT_MAX_LEVEL = 60


@dataclass(frozen=True)
class CubeAddress:
    """A dyadic cube: ``level`` steps down the full dyadic tree, at ``coords``."""

    level: int
    coords: tuple[int, ...]

    def __post_init__(self):
        if self.level < 0:
            raise ValueError(f"level must be >= 0, got {self.level}")
        if not self.coords:
            raise ValueError("coords must have at least one component")
        for c in self.coords:
            # bit_length avoids materializing 2^level for very deep cubes
            if c < 0 or c.bit_length() > self.level:
                raise ValueError(
                    f"coordinate {c} outside [0, 2^{self.level}) at level {self.level}"
                )

    @property
    def d(self) -> int:
        return len(self.coords)

    @property
    def side(self) -> float:
        """Side length 2^-level as a float (underflows past level ~1074)."""
        return 2.0 ** -self.level

    def corner(self) -> tuple[Fraction, ...]:
        """Exact lower corner."""
        return tuple(Fraction(c, 1 << self.level) for c in self.coords)

    def ancestor(self, level: int) -> "CubeAddress":
        """The unique level-``level`` cube containing this one."""
        if not 0 <= level <= self.level:
            raise ValueError(f"ancestor level {level} outside [0, {self.level}]")
        shift = self.level - level
        return CubeAddress(level, tuple(c >> shift for c in self.coords))

    def contains(self, other: "CubeAddress") -> bool:
        """True when ``other`` is this cube or a descendant of it."""
        if other.d != self.d or other.level < self.level:
            return False
        shift = other.level - self.level
        return all((oc >> shift) == c for oc, c in zip(other.coords, self.coords))

    def uniform_child(self, offset_index: int) -> "CubeAddress":
        """Child one level down; bit i of ``offset_index`` is the offset on axis i."""
        if not 0 <= offset_index < (1 << self.d):
            raise ValueError(f"offset index {offset_index} outside [0, 2^{self.d})")
        coords = tuple(
            (c << 1) | ((offset_index >> i) & 1) for i, c in enumerate(self.coords)
        )
        return CubeAddress(self.level + 1, coords)

    def descendant(self, rel_coords: tuple[int, ...], depth: int) -> "CubeAddress":
        """Descendant ``depth`` levels down with the given in-cube coordinates."""
        if depth < 0:
            raise ValueError("depth must be >= 0")
        if len(rel_coords) != self.d:
            raise ValueError("relative coordinates have wrong dimension")
        lim = 1 << depth
        for rc in rel_coords:
            if not 0 <= rc < lim:
                raise ValueError(f"relative coordinate {rc} outside [0, 2^{depth})")
        coords = tuple((c << depth) | rc for c, rc in zip(self.coords, rel_coords))
        return CubeAddress(self.level + depth, coords)

    def serialize(self) -> str:
        """Wire format ``level:c0,c1,...``."""
        return f"{self.level}:{','.join(str(c) for c in self.coords)}"

    @classmethod
    def parse(cls, text: str) -> "CubeAddress":
        level_s, _, coords_s = text.partition(":")
        return cls(int(level_s), tuple(int(c) for c in coords_s.split(",")))


def root(d: int) -> CubeAddress:
    """The unit cube [0,1)^d."""
    if d < 1:
        raise ValueError(f"ambient dimension must be >= 1, got {d}")
    return CubeAddress(0, (0,) * d)


@dataclass(frozen=True)
class CubePartition:
    """A cube split into disjoint dyadic sub-cubes covering it.

    ``hole`` is set by porous splits and identifies the deep child carrying
    the small mass; it distinguishes a k=1 porous split from the uniform
    split, which are geometrically identical.
    """

    parent: CubeAddress
    children: tuple[CubeAddress, ...]
    hole: CubeAddress | None = None

    @property
    def is_uniform(self) -> bool:
        return len(self.children) == (1 << self.parent.d) and all(
            c.level == self.parent.level + 1 for c in self.children
        )

    @property
    def max_depth_jump(self) -> int:
        return max(c.level - self.parent.level for c in self.children)

    @property
    def regularity(self) -> float:
        """The delta for which this partition is delta-regular (2^-max jump)."""
        return 2.0 ** -self.max_depth_jump


@dataclass(frozen=True)
class UniformDyadic:
    """Partition rule: split into the 2^d dyadic children one level down."""


@dataclass(frozen=True)
class PorousSplit:
    """Partition rule: hole at relative depth k plus the cubes avoiding it.

    ``hole_offset`` are the hole's coordinates at depth k relative to the
    parent, each in [0, 2^k).  How the offset is chosen (the hole-selection
    policy) is the caller's business; see porosity.classify_porous for the
    measure-driven policy.
    """

    k: int
    hole_offset: tuple[int, ...]

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"hole depth k must be >= 1, got {self.k}")
        lim = 1 << self.k
        for rc in self.hole_offset:
            if not 0 <= rc < lim:
                raise ValueError(f"hole offset {rc} outside [0, 2^{self.k})")


PartitionRule = UniformDyadic | PorousSplit


def subdivide_uniform(
    parent: CubeAddress, max_level: int = DEFAULT_MAX_LEVEL
) -> CubePartition:
    """Split ``parent`` into its 2^d dyadic children."""
    if parent.level + 1 > max_level:
        raise ValueError(
            f"subdividing level {parent.level} exceeds the configured "
            f"maximum level {max_level}"
        )
    level = parent.level + 1
    coords = parent.coords
    children = tuple(
        CubeAddress(level, tuple((c << 1) | ((j >> i) & 1) for i, c in enumerate(coords)))
        for j in range(1 << len(coords))
    )
    return CubePartition(parent, children)


def porous_split(
    parent: CubeAddress,
    hole: CubeAddress,
    k: int,
    max_level: int = DEFAULT_MAX_LEVEL,
) -> CubePartition:
    """Split ``parent`` into the depth-k ``hole`` plus, for each level
    j = 1..k, the 2^d - 1 cubes at depth j not containing the hole.

    The resulting partition has (2^d - 1) k + 1 children and is 2^-k-regular.
    Children are ordered level 1..k (lexicographic within a level), hole last.
    """
    if k < 1:
        raise ValueError(f"hole depth k must be >= 1, got {k}")
    if hole.level != parent.level + k or not parent.contains(hole):
        raise ValueError(
            f"hole {hole.serialize()} is not a depth-{k} descendant "
            f"of {parent.serialize()}"
        )
    if parent.level + k > max_level:
        raise ValueError(
            f"porous split to level {parent.level + k} exceeds the configured "
            f"maximum level {max_level}"
        )
    children: list[CubeAddress] = []
    spine = [hole.ancestor(parent.level + j) for j in range(k + 1)]  # spine[0] = parent
    for j in range(1, k + 1):
        siblings = [
            spine[j - 1].uniform_child(m)
            for m in range(1 << parent.d)
        ]
        level_children = sorted(
            (c for c in siblings if c != spine[j]), key=lambda c: c.coords
        )
        children.extend(level_children)
    children.append(hole)
    return CubePartition(parent, tuple(children), hole=hole)


def make_partition(
    parent: CubeAddress, rule: PartitionRule, max_level: int = DEFAULT_MAX_LEVEL
) -> CubePartition:
    """Apply a partition rule at ``parent``."""
    if isinstance(rule, UniformDyadic):
        return subdivide_uniform(parent, max_level)
    if isinstance(rule, PorousSplit):
        if len(rule.hole_offset) != parent.d:
            raise ValueError("hole offset dimension does not match the cube")
        hole = parent.descendant(rule.hole_offset, rule.k)
        return porous_split(parent, hole, rule.k, max_level)
    raise TypeError(f"unknown partition rule {rule!r}")


def cube_at(
    d: int,
    path_digits: tuple[int, ...],
    rule_history: tuple[PartitionRule, ...],
    max_level: int = DEFAULT_MAX_LEVEL,
) -> CubeAddress:
    """Walk from the root, applying each rule and picking the digit-th child.

    Returns the address of the cube reached after the whole walk; the empty
    walk returns the root.
    """
    if len(path_digits) != len(rule_history):
        raise ValueError("digits and rules must have equal length")
    cur = root(d)
    for digit, rule in zip(path_digits, rule_history):
        part = make_partition(cur, rule, max_level)
        if not 0 <= digit < len(part.children):
            raise ValueError(
                f"digit {digit} out of range for a partition with "
                f"{len(part.children)} children"
            )
        cur = part.children[digit]
    return cur


def validate_partition(part: CubePartition) -> None:
    """Check disjointness, exact cover and child counts; raise on violation.

    All checks are exact integer arithmetic: two dyadic cubes intersect iff
    one contains the other, and volumes are counted in units of the finest
    child level.
    """
    parent = part.parent
    if not part.children:
        raise ValueError("partition has no children")
    for c in part.children:
        if c.d != parent.d:
            raise ValueError("child dimension mismatch")
        if c.level <= parent.level or not parent.contains(c):
            raise ValueError(f"child {c.serialize()} is not a proper descendant")
    for a, b in itertools.combinations(part.children, 2):
        if a.contains(b) or b.contains(a):
            raise ValueError(
                f"children {a.serialize()} and {b.serialize()} are not disjoint"
            )
    lmax = max(c.level for c in part.children)
    d = parent.d
    cells = sum(1 << ((lmax - c.level) * d) for c in part.children)
    if cells != 1 << ((lmax - parent.level) * d):
        raise ValueError("children do not cover the parent exactly")
