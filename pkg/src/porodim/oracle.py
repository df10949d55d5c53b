"""Independent brute-force check of the porous-split entropy-ratio maximum.

The solver in bounds.solve_s claims that the largest entropy-to-Lyapunov
ratio over a porous split equals the root of an implicit equation.  This
module re-derives that value without trusting the equation: direct grid
search over the reduced simplex (per-level masses q_1..q_k plus the hole mass
p <= eps), followed by coordinate-wise golden-section polish, plus the
geometric-decay fixed-point candidate q_i = A 2^{-M i}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bounds import LOG2, psi, solve_s

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def alpha_vector(d: int, k: int) -> tuple[float, ...]:
    """Relative side lengths of porous-split offspring: 2^d - 1 copies of
    2^-j for j = 1..k-1, then 2^d copies of 2^-k (non-hole cubes plus the
    hole, which sits last)."""
    if d < 1 or k < 1:
        raise ValueError(f"need d >= 1 and k >= 1, got d={d}, k={k}")
    L = (1 << d) - 1
    out: list[float] = []
    for j in range(1, k):
        out.extend([2.0**-j] * L)
    out.extend([2.0**-k] * (L + 1))
    return tuple(out)


@dataclass(frozen=True)
class RawVector:
    """A mass vector over the (2^d - 1)k + 1 porous-split offspring; the hole
    is the last coordinate."""

    d: int
    k: int
    p: tuple[float, ...]

    def __post_init__(self):
        n = ((1 << self.d) - 1) * self.k + 1
        if len(self.p) != n:
            raise ValueError(f"need {n} masses for d={self.d}, k={self.k}")
        if any(x < 0.0 for x in self.p):
            raise ValueError("masses must be nonnegative")
        if abs(math.fsum(self.p) - 1.0) > 1e-9:
            raise ValueError(f"masses sum to {math.fsum(self.p)!r}, not 1")

    @property
    def alphas(self) -> tuple[float, ...]:
        return alpha_vector(self.d, self.k)

    @property
    def hole_mass(self) -> float:
        return self.p[-1]


def raw_objective(v: RawVector) -> float:
    """sum psi(p_i) / sum p_i log(1/alpha_i); the value lies in [0, d]."""
    num = math.fsum(psi(x) for x in v.p)
    den = math.fsum(x * -math.log(a) for x, a in zip(v.p, v.alphas))
    if den == 0.0:
        raise ValueError("degenerate mass vector: zero Lyapunov denominator")
    return num / den


def reduce_within_levels(v: RawVector) -> RawVector:
    """Average the masses within each side-length level (hole untouched).

    This never decreases the objective: the entropy numerator rises while the
    denominator is level-wise constant, and all constraints are preserved.
    """
    L = (1 << v.d) - 1
    out: list[float] = []
    for j in range(v.k):
        block = v.p[j * L : (j + 1) * L]
        avg = math.fsum(block) / L
        out.extend([avg] * L)
    out.append(v.p[-1])
    return RawVector(v.d, v.k, tuple(out))


@dataclass(frozen=True)
class ReducedPoint:
    """Per-level masses q_1..q_k plus the hole mass p, with
    (2^d - 1) sum q_i = 1 - p."""

    d: int
    k: int
    q: tuple[float, ...]
    p: float

    def __post_init__(self):
        if len(self.q) != self.k:
            raise ValueError(f"need {self.k} level masses")
        if any(x < 0.0 for x in self.q) or self.p < 0.0:
            raise ValueError("masses must be nonnegative")
        L = (1 << self.d) - 1
        if abs(L * math.fsum(self.q) + self.p - 1.0) > 1e-9:
            raise ValueError("level masses do not satisfy L sum q = 1 - p")

    def to_raw(self) -> RawVector:
        L = (1 << self.d) - 1
        flat: list[float] = []
        for qi in self.q:
            flat.extend([qi] * L)
        flat.append(self.p)
        return RawVector(self.d, self.k, tuple(flat))


def reduced_objective(d: int, k: int, q, p: float) -> float:
    """g_p(q) = (L sum psi(q_i) + psi(p)) / (log2 (L sum i q_i + k p))."""
    L = (1 << d) - 1
    num = L * math.fsum(psi(qi) for qi in q) + psi(p)
    den = LOG2 * (L * math.fsum((i + 1) * qi for i, qi in enumerate(q)) + k * p)
    if den == 0.0:
        raise ValueError("degenerate point: zero Lyapunov denominator")
    return num / den


@dataclass(frozen=True)
class BruteForceResult:
    value: float
    argmax: ReducedPoint
    grid: int


def _objective_free(d: int, k: int, eps: float):
    """Objective over the free coordinates (q_1..q_{k-1}, p); q_k is forced
    by the simplex constraint.  Infeasible points evaluate to -inf."""
    L = (1 << d) - 1

    def func(z) -> float:
        p = z[-1]
        if not 0.0 <= p <= eps + 1e-15:
            return -math.inf
        qk = (1.0 - p) / L - math.fsum(z[:-1])
        if qk < -1e-15:
            return -math.inf
        q = (*z[:-1], max(qk, 0.0))
        if any(x < 0.0 for x in q):
            return -math.inf
        return reduced_objective(d, k, q, p)

    return func


def _golden_section(f, lo: float, hi: float, tol: float = 1e-10) -> float:
    """Argmax of a unimodal-ish f on [lo, hi]."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d_ = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d_)
    while b - a > tol:
        if fc >= fd:
            b, d_, fd = d_, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d_, fd
            d_ = a + _GOLDEN * (b - a)
            fd = f(d_)
    return 0.5 * (a + b)


def maximize_bruteforce(
    d: int,
    k: int,
    eps: float,
    grid: int = 500,
    *,
    polish: bool = True,
    allow_large: bool = False,
) -> BruteForceResult:
    """Grid-maximize the reduced objective over the constrained simplex, then
    sharpen with coordinate-wise golden-section ascent.

    ``grid`` counts points per free dimension.  The search stays independent
    of the implicit-equation solver: nothing here assumes the geometric-decay
    structure of the maximizer.
    """
    if not allow_large and (d > 2 or k > 3):
        raise ValueError(
            f"grid^k enumeration for d={d}, k={k} is expensive; "
            f"pass allow_large=True to force it"
        )
    if grid < 2:
        raise ValueError("grid must be >= 2")
    L = (1 << d) - 1
    p_grid = np.linspace(0.0, eps, min(grid, 65)) if eps > 0.0 else np.array([0.0])

    best_val = -math.inf
    best_free: tuple[float, ...] | None = None
    for p in p_grid:
        budget = (1.0 - p) / L
        if k == 1:
            cand = np.array([[float(p)]])
            q_free = np.empty((1, 0))
        else:
            axes = [np.linspace(0.0, budget, grid)] * (k - 1)
            mesh = np.meshgrid(*axes, indexing="ij")
            q_free = np.stack([m.ravel() for m in mesh], axis=1)
            keep = q_free.sum(axis=1) <= budget + 1e-15
            q_free = q_free[keep]
            cand = np.concatenate(
                [q_free, np.full((len(q_free), 1), float(p))], axis=1
            )
        qk = budget - q_free.sum(axis=1)
        q_all = np.concatenate([q_free, qk[:, None]], axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = np.where(q_all > 0.0, np.log(np.where(q_all > 0.0, q_all, 1.0)), 0.0)
            num = L * (-(q_all * logs).sum(axis=1)) + psi(float(p))
            den = LOG2 * (
                L * (q_all * np.arange(1, k + 1)).sum(axis=1) + k * float(p)
            )
        vals = num / den
        j = int(np.argmax(vals))
        if vals[j] > best_val:
            best_val = float(vals[j])
            best_free = tuple(float(x) for x in cand[j])

    func = _objective_free(d, k, eps)
    z = list(best_free)
    if polish:
        for _ in range(60):
            improved = False
            for i in range(len(z)):
                if i == len(z) - 1:
                    lo_i = 0.0
                    hi_i = min(eps, 1.0 - L * math.fsum(z[:-1]))
                else:
                    lo_i = 0.0
                    others = math.fsum(z[:-1]) - z[i]
                    hi_i = (1.0 - z[-1]) / L - others
                if hi_i <= lo_i:
                    continue

                def along(x, i=i):
                    trial = z.copy()
                    trial[i] = x
                    return func(trial)

                xi = _golden_section(along, lo_i, hi_i)
                if along(xi) > func(z) + 1e-14:
                    z[i] = xi
                    improved = True
            if not improved:
                break
    p = z[-1]
    qk = (1.0 - p) / L - math.fsum(z[:-1])
    point = ReducedPoint(d, k, (*z[:-1], max(qk, 0.0)), p)
    return BruteForceResult(
        value=reduced_objective(d, k, point.q, point.p), argmax=point, grid=grid
    )


@dataclass(frozen=True)
class FixedPointResult:
    point: ReducedPoint
    value: float
    iterations: int


def fixed_point_candidate(
    d: int,
    k: int,
    eps: float,
    *,
    damping: float = 0.5,
    tol: float = 1e-12,
    max_iter: int = 10_000,
) -> FixedPointResult:
    """Iterate M -> g_eps(A(M) 2^{-M i}) to its fixed point.

    The candidate maximizer has per-level masses decaying geometrically with
    the objective value itself as the decay exponent; A normalizes the point
    onto the simplex with hole mass exactly eps.
    """
    if not 0.0 <= eps <= 2.0**-k * (1.0 + 1e-12):
        raise ValueError(f"eps must lie in [0, 2^-k], got {eps}")
    L = (1 << d) - 1

    def step(m: float) -> float:
        decay = [2.0 ** (-m * i) for i in range(1, k + 1)]
        a = (1.0 - eps) / (L * math.fsum(decay))
        q = tuple(a * x for x in decay)
        return reduced_objective(d, k, q, eps)

    m = 0.9 * d
    for it in range(1, max_iter + 1):
        m_new = (1.0 - damping) * m + damping * step(m)
        if abs(m_new - m) < tol:
            m = m_new
            break
        m = m_new
    else:
        raise ArithmeticError(
            f"fixed-point iteration did not converge for d={d}, k={k}, eps={eps}"
        )
    decay = [2.0 ** (-m * i) for i in range(1, k + 1)]
    a = (1.0 - eps) / (L * math.fsum(decay))
    point = ReducedPoint(d, k, tuple(a * x for x in decay), eps)
    return FixedPointResult(
        point=point, value=reduced_objective(d, k, point.q, point.p), iterations=it
    )


def compare(d: int, k: int, eps: float, grid: int = 500) -> dict:
    """One comparison row: brute force vs fixed-point candidate vs solver."""
    bf = maximize_bruteforce(d, k, eps, grid)
    fp = fixed_point_candidate(d, k, eps)
    sv = solve_s(d, k, eps)
    return {
        "d": d,
        "k": k,
        "eps": eps,
        "value_bruteforce": bf.value,
        "value_candidate": fp.value,
        "value_solver": sv,
        "gap": max(abs(bf.value - sv), abs(fp.value - sv)),
        "argmax": bf.argmax,
    }
