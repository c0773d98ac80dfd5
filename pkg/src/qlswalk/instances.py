"""Instance generators with known answers."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .system import AugmentedSystem, build_augmented


@dataclass(frozen=True, eq=False)
class DiagonalExample:
    """``A = diag(1, ..., 1, 1/n)`` with ``b = e_n / n``; the answer is ``e_n``."""

    n: int

    @property
    def a(self) -> np.ndarray:
        d = np.ones(self.n)
        d[-1] = 1.0 / self.n
        return np.diag(d)

    @property
    def b(self) -> np.ndarray:
        b = np.zeros(self.n)
        b[-1] = 1.0 / self.n
        return b

    @property
    def solution(self) -> np.ndarray:
        y = np.zeros(self.n)
        y[-1] = 1.0
        return y

    def system(self) -> AugmentedSystem:
        return build_augmented(self.a, self.b)


def diagonal_example(n: int) -> DiagonalExample:
    if n < 1:
        raise ValueError("n must be positive")
    return DiagonalExample(n)


@dataclass(frozen=True, eq=False)
class WeldedTree:
    """Two heap-numbered binary trees glued along an alternating leaf cycle.

    Left tree vertices are ``0 .. T-1`` (root 0) and right tree vertices are
    ``T .. 2T-1`` (root ``T``), with ``T = 2^(n+1) - 1``.
    """

    n: int
    seed: int
    edges: tuple  # sorted (smaller, larger) vertex pairs
    bottleneck: bool

    @property
    def tree_size(self) -> int:
        return 2 ** (self.n + 1) - 1

    @property
    def num_vertices(self) -> int:
        return 2 * self.tree_size

    @property
    def roots(self) -> tuple[int, int]:
        return 0, self.tree_size

    def incidence(self) -> np.ndarray:
        """``B[head, e] = 1`` and ``B[tail, e] = -1`` with edges oriented small to large id."""
        b = np.zeros((self.num_vertices, len(self.edges)))
        for e, (lo, hi) in enumerate(self.edges):
            b[lo, e] = -1.0
            b[hi, e] = 1.0
        return b

    def demand(self) -> np.ndarray:
        d = np.zeros(self.num_vertices)
        u, v = self.roots
        d[u], d[v] = 1.0, -1.0
        return d

    def laplacian(self) -> np.ndarray:
        lap = np.zeros((self.num_vertices,) * 2)
        for lo, hi in self.edges:
            lap[lo, lo] += 1
            lap[hi, hi] += 1
            lap[lo, hi] -= 1
            lap[hi, lo] -= 1
        return lap

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.num_vertices, dtype=int)
        for lo, hi in self.edges:
            deg[lo] += 1
            deg[hi] += 1
        return deg

    def depth(self, x: int) -> int:
        """Distance from the root of the tree containing ``x``."""
        local = x % self.tree_size
        return int(np.floor(np.log2(local + 1)))

    def system(self) -> AugmentedSystem:
        return build_augmented(self.incidence(), self.demand())


def make_welded_tree(n: int, seed: int, bottleneck: bool = False) -> WeldedTree:
    """Depth-``n`` welded tree with a seeded alternating cycle.

    With ``bottleneck=True`` each half of each leaf set is shuffled on its own,
    so the cycle crosses between the two halves in exactly four places.
    """
    if not (2 <= n <= 7):
        raise ValueError(f"depth n={n} outside the supported range 2..7")
    rng = np.random.default_rng(seed)
    t = 2 ** (n + 1) - 1
    edges = set()
    for off in (0, t):
        for k in range(1, t):
            edges.add((off + (k - 1) // 2, off + k))
    left = np.arange(2**n - 1, t)
    right = left + t
    if bottleneck:
        half = left.size // 2
        left = np.concatenate([rng.permutation(left[:half]), rng.permutation(left[half:])])
        right = np.concatenate([rng.permutation(right[:half]), rng.permutation(right[half:])])
    else:
        left = rng.permutation(left)
        right = rng.permutation(right)
    m = left.size
    for i in range(m):
        a, b, c = int(left[i]), int(right[i]), int(left[(i + 1) % m])
        edges.add((min(a, b), max(a, b)))
        edges.add((min(b, c), max(b, c)))
    return WeldedTree(n=n, seed=seed, edges=tuple(sorted(edges)), bottleneck=bottleneck)


@dataclass(frozen=True)
class WeldedGroundTruth:
    resistance: float
    potentials: np.ndarray
    root_potential: float
    et_bound: float = 12.0


def welded_tree_ground_truth(t: WeldedTree) -> WeldedGroundTruth:
    """Closed-form resistance and vertex potentials for a unit root-to-root flow.

    A vertex at depth ``k`` of the source tree sits at ``2^-k - (3/4) 2^-n``;
    the sink tree mirrors this with the opposite sign.
    """
    n = t.n
    shift = 0.75 * 2.0**-n
    pots = np.empty(t.num_vertices)
    for x in range(t.num_vertices):
        val = 2.0 ** -t.depth(x) - shift
        pots[x] = val if x < t.tree_size else -val
    return WeldedGroundTruth(
        resistance=2.0 - 1.5 * 2.0**-n, potentials=pots, root_potential=1.0 - shift
    )


def make_random_consistent(
    m: int, n: int, density: float, seed: int, max_tries: int = 10
) -> AugmentedSystem:
    """Sparse Gaussian ``A`` with ``b = A y0`` and ``y0`` drawn from the row space of ``A``."""
    if not (1 <= n <= m <= 64):
        raise ValueError(f"need 1 <= N <= M <= 64, got M={m}, N={n}")
    if not (0.0 < density <= 1.0):
        raise ValueError(f"density {density!r} must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        a = rng.standard_normal((m, n)) * (rng.random((m, n)) < density)
        y0 = a.T @ rng.standard_normal(m)
        b = a @ y0
        if np.linalg.norm(b) > 1e-12 * max(1.0, np.linalg.norm(a)):
            return build_augmented(a, b)
    raise ValueError(f"could not draw a system with nonzero b in {max_tries} tries")
