"""Boolean Macaulay systems for quadratic polynomial systems and planted MIS.

Multilinear monomials are stored as integer bitmasks (bit ``k`` is variable
``x_{k+1}``). The constant monomial is ``0``.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from . import numerics
from .system import AugmentedSystem, build_augmented, compute_metrics

MAX_UNPRUNED_VARS = 14
MAX_RETAINED = 50_000
MAX_ENUM_VARS = 24


class MacaulaySizeError(ValueError):
    pass


class RecoveryError(RuntimeError):
    """The sampled support does not satisfy the system."""

    def __init__(self, supports: list, assignment: tuple):
        self.supports = supports
        self.assignment = assignment
        super().__init__(
            f"recovered assignment {''.join(map(str, assignment))} fails verification "
            f"({len(supports)} samples)"
        )


# ---------------------------------------------------------------- monomials


def mask_of(variables: Iterable[int]) -> int:
    m = 0
    for v in variables:
        m |= 1 << int(v)
    return m


def variables_of(mask: int) -> tuple[int, ...]:
    out = []
    k = 0
    while mask:
        if mask & 1:
            out.append(k)
        mask >>= 1
        k += 1
    return tuple(out)


def degree(mask: int) -> int:
    return bin(mask).count("1")


def boolean_reduce(variables: Iterable[int]) -> frozenset:
    """Multilinear reduction of a monomial given as variable indices with repetition.

    ``x1^2 x2`` is ``(1, 1, 2)`` and reduces to ``{1, 2}``; a product of
    monomials is just the concatenation of their index lists.
    """
    return frozenset(variables)


def monomial_name(mask: int) -> str:
    vs = variables_of(mask)
    return "*".join(f"x{v + 1}" for v in vs) if vs else "1"


def _order_key(mask: int) -> tuple:
    return degree(mask), variables_of(mask)


# ---------------------------------------------------------------- polynomials


@dataclass(frozen=True)
class PolynomialSystem:
    """Real quadratic polynomials over Boolean variables ``x_1 .. x_n``.

    Each polynomial is a tuple of ``(coefficient, monomial mask)`` terms with
    like terms merged; ``x_i^2 = x_i`` is implicit.
    """

    n: int
    polys: tuple

    def __post_init__(self):
        for f in self.polys:
            for c, m in f:
                if not math.isfinite(c):
                    raise ValueError("non-finite coefficient")
                if degree(m) > 2:
                    raise ValueError(f"monomial {monomial_name(m)} has degree > 2")
                if m >> self.n:
                    raise ValueError(f"monomial {monomial_name(m)} uses a variable beyond x{self.n}")

    @classmethod
    def from_terms(cls, n: int, polys: Iterable[Iterable[tuple[float, Iterable[int]]]]) -> "PolynomialSystem":
        """Build from ``(coef, variable indices)`` terms, 0-based, repetition allowed."""
        out = []
        for f in polys:
            acc: dict[int, float] = defaultdict(float)
            for c, vs in f:
                acc[mask_of(boolean_reduce(vs))] += float(c)
            out.append(tuple(sorted(((c, m) for m, c in acc.items() if c != 0.0), key=lambda t: _order_key(t[1]))))
        return cls(n=n, polys=tuple(out))

    def evaluate(self, assignment: Sequence[int]) -> np.ndarray:
        x = mask_of(i for i, v in enumerate(assignment) if v)
        return np.array([sum(c for c, m in f if (m & x) == m) for f in self.polys])

    def is_solution(self, assignment: Sequence[int], tol: float = 1e-9) -> bool:
        return bool(np.all(np.abs(self.evaluate(assignment)) <= tol))

    def forced_zero_monomials(self) -> tuple[int, ...]:
        """Monomials that single-term polynomials force to vanish on every solution."""
        return tuple(sorted({f[0][1] for f in self.polys if len(f) == 1 and f[0][1]}))

    def brute_force_solutions(self) -> list[tuple[int, ...]]:
        if self.n > MAX_ENUM_VARS:
            raise MacaulaySizeError(f"brute force limited to {MAX_ENUM_VARS} variables")
        sols = []
        for x in range(1 << self.n):
            a = tuple((x >> k) & 1 for k in range(self.n))
            if self.is_solution(a):
                sols.append(a)
        return sols


def sum_system(n: int) -> PolynomialSystem:
    """``x_1 + ... + x_n - n``, whose only Boolean root is all ones."""
    return PolynomialSystem.from_terms(n, [[(1.0, (k,)) for k in range(n)] + [(-float(n), ())]])


# ---------------------------------------------------------------- Macaulay matrix


def _enumerate_monomials(n: int, forbidden: Sequence[int], cap: int) -> list[int]:
    """Nonempty multilinear monomials not divisible by any forbidden monomial."""
    banned = 0
    conflict = [0] * n  # lower-index partners for degree-2 forbidden monomials
    for f in forbidden:
        vs = variables_of(f)
        if len(vs) == 1:
            banned |= f
        else:
            lo, hi = vs
            conflict[hi] |= 1 << lo
    out: list[int] = []
    stack = [(0, 0)]  # (mask, next variable)
    while stack:
        mask, start = stack.pop()
        for v in range(start, n):
            if (banned >> v) & 1 or conflict[v] & mask:
                continue
            new = mask | (1 << v)
            out.append(new)
            if len(out) > cap:
                raise MacaulaySizeError(f"more than {cap} retained monomials")
            stack.append((new, v + 1))
    out.sort(key=_order_key)
    return out


def weight_vector(columns: Sequence[int], h: int) -> np.ndarray:
    """Diagonal of ``D``: ``sqrt(C(h, i))`` on degree ``i <= h`` columns, 1 above."""
    return np.array(
        [math.sqrt(math.comb(h, degree(c))) if degree(c) <= h else 1.0 for c in columns]
    )


@dataclass(frozen=True, eq=False)
class MacaulaySystem:
    n: int
    h: int
    pruned: bool
    columns: tuple  # monomial masks, column order
    rows: tuple  # (monomial mask, polynomial index)
    a: sp.csr_matrix
    b: np.ndarray
    weights: np.ndarray
    forbidden: tuple = ()
    source: Optional[PolynomialSystem] = field(default=None, repr=False)

    @cached_property
    def column_index(self) -> dict:
        return {c: k for k, c in enumerate(self.columns)}

    @property
    def shape(self) -> tuple[int, int]:
        return self.a.shape

    def unweighted_solution(self, assignment: Sequence[int]) -> np.ndarray:
        """``y`` with ``y_m = 1`` exactly when every variable of ``m`` is set."""
        x = mask_of(i for i, v in enumerate(assignment) if v)
        return np.array([1.0 if (c & x) == c else 0.0 for c in self.columns])

    def weighted_solution(self, assignment: Sequence[int]) -> np.ndarray:
        return self.unweighted_solution(assignment) / self.weights

    def dense_a(self) -> np.ndarray:
        return self.a.toarray()


def build_macaulay(
    F: PolynomialSystem,
    h: int,
    prune: bool = False,
    max_retained: int = MAX_RETAINED,
    drop_zero_rows: Optional[bool] = None,
) -> MacaulaySystem:
    """Degree-``n`` Boolean Macaulay matrix of ``F``.

    Row ``(m, f)`` holds the coefficients of ``psi(m f)``. With ``prune`` every
    column divisible by a forced-zero monomial is removed (its value is 0 on
    all solutions) and rows that become identically zero are dropped.
    """
    n = F.n
    if not (1 <= h <= n):
        raise ValueError(f"h={h} must lie in 1..{n}")
    drop_zero_rows = prune if drop_zero_rows is None else drop_zero_rows
    if prune:
        forbidden = F.forced_zero_monomials()
        columns = _enumerate_monomials(n, forbidden, max_retained)
    else:
        if n > MAX_UNPRUNED_VARS:
            raise MacaulaySizeError(
                f"{2**n - 1} monomial columns for n={n}; enable pruning or use n <= {MAX_UNPRUNED_VARS}"
            )
        forbidden = ()
        columns = sorted(range(1, 1 << n), key=_order_key)
    col_index = {c: k for k, c in enumerate(columns)}
    rows, data_r, data_c, data_v, b_vals = [], [], [], [], []
    for m in [0] + columns:
        for fi, f in enumerate(F.polys):
            acc: dict[int, float] = defaultdict(float)
            const = 0.0
            for c, t in f:
                target = m | t
                if target == 0:
                    const += c
                elif target in col_index:
                    acc[target] += c
            entries = [(k, v) for k, v in ((col_index[t], v) for t, v in acc.items()) if v != 0.0]
            if drop_zero_rows and not entries and const == 0.0:
                continue
            r = len(rows)
            rows.append((m, fi))
            for k, v in entries:
                data_r.append(r)
                data_c.append(k)
                data_v.append(v)
            b_vals.append(-const)
    a = sp.csr_matrix((data_v, (data_r, data_c)), shape=(len(rows), len(columns)))
    return MacaulaySystem(
        n=n,
        h=h,
        pruned=prune,
        columns=tuple(columns),
        rows=tuple(rows),
        a=a,
        b=np.asarray(b_vals, dtype=float),
        weights=weight_vector(columns, h),
        forbidden=tuple(forbidden),
        source=F,
    )


def rescale(ms: MacaulaySystem) -> AugmentedSystem:
    """Augmented system for ``A D z = b``; ``D`` rides along as ``column_scale``."""
    ad = ms.a.toarray() * ms.weights[None, :]
    return build_augmented(ad, ms.b, column_scale=ms.weights)


def closed_form_p_sum_example(n: int, ms: Optional[MacaulaySystem] = None) -> np.ndarray:
    """``p`` over the rows of the unpruned sum system: ``1/C(n, |m|)``, and 0 on the degree-``n`` row.

    The degree-``n`` row of that system is identically zero, so the
    pseudoinverse assigns it nothing.
    """
    ms = ms if ms is not None else build_macaulay(sum_system(n), n)
    return np.array(
        [1.0 / math.comb(n, degree(m)) if degree(m) < n else 0.0 for m, _ in ms.rows]
    )


# ---------------------------------------------------------------- recovery


def sample_rounds(n: int, delta_fail: float) -> int:
    return 4 * math.ceil(math.log2(n / delta_fail))


BACKEND_ALIASES = {
    "walk": "walk",
    "walk-qls": "walk",
    "kernel": "kernel",
    "kernel-qls": "kernel",
    "oracle": "oracle",
    "classical-oracle": "oracle",
}


@dataclass(frozen=True, eq=False)
class SolutionState:
    """Column-basis amplitudes of the weighted Macaulay solution produced by a backend."""

    macaulay: MacaulaySystem
    system: AugmentedSystem
    backend: str
    amplitudes: np.ndarray
    et_direct: float
    trace_distance: float
    details: dict = field(default_factory=dict)

    @cached_property
    def probabilities(self) -> np.ndarray:
        pr = self.amplitudes**2
        return pr / pr.sum()

    @cached_property
    def inclusion_probabilities(self) -> np.ndarray:
        """Per-variable chance that one sample's monomial contains it."""
        out = np.zeros(self.macaulay.n)
        for pr, c in zip(self.probabilities, self.macaulay.columns):
            for v in variables_of(c):
                out[v] += pr
        return out


def prepare_solution_state(
    F: PolynomialSystem,
    h: int,
    backend: str = "walk",
    epsilon: float = 0.05,
    prune: bool = True,
    seed: int = 0,
) -> SolutionState:
    """Weighted Macaulay system plus the normalized ``|z>`` from the chosen backend."""
    kind = BACKEND_ALIASES.get(backend)
    if kind is None:
        raise ValueError(f"unknown backend {backend!r}")
    ms = build_macaulay(F, h, prune)
    sys = rescale(ms)
    metrics = compute_metrics(sys)
    z_unit = metrics.y / math.sqrt(metrics.y_norm_sq)
    details: dict = {}
    if kind == "oracle":
        amps = z_unit
    elif kind == "walk":
        from .qpe import prepare_walk

        prep = prepare_walk(sys, epsilon)
        amps = prep.y_state
        details = {"delta": prep.model.delta, "prob_phase_zero": prep.prob_phase_zero}
    else:
        from .kernel import run_kernel_qls

        run = run_kernel_qls(sys, epsilon, seed=seed)
        amps = run.y_state
        details = {k: run.extra[k] for k in ("Delta", "ell", "eta")}
    td = numerics.trace_distance_pure(amps, z_unit)
    return SolutionState(
        macaulay=ms, system=sys, backend=kind, amplitudes=np.asarray(amps, float),
        et_direct=metrics.et, trace_distance=td, details=details,
    )


@dataclass(frozen=True)
class Recovery:
    assignment: tuple
    supports: list
    verified: bool

    @property
    def samples_used(self) -> int:
        return len(self.supports)


def recover_assignment(
    state: SolutionState, rounds: int, rng: np.random.Generator, verify: bool = True
) -> Recovery:
    """Sample ``rounds`` monomials, set the union of their variables to 1."""
    ms = state.macaulay
    picks = rng.choice(len(ms.columns), size=rounds, p=state.probabilities)
    union = 0
    supports = []
    for k in picks:
        c = ms.columns[int(k)]
        supports.append(variables_of(c))
        union |= c
    assignment = tuple((union >> v) & 1 for v in range(ms.n))
    ok = ms.source.is_solution(assignment)
    if verify and not ok:
        raise RecoveryError(supports, assignment)
    return Recovery(assignment=assignment, supports=supports, verified=ok)


@dataclass(frozen=True)
class PolySolveResult:
    assignment: tuple
    h: int
    samples_used: int
    verified: bool
    supports: list
    et_direct: float
    backend: str
    trace_distance: float


def solve_polynomial_system(
    F: PolynomialSystem,
    h: int,
    delta_fail: float = 0.05,
    seed: int = 0,
    backend: str = "walk",
    epsilon: float = 0.05,
    prune: bool = True,
) -> PolySolveResult:
    """Build the weighted system, obtain ``|z>``, sample, take the union and verify."""
    if not (0.0 < delta_fail < 1.0):
        raise ValueError("delta_fail must lie in (0, 1)")
    state = prepare_solution_state(F, h, backend, epsilon, prune, seed)
    rec = recover_assignment(state, sample_rounds(F.n, delta_fail), np.random.default_rng(seed))
    return PolySolveResult(
        assignment=rec.assignment, h=h, samples_used=rec.samples_used, verified=rec.verified,
        supports=rec.supports, et_direct=state.et_direct, backend=state.backend,
        trace_distance=state.trace_distance,
    )


def solve_unknown_weight(
    F: PolynomialSystem, delta_fail: float = 0.05, seed: int = 0, backend: str = "walk", prune: bool = True
) -> PolySolveResult:
    """Try ``h = 1 .. n`` and return the first verified assignment of weight ``h``.

    The weighting only changes with ``h``, so a run with the wrong ``h`` can
    still recover a valid solution; requiring the weight to match keeps the
    reported ``h`` meaningful.
    """
    last: Exception | None = None
    for h in range(1, F.n + 1):
        try:
            res = solve_polynomial_system(F, h, delta_fail, seed, backend, prune=prune)
        except (RecoveryError, numerics.InconsistentSystemError) as exc:
            last = exc
            continue
        if sum(res.assignment) == h:
            return res
    raise RecoveryError(getattr(last, "supports", []), getattr(last, "assignment", ()))


# ---------------------------------------------------------------- MIS


@dataclass(frozen=True)
class MisInstance:
    n: int
    edges: tuple  # sorted (i, j) with i < j, 0-based
    planted: frozenset
    unique: bool

    @property
    def h(self) -> int:
        return len(self.planted)

    def neighbour_masks(self) -> list[int]:
        nb = [0] * self.n
        for i, j in self.edges:
            nb[i] |= 1 << j
            nb[j] |= 1 << i
        return nb


def _normalize_edges(edges: Iterable[tuple[int, int]]) -> tuple:
    out = set()
    for i, j in edges:
        if i == j:
            raise ValueError(f"self-loop at vertex {i}")
        out.add((min(i, j), max(i, j)))
    return tuple(sorted(out))


def independent_sets(n: int, edges: Iterable[tuple[int, int]]):
    """Yield every independent set (including the empty one) as a bitmask."""
    if n > MAX_ENUM_VARS:
        raise MacaulaySizeError(f"exhaustive enumeration limited to {MAX_ENUM_VARS} vertices")
    nb = [0] * n
    for i, j in edges:
        nb[i] |= 1 << j
        nb[j] |= 1 << i
    stack = [(0, 0, 0)]  # (set, blocked, next vertex)
    while stack:
        s, blocked, start = stack.pop()
        yield s
        for v in range(start, n):
            if not (blocked >> v) & 1:
                stack.append((s | (1 << v), blocked | nb[v], v + 1))


def make_mis_instance(n: int, edges: Iterable[tuple[int, int]], planted: Iterable[int]) -> MisInstance:
    """Wrap a graph and planted set; checks independence and (brute force) uniqueness."""
    edges = _normalize_edges(edges)
    planted = frozenset(int(v) for v in planted)
    pm = mask_of(planted)
    if any((pm >> i) & 1 and (pm >> j) & 1 for i, j in edges):
        raise ValueError("planted set is not independent")
    best = [s for s in independent_sets(n, edges) if degree(s) >= len(planted)]
    unique = best == [pm]
    return MisInstance(n=n, edges=edges, planted=planted, unique=unique)


def planted_mis_instance(
    n: int,
    h: int,
    seed: int,
    inner_prob: float = 0.5,
    cross_prob: float = 0.9,
    max_tries: int = 2000,
) -> MisInstance:
    """Random graph whose planted independent set of size ``h`` is the unique maximum.

    Edges among the ``n - h`` outside vertices appear with ``inner_prob`` and
    edges between the planted set and the rest with ``cross_prob``; draws are
    rejected until brute force confirms uniqueness.
    """
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        s = frozenset(int(v) for v in rng.choice(n, size=h, replace=False))
        edges = []
        for i, j in combinations(range(n), 2):
            inside = (i in s) + (j in s)
            if inside == 2:
                continue
            if rng.random() < (cross_prob if inside == 1 else inner_prob):
                edges.append((i, j))
        inst = make_mis_instance(n, edges, s)
        if inst.unique:
            return inst
    raise ValueError(f"no unique planted instance found in {max_tries} draws")


def mis_encode(inst: MisInstance) -> PolynomialSystem:
    polys = [[(1.0, (i, j))] for i, j in inst.edges]
    polys.append([(1.0, (k,)) for k in range(inst.n)] + [(-float(inst.h), ())])
    return PolynomialSystem.from_terms(inst.n, polys)


@dataclass(frozen=True)
class IndependentSetCounts:
    by_size: np.ndarray  # I_i
    by_overlap: np.ndarray  # I_{i,t}: size i, t vertices outside the planted set


def count_independent_sets(
    n: int, edges: Iterable[tuple[int, int]], planted: Iterable[int] = ()
) -> IndependentSetCounts:
    pm = mask_of(planted)
    by_size = np.zeros(n + 1, dtype=np.int64)
    by_overlap = np.zeros((n + 1, n + 1), dtype=np.int64)
    for s in independent_sets(n, list(edges)):
        i = degree(s)
        by_size[i] += 1
        by_overlap[i, degree(s & ~pm)] += 1
    return IndependentSetCounts(by_size=by_size, by_overlap=by_overlap)


def mis_p_recurrence(h: int) -> np.ndarray:
    """Table ``p[i, t]`` of row potentials for a planted MIS of size ``h``.

    ``i`` is the row monomial degree, ``t`` the number of its variables outside
    the planted set. Entries with ``t > i`` are NaN; the degree-``h`` row is the
    planted set itself, whose Macaulay row vanishes, so it is 0.
    """
    p = np.full((h + 1, h + 1), np.nan)
    p[0, 0] = 1.0
    for i in range(1, h):
        for t in range(0, i + 1):
            acc = (i - t) * p[i - 1, t] if t < i else 0.0
            if t >= 1:
                acc += t * p[i - 1, t - 1]
            if t == 0:
                acc -= 1.0 / math.comb(h, i)
            p[i, t] = acc / (h - i)
    p[h, : h + 1] = 0.0
    return p


@dataclass(frozen=True)
class MisEtPrediction:
    et_predicted: float
    et_direct: float
    breakdown: dict  # (i, t) -> contribution to ET
    counts: IndependentSetCounts
    p_table: np.ndarray
    count_ratio: float  # max_i I_i / C(h, i)
    budget: float

    @property
    def relative_error(self) -> float:
        return abs(self.et_predicted - self.et_direct) / self.et_direct

    @property
    def within_budget(self) -> bool:
        return self.et_predicted <= self.budget


def predicted_et_mis(inst: MisInstance, budget_coeff: float = 1.0) -> MisEtPrediction:
    """ET from the recurrence table and the actual row norms of the pruned weighted system."""
    h = inst.h
    ms = build_macaulay(mis_encode(inst), h, prune=True)
    sys = rescale(ms)
    metrics = compute_metrics(sys)
    table = mis_p_recurrence(h)
    pm = mask_of(inst.planted)
    breakdown: dict = defaultdict(float)
    for (m, _), d in zip(ms.rows, sys.row_sq_norms):
        key = (degree(m), degree(m & ~pm))
        breakdown[key] += table[key] ** 2 * d
    counts = count_independent_sets(inst.n, inst.edges, inst.planted)
    ratio = max(counts.by_size[i] / math.comb(h, i) for i in range(h + 1))
    return MisEtPrediction(
        et_predicted=float(sum(breakdown.values())),
        et_direct=metrics.et,
        breakdown=dict(sorted(breakdown.items())),
        counts=counts,
        p_table=table,
        count_ratio=float(ratio),
        budget=budget_coeff * inst.n**4,
    )


def recurrence_p_vector(inst: MisInstance, ms: MacaulaySystem) -> np.ndarray:
    """Recurrence values laid out over the rows of ``ms``."""
    table = mis_p_recurrence(inst.h)
    pm = mask_of(inst.planted)
    return np.array([table[degree(m), degree(m & ~pm)] for m, _ in ms.rows])
