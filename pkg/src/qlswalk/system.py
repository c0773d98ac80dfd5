"""Linear systems ``A y = b`` held as the augmented matrix ``H = [A, -b]``."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import numerics
from .numerics import TAU_RANK


@dataclass(frozen=True, eq=False)
class AugmentedSystem:
    """Dense augmented matrix plus the structural data derived from it.

    ``column_scale`` is set when the system is a right-rescaled ``A D z = b``;
    it holds the diagonal of ``D`` so that ``y = D z`` can be recovered.
    """

    a: np.ndarray
    b: np.ndarray
    h: np.ndarray
    nnz: np.ndarray
    sparsity: int
    row_sq_norms: np.ndarray
    column_scale: Optional[np.ndarray] = None
    labels: dict = field(default_factory=dict)

    @property
    def num_rows(self) -> int:
        return self.a.shape[0]

    @property
    def num_cols(self) -> int:
        return self.a.shape[1]


def build_augmented(
    a: np.ndarray, b: np.ndarray, column_scale: Optional[np.ndarray] = None
) -> AugmentedSystem:
    a = np.array(a, dtype=float, ndmin=2)
    b = np.array(b, dtype=float).reshape(-1)
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"A has {a.shape[0]} rows but b has length {b.shape[0]}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("system contains NaN or Inf entries")
    if not np.any(b != 0.0):
        raise ValueError("b is all zero; vertex b of the walk graph would be isolated")
    h = np.hstack([a, -b[:, None]])
    nnz = h != 0.0
    sparsity = int(max(nnz.sum(axis=1).max(), nnz.sum(axis=0).max()))
    d = np.einsum("ij,ij->i", h, h)
    for arr in (a, b, h, nnz, d):
        arr.setflags(write=False)
    return AugmentedSystem(
        a=a, b=b, h=h, nnz=nnz, sparsity=sparsity, row_sq_norms=d,
        column_scale=None if column_scale is None else np.asarray(column_scale, float),
    )


@dataclass(frozen=True)
class InstanceMetrics:
    y: np.ndarray
    p: np.ndarray
    y_norm_sq: float
    et: float
    kappa_a: float
    kappa_h: float
    gamma: float
    sparsity: int

    @property
    def phase_zero_weight(self) -> float:
        """``1 / (1 + ||y||^2)``: the weight of the fixed point in the initial state."""
        return 1.0 / (1.0 + self.y_norm_sq)


def compute_metrics(sys: AugmentedSystem, tau_rank: float = TAU_RANK) -> InstanceMetrics:
    """Min-norm solution, potential vector ``p = (A A^T)^+ b`` and ET.

    Raises :class:`numerics.InconsistentSystemError` when ``b`` is not in the
    column space of ``A``.
    """
    y = numerics.min_norm_solve(sys.a, sys.b, tau_rank)
    p = numerics.pseudoinverse_apply(sys.a @ sys.a.T, sys.b, tau_rank)
    y_norm_sq = float(y @ y)
    et = float(np.sum(p**2 * sys.row_sq_norms))
    return InstanceMetrics(
        y=y,
        p=p,
        y_norm_sq=y_norm_sq,
        et=et,
        kappa_a=numerics.condition_number(sys.a, tau_rank),
        kappa_h=numerics.condition_number(sys.h, tau_rank),
        gamma=y_norm_sq / (1.0 + y_norm_sq),
        sparsity=sys.sparsity,
    )


@dataclass(frozen=True)
class DecompositionReport:
    theta: np.ndarray
    theta_perp: np.ndarray
    residuals: dict

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values())

    @property
    def passed(self) -> bool:
        return self.max_residual <= 1e-8


def verify_vector_decomposition(
    sys: AugmentedSystem, metrics: InstanceMetrics
) -> DecompositionReport:
    """Check ``e_{N+1} = (theta - theta_perp) / (1 + ||y||^2)`` and its pieces.

    ``theta = [y; 1]`` must lie in Null(H), ``theta_perp = [y; -||y||^2]`` must
    equal ``H^T p`` and the two must be orthogonal. Residuals are relative to
    the natural scale of each identity.
    """
    y, p = metrics.y, metrics.p
    n = sys.num_cols
    ysq = metrics.y_norm_sq
    theta = np.append(y, 1.0)
    theta_perp = np.append(y, -ysq)
    psi0 = np.zeros(n + 1)
    psi0[-1] = 1.0
    scale_h = max(1.0, float(np.linalg.norm(sys.h)))
    residuals = {
        "decomposition": float(np.linalg.norm(psi0 - (theta - theta_perp) / (1.0 + ysq))),
        "null_space": float(np.linalg.norm(sys.h @ theta)) / (scale_h * np.linalg.norm(theta)),
        "row_space": float(np.linalg.norm(sys.h.T @ p - theta_perp))
        / max(1.0, float(np.linalg.norm(theta_perp))),
        "orthogonality": abs(float(theta @ theta_perp))
        / (np.linalg.norm(theta) * max(1.0, float(np.linalg.norm(theta_perp)))),
    }
    return DecompositionReport(theta=theta, theta_perp=theta_perp, residuals=residuals)


@dataclass(frozen=True)
class KappaRelation:
    kappa_a: float
    kappa_h: float
    in_bounds: bool


def normalize_for_kappa(sys: AugmentedSystem) -> AugmentedSystem:
    """Rescale so that ``||A|| = 1`` and ``||y|| = 1`` (hence ``||b|| <= 1``)."""
    a = sys.a / numerics.svd(sys.a).sigma_max
    y = numerics.min_norm_solve(a, sys.b)
    y = y / np.linalg.norm(y)
    return build_augmented(a, a @ y)


def condition_number_relation(
    sys: AugmentedSystem, normalize: bool = True, rel_tol: float = 1e-6
) -> KappaRelation:
    """Both condition numbers and whether ``kappa(A)/2 <= kappa(H) <= sqrt(2) kappa(A)``."""
    if not np.any(sys.a):
        raise ValueError("condition number of a zero matrix is undefined")
    if normalize:
        sys = normalize_for_kappa(sys)
    ka = numerics.condition_number(sys.a)
    kh = numerics.condition_number(sys.h)
    lo = 0.5 * ka * (1.0 - rel_tol)
    hi = np.sqrt(2.0) * ka * (1.0 + rel_tol)
    return KappaRelation(kappa_a=ka, kappa_h=kh, in_bounds=bool(lo <= kh <= hi))
