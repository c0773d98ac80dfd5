"""Dense linear-algebra kernel shared by every other module.

All routines are pure functions over numpy arrays. Rank decisions use a
cutoff relative to the largest singular value.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

TAU_RANK = 1e-10
TAU_CONSIST = 1e-8
UNITARY_TOL = 1e-8


class NumericsError(RuntimeError):
    pass


class SvdConvergenceError(NumericsError):
    pass


class InconsistentSystemError(ValueError):
    """Raised when the right-hand side has no exact solution."""

    def __init__(self, residual: float):
        super().__init__(f"no exact solution: column-space residual {residual:.3e}")
        self.residual = residual


class NotUnitaryError(ValueError):
    def __init__(self, deviation: float):
        super().__init__(f"matrix is not unitary: ||U^H U - I||_F = {deviation:.3e}")
        self.deviation = deviation


def _check_finite(m: np.ndarray) -> None:
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix contains NaN or Inf entries")


@dataclass(frozen=True)
class SvdFactorization:
    """Thin SVD ``m == (u * s) @ vt`` with a numerical rank."""

    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray
    rank: int
    tau_rank: float

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.s) @ self.vt

    @property
    def sigma_max(self) -> float:
        return float(self.s[0]) if self.s.size else 0.0

    @property
    def sigma_min_nonzero(self) -> float:
        return float(self.s[self.rank - 1]) if self.rank else 0.0

    @property
    def condition_number(self) -> float:
        """Largest over smallest nonzero singular value."""
        if self.rank == 0:
            raise NumericsError("condition number of a zero matrix is undefined")
        return self.sigma_max / self.sigma_min_nonzero

    def row_space(self) -> np.ndarray:
        """Orthonormal basis (as columns) of the row space."""
        return self.vt[: self.rank].T

    def column_space(self) -> np.ndarray:
        return self.u[:, : self.rank]

    def null_space(self) -> np.ndarray:
        """Orthonormal basis (as columns) of the right null space."""
        return self._full_vt()[self.rank :].T

    def _full_vt(self) -> np.ndarray:
        n = self.vt.shape[1]
        if self.vt.shape[0] == n:
            return self.vt
        # complete the row basis with an orthonormal complement
        q, _ = np.linalg.qr(self.vt.T, mode="complete")
        comp = q[:, self.vt.shape[0] :].T
        return np.vstack([self.vt, comp])


def svd(m: np.ndarray, tau_rank: float = TAU_RANK) -> SvdFactorization:
    """Thin SVD with rank ``#{sigma > tau_rank * sigma_max}``."""
    m = np.asarray(m)
    _check_finite(m)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    try:
        u, s, vt = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        try:
            u, s, vt = scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")
        except np.linalg.LinAlgError:
            raise SvdConvergenceError(
                f"SVD did not converge for a {m.shape[0]}x{m.shape[1]} matrix"
            ) from exc
    if s.size == 0 or s[0] == 0.0:
        rank = 0
    else:
        rank = int(np.count_nonzero(s > tau_rank * s[0]))
    return SvdFactorization(u=u, s=s, vt=vt, rank=rank, tau_rank=tau_rank)


def min_norm_solve(
    m: np.ndarray,
    rhs: np.ndarray,
    tau_rank: float = TAU_RANK,
    tau_consist: float = TAU_CONSIST,
) -> np.ndarray:
    """Return ``m^+ rhs`` after checking that ``rhs`` lies in the column space.

    The consistency residual is measured relative to ``max(1, ||rhs||)``.
    """
    rhs = np.asarray(rhs, dtype=float)
    f = svd(m, tau_rank)
    ur = f.column_space()
    coeff = ur.T @ rhs
    residual = float(np.linalg.norm(rhs - ur @ coeff))
    if residual > tau_consist * max(1.0, float(np.linalg.norm(rhs))):
        raise InconsistentSystemError(residual)
    return f.vt[: f.rank].T @ (coeff / f.s[: f.rank])


def pseudoinverse_apply(
    m: np.ndarray, rhs: np.ndarray, tau_rank: float = TAU_RANK
) -> np.ndarray:
    """``m^+ rhs`` with singular values below the rank cutoff discarded."""
    f = svd(m, tau_rank)
    r = f.rank
    return f.vt[:r].T @ ((f.u[:, :r].T @ np.asarray(rhs, dtype=float)) / f.s[:r])


def pseudoinverse(m: np.ndarray, tau_rank: float = TAU_RANK) -> np.ndarray:
    f = svd(m, tau_rank)
    r = f.rank
    return (f.vt[:r].T / f.s[:r]) @ f.u[:, :r].T


def condition_number(m: np.ndarray, tau_rank: float = TAU_RANK) -> float:
    return svd(m, tau_rank).condition_number


def null_space(m: np.ndarray, tau_rank: float = TAU_RANK) -> np.ndarray:
    return svd(m, tau_rank).null_space()


@dataclass(frozen=True)
class UnitaryEigensystem:
    """Eigenphases in (-pi, pi] with orthonormal eigenvectors as columns."""

    phases: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray

    def projector(self, delta: float) -> np.ndarray:
        """Orthogonal projector onto eigenvectors with ``|phase| <= delta``."""
        v = self.vectors[:, np.abs(self.phases) <= delta]
        return v @ v.conj().T

    def project(self, delta: float, state: np.ndarray) -> np.ndarray:
        v = self.vectors[:, np.abs(self.phases) <= delta]
        return v @ (v.conj().T @ state)


def unitary_eig(u: np.ndarray, tol: float = UNITARY_TOL) -> UnitaryEigensystem:
    """Eigendecomposition of a unitary matrix via the complex Schur form.

    A unitary matrix is normal, so its complex Schur form is diagonal and the
    Schur vectors are an orthonormal eigenbasis even inside degenerate
    eigenspaces (which ``numpy.linalg.eig`` does not guarantee).
    """
    u = np.asarray(u, dtype=complex)
    _check_finite(u)
    n = u.shape[0]
    if u.shape != (n, n):
        raise ValueError(f"expected a square matrix, got shape {u.shape}")
    deviation = float(np.linalg.norm(u.conj().T @ u - np.eye(n)))
    if deviation > tol:
        raise NotUnitaryError(deviation)
    t, z = scipy.linalg.schur(u, output="complex")
    lam = np.diag(t)
    phases = np.angle(lam)
    phases[phases <= -np.pi + 1e-15] = np.pi
    residuals = np.linalg.norm(u @ z - z * lam, axis=0)
    return UnitaryEigensystem(phases=phases, vectors=z, residuals=residuals)


def trace_distance_pure(a: np.ndarray, b: np.ndarray) -> float:
    """Trace distance ``(1/2)|| |a><a| - |b><b| ||_1`` of two pure states.

    For unit vectors this equals ``sqrt(1 - |<a|b>|^2)``.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    overlap = min(1.0, abs(np.vdot(a, b)) ** 2)
    return float(np.sqrt(max(0.0, 1.0 - overlap)))
