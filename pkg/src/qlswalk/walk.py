"""Weighted bipartite walk graph of an augmented matrix and its walk unitary.

Edges are the nonzeros of ``H`` ordered row-major, which puts the ``b``
column last within each row. Row star states carry the signed entries of
``H``; column star states are uniform over their incident edges.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import TextIO

import numpy as np
import scipy.sparse as sp

from .system import AugmentedSystem, InstanceMetrics


class WalkConstructionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class WalkGraph:
    """Edge list of the bipartite graph; column index ``num_cols`` stands for ``b``."""

    edge_rows: np.ndarray
    edge_cols: np.ndarray
    weights: np.ndarray
    col_degree: np.ndarray  # |N(v_j)| for j < N, then |N(b)|
    row_degree: np.ndarray  # weighted d_{u_i}; 0 for zero rows
    num_rows: int
    num_cols: int

    @property
    def dim(self) -> int:
        return int(self.edge_rows.size)

    @property
    def b_index(self) -> int:
        return self.num_cols

    @cached_property
    def edge_index(self) -> dict:
        return {
            (int(i), int(j)): e
            for e, (i, j) in enumerate(zip(self.edge_rows, self.edge_cols))
        }

    @property
    def active_rows(self) -> np.ndarray:
        return np.flatnonzero(self.row_degree > 0)

    @property
    def active_cols(self) -> np.ndarray:
        """Column vertices with at least one edge, ``b`` included (last)."""
        return np.flatnonzero(self.col_degree > 0)

    def edge_label(self, e: int) -> str:
        j = int(self.edge_cols[e])
        return f"({int(self.edge_rows[e])}, {'b' if j == self.num_cols else j})"


def build_walk_graph(sys: AugmentedSystem) -> WalkGraph:
    h = sys.h
    if not np.any(h):
        raise WalkConstructionError("H has no nonzero entries")
    if not np.any(sys.b):
        raise WalkConstructionError("b is all zero; vertex b has no neighbours")
    rows, cols = np.nonzero(h)  # C order: row-major, b column last in each row
    col_degree = np.bincount(cols, minlength=h.shape[1])
    weights = h[rows, cols] ** 2 * col_degree[cols]
    row_degree = np.bincount(rows, weights=weights, minlength=h.shape[0])
    for arr in (rows, cols, weights, col_degree, row_degree):
        arr.setflags(write=False)
    return WalkGraph(
        edge_rows=rows,
        edge_cols=cols,
        weights=weights.astype(float),
        col_degree=col_degree,
        row_degree=row_degree,
        num_rows=sys.num_rows,
        num_cols=sys.num_cols,
    )


@dataclass(frozen=True, eq=False)
class StarStateSet:
    """Row stars ``psi`` (E x M) and column stars ``phi`` (E x (N+1)) as sparse columns.

    Inactive rows and isolated columns keep an all-zero column so that
    indices line up with ``H``.
    """

    graph: WalkGraph
    psi: sp.csc_matrix
    phi: sp.csc_matrix

    @property
    def dim(self) -> int:
        return self.graph.dim

    def phi_b(self) -> np.ndarray:
        return self.phi[:, self.graph.b_index].toarray().ravel()

    def phi_state(self, j: int) -> np.ndarray:
        return self.phi[:, j].toarray().ravel()

    def psi_state(self, i: int) -> np.ndarray:
        return self.psi[:, i].toarray().ravel()

    @cached_property
    def c_active(self) -> sp.csc_matrix:
        """Column stars restricted to nonisolated columns; orthonormal columns."""
        return self.phi[:, self.graph.active_cols].tocsc()

    @cached_property
    def r_active(self) -> sp.csc_matrix:
        return self.psi[:, self.graph.active_rows].tocsc()

    @cached_property
    def overlap(self) -> np.ndarray:
        """``K[j, i] = <Phi_j | Psi_i>`` over active columns and rows."""
        return (self.c_active.T @ self.r_active).toarray()

    def expand_columns(self, coeffs: np.ndarray) -> np.ndarray:
        """Edge-basis vector ``sum_j coeffs[j] Phi_j`` (``coeffs`` indexed 0..N)."""
        return self.phi @ np.asarray(coeffs)

    def project_span_a(self, state: np.ndarray) -> np.ndarray:
        """``(I - Pi_A) state``: orthogonal projection onto span of column stars."""
        return self.phi @ (self.phi.T @ state)

    def project_span_b(self, state: np.ndarray) -> np.ndarray:
        return self.psi @ (self.psi.T @ state)


def build_star_states(g: WalkGraph, sys: AugmentedSystem) -> StarStateSet:
    e = np.arange(g.dim)
    vals = sys.h[g.edge_rows, g.edge_cols]
    psi_amp = vals * np.sqrt(g.col_degree[g.edge_cols]) / np.sqrt(g.row_degree[g.edge_rows])
    psi = sp.csc_matrix((psi_amp, (e, g.edge_rows)), shape=(g.dim, g.num_rows))
    phi_amp = 1.0 / np.sqrt(g.col_degree[g.edge_cols])
    phi = sp.csc_matrix((phi_amp, (e, g.edge_cols)), shape=(g.dim, g.num_cols + 1))
    return StarStateSet(graph=g, psi=psi, phi=phi)


@dataclass(frozen=True, eq=False)
class WalkOperator:
    pi_a: np.ndarray
    pi_b: np.ndarray
    u: np.ndarray

    @property
    def dim(self) -> int:
        return self.u.shape[0]


def build_walk_operator(states: StarStateSet) -> WalkOperator:
    """Dense ``U_AB = (2 Pi_A - I)(2 Pi_B - I)``; intended for edge spaces of a few thousand."""
    phi = states.phi.toarray()
    psi = states.psi.toarray()
    eye = np.eye(states.dim)
    pi_a = eye - phi @ phi.T
    pi_b = psi @ psi.T
    u = (2.0 * pi_a - eye) @ (2.0 * pi_b - eye)
    return WalkOperator(pi_a=pi_a, pi_b=pi_b, u=u)


def canonical_states(
    states: StarStateSet, metrics: InstanceMetrics
) -> tuple[np.ndarray, np.ndarray]:
    """Solution state ``theta*`` (unit) and the unnormalized potential state ``p_B``."""
    norm = 1.0 + metrics.y_norm_sq
    coeffs = np.append(metrics.y, 1.0)
    theta = states.expand_columns(coeffs) / np.sqrt(norm)
    g = states.graph
    p_b = states.psi @ (metrics.p * np.sqrt(g.row_degree)) / norm
    return theta, p_b


@dataclass(frozen=True)
class LemmaReport:
    residuals: dict

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values())

    def passed(self, tol: float = 1e-8) -> bool:
        return self.max_residual <= tol


def verify_lemmas(
    states: StarStateSet,
    metrics: InstanceMetrics,
    op: WalkOperator | None = None,
) -> LemmaReport:
    """Residuals of the initial-state split, the fixed point and the projection property.

    Without ``op`` the fixed-point residual is evaluated through the two
    reflections applied to a vector, which avoids forming ``U_AB``.
    """
    theta, p_b = canonical_states(states, metrics)
    phi_b = states.phi_b()
    split = theta / np.sqrt(1.0 + metrics.y_norm_sq) - states.project_span_a(p_b)
    if op is not None:
        u_theta = op.u @ theta
    else:
        u_theta = apply_walk(states, theta)
    return LemmaReport(
        residuals={
            "initial_state": float(np.linalg.norm(phi_b - split)),
            "fixed_point": float(np.linalg.norm(u_theta - theta)),
            "projection": float(np.linalg.norm(states.project_span_b(p_b) - p_b)),
        }
    )


def apply_walk(states: StarStateSet, v: np.ndarray) -> np.ndarray:
    """``U_AB v`` without building the dense operator."""
    w = 2.0 * states.project_span_b(v) - v
    # 2 Pi_A - I = I - 2 (I - Pi_A)
    return w - 2.0 * states.project_span_a(w)


def spectral_gap_residual(
    states: StarStateSet, metrics: InstanceMetrics, delta: float, projector
) -> tuple[float, float]:
    """Return ``(||Pi_delta (I - Pi_A) p_B||, (delta/2) ||p_B||)``.

    ``projector`` maps an edge vector to its bin-0 component, e.g. the
    ``project`` method of a phase-estimation model at precision ``delta``.
    """
    _, p_b = canonical_states(states, metrics)
    lhs = float(np.linalg.norm(projector(states.project_span_a(p_b))))
    return lhs, 0.5 * delta * float(np.linalg.norm(p_b))


def export_edge_list(g: WalkGraph, out: TextIO) -> None:
    """One line per edge: row, column (or ``b``), weight."""
    for i, j, w in zip(g.edge_rows, g.edge_cols, g.weights):
        col = "b" if j == g.num_cols else str(int(j))
        out.write(f"{int(i)} {col} {float(w)!r}\n")
