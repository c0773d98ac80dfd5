"""Ideal phase-estimation model on the walk unitary and the QLS driver built on it.

Phase estimation at precision ``delta`` is modelled as the orthogonal
projector onto eigenvectors of ``U_AB`` with ``|phase| <= delta`` followed by a
Bernoulli draw of the bin-0 outcome. Two interchangeable projectors exist:

``dense``
    full complex Schur decomposition of the dense ``U_AB``.
``jordan``
    the unitary is a product of two reflections, so its spectrum follows
    from the singular values ``sigma`` of ``K = Phi^T Psi``. Each pair of
    singular vectors spans a 2-D invariant plane with phases
    ``+-2 arcsin(sigma)``; zero singular directions are phase-0 eigenvectors
    and everything else sits at phase ``pi``. Only ``K`` is decomposed, so
    edge spaces of tens of thousands are cheap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import numerics
from .numerics import trace_distance_pure
from .system import AugmentedSystem, InstanceMetrics, build_augmented, compute_metrics
from .walk import (
    StarStateSet,
    WalkOperator,
    build_star_states,
    build_walk_graph,
    build_walk_operator,
    canonical_states,
)

NO_MASS_TOL = 1e-14
SCHEMA_VERSION = 1


class RepetitionCapError(RuntimeError):
    """No round succeeded before the repetition cap."""

    def __init__(self, attempts: int, phase_successes: int, measurement_successes: int):
        self.attempts = attempts
        self.phase_frequency = phase_successes / attempts if attempts else 0.0
        self.measurement_frequency = (
            measurement_successes / phase_successes if phase_successes else 0.0
        )
        super().__init__(
            f"repetition cap of {attempts} rounds reached: phase-0 frequency "
            f"{self.phase_frequency:.4f}, measurement frequency {self.measurement_frequency:.4f}"
        )


class NotInColumnSpanError(ValueError):
    def __init__(self, residual: float):
        super().__init__(f"state has weight {residual:.3e} outside the column star span")
        self.residual = residual


def _check_delta(delta: float) -> None:
    if not (0.0 < delta < math.pi):
        raise ValueError(f"phase precision delta={delta!r} must lie in (0, pi)")


class _JordanProjector:
    def __init__(self, states: StarStateSet, delta: float):
        self.c = states.c_active
        self.r = states.r_active
        u, s, vt = np.linalg.svd(states.overlap, full_matrices=False)
        small = s <= math.sin(delta / 2.0)
        self.u, self.v = u, vt.T
        self.us, self.vs, self.ss = u[:, small], vt[small].T, s[small]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        cx = self.c.T @ x
        rx = self.r.T @ x
        c_null = cx - self.u @ (self.u.T @ cx)
        r_null = rx - self.v @ (self.v.T @ rx)
        a = self.us.T @ cx
        b = self.vs.T @ rx
        det = 1.0 - self.ss**2
        alpha = (a - self.ss * b) / det
        beta = (b - self.ss * a) / det
        return self.c @ (c_null + self.us @ alpha) + self.r @ (r_null + self.vs @ beta)


@dataclass(frozen=True, eq=False)
class PhaseEstimationModel:
    """Bin-0 projector ``Pi_delta`` at precision ``delta``."""

    delta: float
    method: str
    project: Callable[[np.ndarray], np.ndarray]
    eigensystem: Optional[numerics.UnitaryEigensystem] = None

    def projector_matrix(self) -> np.ndarray:
        """Dense ``Pi_delta`` (only for the dense method)."""
        if self.eigensystem is None:
            raise ValueError("projector matrix is only stored by the dense model")
        return self.eigensystem.projector(self.delta)


def build_phase_model(
    states: StarStateSet,
    delta: float,
    method: str = "jordan",
    op: Optional[WalkOperator] = None,
) -> PhaseEstimationModel:
    _check_delta(delta)
    if method == "jordan":
        return PhaseEstimationModel(delta, method, _JordanProjector(states, delta))
    if method == "dense":
        op = op if op is not None else build_walk_operator(states)
        eig = numerics.unitary_eig(op.u)

        def project(x: np.ndarray) -> np.ndarray:
            out = eig.project(delta, x)
            # bin 0 is closed under conjugation, so the projector is real
            return out.real if np.isrealobj(x) else out

        return PhaseEstimationModel(delta, method, project, eig)
    raise ValueError(f"unknown phase model {method!r}; choose 'jordan' or 'dense'")


@dataclass(frozen=True)
class PhaseOutcome:
    prob_zero: float
    post_state: Optional[np.ndarray]

    @property
    def no_mass(self) -> bool:
        return self.post_state is None


def phase_project(model: PhaseEstimationModel, state: np.ndarray) -> PhaseOutcome:
    nrm = float(np.linalg.norm(state))
    if abs(nrm - 1.0) > 1e-8:
        raise ValueError(f"input state has norm {nrm:.6g}, expected 1")
    proj = model.project(state)
    prob = float(np.vdot(proj, proj).real)
    if prob <= NO_MASS_TOL:
        return PhaseOutcome(prob_zero=prob, post_state=None)
    return PhaseOutcome(prob_zero=min(prob, 1.0), post_state=proj / math.sqrt(prob))


def collapse_to_columns(
    edge_state: np.ndarray, states: StarStateSet, tol: float = 1e-8
) -> np.ndarray:
    """Coordinates ``<Phi_j|edge_state>`` for ``j < N``; the state must lie in their span."""
    n = states.graph.num_cols
    phi = states.phi[:, :n]
    coeffs = phi.T @ edge_state
    residual = float(np.linalg.norm(edge_state - phi @ coeffs))
    if residual > tol * max(1.0, float(np.linalg.norm(edge_state))):
        raise NotInColumnSpanError(residual)
    return coeffs


def repetition_cap(gamma: float) -> int:
    return math.ceil(48.0 * (1.0 / gamma + 1.0 / (1.0 - gamma)) * math.log(100.0))


def algorithm_delta(eps: float, gamma: float, sparsity: int, et: float) -> float:
    """Precision ``(eps * gamma)^2 / sqrt(s * ET)`` with unit constant."""
    return (eps * gamma) ** 2 / math.sqrt(sparsity * et)


@dataclass
class QlsRun:
    backend: str
    epsilon: float
    delta: float
    gamma: float
    et: float
    sparsity: int
    kappa_a: float
    kappa_h: float
    prob_phase_zero: float
    prob_measure: float
    y_state: np.ndarray
    trace_distance: float
    trace_distance_columns: float
    repetitions: int
    repetition_cap: int
    phase_successes: int
    norm_known: bool
    extra: dict = field(default_factory=dict)

    @property
    def prob_success(self) -> float:
        return self.prob_phase_zero * self.prob_measure

    def to_report(self) -> dict:
        rep = {
            "schema": SCHEMA_VERSION,
            "backend": self.backend,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "gamma": self.gamma,
            "ET": self.et,
            "s": self.sparsity,
            "kappa_A": self.kappa_a,
            "kappa_H": self.kappa_h,
            "prob_phase_zero": self.prob_phase_zero,
            "prob_measure": self.prob_measure,
            "prob_success": self.prob_success,
            "y_state": [float(v) for v in self.y_state],
            "trace_distance": self.trace_distance,
            "trace_distance_columns": self.trace_distance_columns,
            "repetitions": self.repetitions,
            "repetition_cap": self.repetition_cap,
            "phase_successes": self.phase_successes,
            "norm_known": self.norm_known,
        }
        rep.update(self.extra)
        return rep


def sample_until_success(
    prob_first: float, prob_second: float, cap: int, rng: np.random.Generator
) -> tuple[int, int]:
    """Repeat a two-stage Bernoulli experiment; return ``(rounds, first-stage successes)``.

    Raises :class:`RepetitionCapError` if no round passes both stages.
    """
    first = second = 0
    for r in range(1, cap + 1):
        if rng.random() < prob_first:
            first += 1
            if rng.random() < prob_second:
                return r, first
    raise RepetitionCapError(cap, first, second)


def rescale_to_unit_solution(sys: AugmentedSystem, metrics: InstanceMetrics) -> AugmentedSystem:
    return build_augmented(sys.a, sys.b / math.sqrt(metrics.y_norm_sq), sys.column_scale)


@dataclass(frozen=True, eq=False)
class PreparedWalk:
    """Everything about one system that does not depend on the sampling seed."""

    sys: AugmentedSystem
    metrics: InstanceMetrics
    states: StarStateSet
    model: PhaseEstimationModel
    epsilon: float
    norm_known: bool
    prob_phase_zero: float
    prob_measure: float
    y_state: np.ndarray
    trace_distance: float
    trace_distance_columns: float
    delta_state_prep: float
    p_b_norm: float

    @property
    def gamma(self) -> float:
        return self.metrics.gamma

    @property
    def gamma_fixed_point(self) -> float:
        return self.metrics.phase_zero_weight


def prepare_walk(
    sys: AugmentedSystem,
    eps: float,
    norm_known: bool = False,
    method: str = "jordan",
    delta: Optional[float] = None,
) -> PreparedWalk:
    """Steps 1 and 2 of the walk solver: build ``U_AB``, project ``Phi_b`` and read out.

    ``delta`` overrides the default precision (used by precision sweeps).
    """
    if not (0.0 < eps < 1.0):
        raise ValueError(f"epsilon={eps!r} must lie in (0, 1)")
    metrics = compute_metrics(sys)
    if norm_known:
        sys = rescale_to_unit_solution(sys, metrics)
        metrics = compute_metrics(sys)
    states = build_star_states(build_walk_graph(sys), sys)
    if delta is None:
        delta = algorithm_delta(eps, metrics.gamma, metrics.sparsity, metrics.et)
    model = build_phase_model(states, delta, method)
    phi_b = states.phi_b()
    outcome = phase_project(model, phi_b)
    _, p_b = canonical_states(states, metrics)
    p_b_norm = float(np.linalg.norm(p_b))
    y_unit = metrics.y / math.sqrt(metrics.y_norm_sq)
    n = sys.num_cols
    if outcome.no_mass:
        y_state = np.zeros(n)
        prob_measure = 0.0
        td = td_cols = 1.0
    else:
        post = outcome.post_state
        overlap_b = float(phi_b @ post)
        survivor = post - overlap_b * phi_b
        prob_measure = max(0.0, 1.0 - overlap_b**2)
        # readout keeps the component inside span{Phi_j : j < N}
        coeffs = states.phi[:, :n].T @ survivor
        y_state = coeffs / np.linalg.norm(coeffs)
        # edge-space distance also charges the weight lost outside the span
        td = trace_distance_pure(survivor, states.expand_columns(np.append(y_unit, 0.0)))
        td_cols = trace_distance_pure(y_state, y_unit)
    return PreparedWalk(
        sys=sys,
        metrics=metrics,
        states=states,
        model=model,
        epsilon=eps,
        norm_known=norm_known,
        prob_phase_zero=outcome.prob_zero,
        prob_measure=prob_measure,
        y_state=y_state,
        trace_distance=td,
        trace_distance_columns=td_cols,
        delta_state_prep=eps**2 / ((1.0 + metrics.y_norm_sq) * p_b_norm) if p_b_norm else math.inf,
        p_b_norm=p_b_norm,
    )


def sample_prepared(prep: PreparedWalk, seed: int) -> QlsRun:
    """Step 3: the repeat-until-success loop with explicit accounting."""
    m = prep.metrics
    cap = repetition_cap(m.gamma)
    rng = np.random.default_rng(seed)
    reps, phase_hits = sample_until_success(prep.prob_phase_zero, prep.prob_measure, cap, rng)
    return QlsRun(
        backend="walk",
        epsilon=prep.epsilon,
        delta=prep.model.delta,
        gamma=m.gamma,
        et=m.et,
        sparsity=m.sparsity,
        kappa_a=m.kappa_a,
        kappa_h=m.kappa_h,
        prob_phase_zero=prep.prob_phase_zero,
        prob_measure=prep.prob_measure,
        y_state=prep.y_state,
        trace_distance=prep.trace_distance,
        trace_distance_columns=prep.trace_distance_columns,
        repetitions=reps,
        repetition_cap=cap,
        phase_successes=phase_hits,
        norm_known=prep.norm_known,
        extra={
            "delta_state_prep": prep.delta_state_prep,
            "gamma_phase": m.phase_zero_weight,
            "p_B_norm": prep.p_b_norm,
            "phase_model": prep.model.method,
        },
    )


def run_qls(
    sys: AugmentedSystem,
    eps: float,
    norm_known: bool = False,
    seed: int = 0,
    method: str = "jordan",
) -> QlsRun:
    """Walk-based solver: returns the column-basis output state and its accounting."""
    return sample_prepared(prepare_walk(sys, eps, norm_known, method), seed)


def phase_zero_bracket(prep: PreparedWalk) -> tuple[float, float]:
    """``[4 g / pi^2, g + 17 pi^2 delta ||p_B|| / 16]`` with ``g = 1 / (1 + ||y||^2)``."""
    g = prep.gamma_fixed_point
    return 4.0 * g / math.pi**2, g + 17.0 * math.pi**2 * prep.model.delta * prep.p_b_norm / 16.0
