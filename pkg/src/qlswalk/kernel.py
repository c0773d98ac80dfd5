"""Kernel projection through an even Chebyshev filter of the singular values of ``H``.

``F(x) = T_l(g(x)) / T_l(g(0))`` with ``g(x) = (1 + D^2 - 2 x^2) / (1 - D^2)``
equals 1 at ``x = 0`` and decays below ``1 / T_l(g(0))`` once ``|x| >= D``.
The block encoding is not dilated into a unitary; ``F(H)`` acts on the right
singular vectors directly and post-selection is the norm of the result.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import numerics
from .numerics import trace_distance_pure
from .qpe import QlsRun, repetition_cap, sample_until_success
from .system import AugmentedSystem, compute_metrics

DELTA_SHRINK = 0.99


class ForbiddenGapError(ValueError):
    def __init__(self, sigma: float, delta: float):
        super().__init__(f"singular value {sigma:.3e} lies inside the forbidden gap (0, {delta:.3e})")
        self.sigma = sigma


@dataclass(frozen=True)
class MinimaxPoly:
    delta: float
    ell: int
    eta: float = float("nan")

    def __post_init__(self):
        if not (0.0 < self.delta < 1.0):
            raise ValueError(f"Delta={self.delta!r} must lie in (0, 1)")
        if self.ell < 0:
            raise ValueError("ell must be non-negative")

    @property
    def scale(self) -> float:
        """``arccosh(g(0))``: the exponential rate of ``T_l(g(0))``."""
        d2 = self.delta**2
        return math.acosh((1.0 + d2) / (1.0 - d2))

    @classmethod
    def from_tolerance(cls, delta: float, eta: float) -> "MinimaxPoly":
        if not (0.0 < eta < 1.0):
            raise ValueError(f"eta={eta!r} must lie in (0, 1)")
        d2 = delta**2
        ell = math.ceil(math.acosh(1.0 / eta) / math.acosh((1.0 + d2) / (1.0 - d2)))
        return cls(delta=delta, ell=ell, eta=eta)

    @property
    def tail_bound(self) -> float:
        """``1 / T_l(g(0))``, the sup of ``|F|`` on ``Delta <= |x| <= 1``."""
        return 1.0 / math.cosh(self.ell * self.scale) if self.ell * self.scale < 700 else 0.0


def eval_F(p: MinimaxPoly, x):
    """Evaluate ``F_{Delta, l}`` at scalar or array ``x`` in ``[-1, 1]``.

    Ratios of hyperbolic cosines are formed as exponentials of differences so
    that large ``l`` neither overflows nor loses the small tail values.
    """
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0 + 1e-12):
        raise ValueError("eval_F is defined on [-1, 1]")
    d2 = p.delta**2
    g = np.clip((1.0 + d2 - 2.0 * x**2) / (1.0 - d2), -1.0, None)
    big = p.ell * p.scale
    # 1 / cosh(big) computed without overflow
    inv_top = 2.0 * np.exp(-big) / (1.0 + np.exp(-2.0 * big))
    out = np.empty_like(g)
    inner = g <= 1.0
    out[inner] = np.cos(p.ell * np.arccos(g[inner])) * inv_top
    c = np.arccosh(g[~inner])
    out[~inner] = np.exp(p.ell * (c - p.scale)) * (1.0 + np.exp(-2.0 * p.ell * c)) / (
        1.0 + np.exp(-2.0 * big)
    )
    return out if out.ndim else float(out)


def apply_F_to_matrix(
    p: MinimaxPoly, h: np.ndarray, state: np.ndarray, tau_rank: float = numerics.TAU_RANK
) -> np.ndarray:
    """``F(H) state`` with ``H`` rescaled to unit spectral norm.

    Components along right singular vectors are multiplied by ``F(sigma)``;
    null-space components pass through unchanged since ``F(0) = 1``.
    """
    f = numerics.svd(np.asarray(h, float), tau_rank)
    if f.rank == 0:
        return np.array(state, dtype=float)
    sig = f.s[: f.rank] / f.sigma_max
    inside = sig[sig < p.delta]
    if inside.size:
        raise ForbiddenGapError(float(inside.min()), p.delta)
    v = f.vt[: f.rank]
    coeff = v @ state
    return state + v.T @ ((eval_F(p, sig) - 1.0) * coeff)


def kernel_eta(eps: float, gamma: float) -> float:
    """Filter tolerance for output error ``eps`` given fixed-point weight ``gamma``."""
    return eps**2 * math.sqrt(gamma) / (2.0 * math.sqrt(1.0 - gamma) * (1.0 - eps**2))


def run_kernel_qls(sys: AugmentedSystem, eps: float, seed: int = 0) -> QlsRun:
    if not (0.0 < eps < 1.0):
        raise ValueError(f"epsilon={eps!r} must lie in (0, 1)")
    metrics = compute_metrics(sys)
    n = sys.num_cols
    gamma = metrics.phase_zero_weight
    f = numerics.svd(sys.h)
    delta = DELTA_SHRINK * f.sigma_min_nonzero / f.sigma_max
    eta = min(kernel_eta(eps, gamma), 0.5)
    poly = MinimaxPoly.from_tolerance(delta, eta)
    psi0 = np.zeros(n + 1)
    psi0[-1] = 1.0
    out = apply_F_to_matrix(poly, sys.h, psi0)
    success = float(out @ out)
    theta_p = out / math.sqrt(success)
    theta = np.append(metrics.y, 1.0) / math.sqrt(1.0 + metrics.y_norm_sq)
    prob_measure = max(0.0, 1.0 - theta_p[-1] ** 2)
    y_state = theta_p[:n] / np.linalg.norm(theta_p[:n])
    y_unit = metrics.y / math.sqrt(metrics.y_norm_sq)
    cap = repetition_cap(metrics.gamma)
    reps, hits = sample_until_success(success, prob_measure, cap, np.random.default_rng(seed))
    td = trace_distance_pure(y_state, y_unit)
    return QlsRun(
        backend="kernel",
        epsilon=eps,
        delta=delta,
        gamma=metrics.gamma,
        et=metrics.et,
        sparsity=metrics.sparsity,
        kappa_a=metrics.kappa_a,
        kappa_h=metrics.kappa_h,
        prob_phase_zero=success,
        prob_measure=prob_measure,
        y_state=y_state,
        trace_distance=td,
        trace_distance_columns=td,
        repetitions=reps,
        repetition_cap=cap,
        phase_successes=hits,
        norm_known=False,
        extra={
            "Delta": delta,
            "ell": poly.ell,
            "eta": eta,
            "success_prob": success,
            "theta_error": float(np.linalg.norm(theta_p - theta)),
        },
    )
