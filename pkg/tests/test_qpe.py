import numpy as np
import pytest
from hypothesis import given, strategies as st

from qlswalk.instances import diagonal_example, make_random_consistent, make_welded_tree
from qlswalk.numerics import InconsistentSystemError
from qlswalk.qpe import (
    NotInColumnSpanError,
    RepetitionCapError,
    build_phase_model,
    collapse_to_columns,
    phase_project,
    phase_zero_bracket,
    prepare_walk,
    repetition_cap,
    run_qls,
    sample_until_success,
)
from qlswalk.system import build_augmented, compute_metrics
from qlswalk.walk import build_star_states, build_walk_graph, build_walk_operator, canonical_states
from oracles import phase_projector_eig


def _states(s):
    return build_star_states(build_walk_graph(s), s), compute_metrics(s)


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("delta", [0.01, 0.3, 1.2, 3.0])
def test_jordan_matches_dense(seed, delta):
    s = make_random_consistent(7, 4, 0.7, seed)
    st_, _ = _states(s)
    op = build_walk_operator(st_)
    jordan = build_phase_model(st_, delta, "jordan")
    dense = build_phase_model(st_, delta, "dense", op)
    ref = phase_projector_eig(op.u, delta)
    x = np.random.default_rng(seed).standard_normal(st_.dim)
    assert np.allclose(jordan.project(x), dense.project(x), atol=1e-9)
    assert np.allclose(dense.project(x), ref @ x, atol=1e-8)


def test_dense_projector_commutes():
    s = make_random_consistent(8, 5, 0.6, 1)
    st_, _ = _states(s)
    op = build_walk_operator(st_)
    p = build_phase_model(st_, 0.4, "dense", op).projector_matrix()
    assert np.linalg.norm(p @ p - p) <= 1e-8
    assert np.linalg.norm(p @ op.u - op.u @ p) <= 1e-8


def test_delta_range():
    st_, _ = _states(build_augmented(np.eye(2), [1, 0]))
    for bad in (0.0, -1.0, np.pi, 4.0):
        with pytest.raises(ValueError):
            build_phase_model(st_, bad)


def test_theta_is_fixed():
    s = make_random_consistent(8, 5, 0.6, 7)
    st_, m = _states(s)
    theta, _ = canonical_states(st_, m)
    out = phase_project(build_phase_model(st_, 0.01), theta)
    assert out.prob_zero == pytest.approx(1.0)
    assert np.allclose(out.post_state, theta)


def test_no_phase_zero_mass():
    s = build_augmented(np.eye(2), [1, 0])
    st_, _ = _states(s)
    # row 1 has a single edge shared with column 1: phase pi, never bin 0
    x = st_.psi_state(1)
    assert phase_project(build_phase_model(st_, 0.1), x).no_mass


def test_phase_project_requires_unit_state():
    st_, _ = _states(build_augmented(np.eye(2), [1, 0]))
    with pytest.raises(ValueError):
        phase_project(build_phase_model(st_, 0.1), 2 * st_.phi_b())


@given(st.integers(0, 2**32 - 1))
def test_phi_b_bracket(seed):
    prep = prepare_walk(make_random_consistent(8, 5, 0.6, seed), 0.1)
    lo, hi = phase_zero_bracket(prep)
    assert lo <= prep.prob_phase_zero <= hi
    # ideal binning: the weight of theta* is exactly the lower part
    assert prep.prob_phase_zero >= prep.gamma_fixed_point - 1e-12


def test_collapse_theta_without_b():
    s = make_random_consistent(8, 5, 0.6, 3)
    st_, m = _states(s)
    theta, _ = canonical_states(st_, m)
    phi_b = st_.phi_b()
    v = theta - (phi_b @ theta) * phi_b
    col = collapse_to_columns(v / np.linalg.norm(v), st_)
    assert np.allclose(col, m.y / np.linalg.norm(m.y))


def test_collapse_single_star():
    s = make_random_consistent(6, 3, 1.0, 2)
    st_, _ = _states(s)
    assert np.allclose(collapse_to_columns(st_.phi_state(0), st_), [1, 0, 0])


def test_collapse_round_trip_and_rejection():
    s = make_random_consistent(9, 5, 0.6, 5)
    st_, _ = _states(s)
    c = np.random.default_rng(0).standard_normal(5)
    v = st_.expand_columns(np.append(c, 0.0))
    out = collapse_to_columns(v, st_)
    assert np.allclose(out, c, atol=1e-10)
    assert np.linalg.norm(out) == pytest.approx(np.linalg.norm(v), abs=1e-10)
    with pytest.raises(NotInColumnSpanError):
        collapse_to_columns(st_.phi_b(), st_)


def test_run_diagonal():
    r = run_qls(diagonal_example(4).system(), 0.05)
    assert np.allclose(r.y_state, [0, 0, 0, 1], atol=1e-12)
    assert r.trace_distance <= 1e-10
    # exact theta*: phase-0 weight 1 - gamma, then a gamma chance of leaving b
    assert r.prob_success == pytest.approx(r.gamma * (1 - r.gamma))


def test_run_identity():
    r = run_qls(build_augmented(np.eye(2), [1, 0]), 0.1)
    assert np.allclose(r.y_state, [1, 0]) and r.trace_distance <= 1e-10


@given(st.integers(0, 2**32 - 1))
def test_run_random(seed):
    s = make_random_consistent(8, 5, 0.6, seed)
    r = run_qls(s, 0.1, seed=seed)
    assert r.trace_distance <= 0.1
    assert r.repetitions <= r.repetition_cap


def test_run_norm_known():
    s = make_random_consistent(8, 5, 0.6, 0)
    r = run_qls(s, 0.1, norm_known=True)
    assert r.gamma == pytest.approx(0.5)
    assert r.trace_distance <= 0.1


def test_run_inconsistent():
    with pytest.raises(InconsistentSystemError):
        run_qls(build_augmented(np.array([[1.0], [1.0]]), [1.0, 0.0]), 0.1)


def test_run_epsilon_range():
    with pytest.raises(ValueError):
        run_qls(build_augmented(np.eye(2), [1, 0]), 1.5)


def test_repetition_cap_error():
    with pytest.raises(RepetitionCapError) as info:
        sample_until_success(0.0, 1.0, 25, np.random.default_rng(0))
    assert info.value.attempts == 25 and info.value.phase_frequency == 0.0


def test_repetition_cap_formula():
    assert repetition_cap(0.5) == int(np.ceil(48 * 4 * np.log(100)))


def test_run_deterministic():
    s = make_random_consistent(8, 5, 0.6, 1)
    assert run_qls(s, 0.1, seed=9).to_report() == run_qls(s, 0.1, seed=9).to_report()


def test_report_schema():
    rep = run_qls(build_augmented(np.eye(2), [1, 0]), 0.1).to_report()
    assert rep["schema"] == 1
    for key in ("delta", "gamma", "ET", "s", "trace_distance", "repetitions", "delta_state_prep"):
        assert key in rep


def test_precision_monotone():
    # coarse deltas so that bin 0 actually picks up contamination
    s = make_welded_tree(3, 1).system()
    ds = [0.8, 0.4, 0.2, 0.1, 0.05]
    tds = [prepare_walk(s, 0.1, delta=d).trace_distance for d in ds]
    assert all(b <= a + 1e-12 for a, b in zip(tds, tds[1:]))


def test_state_prep_precision_bound():
    for seed in range(10):
        s = make_random_consistent(10, 6, 0.5, seed)
        prep = prepare_walk(s, 0.1)
        strict = prepare_walk(s, 0.1, delta=min(prep.delta_state_prep, 3.0))
        assert strict.trace_distance <= 0.1
