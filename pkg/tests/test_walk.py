import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qlswalk.instances import diagonal_example, make_random_consistent, make_welded_tree
from qlswalk.qpe import build_phase_model
from qlswalk.system import build_augmented, compute_metrics
from qlswalk.walk import (
    WalkConstructionError,
    apply_walk,
    build_star_states,
    build_walk_graph,
    build_walk_operator,
    canonical_states,
    export_edge_list,
    spectral_gap_residual,
    verify_lemmas,
)
from oracles import walk_by_loops


def _example():
    return build_augmented([[1, 1, 0], [0, 1, 0], [0, 0, 1]], [-1, 0, -1])


def _pipeline(s):
    g = build_walk_graph(s)
    st_ = build_star_states(g, s)
    return g, st_, compute_metrics(s)


def test_example_edges_and_weights():
    g = build_walk_graph(_example())
    labels = [g.edge_label(e) for e in range(g.dim)]
    assert labels == ["(0, 0)", "(0, 1)", "(0, b)", "(1, 1)", "(2, 2)", "(2, b)"]
    w = {lab: float(x) for lab, x in zip(labels, g.weights)}
    assert w["(0, 0)"] == 1 and w["(1, 1)"] == 2 and w["(0, b)"] == 2
    assert list(g.col_degree) == [1, 2, 1, 2]


def test_identity_degrees():
    g = build_walk_graph(build_augmented(np.eye(2), [1, 0]))
    assert g.dim == 3
    assert np.allclose(g.row_degree, [2, 1])


def test_empty_h_rejected():
    with pytest.raises((WalkConstructionError, ValueError)):
        build_walk_graph(build_augmented(np.zeros((2, 2)), [0, 0]))


def test_row_degree_bound():
    for seed in range(20):
        s = make_random_consistent(9, 6, 0.5, seed)
        g = build_walk_graph(s)
        assert np.all(g.row_degree <= s.sparsity * s.row_sq_norms * (1 + 1e-12))


def test_star_state_signs_identity():
    s = build_augmented(np.eye(2), [1, 0])
    g, st_, _ = _pipeline(s)
    psi0 = st_.psi_state(0)
    assert np.allclose(psi0, np.array([1, -1, 0]) / np.sqrt(2))


def test_phi_b_diagonal_single_edge():
    s = diagonal_example(4).system()
    g, st_, _ = _pipeline(s)
    phi_b = st_.phi_b()
    assert np.count_nonzero(phi_b) == 1
    assert g.edge_label(int(np.argmax(phi_b))) == "(3, b)"


def test_phi_column_uniform():
    g, st_, _ = _pipeline(_example())
    phi1 = st_.phi_state(1)
    e = g.edge_index
    assert phi1[e[(0, 1)]] == pytest.approx(1 / np.sqrt(2))
    assert phi1[e[(1, 1)]] == pytest.approx(1 / np.sqrt(2))
    assert np.count_nonzero(phi1) == 2


@given(st.integers(0, 2**32 - 1))
def test_stars_match_loop_oracle(seed):
    s = make_random_consistent(7, 4, 0.6, seed)
    edges, psi, phi, u = walk_by_loops(s.h)
    g, st_, _ = _pipeline(s)
    assert [tuple(map(int, e)) for e in zip(g.edge_rows, g.edge_cols)] == edges
    assert np.allclose(st_.psi.toarray(), psi, atol=1e-13)
    assert np.allclose(st_.phi.toarray(), phi, atol=1e-13)
    assert np.allclose(build_walk_operator(st_).u, u, atol=1e-12)


def test_star_orthonormality():
    s = make_random_consistent(10, 6, 0.5, 4)
    _, st_, _ = _pipeline(s)
    psi = st_.r_active.toarray()
    phi = st_.c_active.toarray()
    assert np.allclose(psi.T @ psi, np.eye(psi.shape[1]), atol=1e-12)
    assert np.allclose(phi.T @ phi, np.eye(phi.shape[1]), atol=1e-12)


def test_overlap_formula():
    s = make_random_consistent(8, 5, 0.7, 9)
    g, st_, _ = _pipeline(s)
    k = st_.overlap
    expect = (s.h[g.active_rows][:, g.active_cols] / np.sqrt(g.row_degree[g.active_rows])[:, None]).T
    assert np.allclose(k, expect, atol=1e-13)


def test_operator_smallest():
    s = build_augmented([[1.0]], [1.0])
    _, st_, _ = _pipeline(s)
    op = build_walk_operator(st_)
    assert op.dim == 2
    assert np.linalg.norm(op.u.conj().T @ op.u - np.eye(2)) <= 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_operator_invariants(seed):
    s = make_random_consistent(6, 4, 0.7, seed)
    _, st_, _ = _pipeline(s)
    op = build_walk_operator(st_)
    assert np.linalg.norm(op.pi_a @ op.pi_a - op.pi_a) <= 1e-10
    assert np.linalg.norm(op.pi_b @ op.pi_b - op.pi_b) <= 1e-10
    assert np.linalg.norm(op.u.T @ op.u - np.eye(op.dim)) <= 1e-10
    v = np.random.default_rng(seed).standard_normal(op.dim)
    assert np.allclose(apply_walk(st_, v), op.u @ v, atol=1e-12)


def test_fixed_point_diagonal():
    s = diagonal_example(3).system()
    _, st_, m = _pipeline(s)
    theta, _ = canonical_states(st_, m)
    assert np.linalg.norm(build_walk_operator(st_).u @ theta - theta) <= 1e-10


def test_canonical_identity():
    s = build_augmented(np.eye(2), [1, 0])
    _, st_, m = _pipeline(s)
    theta, _ = canonical_states(st_, m)
    expect = (st_.phi_state(0) + st_.phi_b()) / np.sqrt(2)
    assert np.allclose(theta, expect)


def test_canonical_coefficients():
    s = make_random_consistent(8, 5, 0.6, 2)
    _, st_, m = _pipeline(s)
    theta, _ = canonical_states(st_, m)
    assert np.linalg.norm(theta) == pytest.approx(1.0)
    coeffs = st_.phi.T @ theta
    assert np.allclose(coeffs[:-1], m.y / np.sqrt(1 + m.y_norm_sq))
    assert np.allclose(coeffs[:-1] ** 2, m.y**2 / (1 + m.y_norm_sq))


def test_p_b_bound_diagonal():
    s = diagonal_example(6).system()
    _, st_, m = _pipeline(s)
    _, p_b = canonical_states(st_, m)
    assert np.linalg.norm(p_b) <= np.sqrt(s.sparsity * m.et) / (1 + m.y_norm_sq) + 1e-12


def test_lemmas_identity():
    s = build_augmented(np.eye(2), [1, 0])
    _, st_, m = _pipeline(s)
    assert verify_lemmas(st_, m, build_walk_operator(st_)).max_residual <= 1e-12


@given(st.integers(0, 2**32 - 1))
def test_lemmas_random(seed):
    s = make_random_consistent(8, 5, 0.6, seed)
    _, st_, m = _pipeline(s)
    assert verify_lemmas(st_, m).passed(1e-8)


def test_lemmas_welded():
    s = make_welded_tree(3, 0).system()
    _, st_, m = _pipeline(s)
    assert verify_lemmas(st_, m, build_walk_operator(st_)).passed(1e-8)


@pytest.mark.parametrize("seed", range(4))
def test_spectral_gap_dense(seed):
    s = make_random_consistent(8, 5, 0.6, seed)
    _, st_, m = _pipeline(s)
    op = build_walk_operator(st_)
    for d in (0.01, 0.05, 0.1, 0.5):
        model = build_phase_model(st_, d, "dense", op)
        lhs, rhs = spectral_gap_residual(st_, m, d, model.project)
        assert lhs <= rhs


def test_isolated_column_has_no_star():
    a = np.array([[1.0, 0.0], [2.0, 0.0]])
    s = build_augmented(a, [1.0, 2.0])
    g, st_, m = _pipeline(s)
    assert g.col_degree[1] == 0
    assert np.count_nonzero(st_.phi_state(1)) == 0
    assert verify_lemmas(st_, m).passed()


def test_zero_row_excluded():
    a = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]])
    s = build_augmented(a, [1.0, 0.0, 1.0])
    g, st_, m = _pipeline(s)
    assert 1 not in set(g.edge_rows.tolist())
    assert verify_lemmas(st_, m).passed()


def test_export_edge_list():
    buf = io.StringIO()
    export_edge_list(build_walk_graph(_example()), buf)
    lines = buf.getvalue().splitlines()
    assert lines[2] == "0 b 2.0" and len(lines) == 6
