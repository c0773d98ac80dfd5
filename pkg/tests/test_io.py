import json

import numpy as np
import pytest

from qlswalk.io import (
    ParseError,
    dump_report,
    format_edge_list,
    format_matrix,
    format_vector,
    parse_edge_list,
    parse_matrix,
    parse_polynomials,
    parse_vector,
)
from qlswalk.macaulay import sum_system


def test_matrix_round_trip():
    a = np.array([[1.5, 0.0], [0.0, -2e-3], [3.0, 4.0]])
    assert np.array_equal(parse_matrix(format_matrix(a)), a)


def test_matrix_comments_and_scientific():
    a = parse_matrix("# header\n2 2\n0 0 1e-3  # inline\n\n1 1 -2.5E+1\n")
    assert a[0, 0] == 1e-3 and a[1, 1] == -25.0


@pytest.mark.parametrize(
    "text,line,col",
    [
        ("", 1, 1),
        ("2\n", 1, 1),
        ("2 2\n0 0\n", 2, 1),
        ("2 2\n0 5 1.0\n", 2, 3),
        ("2 2\n0 0 abc\n", 2, 5),
        ("2 2\n0 0 1\n0 0 2\n", 3, 1),
        ("2 2\n0 0 nan\n", 2, 5),
    ],
)
def test_matrix_errors(text, line, col):
    with pytest.raises(ParseError) as info:
        parse_matrix(text, "m.txt")
    assert (info.value.line, info.value.column) == (line, col)
    assert str(info.value).startswith(f"m.txt:{line}:{col}:")


def test_vector_round_trip_and_errors():
    v = np.array([0.1, -3.0, 2e10])
    assert np.array_equal(parse_vector(format_vector(v)), v)
    with pytest.raises(ParseError):
        parse_vector("")
    with pytest.raises(ParseError) as info:
        parse_vector("1\n2 3\n")
    assert info.value.line == 2 and info.value.column == 3


def test_polynomials_sum_system():
    F = parse_polynomials("x1 + x2 + x3 + x4 = 4\n")
    assert F == sum_system(4)


def test_polynomials_products_and_signs():
    F = parse_polynomials("-2*x1*x2 + 3 * x3 - x1*x1 = -1\n")
    assert F.n == 3
    assert F.evaluate([1, 1, 0])[0] == pytest.approx(-2 - 1 + 1)


def test_polynomials_declared_vars():
    assert parse_polynomials("x1 = 1", n=5).n == 5
    with pytest.raises(ParseError):
        parse_polynomials("x3 = 1", n=2)


@pytest.mark.parametrize(
    "text,col",
    [("x1 + = 0", 6), ("x1 + x2", 8), ("x1 ^ 2 = 0", 4), ("x1*x2*x3 = 0", 1), ("x0 = 1", 1), ("x1 = x2", 6)],
)
def test_polynomial_errors(text, col):
    with pytest.raises(ParseError) as info:
        parse_polynomials("x1 = 1\n" + text)
    assert info.value.line == 2 and info.value.column == col


def test_edge_list():
    n, edges = parse_edge_list(format_edge_list(3, [(0, 1), (1, 2)]))
    assert n == 3 and edges == [(0, 1), (1, 2)]
    with pytest.raises(ParseError):
        parse_edge_list("3\n0 0\n")
    with pytest.raises(ParseError):
        parse_edge_list("3\n0 3\n")


def test_dump_report_deterministic():
    rep = {"b": np.float64(np.inf), "a": np.arange(3), "c": {"z": np.bool_(True)}}
    text = dump_report(rep)
    assert text == dump_report(rep)
    assert json.loads(text) == {"a": [0, 1, 2], "b": None, "c": {"z": True}}
    assert text.index('"a"') < text.index('"b"')
