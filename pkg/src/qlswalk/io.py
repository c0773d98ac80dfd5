"""Text formats: sparse triplet matrices, vectors, polynomial systems, edge lists, JSON reports."""
from __future__ import annotations

import json
import math
import re
from pathlib import Path
from typing import Iterator

import numpy as np

from .macaulay import PolynomialSystem


class ParseError(ValueError):
    def __init__(self, source: str, line: int, column: int, message: str):
        super().__init__(f"{source}:{line}:{column}: {message}")
        self.source = source
        self.line = line
        self.column = column


def _content_lines(text: str) -> Iterator[tuple[int, str]]:
    """Yield ``(line number, text)`` skipping blanks and ``#`` comments."""
    for no, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        if body.strip():
            yield no, body


def _fields(body: str) -> list[tuple[int, str]]:
    return [(m.start() + 1, m.group()) for m in re.finditer(r"\S+", body)]


def _number(tok: str, src: str, line: int, col: int, kind=float):
    try:
        v = kind(tok)
    except ValueError:
        raise ParseError(src, line, col, f"expected {'an integer' if kind is int else 'a number'}, got {tok!r}") from None
    if kind is float and not math.isfinite(v):
        raise ParseError(src, line, col, f"non-finite value {tok!r}")
    return v


def parse_matrix(text: str, source: str = "<matrix>") -> np.ndarray:
    """Header ``M N`` followed by 0-based ``i j value`` triplets."""
    lines = _content_lines(text)
    try:
        no, body = next(lines)
    except StopIteration:
        raise ParseError(source, 1, 1, "missing 'M N' header") from None
    f = _fields(body)
    if len(f) != 2:
        raise ParseError(source, no, 1, "header must be 'M N'")
    m, n = (_number(t, source, no, c, int) for c, t in f)
    if m < 1 or n < 1:
        raise ParseError(source, no, 1, "matrix dimensions must be positive")
    a = np.zeros((m, n))
    seen = set()
    for no, body in lines:
        f = _fields(body)
        if len(f) != 3:
            raise ParseError(source, no, f[0][0], "expected 'i j value'")
        i = _number(f[0][1], source, no, f[0][0], int)
        j = _number(f[1][1], source, no, f[1][0], int)
        v = _number(f[2][1], source, no, f[2][0])
        if not 0 <= i < m:
            raise ParseError(source, no, f[0][0], f"row index {i} outside 0..{m - 1}")
        if not 0 <= j < n:
            raise ParseError(source, no, f[1][0], f"column index {j} outside 0..{n - 1}")
        if (i, j) in seen:
            raise ParseError(source, no, f[0][0], f"duplicate entry ({i}, {j})")
        seen.add((i, j))
        a[i, j] = v
    return a


def parse_vector(text: str, source: str = "<vector>") -> np.ndarray:
    vals = []
    for no, body in _content_lines(text):
        f = _fields(body)
        if len(f) != 1:
            raise ParseError(source, no, f[1][0], "expected one value per line")
        vals.append(_number(f[0][1], source, no, f[0][0]))
    if not vals:
        raise ParseError(source, 1, 1, "empty vector")
    return np.array(vals)


def format_matrix(a: np.ndarray) -> str:
    rows, cols = np.nonzero(a)
    out = [f"{a.shape[0]} {a.shape[1]}"]
    out += [f"{i} {j} {float(a[i, j])!r}" for i, j in zip(rows, cols)]
    return "\n".join(out) + "\n"


def format_vector(v: np.ndarray) -> str:
    return "".join(f"{float(x)!r}\n" for x in v)


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|x(?P<var>\d+)|(?P<op>[-+*=]))"
)


def _parse_poly_line(body: str, src: str, line: int) -> tuple[list, int]:
    """Parse one ``sum of terms = number`` line into ``(coef, 0-based vars)`` terms."""
    toks = []
    pos = 0
    while pos < len(body):
        if body[pos:].strip() == "":
            break
        m = _TOKEN.match(body, pos)
        if not m:
            col = pos + 1 + (len(body[pos:]) - len(body[pos:].lstrip()))
            raise ParseError(src, line, col, f"unexpected character {body[col - 1]!r}")
        kind = m.lastgroup
        # report variables at their leading 'x'
        start = m.start(kind) - (kind == "var")
        toks.append((kind, m.group(kind), start + 1))
        pos = m.end()
    terms: list = []
    max_var = 0
    i = 0

    def peek():
        return toks[i] if i < len(toks) else ("end", "", len(body) + 1)

    def parse_term(sign: float):
        nonlocal i, max_var
        coef, vars_ = sign, []
        while True:
            kind, val, col = peek()
            if kind == "num":
                coef *= float(val)
            elif kind == "var":
                k = int(val)
                if k < 1:
                    raise ParseError(src, line, col, "variables are numbered from x1")
                vars_.append(k - 1)
                max_var = max(max_var, k)
            else:
                raise ParseError(src, line, col, f"expected a coefficient or variable, got {val or 'end of line'!r}")
            i += 1
            if peek()[1] == "*":
                i += 1
                continue
            return coef, vars_

    sign = 1.0
    if peek()[1] in "+-" and peek()[0] == "op":
        sign = -1.0 if peek()[1] == "-" else 1.0
        i += 1
    lhs = [parse_term(sign)]
    while True:
        kind, val, col = peek()
        if kind == "op" and val in "+-":
            i += 1
            lhs.append(parse_term(-1.0 if val == "-" else 1.0))
        elif kind == "op" and val == "=":
            i += 1
            break
        else:
            raise ParseError(src, line, col, f"expected '+', '-' or '=', got {val or 'end of line'!r}")
    rsign = 1.0
    if peek()[1] in "+-" and peek()[0] == "op":
        rsign = -1.0 if peek()[1] == "-" else 1.0
        i += 1
    kind, val, col = peek()
    if kind != "num":
        raise ParseError(src, line, col, "right-hand side must be a number")
    rhs = rsign * float(val)
    i += 1
    if i < len(toks):
        raise ParseError(src, line, toks[i][2], f"trailing input {toks[i][1]!r}")
    for coef, vars_ in lhs:
        if len(set(vars_)) > 2:
            raise ParseError(src, line, 1, "monomial of degree greater than 2")
        terms.append((coef, vars_))
    if rhs:
        terms.append((-rhs, []))
    return terms, max_var


def parse_polynomials(text: str, source: str = "<polynomials>", n: int | None = None) -> PolynomialSystem:
    """One polynomial per line, e.g. ``2*x1*x2 - x3 + 1 = 0``; variables are 1-based."""
    polys, top = [], 0
    for no, body in _content_lines(text):
        terms, mv = _parse_poly_line(body, source, no)
        polys.append(terms)
        top = max(top, mv)
    if not polys:
        raise ParseError(source, 1, 1, "no polynomials")
    if n is not None and n < top:
        raise ParseError(source, 1, 1, f"x{top} used but only {n} variables declared")
    return PolynomialSystem.from_terms(n if n is not None else top, polys)


def parse_edge_list(text: str, source: str = "<graph>") -> tuple[int, list[tuple[int, int]]]:
    """Header with the vertex count, then 0-based ``i j`` lines."""
    lines = _content_lines(text)
    try:
        no, body = next(lines)
    except StopIteration:
        raise ParseError(source, 1, 1, "missing vertex-count header") from None
    f = _fields(body)
    if len(f) != 1:
        raise ParseError(source, no, 1, "header must be the vertex count")
    n = _number(f[0][1], source, no, f[0][0], int)
    edges = []
    for no, body in lines:
        f = _fields(body)
        if len(f) != 2:
            raise ParseError(source, no, f[0][0], "expected 'i j'")
        i, j = (_number(t, source, no, c, int) for c, t in f)
        for (c, _), v in zip(f, (i, j)):
            if not 0 <= v < n:
                raise ParseError(source, no, c, f"vertex {v} outside 0..{n - 1}")
        if i == j:
            raise ParseError(source, no, f[0][0], "self-loop")
        edges.append((i, j))
    return n, edges


def format_edge_list(n: int, edges) -> str:
    return f"{n}\n" + "".join(f"{i} {j}\n" for i, j in edges)


def read_text(path: str | Path) -> str:
    return Path(path).read_text()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dump_report(report: dict) -> str:
    """Deterministic JSON: sorted keys, fixed indentation, non-finite numbers as null."""
    return json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"
