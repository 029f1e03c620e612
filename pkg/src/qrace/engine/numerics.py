"""Numeric helpers shared by the solvers.

Everything here is generic over ``float`` and ``fractions.Fraction`` so the
closed-form solvers can run unchanged in exact-rational self-check mode.
"""

from __future__ import annotations

from collections.abc import Sequence
from fractions import Fraction
from numbers import Real

import numpy as np

from qrace.engine.errors import SingularSystemError

Number = float | Fraction


class KahanSum:
    """Running sum with Kahan error compensation.

    With ``Fraction`` inputs the carry stays zero and the sum is exact.
    """

    def __init__(self, start: Number = 0) -> None:
        self.total: Number = start
        self._carry: Number = 0

    def add(self, value: Number) -> Number:
        value = value - self._carry
        previous = self.total
        self.total = previous + value
        self._carry = (self.total - previous) - value
        return self.total

    def __float__(self) -> float:
        return float(self.total)


def is_exact(values: Sequence[Real]) -> bool:
    """True when every value is a ``Fraction`` (or an int)."""
    return all(isinstance(v, (Fraction, int)) and not isinstance(v, bool) for v in values)


def json_number(value: Number | int) -> float | int | str:
    """JSON-safe form: exact fractions as ``"p/q"`` strings, integers as ints."""
    if isinstance(value, Fraction):
        return str(value) if value.denominator != 1 else int(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    return float(value)


def index_set(start: int, stop: int) -> list[int]:
    """Times start, start+2, ..., up to stop (inclusive); empty when start > stop."""
    if start > stop:
        return []
    return list(range(start, stop + 1, 2))


def solve_linear(matrix: Sequence[Sequence[Number]], rhs: Sequence[Number]) -> list[Number]:
    """Solve a square linear system.

    Exact inputs (``Fraction`` or int) are eliminated in rational arithmetic;
    anything else goes through ``np.linalg.solve``. Raises
    ``SingularSystemError`` when the system has no unique solution.
    """
    n = len(matrix)
    if any(len(row) != n for row in matrix) or len(rhs) != n:
        raise ValueError("solve_linear needs a square system")
    if all(is_exact(row) for row in matrix) and is_exact(rhs):
        return _solve_exact(matrix, rhs)

    try:
        solution = np.linalg.solve(
            np.asarray(matrix, dtype=np.float64), np.asarray(rhs, dtype=np.float64)
        )
    except np.linalg.LinAlgError as e:
        raise SingularSystemError(str(e)) from e
    if not np.all(np.isfinite(solution)):
        raise SingularSystemError("non-finite solution")
    return [float(v) for v in solution]


def _solve_exact(matrix: Sequence[Sequence[Number]], rhs: Sequence[Number]) -> list[Fraction]:
    n = len(matrix)
    m = [[Fraction(v) for v in row] + [Fraction(rhs[i])] for i, row in enumerate(matrix)]

    for col in range(n):
        pivot_row = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot_row is None:
            raise SingularSystemError(f"zero pivot in column {col}")
        if pivot_row != col:
            m[col], m[pivot_row] = m[pivot_row], m[col]
        pivot = m[col][col]
        for r in range(col + 1, n):
            factor = m[r][col] / pivot
            if factor == 0:
                continue
            for c in range(col, n + 1):
                m[r][c] -= factor * m[col][c]

    solution = [Fraction(0)] * n
    for r in range(n - 1, -1, -1):
        acc = m[r][n]
        for c in range(r + 1, n):
            acc -= m[r][c] * solution[c]
        solution[r] = acc / m[r][r]
    return solution
