"""Triangular/diagonal matrix arithmetic and the quantitative growth bounds.

Matrices hold FieldElement entries (keeping exact provenance for the
diagonals, which downstream certification consumes) and expose rectangular
snapshots as immutable row tuples at the precision current when requested.
All numeric work runs on those snapshots: mpf/mpc exponents are unbounded
integers, so products like 3^l or 2^{-k^2} at steering-scale exponents never
overflow.  Dot products sort addends by descending magnitude before
accumulating, which keeps cancellation error at the tail of the mantissa
even when terms span thousands of orders of magnitude.

The growth certificate (``growth_lambda``) and the normalized-inverse limit
(``normalized_inverse_limit``) implement explicit recursions over trailing
principal blocks; both are consumed as *bounds* by steering, so their
formulas carry short derivations in comments.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import mpmath
from mpmath import mp, mpc, mpf

from .errors import (
    DimensionMismatch,
    SpectralOrderViolation,
    StageOutOfRange,
    ZeroModulus,
)
from .scalars import Field, FieldElement

TAU_ZERO = mpf(10) ** -40  # nonzeroness tolerance for coupling columns

POW_APPLY_SEQUENTIAL_LIMIT = 32  # repeated application below, squaring above

Grid = tuple[tuple, ...]


def _coerce_element(value, field: Field) -> FieldElement:
    if isinstance(value, FieldElement):
        if value.field is not field:
            raise DimensionMismatch("entry field does not match matrix field")
        return value
    if isinstance(value, (int, Fraction, str)):
        return FieldElement.from_rational(Fraction(value), field)
    return FieldElement.from_rect(value, field)


# ---------------------------------------------------------------------------
# Grid helpers (plain tuples of mpf/mpc, full n x n with explicit zeros)


def signed_accumulate(terms) -> mpf | mpc:
    """Sum with addends ordered by descending magnitude.

    Large-to-small ordering keeps the running partial sum at the scale of
    the largest term, so each rounding error is small relative to it; with
    entries spanning huge dynamic ranges this is the difference between a
    tail-of-mantissa error and a useless result.
    """
    terms = [t for t in terms if t != 0]
    if not terms:
        return mpf(0)
    if len(terms) > 2:
        terms.sort(key=abs, reverse=True)
    total = terms[0]
    for t in terms[1:]:
        total += t
    return total


def identity_grid(n: int) -> Grid:
    return tuple(
        tuple(mpf(1) if i == j else mpf(0) for j in range(n)) for i in range(n)
    )


def mat_apply(grid: Grid, x) -> tuple:
    n = len(grid)
    if len(x) != n:
        raise DimensionMismatch(f"vector length {len(x)} vs matrix size {n}")
    return tuple(
        signed_accumulate([grid[i][j] * x[j] for j in range(n)]) for i in range(n)
    )


def mat_mul(p: Grid, q: Grid) -> Grid:
    n = len(p)
    return tuple(
        tuple(
            signed_accumulate([p[i][t] * q[t][j] for t in range(n)])
            for j in range(n)
        )
        for i in range(n)
    )


def tri_mul(p: Grid, q: Grid) -> Grid:
    """Product of two lower-triangular grids, structurally zero above."""
    n = len(p)
    return tuple(
        tuple(
            signed_accumulate([p[i][t] * q[t][j] for t in range(j, i + 1)])
            if j <= i
            else mpf(0)
            for j in range(n)
        )
        for i in range(n)
    )


def tri_pow(p: Grid, l: int) -> Grid:
    if l < 0:
        raise ValueError("tri_pow takes nonnegative exponents")
    result = identity_grid(len(p))
    base = p
    while l:
        if l & 1:
            result = tri_mul(result, base)
        l >>= 1
        if l:
            base = tri_mul(base, base)
    return result


def tri_solve(p: Grid, y) -> tuple:
    """x with p x = y for lower-triangular p (forward substitution)."""
    n = len(p)
    if len(y) != n:
        raise DimensionMismatch(f"vector length {len(y)} vs matrix size {n}")
    x: list = []
    for i in range(n):
        if p[i][i] == 0:
            raise ZeroModulus("singular triangular system")
        s = signed_accumulate([y[i]] + [-p[i][j] * x[j] for j in range(i)])
        x.append(s / p[i][i])
    return tuple(x)


def tri_inverse(p: Grid) -> Grid:
    n = len(p)
    cols = [
        tri_solve(p, tuple(mpf(1) if i == j else mpf(0) for i in range(n)))
        for j in range(n)
    ]
    return tuple(tuple(cols[j][i] for j in range(n)) for i in range(n))


def right_solve_tri(rows: tuple, p: Grid) -> tuple:
    """Rows of M p^{-1} for lower-triangular p: solve z p = m per row."""
    s = len(p)
    out = []
    for m_row in rows:
        if len(m_row) != s:
            raise DimensionMismatch("row width does not match solver size")
        z: list = [None] * s
        for j in range(s - 1, -1, -1):
            acc = signed_accumulate(
                [m_row[j]] + [-z[t] * p[t][j] for t in range(j + 1, s)]
            )
            z[j] = acc / p[j][j]
        out.append(tuple(z))
    return tuple(out)


def grid_scale(grid: Grid, c) -> Grid:
    return tuple(tuple(c * v for v in row) for row in grid)


def grid_sub(p: Grid, q: Grid) -> Grid:
    return tuple(
        tuple(a - b for a, b in zip(rp, rq)) for rp, rq in zip(p, q)
    )


def grid_norm_max(grid: Grid) -> mpf:
    return max((abs(v) for row in grid for v in row), default=mpf(0))


def vec_norm_inf(x) -> mpf:
    return max((abs(v) for v in x), default=mpf(0))


# ---------------------------------------------------------------------------
# Matrix types


@dataclass(frozen=True, eq=False)
class Diagonal:
    field: Field
    elements: tuple[FieldElement, ...]
    _rect_cache: dict = dc_field(default_factory=dict, repr=False)

    @classmethod
    def build(cls, field: Field, entries) -> "Diagonal":
        elements = tuple(_coerce_element(v, field) for v in entries)
        if not elements:
            raise DimensionMismatch("empty diagonal")
        if any(e.is_zero for e in elements):
            raise ZeroModulus("diagonal entries must be nonzero")
        return cls(field, elements)

    @property
    def n(self) -> int:
        return len(self.elements)

    def rect_diag(self) -> tuple:
        key = mp.dps
        if key not in self._rect_cache:
            self._rect_cache[key] = tuple(e.to_rect() for e in self.elements)
        return self._rect_cache[key]

    def grid(self) -> Grid:
        d = self.rect_diag()
        zero = mpf(0)
        return tuple(
            tuple(d[i] if i == j else zero for j in range(self.n))
            for i in range(self.n)
        )

    def pow_apply(self, k: int, x) -> tuple:
        if len(x) != self.n:
            raise DimensionMismatch(f"vector length {len(x)} vs diagonal size {self.n}")
        if k == 0:
            return tuple(x)
        d = self.rect_diag()
        return tuple(mpmath.power(d[i], k) * x[i] for i in range(self.n))


@dataclass(frozen=True, eq=False)
class LowerTriangular:
    field: Field
    elements: tuple[tuple[FieldElement, ...], ...]  # row i holds columns 0..i
    _rect_cache: dict = dc_field(default_factory=dict, repr=False)

    @classmethod
    def build(cls, field: Field, rows) -> "LowerTriangular":
        elements = []
        for i, row in enumerate(rows):
            row = tuple(_coerce_element(v, field) for v in row)
            if len(row) != i + 1:
                raise DimensionMismatch(
                    f"row {i} must carry {i + 1} lower-triangular entries, got {len(row)}"
                )
            elements.append(row)
        if not elements:
            raise DimensionMismatch("empty matrix")
        if any(row[-1].is_zero for row in elements):
            raise ZeroModulus("triangular diagonal entries must be nonzero")
        return cls(field, tuple(elements))

    @property
    def n(self) -> int:
        return len(self.elements)

    @property
    def diag(self) -> tuple[FieldElement, ...]:
        return tuple(row[-1] for row in self.elements)

    def element(self, i: int, j: int) -> FieldElement:
        if j > i:
            return FieldElement.zero(self.field)
        return self.elements[i][j]

    def grid(self) -> Grid:
        key = mp.dps
        if key not in self._rect_cache:
            zero = mpf(0)
            self._rect_cache[key] = tuple(
                tuple(
                    self.elements[i][j].to_rect() if j <= i else zero
                    for j in range(self.n)
                )
                for i in range(self.n)
            )
        return self._rect_cache[key]

    def apply(self, x) -> tuple:
        return mat_apply(self.grid(), x)

    def solve(self, y) -> tuple:
        return tri_solve(self.grid(), y)

    def pow_apply(self, l: int, x) -> tuple:
        if len(x) != self.n:
            raise DimensionMismatch(f"vector length {len(x)} vs matrix size {self.n}")
        if l == 0:
            return tuple(x)
        if l <= POW_APPLY_SEQUENTIAL_LIMIT:
            out = tuple(x)
            for _ in range(l):
                out = self.apply(out)
            return out
        return mat_apply(tri_pow(self.grid(), l), x)

    def inverse_pow_apply(self, l: int, x) -> tuple:
        """A^{-l} x via triangular solves (no explicit inverse for small l)."""
        if len(x) != self.n:
            raise DimensionMismatch(f"vector length {len(x)} vs matrix size {self.n}")
        if l == 0:
            return tuple(x)
        if l <= POW_APPLY_SEQUENTIAL_LIMIT:
            out = tuple(x)
            for _ in range(l):
                out = self.solve(out)
            return out
        return tri_solve(tri_pow(self.grid(), l), x)


def mat_pow_apply(matrix, l: int, x) -> tuple:
    """A^l x for triangular or diagonal A, l >= 0."""
    if l < 0:
        raise ValueError("exponent must be nonnegative")
    coerced = tuple(
        v.to_rect() if isinstance(v, FieldElement) else v for v in x
    )
    return matrix.pow_apply(l, coerced)


# ---------------------------------------------------------------------------
# The power-growth constant


@dataclass(frozen=True)
class LambdaStep:
    size: int
    lambda_sub: mpf
    first_col_sum: mpf
    gap: mpf
    value: mpf


@dataclass(frozen=True)
class BoundCertificate:
    lambda_: mpf
    trace: tuple[LambdaStep, ...]


def _require_ordered_diag(moduli) -> None:
    if moduli[0] <= 0:
        raise SpectralOrderViolation("diagonal moduli must be positive")
    for i in range(1, len(moduli)):
        if not moduli[i - 1] < moduli[i]:
            raise SpectralOrderViolation(
                f"diagonal moduli must strictly increase: "
                f"|d_{i}| = {mpmath.nstr(moduli[i - 1], 8)} !< "
                f"|d_{i + 1}| = {mpmath.nstr(moduli[i], 8)}"
            )


def growth_lambda(a: LowerTriangular) -> BoundCertificate:
    """Uniform envelope: |(A^l)_{ij}| <= lambda |A_i|^l and
    |(A^{-l})_{ij}| <= lambda |A_j|^{-l} for every l >= 1.

    Recursion over trailing principal blocks.  Writing A = [[d, 0], [w, D]]
    with lambda_D for the trailing block and b = sum(|w|):

      (A^l)_{i1}  = sum_t (D^t w)_i d^{l-1-t}, bounded by the geometric sum
                    lambda_D b |D_i|^l / (|D_i| - |d|);
      (A^{-l})_{i1} carries the mirror-image sum bounded by
                    lambda_D b |d|^{-l} / (|D_1| - |d|).

    Both are dominated by lambda_D * b / (|A_2| - |A_1|), so each level
    contributes max(1, lambda_D, b lambda_D / (|A_2| - |A_1|)).
    """
    grid = a.grid()
    moduli = [abs(e.to_rect()) for e in a.diag]
    _require_ordered_diag(moduli)
    return BoundCertificate(*_lambda_recursion(grid, moduli))


def _lambda_recursion(grid: Grid, moduli) -> tuple[mpf, tuple[LambdaStep, ...]]:
    n = len(grid)
    lam = mpf(1)
    steps = [LambdaStep(1, mpf(1), mpf(0), mpf(0), mpf(1))]
    for k in range(n - 2, -1, -1):
        size = n - k
        b = signed_accumulate([abs(grid[i][k]) for i in range(k + 1, n)])
        gap = moduli[k + 1] - moduli[k]
        value = max(mpf(1), lam, b * lam / gap)
        steps.append(LambdaStep(size, lam, b, gap, value))
        lam = value
    return lam, tuple(reversed(steps))


# ---------------------------------------------------------------------------
# The normalized-inverse limit


@dataclass(frozen=True, eq=False)
class LimitMatrix:
    f_block: Grid  # (n-1) x (n-1) lower-triangular block of A_1 A^{-1}
    h_col: tuple  # (n-1) coupling column of A_1 A^{-1}
    limit_col: tuple  # (I - F)^{-1} H
    full_limit: Grid  # n x n: first column (1, limit_col), zeros elsewhere
    rate: mpf  # geometric convergence rate |A_1 / A_2|
    growth_const: mpf  # C with ||(A_1 A^{-1})^l - full_limit||_max <= C rate^l


def normalized_inverse_limit(a: LowerTriangular) -> LimitMatrix:
    n = a.n
    moduli = [abs(e.to_rect()) for e in a.diag]
    _require_ordered_diag(moduli)
    if n == 1:
        return LimitMatrix(
            (), (), (), ((mpf(1),),), mpf(0), mpf(1)
        )
    inv = tri_inverse(a.grid())
    a1 = a.diag[0].to_rect()
    g = grid_scale(inv, a1)  # A_1 A^{-1} = [[1, 0], [H, F]]
    assert abs(g[0][0] - 1) < mpf(10) ** (-(mp.dps // 2)), "corner of A_1 A^{-1} must be 1"
    f_block = tuple(tuple(g[i][j] for j in range(1, n)) for i in range(1, n))
    h_col = tuple(g[i][0] for i in range(1, n))
    i_minus_f = grid_sub(identity_grid(n - 1), f_block)
    limit_col = tri_solve(i_minus_f, h_col)
    zero = mpf(0)
    full_limit = tuple(
        tuple(
            (mpf(1) if i == 0 else limit_col[i - 1]) if j == 0 else zero
            for j in range(n)
        )
        for i in range(n)
    )
    rate = moduli[0] / moduli[1]
    # F^l = E^{-l} for E = A_1^{-1} D (trailing block D), so the growth
    # constant of E gives |(F^l)_{ij}| <= lambda_E rate^l; the H-block
    # deviation is F^l (I-F)^{-1} H = F^l limit_col, bounded by
    # lambda_E rate^l sum|limit|.
    e_grid = tuple(
        tuple(a.grid()[i][j] / a1 for j in range(1, n)) for i in range(1, n)
    )
    e_moduli = [m / moduli[0] for m in moduli[1:]]
    lambda_e, _ = _lambda_recursion(e_grid, e_moduli)
    coupling = signed_accumulate([abs(v) for v in limit_col])
    growth_const = lambda_e * max(mpf(1), coupling)
    return LimitMatrix(f_block, h_col, limit_col, full_limit, rate, growth_const)


# ---------------------------------------------------------------------------
# Coupling column: first column of the shifted inverse


def coupling_column(a: LowerTriangular, tau=None) -> tuple[tuple, bool]:
    """First column of (A_1^{-1} A - I + Delta)^{-1}, and whether all its
    entries clear the zero tolerance.

    Solved by direct forward substitution — deliberately a different route
    from the geometric-series limit, so the two can cross-check each other.
    """
    if tau is None:
        tau = TAU_ZERO
    n = a.n
    grid = a.grid()
    a1 = a.diag[0].to_rect()
    m_rows = []
    for i in range(n):
        row = [grid[i][j] / a1 for j in range(n)]
        if i == 0:
            row[0] = mpf(1)  # 1 - 1 + 1: the Delta shift
        else:
            row[i] = row[i] - 1
            if row[i] == 0:
                raise SpectralOrderViolation(
                    "shifted diagonal vanished: A_k equals A_1"
                )
        m_rows.append(tuple(row))
    e1 = tuple(mpf(1) if i == 0 else mpf(0) for i in range(n))
    col = tri_solve(tuple(m_rows), e1)
    ok = all(abs(v) > tau for v in col)
    return col, ok


# ---------------------------------------------------------------------------
# The steering deviation block


def o_matrix(a: LowerTriangular, b: Diagonal, s: int, k: int, l: int) -> Grid:
    """Deviation block O^{k,l}: the bottom (n-s) x s of
    B^k A^l [I_s; 0] S^{-l} U^{-k}, where S, U are the leading s x s blocks
    of A and B.  The top block of that product is the identity again; this
    is asserted, not assumed.
    """
    n = a.n
    if b.n != n:
        raise DimensionMismatch("generator sizes differ")
    if not 1 <= s < n:
        raise StageOutOfRange(f"stage {s} outside 1..{n - 1}")
    if k < 0 or l < 0:
        raise ValueError("exponents must be nonnegative")
    grid = a.grid()
    a_pow = tri_pow(grid, l)
    d = b.rect_diag()
    # columns j < s of B^k A^l [I_s; 0]
    cols = []
    for j in range(s):
        col = [mpmath.power(d[i], k) * a_pow[i][j] for i in range(n)]
        cols.append(col)
    rows = tuple(tuple(cols[j][i] for j in range(s)) for i in range(n))
    s_pow = tri_pow(tuple(tuple(grid[i][j] for j in range(s)) for i in range(s)), l)
    rows = right_solve_tri(rows, s_pow)
    rows = tuple(
        tuple(rows[i][j] * mpmath.power(d[j], -k) for j in range(s))
        for i in range(n)
    )
    top_residual = grid_norm_max(
        grid_sub(tuple(rows[:s]), identity_grid(s))
    )
    scale = max(mpf(1), grid_norm_max(tuple(rows[:s])))
    assert top_residual <= scale * mpf(10) ** (-(mp.dps // 2)), (
        "embedded identity failed to cancel in the deviation block"
    )
    return tuple(rows[s:])


def o_entry_closed_form(a: LowerTriangular, b: Diagonal, s: int, k: int, l: int):
    """Independent route to (O^{k,l})_{11}:
    -(B_{s+1}/B_1)^k (A_{s+1}/A_1)^l ((A_1 A^{-1})^l)_{s+1,1}."""
    n = a.n
    if not 1 <= s < n:
        raise StageOutOfRange(f"stage {s} outside 1..{n - 1}")
    d = b.rect_diag()
    ratio_b = d[s] / d[0]
    ratio_a = a.diag[s].to_rect() / a.diag[0].to_rect()
    g = grid_scale(tri_inverse(a.grid()), a.diag[0].to_rect())
    g_pow = tri_pow(g, l)
    return -mpmath.power(ratio_b, k) * mpmath.power(ratio_a, l) * g_pow[s][0]
