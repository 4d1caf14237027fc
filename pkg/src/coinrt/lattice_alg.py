"""Exact integer linear algebra.

Everything here works on Python ints and :class:`fractions.Fraction`, so no
entry can overflow or round.  Matrices are immutable :class:`IntMatrix`
values; vectors are plain tuples.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import floor, prod
from typing import Iterator, Sequence

Vector = tuple


class IntMatrix:
    """Immutable dense integer matrix."""

    __slots__ = ("_rows", "nrows", "ncols")

    def __init__(self, rows: Sequence[Sequence[int]], ncols: int | None = None):
        data = tuple(tuple(int(x) for x in r) for r in rows)
        if ncols is None:
            ncols = len(data[0]) if data else 0
        for r in data:
            if len(r) != ncols:
                raise ValueError("ragged matrix rows")
        self._rows = data
        self.nrows = len(data)
        self.ncols = ncols

    @classmethod
    def identity(cls, n: int) -> IntMatrix:
        return cls([[int(i == j) for j in range(n)] for i in range(n)], n)

    @classmethod
    def zeros(cls, m: int, n: int) -> IntMatrix:
        return cls([[0] * n for _ in range(m)], n)

    @classmethod
    def diag(cls, entries: Sequence[int]) -> IntMatrix:
        n = len(entries)
        return cls([[entries[i] if i == j else 0 for j in range(n)] for i in range(n)], n)

    @classmethod
    def from_columns(cls, cols: Sequence[Sequence[int]]) -> IntMatrix:
        return cls(list(zip(*cols))) if cols else cls([])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    @property
    def is_square(self) -> bool:
        return self.nrows == self.ncols

    def rows(self) -> tuple[tuple[int, ...], ...]:
        return self._rows

    def row(self, i: int) -> tuple[int, ...]:
        return self._rows[i]

    def col(self, j: int) -> tuple[int, ...]:
        return tuple(r[j] for r in self._rows)

    def tolist(self) -> list[list[int]]:
        return [list(r) for r in self._rows]

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        return self._rows[i][j]

    @property
    def T(self) -> IntMatrix:
        return IntMatrix([self.col(j) for j in range(self.ncols)], self.nrows)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, IntMatrix) and self.shape == other.shape and self._rows == other._rows

    def __hash__(self) -> int:
        return hash(self._rows)

    def __repr__(self) -> str:
        return f"IntMatrix({self.tolist()})"

    def __add__(self, other: IntMatrix) -> IntMatrix:
        self._same_shape(other)
        return IntMatrix([[a + b for a, b in zip(r, s)] for r, s in zip(self._rows, other._rows)], self.ncols)

    def __sub__(self, other: IntMatrix) -> IntMatrix:
        self._same_shape(other)
        return IntMatrix([[a - b for a, b in zip(r, s)] for r, s in zip(self._rows, other._rows)], self.ncols)

    def __neg__(self) -> IntMatrix:
        return IntMatrix([[-a for a in r] for r in self._rows], self.ncols)

    def scale(self, k: int) -> IntMatrix:
        return IntMatrix([[k * a for a in r] for r in self._rows], self.ncols)

    def __matmul__(self, other):
        if isinstance(other, IntMatrix):
            if self.ncols != other.nrows:
                raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
            cols = [other.col(j) for j in range(other.ncols)]
            return IntMatrix([[sum(a * b for a, b in zip(r, c)) for c in cols] for r in self._rows], other.ncols)
        return self.apply(other)

    def apply(self, v: Sequence) -> tuple:
        """Matrix-vector product; ``v`` may hold ints or Fractions."""
        if len(v) != self.ncols:
            raise ValueError(f"vector length {len(v)} does not match {self.ncols} columns")
        return tuple(sum(a * x for a, x in zip(r, v)) for r in self._rows)

    def _same_shape(self, other: IntMatrix) -> None:
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")


def as_matrix(M) -> IntMatrix:
    return M if isinstance(M, IntMatrix) else IntMatrix(M)


def det(M) -> int:
    """Exact determinant by fraction-free (Bareiss) elimination."""
    M = as_matrix(M)
    if not M.is_square:
        raise ValueError(f"determinant of non-square {M.shape} matrix")
    n = M.nrows
    if n == 0:
        return 1
    a = M.tolist()
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


# ---------------------------------------------------------------------------
# Smith normal form


@dataclass(frozen=True)
class SmithDecomposition:
    U: IntMatrix
    D: IntMatrix
    V: IntMatrix

    @property
    def diagonal(self) -> tuple[int, ...]:
        return tuple(self.D[i, i] for i in range(min(self.D.shape)))


def _swap_rows(a, i, j):
    a[i], a[j] = a[j], a[i]


def _swap_cols(a, i, j):
    for r in a:
        r[i], r[j] = r[j], r[i]


def _add_row(a, src, dst, k):
    # row[dst] += k * row[src]
    rs, rd = a[src], a[dst]
    for c in range(len(rd)):
        rd[c] += k * rs[c]


def _add_col(a, src, dst, k):
    for r in a:
        r[dst] += k * r[src]


def smith_normal_form(M) -> SmithDecomposition:
    """Return unimodular ``U, V`` and diagonal ``D`` with ``U @ M @ V == D``.

    Pivots are always the nonzero entry of least absolute value in the active
    block, ties broken row-major, so the output is a function of the input.
    """
    M = as_matrix(M)
    m, n = M.shape
    a = M.tolist()
    u = IntMatrix.identity(m).tolist()
    v = IntMatrix.identity(n).tolist()

    for t in range(min(m, n)):
        while True:
            best = None
            for i in range(t, m):
                for j in range(t, n):
                    x = a[i][j]
                    if x and (best is None or abs(x) < best[0]):
                        best = (abs(x), i, j)
            if best is None:
                break
            _, pi, pj = best
            if pi != t:
                _swap_rows(a, pi, t)
                _swap_rows(u, pi, t)
            if pj != t:
                _swap_cols(a, pj, t)
                _swap_cols(v, pj, t)
            p = a[t][t]
            dirty = False
            for i in range(t + 1, m):
                if a[i][t]:
                    q = a[i][t] // p
                    _add_row(a, t, i, -q)
                    _add_row(u, t, i, -q)
                    dirty |= a[i][t] != 0
            for j in range(t + 1, n):
                if a[t][j]:
                    q = a[t][j] // p
                    _add_col(a, t, j, -q)
                    _add_col(v, t, j, -q)
                    dirty |= a[t][j] != 0
            if dirty:
                continue
            bad = next(
                (i for i in range(t + 1, m) for j in range(t + 1, n) if a[i][j] % p),
                None,
            )
            if bad is None:
                break
            _add_row(a, bad, t, 1)
            _add_row(u, bad, t, 1)
        if t < m and t < n and a[t][t] < 0:
            # flip the column so U, and with it the cokernel coordinates, keeps its orientation
            for r in a:
                r[t] = -r[t]
            for r in v:
                r[t] = -r[t]
    return SmithDecomposition(IntMatrix(u, m), IntMatrix(a, n), IntMatrix(v, n))


def unimodular_inverse(U: IntMatrix) -> IntMatrix:
    inv = rational_inverse(U)
    rows = []
    for r in inv:
        if any(x.denominator != 1 for x in r):
            raise ValueError("matrix is not unimodular")
        rows.append([int(x) for x in r])
    return IntMatrix(rows, U.ncols)


# ---------------------------------------------------------------------------
# Cokernels


@dataclass(frozen=True)
class AbelianQuotient:
    """The group Z^m / M Z^n, described through a Smith decomposition of M.

    ``canonical`` reduces a vector componentwise modulo the invariant factors
    in Smith coordinates and maps it back; two vectors are equivalent iff they
    have the same canonical form.
    """

    smith: SmithDecomposition
    U_inv: IntMatrix

    @property
    def ambient_dim(self) -> int:
        return self.smith.U.nrows

    @property
    def moduli(self) -> tuple[int, ...]:
        """Modulus per Smith coordinate; 0 marks a free coordinate, 1 a trivial one."""
        d = self.smith.diagonal
        return tuple(d[i] if i < len(d) else 0 for i in range(self.ambient_dim))

    @property
    def invariant_factors(self) -> tuple[int, ...]:
        return tuple(d for d in self.moduli if d >= 2)

    @property
    def free_rank(self) -> int:
        return sum(1 for d in self.moduli if d == 0)

    @property
    def is_finite(self) -> bool:
        return self.free_rank == 0

    @property
    def order(self) -> int | None:
        return prod(self.invariant_factors) if self.is_finite else None

    def smith_coords(self, v: Sequence[int]) -> tuple[int, ...]:
        return self.smith.U.apply(v)

    def canonical_smith(self, v: Sequence[int]) -> tuple[int, ...]:
        z = self.smith_coords(v)
        return tuple(x % d if d else x for x, d in zip(z, self.moduli))

    def canonical(self, v: Sequence[int]) -> tuple[int, ...]:
        return self.U_inv.apply(self.canonical_smith(v))

    def equivalent(self, v: Sequence[int], w: Sequence[int]) -> bool:
        return self.canonical_smith(v) == self.canonical_smith(w)

    def contains(self, v: Sequence) -> bool:
        """True when ``v`` (possibly rational) lies in the image lattice M Z^n."""
        z = self.smith_coords(v)
        for x, d in zip(z, self.moduli):
            if d == 0:
                if x != 0:
                    return False
            elif (Fraction(x) / d).denominator != 1:
                return False
        return True

    def representatives(self) -> Iterator[tuple[int, ...]]:
        """Canonical coset representatives, ordered by Smith coordinates."""
        if not self.is_finite:
            raise ValueError("cokernel is infinite; no finite enumerator")
        ranges = [range(d) for d in self.moduli]
        for z in itertools.product(*ranges):
            yield self.U_inv.apply(z)


def cokernel(M) -> AbelianQuotient:
    M = as_matrix(M)
    s = smith_normal_form(M)
    return AbelianQuotient(s, unimodular_inverse(s.U))


# ---------------------------------------------------------------------------
# Hermite normal form


def hermite_normal_form(M) -> tuple[IntMatrix, IntMatrix]:
    """Row-style Hermite form: unimodular ``U`` with ``U @ M == H``.

    ``H`` is in row echelon form with positive pivots and the entries above
    each pivot reduced into ``[0, pivot)``.
    """
    M = as_matrix(M)
    m, n = M.shape
    a = M.tolist()
    u = IntMatrix.identity(m).tolist()
    r = 0
    for c in range(n):
        if r >= m:
            break
        while True:
            nz = [i for i in range(r, m) if a[i][c]]
            if not nz:
                break
            piv = min(nz, key=lambda i: (abs(a[i][c]), i))
            if piv != r:
                _swap_rows(a, piv, r)
                _swap_rows(u, piv, r)
            done = True
            for i in range(r + 1, m):
                if a[i][c]:
                    q = a[i][c] // a[r][c]
                    _add_row(a, r, i, -q)
                    _add_row(u, r, i, -q)
                    done &= a[i][c] == 0
            if done:
                break
        if a[r][c] == 0:
            continue
        if a[r][c] < 0:
            a[r] = [-x for x in a[r]]
            u[r] = [-x for x in u[r]]
        for i in range(r):
            q = a[i][c] // a[r][c]
            if q:
                _add_row(a, r, i, -q)
                _add_row(u, r, i, -q)
        r += 1
    return IntMatrix(a, n), IntMatrix(u, m)


def hnf_pivots(H: IntMatrix) -> list[tuple[int, int]]:
    """(row, column) of each pivot of an echelon matrix."""
    out = []
    for i, r in enumerate(H.rows()):
        j = next((j for j, x in enumerate(r) if x), None)
        if j is not None:
            out.append((i, j))
    return out


def reduce_mod_hnf(H: IntMatrix, v: Sequence) -> tuple:
    """Reduce ``v`` modulo the row lattice of a full-rank Hermite matrix ``H``.

    The result lies in the half-open box ``0 <= v[p] < H[p, p]`` over the pivot
    columns; ``v`` may be rational.
    """
    out = list(v)
    integral = all(isinstance(x, int) for x in out)
    for i, j in hnf_pivots(H):
        q = out[j] // H[i, j] if integral else floor(Fraction(out[j]) / H[i, j])
        if q:
            row = H.row(i)
            out = [x - q * y for x, y in zip(out, row)]
    return tuple(out)


def hnf_lattice_points(H: IntMatrix, ranges: Sequence[range]) -> Iterator[tuple[int, ...]]:
    """Points of the row lattice of a square full-rank Hermite matrix inside a box of ranges."""
    n = H.ncols
    if H.nrows != n or any(H[i, i] <= 0 for i in range(n)):
        raise ValueError("need a square Hermite basis with positive diagonal")

    def walk(j: int, partial: list[int]):
        if j == n:
            yield tuple(partial)
            return
        # coordinate j is partial[j] + z_j H[j, j]; earlier rows already fixed partial
        base = partial[j]
        r = ranges[j]
        step = H[j, j]
        lo = -((base - r.start) // step)
        for z in range(lo, (r.stop - 1 - base) // step + 1):
            nxt = list(partial)
            for k in range(j, n):
                nxt[k] += z * H[j, k]
            yield from walk(j + 1, nxt)

    yield from walk(0, [0] * n)


# ---------------------------------------------------------------------------
# Rational linear systems


def _frac_matrix(M) -> list[list[Fraction]]:
    if isinstance(M, IntMatrix):
        return [[Fraction(x) for x in r] for r in M.rows()]
    return [[Fraction(x) for x in r] for r in M]


def rational_inverse(M) -> list[list[Fraction]]:
    a = _frac_matrix(M)
    n = len(a)
    if any(len(r) != n for r in a):
        raise ValueError("inverse of non-square matrix")
    aug = [r + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(a)]
    for c in range(n):
        piv = next((i for i in range(c, n) if aug[i][c] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        aug[c], aug[piv] = aug[piv], aug[c]
        pv = aug[c][c]
        aug[c] = [x / pv for x in aug[c]]
        for i in range(n):
            if i != c and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[c])]
    return [r[n:] for r in aug]


def mat_vec(M, v) -> tuple:
    rows = M.rows() if isinstance(M, IntMatrix) else M
    return tuple(sum(a * x for a, x in zip(r, v)) for r in rows)


def solve_rational(M, b: Sequence) -> tuple[Fraction, ...]:
    """Unique solution of a nonsingular square system."""
    return tuple(Fraction(x) for x in mat_vec(rational_inverse(M), b))


@dataclass(frozen=True)
class AffineSolution:
    particular: tuple[Fraction, ...]
    kernel_basis: tuple[tuple[int, ...], ...]


def solve_affine_lattice(M, b: Sequence) -> AffineSolution | None:
    """All real solutions of ``M x = b``, or None when inconsistent.

    The particular solution is exact; the kernel basis is an integer basis of
    the integer kernel of ``M``.
    """
    M = as_matrix(M)
    m, n = M.shape
    aug = [[Fraction(x) for x in r] + [Fraction(bi)] for r, bi in zip(M.rows(), b)]
    pivots = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, m) if aug[i][c] != 0), None)
        if piv is None:
            continue
        aug[r], aug[piv] = aug[piv], aug[r]
        pv = aug[r][c]
        aug[r] = [x / pv for x in aug[r]]
        for i in range(m):
            if i != r and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[r])]
        pivots.append(c)
        r += 1
        if r == m:
            break
    for i in range(r, m):
        if aug[i][n] != 0:
            return None
    x = [Fraction(0)] * n
    for i, c in enumerate(pivots):
        x[c] = aug[i][n]
    return AffineSolution(tuple(x), integer_kernel(M))


def integer_kernel(M) -> tuple[tuple[int, ...], ...]:
    """Integer basis of {x in Z^n : M x = 0}."""
    M = as_matrix(M)
    H, U = hermite_normal_form(M.T)
    return tuple(U.row(i) for i in range(H.nrows) if not any(H.row(i)))


def frac_str(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def lattice_basis(gens: Sequence[Sequence[int]], dim: int) -> IntMatrix:
    """Echelon (Hermite) basis, as rows, of the lattice spanned by ``gens``."""
    if not gens:
        return IntMatrix([], dim)
    H, _ = hermite_normal_form(IntMatrix(gens, dim))
    return IntMatrix([r for r in H.rows() if any(r)], dim)


def column_lattice(M) -> IntMatrix:
    """Echelon basis of M Z^n, the lattice spanned by the columns of ``M``."""
    M = as_matrix(M)
    return lattice_basis(M.T.rows(), M.nrows)


def integer_solve(M, b: Sequence[int]) -> tuple[tuple[int, ...], tuple[tuple[int, ...], ...]] | None:
    """An integer solution of ``M x = b`` and a basis of the integer kernel, or None."""
    M = as_matrix(M)
    s = smith_normal_form(M)
    c = s.U.apply(b)
    d = s.diagonal
    y = []
    for i in range(M.ncols):
        di = d[i] if i < len(d) else 0
        ci = c[i] if i < len(c) else 0
        if di == 0:
            if ci != 0:
                return None
            y.append(0)
        elif ci % di:
            return None
        else:
            y.append(ci // di)
    if any(c[i] for i in range(M.ncols, len(c))):
        return None
    return s.V.apply(y), integer_kernel(M)
