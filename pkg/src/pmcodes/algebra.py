"""Prime-field arithmetic, exact dense matrices and encoding-matrix builders.

Scalars live in :class:`PrimeField` / :class:`Fe`; small exact matrices in
:class:`Matrix`.  Bulk data (many stripes at once) is handled as ``int64``
numpy arrays with :func:`mod_matmul`; the modulus is capped below ``2**31``
so a single product fits in 63 bits and is reduced before accumulation.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import isqrt
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    DivisionByZero,
    FieldMismatch,
    FieldTooSmall,
    InvalidParams,
    SingularSystem,
)

MAX_MODULUS = 2**31


def is_prime(q: int) -> bool:
    if q < 2:
        return False
    if q % 2 == 0:
        return q == 2
    for f in range(3, isqrt(q) + 1, 2):
        if q % f == 0:
            return False
    return True


@dataclass(frozen=True)
class PrimeField:
    """GF(q) for a prime ``q < 2**31``."""

    q: int

    def __post_init__(self):
        if not isinstance(self.q, int) or not 2 <= self.q < MAX_MODULUS:
            raise InvalidParams(f"modulus must be an integer in [2, 2**31), got {self.q!r}")
        if not is_prime(self.q):
            raise InvalidParams(f"modulus {self.q} is not prime")

    def __call__(self, value) -> Fe:
        if isinstance(value, Fe):
            if value.field != self:
                raise FieldMismatch(f"element of GF({value.field.q}) used in GF({self.q})")
            return value
        return Fe(int(value) % self.q, self)

    def __repr__(self):
        return f"GF({self.q})"

    # integer-level helpers; inputs are reduced first
    def add(self, a: int, b: int) -> int:
        return (a + b) % self.q

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.q

    def mul(self, a: int, b: int) -> int:
        return (a * b) % self.q

    def neg(self, a: int) -> int:
        return -a % self.q

    def inv(self, a: int) -> int:
        a %= self.q
        if a == 0:
            raise DivisionByZero(f"zero has no inverse in GF({self.q})")
        return pow(a, self.q - 2, self.q)

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def pow(self, a: int, e: int) -> int:
        if e < 0:
            return pow(self.inv(a), -e, self.q)
        return pow(a % self.q, e, self.q)

    def random(self, rng: np.random.Generator, size=None) -> np.ndarray:
        return rng.integers(0, self.q, size=size, dtype=np.int64)

    def elements(self) -> range:
        return range(self.q)


class Fe:
    """An element of a :class:`PrimeField`.  Immutable."""

    __slots__ = ("value", "field")

    def __init__(self, value: int, field: PrimeField):
        object.__setattr__(self, "value", int(value) % field.q)
        object.__setattr__(self, "field", field)

    def __setattr__(self, name, value):
        raise AttributeError("Fe is immutable")

    def _coerce(self, other) -> int:
        if isinstance(other, Fe):
            if other.field != self.field:
                raise FieldMismatch(f"GF({self.field.q}) vs GF({other.field.q})")
            return other.value
        if isinstance(other, (int, np.integer)):
            return int(other) % self.field.q
        return NotImplemented

    def _wrap(self, v: int) -> Fe:
        return Fe(v, self.field)

    def __add__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else self._wrap(self.value + o)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else self._wrap(self.value - o)

    def __rsub__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else self._wrap(o - self.value)

    def __mul__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else self._wrap(self.value * o)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self._wrap(self.field.div(self.value, o))

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self._wrap(self.field.div(o, self.value))

    def __neg__(self):
        return self._wrap(-self.value)

    def __pow__(self, e: int):
        return self._wrap(self.field.pow(self.value, e))

    def inv(self) -> Fe:
        return self._wrap(self.field.inv(self.value))

    def __eq__(self, other):
        if isinstance(other, Fe):
            return self.field == other.field and self.value == other.value
        if isinstance(other, (int, np.integer)):
            return self.value == int(other) % self.field.q
        return NotImplemented

    def __hash__(self):
        return hash((self.value, self.field.q))

    def __int__(self):
        return self.value

    __index__ = __int__

    def __repr__(self):
        return f"{self.value} (mod {self.field.q})"


# --------------------------------------------------------------------------
# exact matrices


class Matrix:
    """Dense immutable matrix over a prime field, stored as reduced ints."""

    __slots__ = ("field", "rows", "cols", "_data")

    def __init__(self, field: PrimeField, rows: Iterable[Iterable]):
        data = []
        for r in rows:
            data.append(tuple(_as_int(v, field) for v in r))
        width = len(data[0]) if data else 0
        if any(len(r) != width for r in data):
            raise DimensionMismatch("ragged rows")
        self.field = field
        self.rows = len(data)
        self.cols = width
        self._data = tuple(data)

    @classmethod
    def identity(cls, field: PrimeField, n: int) -> Matrix:
        return cls(field, ([int(i == j) for j in range(n)] for i in range(n)))

    @classmethod
    def zeros(cls, field: PrimeField, rows: int, cols: int) -> Matrix:
        return cls(field, ([0] * cols for _ in range(rows)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def __getitem__(self, idx):
        i, j = idx
        return self._data[i][j]

    def row(self, i: int) -> tuple[int, ...]:
        return self._data[i]

    def col(self, j: int) -> tuple[int, ...]:
        return tuple(r[j] for r in self._data)

    def tolist(self) -> list[list[int]]:
        return [list(r) for r in self._data]

    def to_numpy(self) -> np.ndarray:
        return np.array(self._data, dtype=np.int64).reshape(self.rows, self.cols)

    def take_rows(self, idx: Sequence[int]) -> Matrix:
        return Matrix(self.field, (self._data[i] for i in idx))

    def take_cols(self, idx: Sequence[int]) -> Matrix:
        return Matrix(self.field, ([r[j] for j in idx] for r in self._data))

    @property
    def T(self) -> Matrix:
        return Matrix(self.field, zip(*self._data)) if self.rows else Matrix(self.field, [])

    def __matmul__(self, other):
        return mat_mul(self, other)

    def __eq__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.field == other.field and self._data == other._data

    def __hash__(self):
        return hash((self.field.q, self._data))

    def __repr__(self):
        body = ", ".join(str(list(r)) for r in self._data)
        return f"Matrix[GF({self.field.q})]({body})"

    def rank(self) -> int:
        return mat_rank(self)

    def solve(self, y) -> tuple[int, ...]:
        return mat_solve(self, y)

    def inverse(self) -> Matrix:
        if self.rows != self.cols:
            raise DimensionMismatch("only square matrices are invertible")
        n = self.rows
        q = self.field.q
        aug = [list(r) + [int(i == j) for j in range(n)] for i, r in enumerate(self._data)]
        pivots = _row_reduce(aug, q, ncols=n)
        if len(pivots) < n:
            raise SingularSystem("matrix is singular")
        return Matrix(self.field, (r[n:] for r in aug[:n]))

    def is_nonsingular(self) -> bool:
        return self.rows == self.cols and mat_rank(self) == self.rows


def _as_int(v, field: PrimeField) -> int:
    if isinstance(v, Fe):
        if v.field != field:
            raise FieldMismatch(f"GF({v.field.q}) element in GF({field.q}) matrix")
        return v.value
    return int(v) % field.q


def _row_reduce(rows: list[list[int]], q: int, ncols: int | None = None) -> list[int]:
    """In-place reduced row echelon form over GF(q) on the first ``ncols`` columns.

    Returns the pivot column indices; pivot rows occupy ``rows[:len(pivots)]``.
    """
    if not rows:
        return []
    ncols = len(rows[0]) if ncols is None else ncols
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][c] % q), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = pow(rows[r][c], q - 2, q)
        rows[r] = [(v * inv) % q for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] % q:
                f = rows[i][c]
                rows[i] = [(a - f * b) % q for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return pivots


def mat_mul(a: Matrix, b):
    """Matrix product; ``b`` may be a Matrix or a vector (sequence)."""
    if isinstance(b, Matrix):
        if a.field != b.field:
            raise FieldMismatch("matrices over different fields")
        if a.cols != b.rows:
            raise DimensionMismatch(f"cannot multiply {a.shape} by {b.shape}")
        q = a.field.q
        bt = list(zip(*b._data)) if b.rows else [() for _ in range(b.cols)]
        return Matrix(a.field, ([sum(x * y for x, y in zip(r, c)) % q for c in bt] for r in a._data))
    vec = [_as_int(v, a.field) for v in b]
    if a.cols != len(vec):
        raise DimensionMismatch(f"cannot multiply {a.shape} by vector of length {len(vec)}")
    q = a.field.q
    return tuple(sum(x * y for x, y in zip(r, vec)) % q for r in a._data)


def mat_rank(a: Matrix) -> int:
    rows = [list(r) for r in a._data]
    return len(_row_reduce(rows, a.field.q))


def mat_solve(a: Matrix, y) -> tuple[int, ...]:
    """Unique ``x`` with ``a @ x == y``; raises SingularSystem otherwise."""
    vec = [_as_int(v, a.field) for v in y]
    if len(vec) != a.rows:
        raise DimensionMismatch(f"rhs length {len(vec)} != {a.rows} rows")
    q = a.field.q
    aug = [list(r) + [v] for r, v in zip(a._data, vec)]
    pivots = _row_reduce(aug, q, ncols=a.cols)
    if len(pivots) < a.cols:
        raise SingularSystem("system is rank deficient")
    if any(row[-1] for row in aug[len(pivots):]):
        raise SingularSystem("system is inconsistent")
    return tuple(aug[i][-1] for i in range(a.cols))


def nullspace(a: Matrix) -> list[tuple[int, ...]]:
    """A basis of the right kernel of ``a``."""
    q = a.field.q
    rows = [list(r) for r in a._data]
    pivots = _row_reduce(rows, q)
    free = [c for c in range(a.cols) if c not in pivots]
    basis = []
    for f in free:
        v = [0] * a.cols
        v[f] = 1
        for i, pc in enumerate(pivots):
            v[pc] = -rows[i][f] % q
        basis.append(tuple(v))
    return basis


# --------------------------------------------------------------------------
# bulk (numpy) helpers


def mod_matmul(a: np.ndarray, b: np.ndarray, q: int) -> np.ndarray:
    """Batched ``a @ b mod q`` for int64 arrays with entries in [0, q).

    Accumulates one product at a time so nothing overflows 64 bits.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    inner = a.shape[-1]
    if b.shape[-2] != inner:
        raise DimensionMismatch(f"inner dimensions differ: {a.shape} @ {b.shape}")
    out_shape = np.broadcast_shapes(a.shape[:-2], b.shape[:-2]) + (a.shape[-2], b.shape[-1])
    out = np.zeros(out_shape, dtype=np.int64)
    for t in range(inner):
        out += a[..., :, t : t + 1] * b[..., t : t + 1, :] % q
        out %= q
    return out


def inverse_array(m: np.ndarray, field: PrimeField) -> np.ndarray:
    return Matrix(field, m.tolist()).inverse().to_numpy()


# --------------------------------------------------------------------------
# encoding matrices

FLAVORS = ("vandermonde", "systematic-mbr", "custom")


@dataclass(frozen=True, eq=False)
class EncodingMatrix:
    """An ``n x d`` encoding matrix with its provenance.

    ``points`` holds the evaluation point of each row when the matrix is
    Vandermonde, enabling the Berlekamp-Welch decoder on its row subsets.
    """

    psi: Matrix
    points: tuple[int, ...] | None = None
    flavor: str = "custom"

    def __post_init__(self):
        if self.flavor not in FLAVORS:
            raise ValueError(f"unknown flavor {self.flavor!r}")
        if (self.flavor == "vandermonde") != (self.points is not None):
            raise ValueError("points are present iff flavor is vandermonde")
        if self.points is not None and len(self.points) != self.psi.rows:
            raise DimensionMismatch("one point per row required")
        object.__setattr__(self, "_array", self.psi.to_numpy())

    @property
    def field(self) -> PrimeField:
        return self.psi.field

    @property
    def n(self) -> int:
        return self.psi.rows

    @property
    def d(self) -> int:
        return self.psi.cols

    @property
    def array(self) -> np.ndarray:
        return self._array

    def row(self, i: int) -> tuple[int, ...]:
        """Encoding vector of the 0-based row ``i``."""
        return self.psi.row(i)

    def __eq__(self, other):
        if not isinstance(other, EncodingMatrix):
            return NotImplemented
        return (self.psi, self.points, self.flavor) == (other.psi, other.points, other.flavor)

    def __hash__(self):
        return hash((self.psi, self.points, self.flavor))

    def any_rows_independent(self, size: int, width: int | None = None) -> bool:
        """True iff every ``size`` rows, cut to the first ``width`` columns, are independent."""
        width = self.d if width is None else width
        sub = self.psi.take_cols(range(width))
        for rows in itertools.combinations(range(self.n), size):
            if mat_rank(sub.take_rows(rows)) < size:
                return False
        return True

    def violations(self, *, k: int | None = None, alpha: int | None = None, ell: int = 0) -> list[str]:
        """Names of the invariants this matrix breaks (empty when it is admissible).

        ``k`` checks the MBR requirement on the first ``k`` columns, ``alpha``
        the MSR requirements (any ``alpha`` rows of the first ``alpha``
        columns independent, and distinct ``x**alpha``), ``ell`` the secrecy
        requirement on the first ``ell`` columns.
        """
        bad = []
        if not self.any_rows_independent(self.d):
            bad.append("any d rows independent")
        if k is not None and not self.any_rows_independent(k, k):
            bad.append("any k rows of first k columns independent")
        if alpha is not None:
            if not self.any_rows_independent(alpha, alpha):
                bad.append("any alpha rows of first alpha columns independent")
            if self.points is None:
                bad.append("MSR requires a Vandermonde matrix")
            else:
                lam = [self.field.pow(x, alpha) for x in self.points]
                if len(set(lam)) != len(lam):
                    bad.append("x**alpha distinct")
        if ell and not self.any_rows_independent(ell, ell):
            bad.append("any ell rows of first ell columns independent")
        return bad


def build_vandermonde(
    field: PrimeField,
    n: int,
    d: int,
    alpha: int | None = None,
    points: Sequence[int] | None = None,
) -> EncodingMatrix:
    """Vandermonde encoding matrix with rows ``[1, x, ..., x**(d-1)]``.

    Points are chosen by scanning ``x = 0, 1, 2, ...`` and keeping each ``x``
    whose ``alpha``-th power has not been seen yet (plain distinctness when
    ``alpha`` is None).  Explicit ``points`` override the scan and are
    validated against the same rule.
    """
    if points is None:
        chosen, seen = [], set()
        for x in range(field.q):
            key = field.pow(x, alpha) if alpha else x
            if key not in seen:
                seen.add(key)
                chosen.append(x)
                if len(chosen) == n:
                    break
        if len(chosen) < n:
            raise FieldTooSmall(
                f"GF({field.q}) has only {len(chosen)} admissible points, need {n}"
            )
    else:
        chosen = [int(x) % field.q for x in points]
        if len(chosen) != n:
            raise DimensionMismatch(f"expected {n} points, got {len(chosen)}")
        keys = [field.pow(x, alpha) if alpha else x for x in chosen]
        if len(set(keys)) != n:
            raise FieldTooSmall("supplied points are not admissible (repeated keys)")
    rows = [[field.pow(x, j) for j in range(d)] for x in chosen]
    return EncodingMatrix(Matrix(field, rows), tuple(chosen), "vandermonde")


def build_systematic_mbr(field: PrimeField, n: int, k: int, d: int) -> EncodingMatrix:
    """``[[I_k, 0], [Cauchy]]`` so that nodes ``1..k`` store the message uncoded."""
    if not 1 <= k <= d < n:
        raise ValueError(f"need 1 <= k <= d < n, got n={n}, k={k}, d={d}")
    if field.q < (n - k) + d:
        raise FieldTooSmall(f"a ({n - k})x{d} Cauchy matrix needs q >= {n - k + d}")
    xs = range(n - k)
    ys = range(n - k, n - k + d)
    top = [[int(i == j) for j in range(d)] for i in range(k)]
    bottom = [[field.inv(x - y) for y in ys] for x in xs]
    return EncodingMatrix(Matrix(field, top + bottom), None, "systematic-mbr")


def custom_encoding(field: PrimeField, rows: Sequence[Sequence[int]], flavor: str = "custom") -> EncodingMatrix:
    return EncodingMatrix(Matrix(field, rows), None, flavor)
