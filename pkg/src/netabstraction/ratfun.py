"""Exact polynomials, rational functions and rational matrices in the delay q^-1.

Everything here is immutable. A polynomial stores ``coeffs[k]`` as the
coefficient of ``q^-k``; a rational function is a reduced ratio of two such
polynomials whose denominator has its lowest-index nonzero coefficient equal
to one, so canonical forms compare with plain tuple equality.
"""

from __future__ import annotations

from fractions import Fraction
from functools import reduce

import gmpy2
from gmpy2 import mpq
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import (
    DegreeOverflow,
    DimensionMismatch,
    DivisionByZero,
    PoleAtPoint,
    RankDeficient,
    SingularMatrix,
)

#: Reduced numerator/denominator degrees above this abort with DegreeOverflow.
MAX_DEGREE = 64

POLE_TOL = 1e-12
RANK_RTOL = 1e-8
STABILITY_MARGIN = 1e-9

Scalar = Union[int, Fraction, str, mpq]


_MPQ = type(mpq(0))
_Q0 = mpq(0)
_Q1 = mpq(1)


def _frac(c) -> mpq:
    if type(c) is _MPQ:
        return c
    if isinstance(c, float):
        raise TypeError("floats are not exact; pass Fraction or 'p/q' strings")
    if isinstance(c, str):
        return mpq(Fraction(c.strip()))
    return mpq(c)


# ---------------------------------------------------------------------------
# Polynomials
# ---------------------------------------------------------------------------


class Polynomial:
    """Polynomial in ``x = q^-1`` with exact rational coefficients."""

    __slots__ = ("coeffs", "_fcoeffs")

    def __init__(self, coeffs: Iterable[Scalar] = ()):
        cs = [_frac(c) for c in coeffs]
        while cs and not cs[-1]:
            cs.pop()
        self.coeffs = tuple(cs)
        self._fcoeffs = None

    @classmethod
    def _raw(cls, coeffs: tuple) -> "Polynomial":
        # caller guarantees Fractions with a nonzero last entry (or empty)
        p = object.__new__(cls)
        p.coeffs = coeffs
        p._fcoeffs = None
        return p

    @classmethod
    def monomial(cls, k: int, c: Scalar = 1) -> "Polynomial":
        c = _frac(c)
        if not c:
            return ZERO_POLY
        return cls._raw((_Q0,) * k + (c,))

    @property
    def degree(self) -> int:
        """Highest power of q^-1; -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    @property
    def order(self) -> int:
        """Lowest index with a nonzero coefficient (-1 for zero)."""
        for k, c in enumerate(self.coeffs):
            if c:
                return k
        return -1

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_constant(self) -> bool:
        return len(self.coeffs) <= 1

    def is_monomial(self) -> bool:
        return sum(1 for c in self.coeffs if c) == 1

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return self.coeffs == other.coeffs
        if isinstance(other, (int, Fraction, _MPQ)):
            return self.coeffs == Polynomial([other]).coeffs
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __repr__(self) -> str:
        return f"Polynomial({[str(c) for c in self.coeffs]})"

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        terms = []
        for k, c in enumerate(self.coeffs):
            if not c:
                continue
            if k == 0:
                terms.append(str(c))
            else:
                mono = "q^-1" if k == 1 else f"q^-{k}"
                terms.append(mono if c == 1 else f"-{mono}" if c == -1 else f"{c}*{mono}")
        return " + ".join(terms).replace("+ -", "- ")

    def __neg__(self) -> "Polynomial":
        return Polynomial._raw(tuple(-c for c in self.coeffs))

    def __add__(self, other: "Polynomial") -> "Polynomial":
        a, b = self.coeffs, other.coeffs
        if not a:
            return other
        if not b:
            return self
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for k, c in enumerate(b):
            out[k] += c
        while out and not out[-1]:
            out.pop()
        return Polynomial._raw(tuple(out))

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        a, b = self.coeffs, other.coeffs
        if not a or not b:
            return ZERO_POLY
        if len(a) == 1:
            c = a[0]
            return self if c == 1 and len(b) == 1 and b[0] == 1 else Polynomial._raw(tuple(c * x for x in b))
        if len(b) == 1:
            c = b[0]
            return Polynomial._raw(tuple(c * x for x in a))
        out = [_Q0] * (len(a) + len(b) - 1)
        for i, ca in enumerate(a):
            if not ca:
                continue
            for j, cb in enumerate(b):
                if cb:
                    out[i + j] += ca * cb
        return Polynomial._raw(tuple(out))

    def scale(self, c: mpq) -> "Polynomial":
        if not c:
            return ZERO_POLY
        return Polynomial._raw(tuple(c * x for x in self.coeffs))

    def divmod(self, other: "Polynomial") -> tuple["Polynomial", "Polynomial"]:
        if not other.coeffs:
            raise DivisionByZero("polynomial division by zero")
        b = other.coeffs
        db = len(b) - 1
        rem = list(self.coeffs)
        if len(rem) <= db:
            return ZERO_POLY, self
        lead = b[-1]
        quo = [_Q0] * (len(rem) - db)
        for k in range(len(rem) - 1, db - 1, -1):
            c = rem[k]
            if not c:
                continue
            f = c / lead
            quo[k - db] = f
            for t in range(db + 1):
                rem[k - db + t] -= f * b[t]
        while rem and not rem[-1]:
            rem.pop()
        return Polynomial(quo), Polynomial._raw(tuple(rem))

    def exact_div(self, other: "Polynomial") -> "Polynomial":
        if len(other.coeffs) == 1:
            c = other.coeffs[0]
            return self if c == 1 else Polynomial._raw(tuple(x / c for x in self.coeffs))
        q, r = self.divmod(other)
        if r.coeffs:
            raise ArithmeticError("inexact polynomial division")
        return q

    def float_coeffs(self) -> tuple:
        if self._fcoeffs is None:
            self._fcoeffs = tuple(float(c) for c in self.coeffs)
        return self._fcoeffs

    def eval_x(self, x: complex) -> complex:
        """Evaluate at ``q^-1 = x`` (Horner, floating point)."""
        acc = 0j
        for c in reversed(self.float_coeffs()):
            acc = acc * x + c
        return acc


ZERO_POLY = Polynomial._raw(())
ONE_POLY = Polynomial._raw((_Q1,))


def _primitive_ints(coeffs: Sequence[mpq]) -> list:
    """Integer primitive part, descending order."""
    den = reduce(gmpy2.lcm, (c.denominator for c in coeffs), 1)
    ints = [c.numerator * (den // c.denominator) for c in reversed(coeffs)]
    return _int_primitive(ints)


def _int_primitive(ints: list) -> list:
    g = reduce(gmpy2.gcd, ints, 0)
    return [i // g for i in ints] if g > 1 else ints


def _prem(a: list[int], b: list[int]) -> list[int]:
    """Pseudo-remainder of descending integer polynomials."""
    a = list(a)
    lb = len(b)
    lc = b[0]
    while len(a) >= lb:
        f = a[0]
        if f:
            a = [lc * x for x in a]
            for k in range(lb):
                a[k] -= f * b[k]
        a.pop(0)
        while a and not a[0]:
            a.pop(0)
    return a


def poly_gcd(a: Polynomial, b: Polynomial) -> Polynomial:
    """Greatest common divisor, up to a rational scalar (primitive PRS over Z)."""
    if not a.coeffs:
        return b if b.coeffs else ONE_POLY
    if not b.coeffs:
        return a
    if len(a.coeffs) == 1 or len(b.coeffs) == 1:
        return ONE_POLY
    oa, ob = a.order, b.order
    shift = min(oa, ob)
    if a.is_monomial() or b.is_monomial():
        return Polynomial.monomial(shift)
    x = _primitive_ints(a.coeffs[oa:])
    y = _primitive_ints(b.coeffs[ob:])
    if len(x) < len(y):
        x, y = y, x
    while len(y) > 1:
        r = _prem(x, y)
        if not r:
            break
        x, y = y, _int_primitive(r)
    else:
        # y is a nonzero constant
        return Polynomial.monomial(shift)
    g = y
    if g[0] < 0:
        g = [-c for c in g]
    return Polynomial._raw((_Q0,) * shift + tuple(mpq(c) for c in reversed(g)))


def poly_lcm(a: Polynomial, b: Polynomial) -> Polynomial:
    if a == b:
        return a
    return a * b.exact_div(poly_gcd(a, b))


# ---------------------------------------------------------------------------
# Rational functions
# ---------------------------------------------------------------------------


def _as_poly(x) -> Polynomial:
    if isinstance(x, Polynomial):
        return x
    if isinstance(x, (int, Fraction, str, _MPQ)):
        return Polynomial([x])
    return Polynomial(x)


class RationalFunction:
    """Reduced ratio ``num(q^-1) / den(q^-1)`` with exact coefficients.

    >>> lag = RationalFunction([1], [1, "-1/2"])
    >>> lag.is_proper(), lag.is_stable()
    (True, True)
    """

    __slots__ = ("num", "den")

    def __init__(self, num=0, den=1):
        num = _as_poly(num)
        den = _as_poly(den)
        if not den.coeffs:
            raise DivisionByZero("zero denominator")
        if num.coeffs:
            g = poly_gcd(num, den)
            if g.degree > 0:
                num = num.exact_div(g)
                den = den.exact_div(g)
        self._set_canonical(num, den)

    def _set_canonical(self, num: Polynomial, den: Polynomial) -> None:
        if not num.coeffs:
            self.num, self.den = ZERO_POLY, ONE_POLY
            return
        lead = den.coeffs[den.order]
        if lead != 1:
            num = num.scale(1 / lead)
            den = den.scale(1 / lead)
        if max(len(num.coeffs), len(den.coeffs)) - 1 > MAX_DEGREE:
            raise DegreeOverflow(
                f"degree {max(num.degree, den.degree)} exceeds ceiling {MAX_DEGREE}"
            )
        self.num, self.den = num, den

    @classmethod
    def _reduced(cls, num: Polynomial, den: Polynomial) -> "RationalFunction":
        # caller guarantees gcd(num, den) is constant and den != 0
        f = object.__new__(cls)
        f._set_canonical(num, den)
        return f

    @classmethod
    def coerce(cls, x) -> "RationalFunction":
        if isinstance(x, RationalFunction):
            return x
        if isinstance(x, (int, Fraction, str, _MPQ)):
            c = _frac(x)
            if not c:
                return ZERO
            if c == 1:
                return ONE
            return cls._reduced(Polynomial._raw((c,)), ONE_POLY)
        if isinstance(x, Polynomial):
            return cls._reduced(x, ONE_POLY)
        raise TypeError(f"cannot coerce {type(x).__name__} to RationalFunction")

    @classmethod
    def delay(cls, k: int = 1, gain: Scalar = 1) -> "RationalFunction":
        """``gain * q^-k``."""
        return cls._reduced(Polynomial.monomial(k, gain), ONE_POLY)

    # -- predicates -----------------------------------------------------

    def is_zero(self) -> bool:
        return not self.num.coeffs

    def __bool__(self) -> bool:
        return bool(self.num.coeffs)

    def is_constant(self) -> bool:
        return len(self.num.coeffs) <= 1 and len(self.den.coeffs) == 1

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError("not a constant")
        return Fraction(self.num.coeffs[0]) if self.num.coeffs else Fraction(0)

    def is_proper(self) -> bool:
        return bool(self.den.coeffs[0])

    def poles(self) -> np.ndarray:
        """Finite poles in the q-plane."""
        d = self.den.float_coeffs()
        if len(d) <= 1:
            return np.zeros(0, dtype=complex)
        # q^n den(1/q) has descending coefficients d_0 .. d_n
        return np.roots(np.array(d, dtype=float))

    def is_stable(self) -> bool:
        return bool(np.all(np.abs(self.poles()) < 1 - STABILITY_MARGIN))

    @property
    def degree(self) -> int:
        return max(self.num.degree, self.den.degree, 0)

    def value_at_infinity(self) -> Fraction:
        """Value at q = infinity (q^-1 = 0); requires properness."""
        if not self.is_proper():
            raise PoleAtPoint("non-proper function has no value at q = infinity")
        n0 = self.num.coeffs[0] if self.num.coeffs else _Q0
        return Fraction(n0 / self.den.coeffs[0])

    # -- arithmetic -----------------------------------------------------

    def __eq__(self, other) -> bool:
        if isinstance(other, RationalFunction):
            return self.num.coeffs == other.num.coeffs and self.den.coeffs == other.den.coeffs
        if isinstance(other, (int, Fraction, _MPQ)):
            return self == RationalFunction.coerce(other)
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.num.coeffs, self.den.coeffs))

    def __neg__(self) -> "RationalFunction":
        if not self.num.coeffs:
            return self
        f = object.__new__(RationalFunction)
        f.num, f.den = -self.num, self.den
        return f

    def __add__(self, other) -> "RationalFunction":
        if not isinstance(other, RationalFunction):
            try:
                other = RationalFunction.coerce(other)
            except TypeError:
                return NotImplemented
        if not other.num.coeffs:
            return self
        if not self.num.coeffs:
            return other
        a, b, c, d = self.num, self.den, other.num, other.den
        if b == d:
            num = a + c
            if not num.coeffs:
                return ZERO
            if b.degree == 0:
                return RationalFunction._reduced(num, b)
            return RationalFunction(num, b)
        g = poly_gcd(b, d)
        if g.degree <= 0:
            return RationalFunction._reduced(a * d + c * b, b * d)
        bg, dg = b.exact_div(g), d.exact_div(g)
        num = a * dg + c * bg
        if not num.coeffs:
            return ZERO
        # with reduced operands only factors of g can cancel
        h = poly_gcd(num, g)
        if h.degree > 0:
            num = num.exact_div(h)
            return RationalFunction._reduced(num, bg * d.exact_div(h))
        return RationalFunction._reduced(num, bg * d)

    __radd__ = __add__

    def __sub__(self, other) -> "RationalFunction":
        if not isinstance(other, RationalFunction):
            try:
                other = RationalFunction.coerce(other)
            except TypeError:
                return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "RationalFunction":
        return RationalFunction.coerce(other) + (-self)

    def __mul__(self, other) -> "RationalFunction":
        if not isinstance(other, RationalFunction):
            try:
                other = RationalFunction.coerce(other)
            except TypeError:
                return NotImplemented
        if not self.num.coeffs or not other.num.coeffs:
            return ZERO
        if other is ONE:
            return self
        if self is ONE:
            return other
        a, b, c, d = self.num, self.den, other.num, other.den
        g1 = poly_gcd(a, d)
        if g1.degree > 0:
            a, d = a.exact_div(g1), d.exact_div(g1)
        g2 = poly_gcd(c, b)
        if g2.degree > 0:
            c, b = c.exact_div(g2), b.exact_div(g2)
        return RationalFunction._reduced(a * c, b * d)

    __rmul__ = __mul__

    def inv(self) -> "RationalFunction":
        if not self.num.coeffs:
            raise DivisionByZero("inverting the zero function")
        return RationalFunction._reduced(self.den, self.num)

    def __truediv__(self, other) -> "RationalFunction":
        return self * RationalFunction.coerce(other).inv()

    def __rtruediv__(self, other) -> "RationalFunction":
        return RationalFunction.coerce(other) * self.inv()

    # -- evaluation & display ---------------------------------------------

    def evaluate(self, z: complex) -> complex:
        """Value at the point ``q = z`` (so ``q^-1 = 1/z``)."""
        x = 1.0 / z
        d = self.den.eval_x(x)
        if abs(d) < POLE_TOL:
            raise PoleAtPoint(f"denominator of {self} vanishes at z={z}")
        return self.num.eval_x(x) / d

    def __repr__(self) -> str:
        return f"RationalFunction({self})"

    def __str__(self) -> str:
        if self.den.coeffs == ONE_POLY.coeffs:
            return str(self.num)
        return f"({self.num})/({self.den})"


ZERO = RationalFunction._reduced(ZERO_POLY, ONE_POLY)
ONE = RationalFunction._reduced(ONE_POLY, ONE_POLY)


def rf_add(a: RationalFunction, b: RationalFunction) -> RationalFunction:
    return a + b


def rf_mul(a: RationalFunction, b: RationalFunction) -> RationalFunction:
    return a * b


def rf_inv(a: RationalFunction) -> RationalFunction:
    return a.inv()


def is_proper(f: RationalFunction) -> bool:
    return f.is_proper()


def is_stable(f: RationalFunction) -> bool:
    return f.is_stable()


# ---------------------------------------------------------------------------
# Matrices
# ---------------------------------------------------------------------------


class TransferMatrix:
    """Immutable rows x cols grid of rational functions."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, data: Sequence[Sequence] = (), cols: int | None = None):
        entries = tuple(tuple(RationalFunction.coerce(x) for x in row) for row in data)
        rows = len(entries)
        if rows:
            ncols = len(entries[0])
            if any(len(r) != ncols for r in entries):
                raise DimensionMismatch("ragged rows")
            if cols is not None and cols != ncols:
                raise DimensionMismatch(f"expected {cols} columns, got {ncols}")
        else:
            ncols = cols or 0
        self.rows, self.cols, self.entries = rows, ncols, entries

    @classmethod
    def _raw(cls, entries: tuple, rows: int, cols: int) -> "TransferMatrix":
        m = object.__new__(cls)
        m.rows, m.cols, m.entries = rows, cols, entries
        return m

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "TransferMatrix":
        return cls._raw(tuple((ZERO,) * cols for _ in range(rows)), rows, cols)

    @classmethod
    def identity(cls, n: int) -> "TransferMatrix":
        return cls.diag([ONE] * n)

    @classmethod
    def diag(cls, values: Sequence) -> "TransferMatrix":
        n = len(values)
        vals = [RationalFunction.coerce(v) for v in values]
        return cls._raw(
            tuple(tuple(vals[i] if i == j else ZERO for j in range(n)) for i in range(n)), n, n
        )

    @classmethod
    def from_sparse(cls, rows: int, cols: int, items: dict) -> "TransferMatrix":
        grid = [[ZERO] * cols for _ in range(rows)]
        for (i, j), v in items.items():
            grid[i][j] = RationalFunction.coerce(v)
        return cls._raw(tuple(tuple(r) for r in grid), rows, cols)

    @classmethod
    def block(cls, blocks: Sequence[Sequence["TransferMatrix"]]) -> "TransferMatrix":
        """Assemble a block matrix; empty blocks must still carry their shape."""
        out = []
        ncols = None
        for brow in blocks:
            h = brow[0].rows
            if any(b.rows != h for b in brow):
                raise DimensionMismatch("block row heights differ")
            w = sum(b.cols for b in brow)
            if ncols is None:
                ncols = w
            elif w != ncols:
                raise DimensionMismatch("block column widths differ")
            for r in range(h):
                out.append(tuple(x for b in brow for x in b.entries[r]))
        return cls._raw(tuple(out), len(out), ncols or 0)

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def __getitem__(self, ij: tuple[int, int]) -> RationalFunction:
        i, j = ij
        return self.entries[i][j]

    def __eq__(self, other) -> bool:
        if not isinstance(other, TransferMatrix):
            return NotImplemented
        return self.shape == other.shape and self.entries == other.entries

    def __hash__(self) -> int:
        return hash((self.shape, self.entries))

    def __repr__(self) -> str:
        return f"TransferMatrix({self.rows}x{self.cols})"

    def __str__(self) -> str:
        return "\n".join("[" + ", ".join(str(x) for x in row) + "]" for row in self.entries)

    def tolist(self) -> list[list[RationalFunction]]:
        return [list(r) for r in self.entries]

    def is_zero(self) -> bool:
        return all(not x for row in self.entries for x in row)

    def is_square(self) -> bool:
        return self.rows == self.cols

    def diagonal(self) -> list[RationalFunction]:
        return [self.entries[k][k] for k in range(min(self.rows, self.cols))]

    def max_degree(self) -> int:
        return max((x.degree for row in self.entries for x in row), default=0)

    @property
    def T(self) -> "TransferMatrix":
        return TransferMatrix._raw(
            tuple(tuple(self.entries[i][j] for i in range(self.rows)) for j in range(self.cols)),
            self.cols,
            self.rows,
        )

    def select(self, rows: Sequence[int] | None = None, cols: Sequence[int] | None = None) -> "TransferMatrix":
        rows = range(self.rows) if rows is None else list(rows)
        cols = range(self.cols) if cols is None else list(cols)
        return TransferMatrix._raw(
            tuple(tuple(self.entries[i][j] for j in cols) for i in rows), len(rows), len(cols)
        )

    def _check_same(self, other: "TransferMatrix") -> None:
        if self.shape != other.shape:
            raise DimensionMismatch(f"{self.shape} vs {other.shape}")

    def __add__(self, other: "TransferMatrix") -> "TransferMatrix":
        self._check_same(other)
        return TransferMatrix._raw(
            tuple(tuple(a + b for a, b in zip(r1, r2)) for r1, r2 in zip(self.entries, other.entries)),
            self.rows,
            self.cols,
        )

    def __sub__(self, other: "TransferMatrix") -> "TransferMatrix":
        self._check_same(other)
        return TransferMatrix._raw(
            tuple(tuple(a - b for a, b in zip(r1, r2)) for r1, r2 in zip(self.entries, other.entries)),
            self.rows,
            self.cols,
        )

    def __neg__(self) -> "TransferMatrix":
        return TransferMatrix._raw(
            tuple(tuple(-a for a in r) for r in self.entries), self.rows, self.cols
        )

    def scale(self, f) -> "TransferMatrix":
        f = RationalFunction.coerce(f)
        return TransferMatrix._raw(
            tuple(tuple(f * a for a in r) for r in self.entries), self.rows, self.cols
        )

    def __matmul__(self, other: "TransferMatrix") -> "TransferMatrix":
        if self.cols != other.rows:
            raise DimensionMismatch(f"cannot multiply {self.shape} by {other.shape}")
        ocols = [tuple(other.entries[k][j] for k in range(other.rows)) for j in range(other.cols)]
        out = []
        for row in self.entries:
            nz = [(k, a) for k, a in enumerate(row) if a.num.coeffs]
            new_row = []
            for col in ocols:
                acc = ZERO
                for k, a in nz:
                    b = col[k]
                    if b.num.coeffs:
                        acc = acc + a * b
                new_row.append(acc)
            out.append(tuple(new_row))
        return TransferMatrix._raw(tuple(out), self.rows, other.cols)

    def is_nonsingular(self) -> bool:
        return tm_is_nonsingular(self)

    def inverse(self) -> "TransferMatrix":
        return tm_inverse(self)

    def left_inverse(self) -> "TransferMatrix":
        return tm_left_inverse(self)

    def eval_at(self, z: complex) -> np.ndarray:
        return eval_at(self, z)


def tm_add(a: TransferMatrix, b: TransferMatrix) -> TransferMatrix:
    return a + b


def tm_mul(a: TransferMatrix, b: TransferMatrix) -> TransferMatrix:
    return a @ b


def tm_neg(a: TransferMatrix) -> TransferMatrix:
    return -a


def tm_identity(n: int) -> TransferMatrix:
    return TransferMatrix.identity(n)


def tm_hstack(*mats: TransferMatrix) -> TransferMatrix:
    return TransferMatrix.block([list(mats)])


def tm_vstack(*mats: TransferMatrix) -> TransferMatrix:
    return TransferMatrix.block([[m] for m in mats])


def tm_select(m: TransferMatrix, rows: Sequence[int] | None = None, cols: Sequence[int] | None = None) -> TransferMatrix:
    return m.select(rows, cols)


def tm_inverse(m: TransferMatrix) -> TransferMatrix:
    """Exact inverse by fraction-free Gauss-Jordan elimination over Q[q^-1].

    Each row is first cleared of denominators, so the elimination runs on a
    polynomial matrix ``A = D M`` with ``D`` diagonal; all divisions by the
    previous pivot are exact, and ``M^-1 = A^-1 D``.
    """
    if not m.is_square():
        raise DimensionMismatch(f"inverse of non-square {m.shape} matrix")
    n = m.rows
    if n == 0:
        return m
    if n == 1:
        a = m.entries[0][0]
        if not a:
            raise SingularMatrix("determinant is identically zero")
        return TransferMatrix._raw(((a.inv(),),), 1, 1)

    scales = []
    work = []
    for i, row in enumerate(m.entries):
        d = ONE_POLY
        for x in row:
            if x.den.degree > 0 and x.den != d:
                d = poly_lcm(d, x.den)
        scales.append(d)
        prow = [x.num * d.exact_div(x.den) if x.num.coeffs else ZERO_POLY for x in row]
        prow += [d if j == i else ZERO_POLY for j in range(n)]
        work.append(prow)
    # the identity block is scaled too: [D M | D] -> [c I | c M^-1] directly
    prev = ONE_POLY
    for k in range(n):
        candidates = [r for r in range(k, n) if work[r][k].coeffs]
        if not candidates:
            raise SingularMatrix("determinant is identically zero")
        piv = min(candidates, key=lambda r: (work[r][k].degree, sum(1 for c in work[r][k].coeffs if c)))
        if piv != k:
            work[k], work[piv] = work[piv], work[k]
        prow = work[k]
        p = prow[k]
        for i in range(n):
            if i == k:
                continue
            row = work[i]
            f = row[k]
            new = []
            for j in range(2 * n):
                if j == k:
                    new.append(ZERO_POLY)
                    continue
                v = p * row[j]
                if f.coeffs and prow[j].coeffs:
                    v = v - f * prow[j]
                new.append(v.exact_div(prev) if prev is not ONE_POLY else v)
            work[i] = new
        prev = p
    det = prev
    out = tuple(
        tuple(RationalFunction(work[i][n + j], det) if work[i][n + j].coeffs else ZERO for j in range(n))
        for i in range(n)
    )
    return TransferMatrix._raw(out, n, n)


# q^-1 values at which determinants are probed; irregular so that a
# nonzero determinant is very unlikely to vanish at all of them
_PROBES = tuple(mpq(a, b) for a, b in ((3, 7), (-5, 11), (2, 13), (7, 3), (-4, 9), (11, 17), (13, 5), (-1, 19)))


def _value_at(p: Polynomial, x: mpq) -> mpq:
    acc = _Q0
    for c in reversed(p.coeffs):
        acc = acc * x + c
    return acc


def det_at(m: TransferMatrix, x) -> mpq | None:
    """Exact determinant at ``q^-1 = x``; None when some entry has a pole there."""
    if not m.is_square():
        raise DimensionMismatch(f"determinant of non-square {m.shape} matrix")
    x = _frac(x)
    a = []
    for row in m.entries:
        vals = []
        for f in row:
            d = _value_at(f.den, x)
            if not d:
                return None
            vals.append(_value_at(f.num, x) / d)
        a.append(vals)
    n = m.rows
    det = _Q1
    for k in range(n):
        piv = next((r for r in range(k, n) if a[r][k]), None)
        if piv is None:
            return _Q0
        if piv != k:
            a[k], a[piv] = a[piv], a[k]
            det = -det
        det *= a[k][k]
        for r in range(k + 1, n):
            f = a[r][k] / a[k][k]
            if f:
                a[r] = [u - f * v for u, v in zip(a[r], a[k])]
    return det


def tm_is_nonsingular(m: TransferMatrix) -> bool:
    """Exact test: a nonzero determinant at any probe point settles it, and
    only when every probe fails does the full symbolic inverse decide."""
    if not m.is_square():
        return False
    if any(det_at(m, x) for x in _PROBES):
        return True
    try:
        tm_inverse(m)
    except SingularMatrix:
        return False
    return True


def tm_left_inverse(m: TransferMatrix) -> TransferMatrix:
    """Gram left-inverse ``(M^T M)^-1 M^T``; equals the inverse for square M."""
    if m.rows < m.cols:
        raise DimensionMismatch(f"left inverse needs rows >= cols, got {m.shape}")
    if m.cols == 0:
        return TransferMatrix.zeros(0, m.rows)
    if m.is_square():
        try:
            return tm_inverse(m)
        except SingularMatrix as exc:
            raise RankDeficient(str(exc)) from exc
    mt = m.T
    try:
        gram_inv = tm_inverse(mt @ m)
    except SingularMatrix as exc:
        raise RankDeficient("M^T M is singular") from exc
    return gram_inv @ mt


def eval_at(m: TransferMatrix, z: complex) -> np.ndarray:
    """Entrywise complex value at ``q = z``."""
    out = np.zeros((m.rows, m.cols), dtype=complex)
    for i, row in enumerate(m.entries):
        for j, x in enumerate(row):
            if x.num.coeffs:
                out[i, j] = x.evaluate(z)
    return out


def numeric_rank(a: np.ndarray, rtol: float = RANK_RTOL) -> int:
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def rank_at(m: TransferMatrix, points: Iterable[complex]) -> int:
    """Largest numeric rank over the points; the generic rank for random points."""
    if m.rows == 0 or m.cols == 0:
        return 0
    return max((numeric_rank(eval_at(m, z)) for z in points), default=0)
