from fractions import Fraction
import math

import sympy
from sympy.polys.domains import QQ, QQ_I, ZZ_I
from sympy.polys.matrices import DomainMatrix

from kahler_dynamics.errors import DimensionMismatch, NotInvertible

_LOG10_2 = math.log10(2)


def exact_scalar(value):
    """Convert ``value`` to a sympy rational or Gaussian rational, refusing floats."""
    if isinstance(value, bool):
        raise TypeError('booleans are not matrix entries')
    if isinstance(value, float):
        raise TypeError(f'float {value!r} cannot enter an exact field')
    if isinstance(value, Fraction):
        return sympy.Rational(value.numerator, value.denominator)
    expr = sympy.sympify(value)
    re_part, im_part = expr.as_real_imag()
    if not (re_part.is_Rational and im_part.is_Rational):
        raise TypeError(f'{value!r} is not a rational or Gaussian rational number')
    return re_part + sympy.I * im_part


def is_gaussian(expr):
    return sympy.im(expr) != 0


def _digits(integer):
    return int(abs(integer).bit_length() * _LOG10_2) + 1


class ExactMatrix:
    """Matrix over the rationals (QQ) or the Gaussian rationals (QQ_I).

    Entries never leave exact arithmetic; numeric views are produced on
    demand with :meth:`to_numeric`.
    """

    __slots__ = ('rep',)

    def __init__(self, rep):
        if rep.domain not in (QQ, QQ_I):
            target = QQ_I if rep.domain in (ZZ_I, QQ_I) else QQ
            rep = rep.convert_to(target)
        # eye/zeros come back sparse and sparse @ dense is refused
        self.rep = rep.to_dense()

    @classmethod
    def from_rows(cls, rows, domain=None):
        exprs = [[exact_scalar(value) for value in row] for row in rows]
        if not exprs or not exprs[0]:
            raise DimensionMismatch('matrix must have at least one row and one column')
        width = len(exprs[0])
        if any(len(row) != width for row in exprs):
            raise DimensionMismatch('matrix rows have different lengths')
        if domain is None:
            domain = QQ_I if any(is_gaussian(e) for row in exprs for e in row) else QQ
        elements = [[domain.from_sympy(e) for e in row] for row in exprs]
        return cls(DomainMatrix(elements, (len(exprs), width), domain))

    @classmethod
    def column(cls, values, domain=None):
        return cls.from_rows([[value] for value in values], domain=domain)

    @classmethod
    def identity(cls, n, domain=QQ):
        return cls(DomainMatrix.eye(n, domain))

    @classmethod
    def zeros(cls, rows, cols, domain=QQ):
        return cls(DomainMatrix.zeros((rows, cols), domain))

    @property
    def domain(self):
        return self.rep.domain

    @property
    def shape(self):
        return self.rep.shape

    @property
    def dim(self):
        self._check_square()
        return self.shape[0]

    def _check_square(self):
        rows, cols = self.shape
        if rows != cols:
            raise DimensionMismatch(f'matrix of shape {rows}x{cols} is not square')

    @property
    def is_square(self):
        return self.shape[0] == self.shape[1]

    @property
    def is_gaussian(self):
        return self.domain == QQ_I

    def rows(self):
        return self.rep.to_Matrix().tolist()

    def entry(self, i, j):
        return self.domain.to_sympy(self.rep[i, j].element)

    def column_values(self, j=0):
        return [row[j] for row in self.rows()]

    def _unify(self, other):
        if self.domain == other.domain:
            return self.rep, other.rep
        return self.rep.convert_to(QQ_I), other.rep.convert_to(QQ_I)

    def _check_same_shape(self, other):
        if self.shape != other.shape:
            raise DimensionMismatch(f'shapes {self.shape} and {other.shape} differ')

    def __matmul__(self, other):
        if self.shape[1] != other.shape[0]:
            raise DimensionMismatch(f'cannot multiply {self.shape} by {other.shape}')
        a, b = self._unify(other)
        return ExactMatrix(a.matmul(b))

    def __add__(self, other):
        self._check_same_shape(other)
        a, b = self._unify(other)
        return ExactMatrix(a + b)

    def __sub__(self, other):
        self._check_same_shape(other)
        a, b = self._unify(other)
        return ExactMatrix(a - b)

    def __neg__(self):
        return ExactMatrix(-self.rep)

    def __eq__(self, other):
        if not isinstance(other, ExactMatrix) or self.shape != other.shape:
            return False
        a, b = self._unify(other)
        return a == b

    def __hash__(self):
        return hash((self.shape, tuple(map(tuple, self.rows()))))

    def scale(self, value):
        value = exact_scalar(value)
        rep = self.rep
        if is_gaussian(value) and rep.domain == QQ:
            rep = rep.convert_to(QQ_I)
        return ExactMatrix(rep * rep.domain.from_sympy(value))

    def power(self, n):
        if n < 0:
            return self.inverse().power(-n)
        return ExactMatrix(self.rep ** n)

    def transpose(self):
        return ExactMatrix(self.rep.transpose())

    def conjugate(self):
        if self.domain == QQ:
            return self
        return ExactMatrix.from_rows(
            [[sympy.conjugate(e) for e in row] for row in self.rows()], domain=QQ_I)

    def conjugate_transpose(self):
        return self.conjugate().transpose()

    def kron(self, other):
        a, b = self.rows(), other.rows()
        (ra, ca), (rb, cb) = self.shape, other.shape
        rows = [[a[i // rb][j // cb] * b[i % rb][j % cb] for j in range(ca * cb)]
                for i in range(ra * rb)]
        gaussian = self.is_gaussian or other.is_gaussian
        return ExactMatrix.from_rows(rows, domain=QQ_I if gaussian else QQ)

    def extract(self, row_indices, col_indices):
        return ExactMatrix(self.rep.extract(list(row_indices), list(col_indices)))

    def hstack(self, *others):
        blocks = [self, *others]
        if any(block.shape[0] != self.shape[0] for block in blocks):
            raise DimensionMismatch('hstack needs equal row counts')
        gaussian = any(block.is_gaussian for block in blocks)
        rows = [sum((block.rows()[i] for block in blocks), []) for i in range(self.shape[0])]
        return ExactMatrix.from_rows(rows, domain=QQ_I if gaussian else QQ)

    def det(self):
        self._check_square()
        return self.domain.to_sympy(self.rep.det())

    def inverse(self):
        if self.det() == 0:
            raise NotInvertible('matrix has zero determinant')
        return ExactMatrix(self.rep.inv())

    def rank(self):
        return self.rep.rank()

    def is_zero(self):
        return all(e == 0 for row in self.rows() for e in row)

    def charpoly_coefficients(self):
        """Coefficients of det(xI - M), leading coefficient first."""
        self._check_square()
        return [self.domain.to_sympy(c) for c in self.rep.charpoly()]

    def max_digits(self):
        """Largest decimal digit count among numerators and denominators."""
        digits = 0
        for row in self.rows():
            for e in row:
                for part in e.as_real_imag():
                    digits = max(digits, _digits(part.p), _digits(part.q))
        return digits

    def to_numeric(self, ctx):
        matrix = ctx.matrix(*self.shape)
        for i, row in enumerate(self.rows()):
            for j, e in enumerate(row):
                matrix[i, j] = to_mp(ctx, e)
        return matrix

    def __repr__(self):
        return f'<ExactMatrix {self.shape[0]}x{self.shape[1]} over {self.domain}>'


def to_mp(ctx, value):
    """Exact sympy scalar to an mpmath number of ``ctx``."""
    re_part, im_part = sympy.sympify(value).as_real_imag()
    real = ctx.mpf(int(re_part.p)) / int(re_part.q)
    if im_part == 0:
        return real
    return ctx.mpc(real, ctx.mpf(int(im_part.p)) / int(im_part.q))
