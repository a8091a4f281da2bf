"""Constructors for graded cohomology actions: complex tori, Mazur hypersurfaces, raw matrices."""
from itertools import combinations, combinations_with_replacement
import logging
import warnings

import sympy

from kahler_dynamics.errors import (ConfigValidationError, CupIncompatible, DimensionMismatch, EmptyWord,
                                    ModelInconsistencyWarning, NotInvertible, NotUnitDeterminant)
from kahler_dynamics.models.cohomology import GradedCohomologyAction, MazurModel, ModelTag, TorusAutomorphism
from kahler_dynamics.models.matrix import ExactMatrix

logger = logging.getLogger(__name__)

UNITS = (1, -1, sympy.I, -sympy.I)


# Shared helpers

def _permutation_sign(first, second):
    """Sign of the shuffle sorting the concatenation first + second."""
    inversions = sum(1 for a in first for b in second if a > b)
    return -1 if inversions % 2 else 1


def compound_matrix(M, p):
    """p-th compound (matrix of p x p minors) of a square matrix, subsets in lexicographic order."""
    n = M.dim
    subsets = list(combinations(range(n), p))
    if p == 0:
        return ExactMatrix.from_rows([[1]], domain=M.domain)
    rows = [[M.extract(rows_, cols_).det() for cols_ in subsets] for rows_ in subsets]
    return ExactMatrix.from_rows(rows, domain=M.domain)


def cup_product(action, p, q, alpha, beta):
    """Class alpha ∪ beta in H^{p+q,p+q}."""
    Y = action.cup_matrix(p, q)
    if Y is None:
        return None
    return Y @ alpha.kron(beta)


def check_cup_compatibility(action):
    """Raise CupIncompatible unless f*(a ∪ b) = f*a ∪ f*b on every basis pair."""
    if not action.cup:
        return
    for (p, q), Y in sorted(action.cup.items()):
        lhs = action.blocks[p + q] @ Y
        rhs = Y @ action.blocks[p].kron(action.blocks[q])
        if lhs != rhs:
            raise CupIncompatible(f'pullback does not respect the cup product H^{p},{p} x H^{q},{q}')


def kahler_powers(action_cup, first, k):
    """Classes of omega^p for p = 0..k from omega and the cup structure."""
    classes = [ExactMatrix.from_rows([[1]], domain=first.domain), first]
    for p in range(2, k + 1):
        classes.append(action_cup[(1, p - 1)] @ first.kron(classes[p - 1]))
    return classes[:k + 1]


def inverse_action(action):
    """Action of f^-1: inverse blocks, with pullback and pushforward exchanged."""
    blocks = [block.inverse() for block in action.blocks]
    source = dict(action.source, inverse=not action.source.get('inverse', False))
    return GradedCohomologyAction(k=action.k, blocks=blocks, kahler_class=list(action.kahler_class),
                                  model_tag=action.model_tag, pushforward_blocks=list(action.blocks),
                                  cup=action.cup, sublattice=action.sublattice, source=source)


# Tori

def torus_automorphism(A):
    """Validate a Gaussian-integer matrix with unit determinant."""
    if not isinstance(A, ExactMatrix):
        A = ExactMatrix.from_rows(A)
    k = A.dim
    for row in A.rows():
        for value in row:
            if any(part.q != 1 for part in value.as_real_imag()):
                raise ConfigValidationError(f'torus matrix entry {value} is not a Gaussian integer',
                                            field='model.parameters.A')
    det = sympy.expand(A.det())
    if det not in UNITS:
        raise NotUnitDeterminant(f'det(A) = {det} is not a unit of Z[i]')
    return TorusAutomorphism(k=k, A=A)


def _torus_basis(k, p):
    subsets = list(combinations(range(k), p))
    return [(I, J) for I in subsets for J in subsets]


def _torus_cup(k, p, q):
    left, right, target = _torus_basis(k, p), _torus_basis(k, q), _torus_basis(k, p + q)
    index = {basis: i for i, basis in enumerate(target)}
    rows = [[0] * (len(left) * len(right)) for _ in target]
    for a, (I, J) in enumerate(left):
        for b, (K, L) in enumerate(right):
            if set(I) & set(K) or set(J) & set(L):
                continue
            sign = (-1) ** (p * q) * _permutation_sign(I, K) * _permutation_sign(J, L)
            key = (tuple(sorted(I + K)), tuple(sorted(J + L)))
            rows[index[key]][a * len(right) + b] = sign
    return ExactMatrix.from_rows(rows)


def torus_action(T):
    """f* on every H^{p,p} of C^k / Z[i]^k for f(z) = Az.

    H^{p,q} has basis dz_I ∧ dz̄_J ordered by (I, J); f* acts there as the
    Kronecker product of the p-th compound of A^T with its conjugate.
    """
    k = T.k
    At = T.A.transpose()
    blocks = []
    for p in range(k + 1):
        C = compound_matrix(At, p)
        blocks.append(C.kron(C.conjugate()))
    cup = {(p, q): _torus_cup(k, p, q) for p in range(k + 1) for q in range(k + 1 - p)}
    omega = ExactMatrix.column([1 if I == J else 0 for I, J in _torus_basis(k, 1)])
    kahler_class = kahler_powers(cup, omega, k)
    pushforward = [block.inverse() for block in blocks]
    action = GradedCohomologyAction(k=k, blocks=blocks, kahler_class=kahler_class, model_tag=ModelTag.TORUS,
                                    pushforward_blocks=pushforward, cup=cup,
                                    source={'A': [[str(v) for v in row] for row in T.A.rows()]})
    logger.info('built torus action %r', action)
    return action


def coefficient_matrix(vector, k):
    """Reshape an H^{1,1} class into its k x k Hermitian coefficient matrix."""
    return [[vector[i * k + j] for j in range(k)] for i in range(k)]


# Mazur hypersurfaces

def _intersection(indices, k):
    return 2 if len(indices) == k and len(set(indices)) == k else 0


def _squarefree_product(linear_forms):
    """Expand a product of linear forms in h_1..h_n modulo h_i^2 = 0.

    Each form maps generator index -> coefficient; the result maps sorted
    index tuples to coefficients.
    """
    product = {(): sympy.Integer(1)}
    for form in linear_forms:
        expanded = {}
        for monomial, coefficient in product.items():
            for index, weight in form.items():
                if weight == 0 or index in monomial:
                    continue
                key = tuple(sorted(monomial + (index,)))
                expanded[key] = expanded.get(key, 0) + coefficient * weight
        product = {key: value for key, value in expanded.items() if value != 0}
    return product


def _columns_as_forms(M):
    rows = M.rows()
    return [{i: rows[i][j] for i in range(len(rows))} for j in range(len(rows))]


def _push_pull_involution(k, i):
    n = k + 1
    columns = []
    for m in range(n):
        coefficients = [0] * n
        for j in range(n):
            if j == i:
                continue
            others = [l for l in range(n) if l not in (i, j)]
            coefficients[j] = _intersection(tuple(sorted([m] + others)), k)
        coefficients[m] -= 1
        columns.append(coefficients)
    return ExactMatrix.from_rows([[columns[c][r] for c in range(n)] for r in range(n)])


def _closed_form_involution(k, i):
    n = k + 1
    rows = [[1 if r == c else 0 for c in range(n)] for r in range(n)]
    for r in range(n):
        rows[r][i] = -1 if r == i else 2
    return ExactMatrix.from_rows(rows)


def mazur_involutions(k):
    """The k+1 covering involutions of a (2,...,2) hypersurface in (P^1)^{k+1}, on span(h_1..h_{k+1})."""
    if k < 2:
        raise ConfigValidationError('Mazur models need k >= 2', field='model.parameters.k')
    n = k + 1
    intersections = {indices: _intersection(indices, k)
                     for indices in combinations_with_replacement(range(n), k)}
    involutions = []
    for i in range(n):
        derived = _push_pull_involution(k, i)
        closed = _closed_form_involution(k, i)
        if derived != closed:
            raise ArithmeticError(f'push-pull and closed form disagree for tau_{i + 1}')
        involutions.append(derived)
    return MazurModel(k=k, generators=[f'h{i + 1}' for i in range(n)],
                      intersection_numbers=intersections, involutions=involutions)


def intersection_form_preserved(model, M):
    """Whether M preserves every k-fold intersection number of the generators."""
    forms = _columns_as_forms(M)
    for indices, value in model.intersection_numbers.items():
        product = _squarefree_product([forms[i] for i in indices])
        if 2 * sum(product.values()) != value:
            return False
    return True


class _NumericalSubring:
    """Degree-p classes spanned by squarefree monomials, modulo numerical equivalence."""

    def __init__(self, k):
        self.k = k
        self.n = k + 1
        self.monomials = {}
        self.basis = {}
        self.projection = {}
        for p in range(k + 1):
            self._build(p)

    def _build(self, p):
        k, n = self.k, self.n
        monomials = list(combinations(range(n), p))
        self.monomials[p] = monomials
        if p == 1:
            # degree one keeps the full span of the generators
            self.basis[p] = monomials
            self.projection[p] = ExactMatrix.identity(n)
            return
        duals = list(combinations(range(n), k - p))
        pairing = ExactMatrix.from_rows([[2 if not set(I) & set(J) else 0 for J in duals] for I in monomials])
        chosen = []
        for a in range(len(monomials)):
            if pairing.extract(chosen + [a], range(len(duals))).rank() == len(chosen) + 1:
                chosen.append(a)
        S_B = pairing.extract(chosen, range(len(duals)))
        gram = S_B @ S_B.transpose()
        self.basis[p] = [monomials[a] for a in chosen]
        self.projection[p] = gram.inverse() @ S_B @ pairing.transpose()

    def coordinates(self, p, polynomial):
        index = {monomial: i for i, monomial in enumerate(self.monomials[p])}
        vector = [0] * len(self.monomials[p])
        for monomial, coefficient in polynomial.items():
            vector[index[monomial]] += coefficient
        return self.projection[p] @ ExactMatrix.column(vector)

    def action(self, p, linear_action):
        forms = _columns_as_forms(linear_action)
        columns = [self.coordinates(p, _squarefree_product([forms[i] for i in monomial]))
                   for monomial in self.basis[p]]
        return columns[0].hstack(*columns[1:])

    def cup(self, p, q):
        left, right = self.basis[p], self.basis[q]
        columns = []
        for I in left:
            for J in right:
                product = {} if set(I) & set(J) else {tuple(sorted(I + J)): 1}
                columns.append(self.coordinates(p + q, product))
        return columns[0].hstack(*columns[1:])


def mazur_action(model, word=None):
    """Action of f = tau_{i1} o ... o tau_{il} on the numerical subring generated by h_1..h_{k+1}.

    Degrees computed from this action are sublattice values.
    """
    word = tuple(word if word is not None else model.word)
    if not word:
        raise EmptyWord('the involution word is empty')
    n = model.rank
    for index in word:
        if not 1 <= index <= n:
            raise ConfigValidationError(f'word index {index} outside 1..{n}', field='model.parameters.word')
    linear = ExactMatrix.identity(n)
    for index in word:
        linear = linear @ model.involutions[index - 1]

    ring = _NumericalSubring(model.k)
    blocks = [linear if p == 1 else ring.action(p, linear) for p in range(model.k + 1)]
    cup = {(p, q): ring.cup(p, q) for p in range(model.k + 1) for q in range(model.k + 1 - p)}
    omega = ExactMatrix.column([1] * n)
    kahler_class = kahler_powers(cup, omega, model.k)
    action = GradedCohomologyAction(k=model.k, blocks=blocks, kahler_class=kahler_class,
                                    model_tag=ModelTag.MAZUR,
                                    pushforward_blocks=[block.inverse() for block in blocks],
                                    cup=cup, sublattice=True, source={'k': model.k, 'word': list(word)})
    logger.info('built Mazur action %r (sublattice values)', action)
    return action


# Raw matrices

def raw_action(blocks, kahler_class=None, cup=None, pushforward=None):
    """Validate user-supplied per-degree matrices as a graded action."""
    blocks = [b if isinstance(b, ExactMatrix) else ExactMatrix.from_rows(b) for b in blocks]
    k = len(blocks) - 1
    if k < 1:
        raise DimensionMismatch('need blocks for p = 0..k with k >= 1')
    for p, block in enumerate(blocks):
        if not block.is_square:
            raise DimensionMismatch(f'block {p} has shape {block.shape}')
        if block.det() == 0:
            raise NotInvertible(f'block {p} is not invertible')
    for p in (0, k):
        if blocks[p].shape != (1, 1):
            raise DimensionMismatch(f'block {p} must be 1x1')
        if sympy.Abs(blocks[p].entry(0, 0)) != 1:
            warnings.warn(f'block {p} entry has modulus != 1; f is not an automorphism',
                          ModelInconsistencyWarning, stacklevel=2)

    cup_matrices = None
    if cup:
        cup_matrices = {}
        for (p, q), matrix in cup.items():
            Y = matrix if isinstance(matrix, ExactMatrix) else ExactMatrix.from_rows(matrix)
            if p + q > k:
                raise DimensionMismatch(f'cup ({p},{q}) lands above degree {k}')
            expected = (blocks[p + q].dim, blocks[p].dim * blocks[q].dim)
            if Y.shape != expected:
                raise DimensionMismatch(f'cup ({p},{q}) has shape {Y.shape}, expected {expected}')
            cup_matrices[(p, q)] = Y

    classes = [None] * (k + 1)
    for p, vector in enumerate(kahler_class or []):
        if vector is None:
            continue
        column = vector if isinstance(vector, ExactMatrix) else ExactMatrix.column(vector)
        if column.shape != (blocks[p].dim, 1):
            raise DimensionMismatch(f'Kahler class {p} has length {column.shape[0]}, expected {blocks[p].dim}')
        classes[p] = column
    if classes[0] is None:
        classes[0] = ExactMatrix.from_rows([[1]])

    if cup_matrices and classes[1] is not None and all((1, p - 1) in cup_matrices for p in range(2, k + 1)):
        powers = kahler_powers(cup_matrices, classes[1], k)
        for p in range(k + 1):
            if classes[p] is None:
                classes[p] = powers[p]
            elif classes[p] != powers[p]:
                raise CupIncompatible(f'Kahler class {p} is not the cup power of the degree-1 class')

    pushforward_blocks = None
    if pushforward:
        pushforward_blocks = [b if isinstance(b, ExactMatrix) else ExactMatrix.from_rows(b) for b in pushforward]
        if [b.shape for b in pushforward_blocks] != [b.shape for b in blocks]:
            raise DimensionMismatch('pushforward blocks must match the pullback block shapes')

    action = GradedCohomologyAction(k=k, blocks=blocks, kahler_class=classes, model_tag=ModelTag.RAW,
                                    pushforward_blocks=pushforward_blocks, cup=cup_matrices)
    check_cup_compatibility(action)
    return action
