from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
import math
from typing import Optional


class ThetaKind(str, Enum):
    TRIVIAL = 'Trivial'
    FINITE_CYCLIC = 'FiniteCyclic'
    POSITIVE_DIMENSIONAL = 'PositiveDimensional'


@dataclass(frozen=True)
class ThetaGroup:
    kind: ThetaKind
    order: Optional[int] = None

    @classmethod
    def from_orders(cls, orders):
        """Closure of the group generated by dominant angles with the given root orders.

        ``None`` marks an angle that is not a rational multiple of 2*pi.
        """
        if any(order is None for order in orders):
            return cls(ThetaKind.POSITIVE_DIMENSIONAL)
        total = 1
        for order in orders:
            total = total * order // math.gcd(total, order)
        if total == 1:
            return cls(ThetaKind.TRIVIAL, 1)
        return cls(ThetaKind.FINITE_CYCLIC, total)

    @property
    def is_trivial(self):
        return self.kind is ThetaKind.TRIVIAL

    def to_dict(self):
        data = {'kind': self.kind.value}
        if self.order is not None:
            data['order'] = self.order
        return data

    def __str__(self):
        if self.kind is ThetaKind.FINITE_CYCLIC:
            return f'FiniteCyclic({self.order})'
        return self.kind.value


@dataclass
class IrreducibleFactor:
    """Monic irreducible factor of a characteristic polynomial."""
    coefficients: list          # sympy scalars, leading first
    multiplicity: int
    block_sizes: list           # Jordan block sizes attached to each root
    nullity_chain: list         # per-root nullities of q(M)^j, j = 0, 1, ...
    real_roots: int = 0         # certified count, rational factors only

    @property
    def degree(self):
        return len(self.coefficients) - 1


@dataclass
class JordanBlock:
    eigenvalue: object          # mpc / mpf at the working precision
    size: int
    factor_index: int
    root_index: int
    modulus: object
    angle: object = None        # angle of eigenvalue / spectral radius, in [0, 2pi)
    angle_fraction: Optional[Fraction] = None   # angle / 2pi when a root of unity
    root_order: Optional[int] = None


@dataclass
class JordanData:
    dim: int
    precision: int
    spectral_radius: object
    multiplicity: int
    blocks: list
    dominant_indices: list
    theta_group: ThetaGroup
    factors: list = field(default_factory=list)
    ctx: object = field(default=None, repr=False, compare=False)

    @property
    def nu(self):
        return len(self.dominant_indices)

    @property
    def dominant_blocks(self):
        return [self.blocks[i] for i in self.dominant_indices]

    @property
    def theta(self):
        return [block.angle for block in self.dominant_blocks]

    def dominant_eigenvalues(self):
        """Distinct dominant eigenvalues as (representative block, count)."""
        seen = {}
        for block in self.dominant_blocks:
            key = (block.factor_index, block.root_index)
            if key in seen:
                seen[key][1] += 1
            else:
                seen[key] = [block, 1]
        return [tuple(entry) for entry in seen.values()]

    def __repr__(self):
        return f'<JordanData dim={self.dim} lambda={self.spectral_radius} m={self.multiplicity} Theta={self.theta_group}>'


@dataclass
class CharPoly:
    coefficients: list          # sympy scalars, leading first
    content: object
    factors: list               # (monic coefficient list, multiplicity)
    gaussian: bool = False

    def as_expr(self, x):
        degree = len(self.coefficients) - 1
        return sum(c * x ** (degree - i) for i, c in enumerate(self.coefficients))


@dataclass
class AsymptoticReport:
    n_values: list
    normalized_norms: list
    fitted_rate: Optional[float]
    rate_kind: str
    geometric_ratio: Optional[float] = None
    deviations: list = field(default_factory=list)
    bounds: tuple = (None, None)


@dataclass
class LimitOperators:
    limit: object               # Lambda_infinity, mp matrix
    averaged_limit: object      # pi o Lambda_infinity
    averaged_rank: int
    strict_dimension: int       # dim F', number of dominant blocks with theta = 0
    rate: dict
    averaged_rate: dict
    twisted_deviations: list = field(default_factory=list)
    averaged_deviations: list = field(default_factory=list)
    residue_limits: Optional[dict] = None


@dataclass
class SpectralProjector:
    eigenvalue: object
    block: JordanBlock
    projector: object           # mp matrix onto the generalized eigenspace
    nilpotent: object           # (M - mu) P
    rank: int


@dataclass
class PerronFrobeniusReport:
    cone_preserved: bool
    eigenvalue: object
    eigenvector: object
    generator_coordinates: list
    nonnegative: bool
    residual: object
    falsified: bool = False
    reason: Optional[str] = None
