from dataclasses import dataclass, field
from typing import Optional

from kahler_dynamics.models.cohomology import ModelTag


@dataclass
class DegreeSequence:
    p: int
    n_values: list
    norms: list                 # d_{p,n}
    normalized: list            # d_{p,n} / (n^(l_p - 1) d_p^n)
    roots: list                 # d_{p,n}^(1/n)
    fitted_degree: Optional[float] = None


@dataclass
class DegreeProfile:
    degrees: list
    multiplicities: list
    entropy: object
    plateau: tuple
    model_tag: ModelTag = ModelTag.RAW
    sublattice: bool = False
    precision: int = 128
    jordan: list = field(default_factory=list, repr=False)

    @property
    def k(self):
        return len(self.degrees) - 1


@dataclass
class ConcavityReport:
    concave: bool
    margins: list               # d_p^2 - d_{p-1} d_{p+1}, p = 1..k-1
    ratios: list                # d_{p-1} / d_p, p = 1..k
    violations: list
    severity: Optional[str] = None


@dataclass
class RelativeDegreeProfile:
    T_class: list
    s: int
    lambda_T: object
    relative_degrees: list      # lambda_p(T), p = 1..k-s
    relative_multiplicities: list
    quotient_dimensions: list
    eigen_residual: object = None
    lower_bound_holds: Optional[bool] = None
    top_relation: object = None     # lambda_T * lambda_{k-s}(T)

    def degree(self, p):
        return self.relative_degrees[p - 1]


@dataclass
class SubmultiplicativityReport:
    p1: int
    p2: int
    margin: object
    holds: bool
    flagged: bool


@dataclass
class CesaroReport:
    s: int
    limit: object
    n_values: list
    deviations: list
    rate: dict
    kernel_deviation: object
    eigen_residual: object
    degree: object
    multiplicity: int


@dataclass
class DegreeChainReport:
    applicable: bool
    m: Optional[int] = None
    ratios: dict = field(default_factory=dict)          # s -> d_m / d_{k-s+m}
    inverse_lower_bounds: dict = field(default_factory=dict)   # s -> ratio^(1/(k-s))
    chain_holds: Optional[bool] = None
    reason: Optional[str] = None
