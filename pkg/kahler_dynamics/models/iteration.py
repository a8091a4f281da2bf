from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass
class IterationSetup:
    """A Lipschitz self-map of the real d-torus sampled on a uniform grid, with u and Lambda.

    ``indices`` holds the integer grid coordinates of every sample point
    (shape points x d); ``u`` holds the values of u there (points x dim E).
    """
    G: np.ndarray                   # integer matrix of g(x) = Gx mod 1
    axis_points: int
    u: np.ndarray
    nu: float
    Lambda: object                  # ExactMatrix acting on E
    jordan: object                  # JordanData of Lambda
    power: int = 1
    indices: np.ndarray = field(default=None, repr=False)

    @property
    def dimension(self):
        return self.G.shape[0]

    @property
    def shape(self):
        return (self.axis_points,) * self.dimension

    @property
    def points(self):
        return self.axis_points ** self.dimension

    @property
    def lipschitz(self):
        return float(np.abs(self.G).sum(axis=1).max())

    @property
    def spectral_radius(self):
        return float(self.jordan.spectral_radius)

    def __repr__(self):
        return f'<IterationSetup d={self.dimension} N={self.axis_points} dimE={self.u.shape[1]} power={self.power}>'


@dataclass
class HolderEstimate:
    exponent: float
    constant: float
    pairs_used: int
    admissible_bound: Optional[float]
    scales: list                    # separations h = 2^-j
    sup_differences: list
    degenerate: bool = False

    @property
    def within_bound(self):
        if self.admissible_bound is None:
            return None
        return self.exponent <= self.admissible_bound + 0.1


@dataclass
class IterationResult:
    n_values: list
    N_values: list
    twisted_deviations: list        # ||exp(-in theta) v_n - v||_inf
    cesaro_deviations: list         # ||w_N - w||_inf
    v: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)
    v_last: np.ndarray = field(repr=False)
    w_last: np.ndarray = field(repr=False)
    rate: dict = field(default_factory=dict)
    cesaro_rate: dict = field(default_factory=dict)
    twist_consistent: Optional[bool] = None
    series_terms: int = 0


@dataclass
class GreenLimit:
    mode: str                       # PlainLimit | CesaroOnly
    degree: object                  # d_1
    theta_group: object
    limit_class: object             # plain limit, or the averaged limit in CesaroOnly mode
    averaged_class: object
    eigen_residual: object
    coefficient_eigenvalues: list
    positive: bool
    rate: dict
    samples: list = field(default_factory=list)     # subsequential limits {n, target, vector, deviation}
    separation: Optional[float] = None


@dataclass
class RecurrenceRelation:
    m: int
    coefficients: list              # a_0 .. a_{m-1}: (f^m)^*w = sum_j a_j (f^j)^*w
    companion: object               # ExactMatrix, ones on the subdiagonal, a_j in the last column
    spectral_radius: object
    degree: object
    matches_degree: bool
    nu: int = 1
    charpoly_matches: Optional[bool] = None
