from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import sympy


@dataclass
class TrigPolynomial:
    """Finite sum of characters e_m(x) = exp(2 pi i <m, x>) on the real torus R^d / Z^d."""
    dimension: int
    terms: dict = field(default_factory=dict)     # frequency tuple -> exact coefficient
    label: str = ''

    @classmethod
    def character(cls, frequency, coefficient=1, label=''):
        frequency = tuple(int(m) for m in frequency)
        return cls(len(frequency), {frequency: sympy.sympify(coefficient)}, label or f'e{list(frequency)}')

    @classmethod
    def cosine(cls, frequency, amplitude=1, label=''):
        """a cos(2 pi <m, x>) = (a/2)(e_m + e_-m)."""
        frequency = tuple(int(m) for m in frequency)
        half = sympy.sympify(amplitude) / 2
        polynomial = cls(len(frequency), label=label or f'cos{list(frequency)}')
        polynomial.add(frequency, half)
        polynomial.add(tuple(-m for m in frequency), half)
        return polynomial

    def add(self, frequency, coefficient):
        value = self.terms.get(frequency, 0) + coefficient
        if value == 0:
            self.terms.pop(frequency, None)
        else:
            self.terms[frequency] = value

    def __add__(self, other):
        total = TrigPolynomial(self.dimension, dict(self.terms), self.label or other.label)
        for frequency, coefficient in other.terms.items():
            total.add(frequency, coefficient)
        return total

    @property
    def mean(self):
        return self.terms.get((0,) * self.dimension, sympy.Integer(0))

    @property
    def max_frequency(self):
        return max((max(abs(m) for m in frequency) for frequency in self.terms), default=0)

    def nonconstant(self):
        return {f: c for f, c in self.terms.items() if any(f)}

    def sample(self, axis_points):
        """Values on the grid (Z/N)^d / N, array of shape (N,) * d."""
        axes = np.meshgrid(*[np.arange(axis_points)] * self.dimension, indexing='ij')
        values = np.zeros((axis_points,) * self.dimension, dtype=np.complex128)
        for frequency, coefficient in self.terms.items():
            phase = sum(int(m) * axis for m, axis in zip(frequency, axes)) % axis_points
            values += complex(coefficient) * np.exp(2j * np.pi * phase / axis_points)
        return values

    def __repr__(self):
        return f'<TrigPolynomial {self.label or ""} d={self.dimension} terms={len(self.terms)}>'


@dataclass
class CoincidenceSearch:
    frequency: tuple
    target: tuple
    coincidences: list              # n with B^n m = -m'
    escaped_at: Optional[int]       # n past which no coincidence occurs, None if the search hit its limit
    hyperbolic: bool
    certified: bool = False         # escape from the expansion bound rather than a growth streak

    @property
    def last_coincidence(self):
        return self.coincidences[-1] if self.coincidences else None


@dataclass
class CorrelationReport:
    pairs: list                     # (test function id, test function id)
    n_values: list
    values: list                    # C_n, exact numbers or floats
    decay_flag: bool
    mode: str                       # exact | grid
    last_coincidence: Optional[int] = None
    alias_limit: Optional[int] = None   # last n safe from aliasing on the grid
    norm_bound: Optional[float] = None  # ||phi||_2 ||psi||_2
    axis_points: Optional[int] = None


@dataclass
class ErgodicReport:
    N_values: list
    averages: list                  # (1/N) sum_{j<=N} <(phi o f^j) psi>
    constant: object                # max N |A_N|
    converges: bool
    exact: bool = True
