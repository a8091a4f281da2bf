from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from kahler_dynamics.errors import ConfigValidationError


class ModelTag(str, Enum):
    TORUS = 'Torus'
    MAZUR = 'Mazur'
    RAW = 'Raw'


@dataclass
class GradedCohomologyAction:
    """Pullback f* on every H^{p,p}, with a Kahler class and optional cup product.

    ``cup[(p, q)]`` is the multiplication matrix of shape d_{p+q} x (d_p * d_q):
    the class alpha ∪ beta has coordinates cup[(p, q)] @ kron(alpha, beta).
    """
    k: int
    blocks: list                            # ExactMatrix per p = 0..k
    kahler_class: list                      # ExactMatrix column per p
    model_tag: ModelTag
    pushforward_blocks: Optional[list] = None
    cup: Optional[dict] = None
    sublattice: bool = False
    source: dict = field(default_factory=dict)

    def dimension(self, p):
        return self.blocks[p].dim

    @property
    def has_cup(self):
        return bool(self.cup)

    def kahler(self, p, field='options.p'):
        """omega^p as an exact column; Raw models may leave degrees without one."""
        if not 0 <= p <= self.k:
            raise ConfigValidationError(f'degree {p} outside 0..{self.k}', field=field)
        omega = self.kahler_class[p]
        if omega is None:
            raise ConfigValidationError(f'no Kahler class available in degree {p}', field=field)
        return omega

    def cup_matrix(self, p, q):
        if not self.cup:
            return None
        return self.cup.get((p, q))

    def __repr__(self):
        dims = [block.dim for block in self.blocks]
        return f'<GradedCohomologyAction {self.model_tag.value} k={self.k} dims={dims}>'


@dataclass
class TorusAutomorphism:
    k: int
    A: object                               # ExactMatrix over Gaussian integers

    def __repr__(self):
        return f'<TorusAutomorphism k={self.k}>'


@dataclass
class MazurModel:
    k: int
    generators: list                        # labels h1 .. h_{k+1}
    intersection_numbers: dict              # sorted k-tuple of indices -> integer
    involutions: list                       # ExactMatrix tau_i^* on span(h)
    word: tuple = ()

    @property
    def rank(self):
        return self.k + 1

    def __repr__(self):
        return f'<MazurModel k={self.k} word={self.word}>'
