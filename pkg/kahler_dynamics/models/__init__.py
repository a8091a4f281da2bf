from kahler_dynamics.models.matrix import ExactMatrix
from kahler_dynamics.models.spectral import JordanData, ThetaGroup, ThetaKind
from kahler_dynamics.models.cohomology import GradedCohomologyAction, MazurModel, ModelTag, TorusAutomorphism
from kahler_dynamics.models.degrees import DegreeProfile, RelativeDegreeProfile
from kahler_dynamics.models.iteration import GreenLimit, HolderEstimate, IterationSetup
from kahler_dynamics.models.correlation import CorrelationReport, TrigPolynomial
