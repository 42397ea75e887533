"""Two-mode pseudo-bosons: exact operator algebra, Gaussian integrals and a verification suite."""

from .errors import (
    AssumptionViolation,
    DegreeGuardError,
    DimensionError,
    ExpressionError,
    IntegrabilityError,
    MomentCapError,
    NumericalConsistencyError,
    ParameterError,
    PseudoBosonError,
    SingularParameterError,
)
from .gauss_integrals import gaussian_base_integral, gram_matrix, inner_product, integrate_polygauss, norm
from .models import (
    Ex1Params,
    Ex2Params,
    Ex3Params,
    LadderFamily,
    ModelBundle,
    build_example1,
    build_example2,
    build_example3,
    build_model,
    generate_family,
    solve_vacuum,
)
from .polygauss import CPoly, GaussEnvelope, PolyGaussFun, PolyGaussTerm
from .verify import CheckResult, Report, run_suite
from .weyl import ExpLinOp, WeylOp, w_adjoint, w_apply, w_commutator, w_compose, w_from_xp

__version__ = "0.1.0"
