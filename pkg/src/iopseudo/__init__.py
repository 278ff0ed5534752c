"""Input-output pseudospectra and transient bounds.

Given a stable linear system ``xi' = A xi + B u, y = C xi`` the package
bounds the transient peak ``sup_t ||C e^{tA} B||`` from below by a Kreiss
constant and from above by contour and frequency-axis integrals of the
transfer matrix. Vehicle platoons of any length are handled through an
O(n) banded resolvent.
"""

from .bounds import (AxisBound, BoundReport, ContourBound, DecayEstimate, KreissResult,
                     KreissSearch, SemicircleBound, axis_integral, classic_kreiss_bounds,
                     compute_bounds, estimate_decay, io_poles, kreiss_constant, lower_bound,
                     upper_bound_axis, upper_bound_contour, upper_bound_semicircle)
from .errors import (CurveOpen, DecayTooSlow, DegenerateCurve, DimensionMismatch, EmptyLevel,
                     HorizonTooShort, InvalidA, InvalidSpec, IOPseudoError, NotBracketed,
                     NotConverged, NotEnclosing, Overflow, QuadratureFail, SingularMatrix,
                     Unbounded)
from .linalg import (BandedMatrix, NormKind, induced_norm, matrix_exponential, solve_banded,
                     solve_dense)
from .oracle import HorizonConfig, TransientTrace, check_laplace_identity, transient_sup
from .pseudospectra import (AbscissaSearch, GridSpec, LevelCurve, ResolventGrid, circle_contour,
                            convex_hull, evaluate_grid, extract_level_curves, pseudo_abscissa,
                            resolvent_norm_at, resolvent_norms)
from .quadrature import QuadratureConfig, adaptive_simpson
from .systems import (FullInitialCondition, Impulse, MatrixPolynomialSystem, NetworkSystem,
                      PlatoonSpec, SecondOrderNetwork, StateSpaceSystem,
                      StructuredInitialCondition, build_platoon, companion_embed, example1,
                      example2, load_system, resolvent_apply, save_system, scenario_matrices)

__version__ = "0.1.0"
