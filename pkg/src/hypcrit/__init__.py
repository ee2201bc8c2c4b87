"""Desk-scale numerical laboratory for critical exponents of group actions
on Gromov-hyperbolic model spaces.

Two concrete model spaces are supported: weighted regular trees (exact
rational arithmetic, the oracle side) and the hyperbolic upper half-plane
(floating point, tolerance 1e-9). On top of them the package enumerates
orbit balls, estimates critical exponents and covering entropy, builds
atomic Patterson-Sullivan proxy measures on the boundary, audits the
standard explicit hyperbolic-geometry inequalities, and runs continuity
experiments for the critical exponent under equivariant pointed
Gromov-Hausdorff convergence of actions.
"""

__version__ = "0.1.0"

from .space import ModelSpace, TreePoint, PlanePoint, Ray, distance, geodesic_point, gromov_product
from .isometries import (
    PlaneIsometry,
    SchottkyDescription,
    TreeIsometry,
    apply_isometry,
    certify_ping_pong,
    compose,
    schottky_pair,
    translation_length,
)
from .orbits import (
    GroupAction,
    OrbitBall,
    enumerate_orbit_ball,
    measure_systole,
    schottky_action,
    sigma_R,
    tree_action,
)
from .entropy import (
    EntropyEstimate,
    covering_entropy_estimate,
    equidistribution_constant,
    estimate_critical_exponent,
    poincare_partial,
)
from .boundary import (
    check_ahlfors_regularity,
    check_quasiconformality,
    check_shadow_ball_lemma,
    limit_set_sample,
    patterson_sullivan_atoms,
    visual_distance,
)
from .geometry_checks import SamplingPlan, check_geodesic_lemmas
from .convergence import (
    ContinuityConfig,
    run_continuity_experiment,
    search_witness,
    snapshot,
    verify_witness,
)
