"""Moments of random simplex volumes in convex bodies, shadow systems and related planar geometry."""

from ._validation import (
    ChordMissError,
    ChordTangentError,
    ConvergenceError,
    DegenerateHullError,
    GeometryError,
)
from .bodies import (
    Ball,
    Chord,
    Ellipsoid,
    InscribedTriangle,
    Polygon,
    Simplex,
    affine_apply,
    chord,
    directional_functionals,
    make_polygon,
    max_inscribed_triangle,
    polar_dual,
    polygon_measures,
    random_polygon,
    regular_polygon,
    standard_body,
    steiner_symmetral,
)
from .derived import (
    SupportSampledBody,
    busemann_formula_residual,
    centroid_body,
    intersection_body_area,
    petty_product,
    projection_body,
)
from .john import Ellipse, JohnEllipse, john_ellipse
from .moments import (
    FunctionalSpec,
    IsotropicPosition,
    MomentEstimate,
    MomentEstimator,
    ball_moment,
    estimate_moment,
    estimate_moment_split,
    first_moment_quadrature,
    identity_report,
    isotropy_constant,
    kappa,
    reed_moment,
    simplex_second_moment_bound,
)
from .sampling import SampleStream, sample, simplex_volume
from .shadow import (
    BasicSystem,
    BMBracket,
    ShadowSystem,
    basic_system,
    bm_triangle_bracket,
    convexity_profile,
    family_generator,
    reduce_to_triangle,
    shadow_eval,
    steiner_shadow,
)

__version__ = "0.1.0"
