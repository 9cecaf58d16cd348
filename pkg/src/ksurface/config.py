"""Shared numerical defaults and tolerances.

The structural tolerances (twist, exact algebra identities) are separated
from the looser geometric ones so that a drifting ODE integration cannot be
confused with a broken algebraic identity.
"""

# Truncation degree of all Laurent-polynomial loops.  Coefficients produced
# by the path integrations decay factorially, so 16 keeps the dropped tail
# below 1e-10 on desk-scale domains (|x|, |y| <= 3).
TRUNCATION_DEGREE = 16

# Real evaluation points for the loop parameter.  The factorization theory
# used here is for a real parameter, so only positive reals appear.
LAMBDA_SAMPLES = (0.5, 1.0, 2.0)

# Structural (exact arithmetic) tolerance: twist pattern, enforced zeros.
TWIST_TOL = 1e-12

# Unitarity of evaluated frames: warn when drift passes the first level,
# abort at the second.  Drift indicates the truncation degree is too low
# for the domain size, not a bug in the algebra.
UNITARITY_WARN = 1e-6
UNITARITY_ABORT = 1e-3

# Pointwise determinant check used before inverting an evaluated frame.
DET_TOL = 1e-6

# Factorization acceptance: outside these bounds the input is treated as
# lying outside the dense "big cell" and the grid node is skipped.
BIG_CELL_RESIDUAL_TOL = 1e-6
BIG_CELL_CONDITION_MAX = 1e8

# Norm of the top-degree coefficient above which a path integration warns
# that the truncation window is saturated.
TOP_DEGREE_NORM_TOL = 1e-8

# |sin(angle)| below which a node counts as angle-singular (the immersion
# degenerates where the coordinate angle hits 0 or pi).
ANGLE_SINGULAR_SIN_TOL = 1e-3

# Curvature and second-form estimates divide by sin(angle)^2; below this
# the finite-difference noise is amplified past usefulness and the node is
# masked out of form reports.
FORM_CONDITION_SIN_MIN = 0.1

# Direct Goursat solver: fixed-point iteration control and the internal
# grid refinement.  With step-halving extrapolation (the default) this
# refinement already puts the field error near 1e-7 at desk scale.
GOURSAT_TOL = 1e-12
GOURSAT_MAX_ITER = 200
GOURSAT_REFINE = 8

# Reference frame integration: substeps per grid cell and the allowed
# discrepancy between integration orders (flatness check).
LAX_SUBSTEPS = 2
FLATNESS_TOL = 1e-6
