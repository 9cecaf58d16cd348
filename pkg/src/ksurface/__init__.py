"""Construction of constant-curvature K = -1 surfaces from axis angle data.

The pipeline integrates two loop-valued linear ODEs built from the angle
functions on the coordinate axes, factorizes their product pointwise on the
grid, and reads the immersion off the factorized frame by differentiating
in the loop parameter.  A direct characteristic-rectangle solver of
``u_xy = sin u`` plus a fixed-parameter frame integration serve as an
independent oracle for the whole construction.
"""

__version__ = "0.1.0"
