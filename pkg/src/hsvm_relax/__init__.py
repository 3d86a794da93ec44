"""Large-margin classification on the Lorentz model of hyperbolic space.

Three training routes share one objective: projected gradient descent, a
Shor semidefinite relaxation and a sparse moment relaxation. The
relaxations also report a lower bound, so the relative gap certifies how
close the recovered separator is to optimal.
"""

__version__ = "0.1.0"
