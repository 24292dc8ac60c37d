"""teichlab: a numerical laboratory for translation flows.

Renormalization of interval exchanges (Rauzy-Veech induction, Zorich
acceleration), the Kontsevich-Zorich cocycle and its Lyapunov spectrum,
flat surfaces with straight-line flows, weighted Sobolev analysis and
small-divisor solvers on the flat torus, and ergodic-integral machinery
(trajectory splitting, deviation exponents, Gottschalk-Hedlund averages).
"""

__version__ = "0.1.0"

from . import cocycle, ergodic, errors, iet, spectral, surface  # noqa: F401
