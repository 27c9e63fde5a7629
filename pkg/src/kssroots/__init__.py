"""Real-root statistics of Kostlan-Shub-Smale random polynomials.

Analytic side: the scaled covariance kernel, the two-point Rice integrand,
the finite-degree variance and the asymptotic variance constant (direct
quadrature and Hermite/Mehler series).  Empirical side: reproducible Monte
Carlo with grid and Sturm root counters.
"""

from .errors import ConvergenceError, DomainError, NumericalError

__version__ = "0.1.0"

__all__ = ["ConvergenceError", "DomainError", "NumericalError", "__version__"]
