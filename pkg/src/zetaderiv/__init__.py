"""Numerical tools for derivatives of zeta and Dirichlet L-functions near the 1-line.

Modules:

* :mod:`zetaderiv.arith_core` - sieves, factorization, friable integers
* :mod:`zetaderiv.dickman` - Dickman's function and its weighted moments
* :mod:`zetaderiv.characters` - Dirichlet character groups
* :mod:`zetaderiv.evaluators` - truncated Dirichlet-series evaluators
* :mod:`zetaderiv.resonance` - resonators, Gal sums and certificates
* :mod:`zetaderiv.scan` - extreme-value scans and envelopes
* :mod:`zetaderiv.cli` - command-line driver
"""

from .errors import CapacityError, DomainError, InvalidArgumentError, OutOfRangeError, ZetaDerivError

__version__ = "0.1.0"

__all__ = ["CapacityError", "DomainError", "InvalidArgumentError", "OutOfRangeError", "ZetaDerivError",
           "__version__"]
