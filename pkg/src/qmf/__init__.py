"""Exact quasimodular form arithmetic on Gamma0(N).

Subpackages build on each other roughly in this order: exact scalars,
Dirichlet characters, q-series, Eisenstein atoms, newforms, graded bases
and decomposition, prime-detecting series, and the command line front end.
"""

from .exact import CycNumber, bernoulli, cyc_embed
from .qseries import EtaProduct, QSeries, apply_D, dilate, eta_expand, series_mul

__all__ = [
    "CycNumber",
    "EtaProduct",
    "QSeries",
    "apply_D",
    "bernoulli",
    "cyc_embed",
    "dilate",
    "eta_expand",
    "series_mul",
]
