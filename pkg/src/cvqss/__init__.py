"""Rate calculator for continuous-variable secret sharing over lossy networks.

Subpackages by role:

* :mod:`cvqss.gaussian` - covariance-matrix algebra (hbar = 2, XPXP order)
* :mod:`cvqss.graphs` - graph-state sources and offline-squeezing budgets
* :mod:`cvqss.networks` - lossy-network scenario covariance builders
* :mod:`cvqss.asymptotic` - asymptotic key rates and benchmark curves
* :mod:`cvqss.estimation` - binned parameter-estimation statistics
* :mod:`cvqss.montecarlo` - counter-based sampling oracle
* :mod:`cvqss.finite` - composable finite-size key lengths
* :mod:`cvqss.sweeps` - distance sweeps, crossovers and advantage regions
* :mod:`cvqss.service` - FastAPI wrapper
* :mod:`cvqss.cli` - command-line client
"""

__version__ = "0.1.0"
