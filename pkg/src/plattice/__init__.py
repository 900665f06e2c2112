"""Pseudo-lattice detection for subspace-aligned interference in a 3-user
MIMO interference network.

Library layout:

* :mod:`plattice.numerics` -- complex matrix helpers and tolerance config
* :mod:`plattice.lattice` -- real embedding, LLL, Babai, brute-force CVP
* :mod:`plattice.constellation` -- gray-coded square QAM
* :mod:`plattice.network` -- channels, aligned precoders, transmission
* :mod:`plattice.pseudolattice` -- receiver-1 channel transformation
* :mod:`plattice.detectors` -- ZF / ML / pseudo-lattice receivers
* :mod:`plattice.analysis` -- analytic error predictors, noise decomposition
* :mod:`plattice.harness` -- seeded Monte-Carlo sweeps and CSV output
"""

__version__ = "0.1.0"
