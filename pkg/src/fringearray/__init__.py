"""Noise-robust interference patterns from arrays of matter-wave interferometers.

Subpackages:

* ``wavepacket``  -- closed-form single-device physics (cat-state densities,
  the canonical fringe family, shot-averaged forms);
* ``noisefield``  -- stochastic acceleration fields, their multipole
  expansion, displacement functionals and point-mass scenario arithmetic;
* ``array``       -- binomial difference variables and the pattern recursion;
* ``montecarlo``  -- reproducible shot-by-shot experiment simulation,
  histograms and fringe-visibility fits;
* ``oracle``      -- first-principles split-step grid evolution used to
  validate the closed forms;
* ``entangle``    -- the entanglement-protection protocol over pairs of
  interferometers (dephasing averages, logarithmic negativity);
* ``cli``         -- the ``fringearray`` command-line interface.
"""

from . import array, cli, entangle, montecarlo, noisefield, oracle, wavepacket
from ._kernels import backend as kernel_backend

__version__ = "0.1.0"

__all__ = [
    "array",
    "cli",
    "entangle",
    "montecarlo",
    "noisefield",
    "oracle",
    "wavepacket",
    "kernel_backend",
    "__version__",
]
