"""Dictionary-based unrolled denoisers inside forward-backward PnP solvers.

Subpackages by theme: ``linops`` (operators and spectral norms), ``prox``
(proximity operators and Moreau envelopes), ``denoisers`` (unrolled
analysis/synthesis denoisers), ``solvers`` (plug-and-play outer loops,
reference schemes, smoothed bi-level schemes), ``dictlearn`` (supervised
dictionary training through the unrolled layers), ``experiments`` (study
drivers and instance generation), ``cli`` (command-line front end).
"""

from . import denoisers, dictlearn, experiments, linops, prox, rng, solvers

__version__ = "0.1.0"

__all__ = [
    "denoisers",
    "dictlearn",
    "experiments",
    "linops",
    "prox",
    "rng",
    "solvers",
    "__version__",
]
