"""Perturbation series, resummation and verification for strongly damped forced oscillators."""

from .errors import *  # noqa: F401,F403
from .fourier import (FrequencyVector, TrigSeries, convolve, diophantine_scan, evaluate,
                      exponential_forcing, trig_forcing)
from .formal import (NonlinearitySpec, ProblemSpec, SeriesExpansion, formal_orders,
                     growth_diagnostic, support_check)
from .resummation import evaluate_solution, residual, resummed_orders
from .trees import enumerate_trees, sum_class
from .borel import asymptoticity_check, borel_pade_sum, borel_transform, laplace_sum, pade
from .oracle import find_periodic_orbit, integrate, quasi_periodic_probe
from .multiscale import (ScalePartition, assign_scale, bound_lemma_audit, counterterms,
                         default_partition, qp_resummed_orders, renormalized_propagator)

__version__ = "0.1.0"
