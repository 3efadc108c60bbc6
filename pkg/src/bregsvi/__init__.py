"""Bregman extragradient solvers for stochastic variational inequalities.

Typical use::

    from bregsvi import Algorithm1, Algorithm1Config, Euclidean, NashCournot, NashSchedule

    prob = NashCournot(I=10, J=10)
    cfg = Algorithm1Config(schedule=NashSchedule(), linesearch_sample="current")
    result = Algorithm1(prob, prob.feasible_set, Euclidean(2.0), cfg,
                        x_star=prob.reference_solution()).run()
"""
from .bregman import (BregmanEvaluation, DistanceGenerator, Euclidean, PNorm, ShiftedEntropy, bregman_distance,
                      prox_map, s_value, three_point_identity_check)
from .errors import *  # noqa: F401,F403
from .metrics import (CSV_COLUMNS, IterationRecord, fit_rate, gap_function, natural_residual, relative_error,
                      running_min, vrf)
from .oracle import (Constant, DeterministicOracle, LogPower, NashSchedule, Power, Power08, Power32, SampleStream,
                     StochasticOracle, empirical_mean)
from .problems import AffineProblem, FractionalProblem, NashCournot, affine_test_problem
from .sets import Box, FeasibleSet, L1Ball, PolyhedronCapL1, Product, Simplex
from .solvers import (EGLS, MPSA, Algorithm1, Algorithm1Config, DeterministicConfig, DeterministicEG, EGLSConfig,
                      MPSAConfig, deterministic_extragradient)

__version__ = "0.1.0"
