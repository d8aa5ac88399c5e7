"""Crosstalk-tolerant SPADE hypothesis test for one-vs-two source discrimination."""

__version__ = "0.1.0"

from .crosstalk import CrosstalkMatrix, apply, identity, symmetric
from .information import (advantage_ratio, bernoulli_relative_entropy, crosstalk_threshold,
                          di_relative_entropy, entropy_report, photon_budget_ratio,
                          quantum_relative_entropy, spade_relative_entropy_approx,
                          spade_relative_entropy_exact, vacuum_corrected_spade_entropy)
from .scene import (Alignment, Formulation, Hypothesis, Order, OutcomeDistribution,
                    SourceScene, gamma_coefficient, second_moment, spade_probabilities)
from .simulate import (FixedWindowConfig, TrialBatch, estimate_error_rates,
                       simulate_direct_imaging, simulate_fixed_n, simulate_fixed_window)
from .testing import (TestSpec, analytic_threshold, calibrated_threshold, decide,
                      di_beta_theory, estimate_crosstalk, k_alpha, spade_beta_no_crosstalk,
                      spade_beta_theory)
