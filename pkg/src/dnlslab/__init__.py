"""Numerical toolkit for solitons of derivative nonlinear Schroedinger equations.

Exact profiles, conserved quantities, the linearized spectrum, resolvent
kernels, approximate unstable profiles, the gauge transformation, time
integration and instability experiments.
"""
__version__ = "0.1.0"

from .grid import Grid, deriv, inner, l2_norm, min_length, prefix_integral, sobolev_norm, translate
from .solitons import (Equation, InadmissibleParameters, SolitonParams, TruncationWarning,
                       multi_profile, soliton_profile, stationary_residual, traveling_soliton,
                       validate_params)
from .conserved import (Verdict, action, d_matrix, energy, gss_classify, mass, momentum,
                        n_of_H, stability_report)
from .linearized import (Form, ResonanceError, SpectrumReport, Y_of_t, assemble_L, decay_fit,
                         eigen_spectrum, resolvent_solve)
from .helmholtz import conjugate_prime, convolve_kernel, g_mu, helmholtz_part_solve, kernel_spec
from .approx_profile import build_W, err_decay_fit, err_residual
from .gauge import GaugePair, from_gauge, gauge_nonlinearity, to_gauge
from .evolution import EvolutionConfig, Scheme, evolve_gauge, evolve_linearized, evolve_u
from .experiments import (MultiConfig, escape_experiment, interaction_decay,
                          modulation_distance, multi_escape_experiment,
                          multi_modulation_distance)
