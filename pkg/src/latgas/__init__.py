"""Kinetically constrained exclusion processes on the discrete torus.

Subpackages by task: ``latgas.lattice`` (configurations and counts),
``latgas.models`` (rate families and gradient potentials),
``latgas.identities`` (exact verification of the combinatorial structure),
``latgas.graph`` (finite state-space analysis), ``latgas.simulate``
(event-driven kinetic Monte Carlo; imports numba, so it is not re-exported
here), ``latgas.hydro`` (reference PDE solver and profile comparison) and
``latgas.cli`` (the ``latgas`` command).
"""

from .lattice import (
    Configuration,
    Window,
    box_count,
    enumerate_configurations,
    format_configuration,
    occupancy,
    parse_configuration,
    particle_hole,
    shift,
    swap,
    window_count,
)
from .models import (
    GradientPair,
    ModelSpec,
    alt_sum_tilde_c,
    canonical_diffusivity,
    current,
    effective_rate,
    exclusion,
    expected_rate,
    grad_H,
    grad_g,
    grad_h,
    monomial_bj,
    parse_model,
    rate,
    window_indicator,
)

__version__ = "0.1.0"

__all__ = [
    "Configuration",
    "Window",
    "box_count",
    "enumerate_configurations",
    "format_configuration",
    "occupancy",
    "parse_configuration",
    "particle_hole",
    "shift",
    "swap",
    "window_count",
    "GradientPair",
    "ModelSpec",
    "alt_sum_tilde_c",
    "canonical_diffusivity",
    "current",
    "effective_rate",
    "exclusion",
    "expected_rate",
    "grad_H",
    "grad_g",
    "grad_h",
    "monomial_bj",
    "parse_model",
    "rate",
    "window_indicator",
    "__version__",
]
