"""Model families: specifications, kinetics, potentials and system assembly."""

from .potentials import (
    aggregation_velocity,
    delay_potential,
    den_site_potential,
    gradient_velocity,
    nonlocal_argument,
    sda_den_site_velocity,
    sda_potential,
    static_potential,
)
from .reactions import (
    combined_map,
    conflict_map_rhs,
    consumer_resource_rhs,
    lotka_volterra_competition,
    map_q_rhs,
    marks_rhs,
    satisfaction,
    short_long_rhs,
    starvation_rate,
)
from .spec import FAMILY_PARAMS, ModelSpec, augment_model, make_model
from .system import (
    SystemRHS,
    build_system,
    homogeneous_steady_state,
    initial_state,
    landscape_function,
)
