from .masses import (
    GradientMassConfig,
    MassSet,
    VACUOUS,
    combine_mass_arrays,
    combine_masses,
    conflict,
    gradient_mass_arrays,
    masses_from_gradient,
    masses_from_monovision,
)
from .rolling import GridCell, HeightFilter, Region, RollingGrid

__all__ = [
    "GradientMassConfig",
    "GridCell",
    "HeightFilter",
    "MassSet",
    "Region",
    "RollingGrid",
    "VACUOUS",
    "combine_mass_arrays",
    "combine_masses",
    "conflict",
    "gradient_mass_arrays",
    "masses_from_gradient",
    "masses_from_monovision",
]
