"""Physical solution u(t, x) and potential V(t, x) measured through the modulation identities."""

from src.assembly.growth import (GrowthSample, PotentialSample, growth_report, log_time_grid,
                                 modulated_h1_norm, potential_report)
