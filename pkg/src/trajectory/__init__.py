"""Modulation parameters (L, b) under resonant forcing, the action E(L, b) and the time change t(s)."""

from src.trajectory.modulation import (TRAJECTORY_COLUMNS, TrajectorySeries, TrajectoryState, beta,
                                       energy_e_lb, initial_point, integrate_trajectory,
                                       invert_time, phase_scan, select_phase)
