"""Ground-state soliton Q_lambda, its lambda-derivative and the bifurcation from lambda = 2."""

from src.soliton.solver import (BifurcationSample, SolitonProfile, bifurcation_scan,
                                solve_soliton, soliton_derivative, sup_norm_report)
