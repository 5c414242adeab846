"""Radial oscillator eigenbasis, quadrature and coefficient-space operators."""

from src.spectral.basis import (Basis, BasisSpec, BasisTable, QuadratureRule,
                                build_basis, evaluate_basis, make_basis)
from src.spectral.fields import (SpectralField, analyze, apply_h, apply_y2, cubic,
                                 inner, norm_hxr, synthesize)
