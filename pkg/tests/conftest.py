"""Shared fixtures: a small basis and everything built on it."""

import pytest

from src import reporting
from src.evolution.equation import build_context
from src.linearized.resonance import compute_resonance
from src.linearized.system import assemble_linearized, build_a_operator
from src.soliton.solver import solve_soliton
from src.spectral.basis import make_basis

N_SMALL = 24
LAMBDA = 2.05


@pytest.fixture(autouse=True, scope='session')
def quiet_output():
    reporting.set_quiet(True)
    yield
    reporting.set_quiet(False)


@pytest.fixture(scope='session')
def basis():
    return make_basis(N_SMALL)


@pytest.fixture(scope='session')
def soliton(basis):
    return solve_soliton(LAMBDA, 1e-10, basis)


@pytest.fixture(scope='session')
def system(soliton, basis):
    return assemble_linearized(soliton, basis)


@pytest.fixture(scope='session')
def a_op(system):
    return build_a_operator(system)


@pytest.fixture(scope='session')
def resonance(system, a_op, soliton, basis):
    return compute_resonance(system, a_op, soliton, basis)


@pytest.fixture(scope='session')
def context(soliton, system, a_op, resonance, basis):
    return build_context(soliton, system, a_op, resonance, basis)
