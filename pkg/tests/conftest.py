import numpy as np
import pytest

from subwave.aperture import assemble_riesz_matrix, disk_mesh, solve_equilibrium
from subwave.imaging import make_root_signal
from subwave.resonance import resonances_asymptotic
from subwave.system import build_system, interaction_matrices


@pytest.fixture(scope="session")
def disk12():
    """Moderate-resolution unit disk solve shared across tests."""
    mesh = disk_mesh(12)
    matrix = assemble_riesz_matrix(mesh, check=False)
    density = solve_equilibrium(mesh, matrix)
    return mesh, matrix, density


@pytest.fixture(scope="session")
def single_setup():
    system = build_system(1.0, 1e-2, [[0.0, 0.0]], alpha0=1.0)
    spectral = interaction_matrices(system)
    resonances = resonances_asymptotic(system, spectral)
    return system, spectral, resonances


@pytest.fixture(scope="session")
def pair_setup():
    system = build_system(1.0, 1e-3, [[0.0, 0.0], [2.0, 0.0]], alpha0=0.0)
    spectral = interaction_matrices(system)
    resonances = resonances_asymptotic(system, spectral)
    return system, spectral, resonances


@pytest.fixture(scope="session")
def bump_signal():
    return make_root_signal("smooth_bump", epsilon=1e-2)
