import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subwave.system import (
    ParameterError,
    build_system,
    interaction_matrices,
    neumann_k1,
    spectral_record,
)

BESSEL_PRIME_ROOT = 1.8411837813406593


def test_build_rejects_bad_height():
    with pytest.raises(ParameterError):
        build_system(0.0, 1e-2, [[0, 0]])


def test_build_rejects_bad_epsilon():
    with pytest.raises(ParameterError):
        build_system(1.0, -1e-2, [[0, 0]])
    with pytest.raises(ParameterError):
        build_system(1.0, 0.5, [[0, 0]])


def test_build_rejects_close_centers():
    with pytest.raises(ParameterError):
        build_system(1.0, 1e-2, [[0, 0], [1e-2, 0]])


def test_build_rejects_off_plane_centers():
    with pytest.raises(ParameterError):
        build_system(1.0, 1e-2, [[0, 0, 0.1]])


def test_centers_promoted_to_plane():
    system = build_system(1.0, 1e-2, [[0.3, -0.2]])
    assert system.centers.shape == (1, 3)
    assert system.centers[0, 2] == 0.0


def test_cavity_volume():
    assert build_system(1.0, 1e-2, [[0, 0]]).cavity_volume == pytest.approx(math.pi)
    assert build_system(0.5, 1e-2, [[0, 0]]).cavity_volume == pytest.approx(math.pi / 2)


def test_neumann_window_both_regimes():
    # shallow cavity: the radial lip mode sets the scale
    assert neumann_k1(1.0) == pytest.approx(BESSEL_PRIME_ROOT)
    assert neumann_k1(1.5) == pytest.approx(BESSEL_PRIME_ROOT)
    # deep cavity: the axial mode pi/h comes first
    assert neumann_k1(2.0) == pytest.approx(math.pi / 2.0)
    assert neumann_k1(10.0) == pytest.approx(math.pi / 10.0)


def test_interaction_matrix_values():
    d = 1.7
    system = build_system(1.0, 1e-3, [[0.0, 0.0], [d, 0.0]])
    spec = interaction_matrices(system)
    assert spec.coupling[0, 0] == 0.0
    assert spec.coupling[0, 1] == pytest.approx(1.0 / (2.0 * math.pi * d), rel=1e-14)
    assert np.array_equal(spec.coupling, spec.coupling.T)


def test_interaction_eigenpairs_symmetric_pair():
    system = build_system(1.0, 1e-3, [[0.0, 0.0], [2.0, 0.0]])
    spec = interaction_matrices(system)
    lam = 1.0 / (2.0 * math.pi * 2.0)
    assert sorted(spec.betas) == pytest.approx([-lam, lam])


def test_s_matrix_structure():
    system = build_system(1.0, 1e-3, [[0, 0], [2, 0], [0, 2]], re_alpha1=0.4)
    spec = interaction_matrices(system)
    expect = 0.4 * np.eye(3) + 1j / (2.0 * math.pi) * np.ones((3, 3))
    assert np.allclose(spec.radiation, expect, atol=1e-15)


@given(st.integers(min_value=1, max_value=5), st.integers(min_value=0, max_value=10**6))
@settings(max_examples=30, deadline=None)
def test_eigenvectors_orthonormal(m, seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-3, 3, size=(m, 2))
    ok = all(
        np.linalg.norm(pts[i] - pts[j]) > 0.3
        for i in range(m)
        for j in range(i + 1, m)
    )
    if not ok:
        return
    spec = interaction_matrices(build_system(1.0, 1e-3, pts))
    gram = spec.modes.T @ spec.modes
    assert np.allclose(gram, np.eye(m), atol=1e-12)
    # eigen relation T y = beta y
    for j in range(m):
        resid = spec.coupling @ spec.modes[:, j] - spec.betas[j] * spec.modes[:, j]
        assert np.linalg.norm(resid) < 1e-12


def test_spectral_record_roundtrip():
    system = build_system(1.0, 1e-3, [[0, 0], [2, 0]], alpha0=0.5)
    rec = spectral_record(system, interaction_matrices(system))
    assert rec["n_resonators"] == 2
    assert rec["epsilon"] == 1e-3
    assert len(rec["betas"]) == 2
