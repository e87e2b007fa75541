import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subwave.resonance import (
    DegenerateSpectrumError,
    WindowViolationWarning,
    characteristic_vectors,
    resonance_rows,
    resonances_asymptotic,
    resonances_oracle,
    tau_coefficients,
    window_check,
)
from subwave.system import build_system, interaction_matrices

TAU1 = math.sqrt(2.0 / math.pi)


def test_tau_values_single_aperture():
    system = build_system(1.0, 1e-2, [[0.0, 0.0]], alpha0=1.0)
    tau = tau_coefficients(system, interaction_matrices(system))
    assert tau.tau1 == pytest.approx(TAU1, rel=1e-14)
    # single aperture has no coupling, so beta = 0 and tau3 = -alpha0 tau1
    assert tau.tau3[0] == pytest.approx(-TAU1, rel=1e-14)
    assert tau.tau4[0] == pytest.approx(-1j / math.pi**2, rel=1e-14)


def test_tau4_dark_mode_vanishes():
    """The antisymmetric pair mode does not couple to radiation."""
    system = build_system(1.0, 1e-3, [[0.0, 0.0], [2.0, 0.0]])
    tau = tau_coefficients(system, interaction_matrices(system))
    im = np.sort(np.abs(tau.tau4.imag))
    assert im[0] == pytest.approx(0.0, abs=1e-15)
    assert im[1] == pytest.approx(2.0 / math.pi**2, rel=1e-12)


def test_resonance_count(pair_setup):
    system, _, resonances = pair_setup
    assert len(resonances) == 2 * system.n_resonators
    assert sorted({r.branch for r in resonances}) == [1, 2]


def test_leading_order_frequency(single_setup):
    system, _, resonances = single_setup
    plus = [r for r in resonances if r.branch == 1][0]
    assert plus.value.real == pytest.approx(TAU1 * 0.1, rel=5e-2)


def test_symmetric_branch_pair(pair_setup):
    _, _, resonances = pair_setup
    by_mode = {}
    for r in resonances:
        by_mode.setdefault(r.mode, {})[r.branch] = r.value
    for pair in by_mode.values():
        assert pair[2] == pytest.approx(-pair[1].conjugate(), rel=1e-14)


def test_losses_never_positive(single_setup):
    _, _, resonances = single_setup
    for r in resonances:
        assert r.value.imag <= 0.0


def test_oracle_close_at_small_epsilon():
    system = build_system(1.0, 1e-2, [[0.0, 0.0]], alpha0=0.3)
    res = resonances_oracle(system)
    for r in res:
        assert r.gap < 1e-5
        assert abs(r.value) > 1e-2


def test_gap_shrinks_between_half_orders():
    """Two-point error slope for a generic triple of apertures."""
    layout = [[0.0, 0.0], [1.7, 0.2], [0.5, 1.9]]
    gaps = []
    for eps in (1e-2, 2.5e-3):
        system = build_system(1.0, eps, layout, alpha0=0.3)
        res = resonances_oracle(system)
        gaps.append(max(r.gap for r in res))
    slope = math.log(gaps[0] / gaps[1]) / math.log(4.0)
    assert 2.2 <= slope <= 3.4


def test_window_check_and_warning():
    system = build_system(1.0, 1e-3, [[0.0, 0.0]])
    res = resonances_asymptotic(system, interaction_matrices(system))
    assert window_check(res, system.height)

    deep = build_system(200.0, 4e-2, [[0.0, 0.0]])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", WindowViolationWarning)
        deep_res = resonances_asymptotic(deep, interaction_matrices(deep))
    with pytest.warns(WindowViolationWarning):
        ok = window_check(deep_res, deep.height, warn=True)
    assert not ok


def test_characteristic_vectors_shape(pair_setup):
    system, spectral, _ = pair_setup
    vecs = characteristic_vectors(system, spectral)
    assert len(vecs) == 2 * system.n_resonators


def test_degenerate_layout_rejected():
    # equilateral triangle: the coupling spectrum has a double eigenvalue
    side = 2.0
    pts = [
        [0.0, 0.0],
        [side, 0.0],
        [side / 2.0, side * math.sqrt(3.0) / 2.0],
    ]
    system = build_system(1.0, 1e-3, pts)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(DegenerateSpectrumError):
            characteristic_vectors(system)


def test_resonance_rows_layout(pair_setup):
    system, spectral, _ = pair_setup
    res = resonances_oracle(system, spectral)
    rows = resonance_rows(res)
    assert len(rows) == 4
    assert all(len(row) == 7 for row in rows)
    asym_only = resonance_rows(resonances_asymptotic(system, spectral))
    assert math.isnan(asym_only[0][4])


@given(st.integers(min_value=0, max_value=10**6))
@settings(max_examples=20, deadline=None)
def test_passivity_random_layouts(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 4))
    pts = rng.uniform(-3, 3, size=(m, 2))
    if any(
        np.linalg.norm(pts[i] - pts[j]) <= 0.3
        for i in range(m)
        for j in range(i + 1, m)
    ):
        return
    system = build_system(1.0, float(10 ** rng.uniform(-4, -2)), pts,
                          alpha0=float(rng.uniform(0, 2)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for r in resonances_oracle(system):
            assert r.value.imag <= 1e-14
            assert r.oracle.imag <= 1e-14
