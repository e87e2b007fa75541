import math

import numpy as np
import pytest

from subwave.green import (
    CoincidenceError,
    DegenerateModeError,
    NearPoleWarning,
    gex,
    green_parts_curve,
    green_vector,
    im_green_fixed_frequency,
    perturbed_green,
    psf_scan_rows,
    zeta,
)
from subwave.resonance import resonances_asymptotic
from subwave.system import build_system, interaction_matrices


def test_free_space_kernel_values():
    x = np.array([0.0, 0.0, 1.0])
    y = np.zeros(3)
    assert gex(x, y, 0.0) == pytest.approx(1.0 / (2.0 * math.pi))
    val = gex(x, y, 2.0)
    assert abs(val) == pytest.approx(1.0 / (2.0 * math.pi))
    assert np.angle(val) == pytest.approx(2.0)


def test_kernel_coincidence_rejected():
    x = np.array([0.3, 0.1, 0.5])
    with pytest.raises(CoincidenceError):
        gex(x, x, 1.0)


def test_green_vector_shape(pair_setup):
    system, _, _ = pair_setup
    vec = green_vector(np.array([0.5, 0.5, 1.0]), 0.1, system)
    assert vec.shape == (2,)
    assert np.all(np.isfinite(vec.real))


def test_zeta_static_value(single_setup):
    system, spectral, _ = single_setup
    x = np.array([0.0, 0.0, 0.8])
    x0 = np.array([0.6, 0.0, 0.0 + 0.8])
    r1 = np.linalg.norm(x - system.centers[0])
    r2 = np.linalg.norm(x0 - system.centers[0])
    z = zeta(0, x, x0, 0.0, spectral, system)
    assert z.imag == 0.0
    assert z.real == pytest.approx(1.0 / (4.0 * math.pi**2 * r1 * r2), rel=1e-14)


def test_curve_reciprocity(single_setup):
    system, spectral, resonances = single_setup
    k = np.linspace(0.02, 0.9, 11)
    x = np.array([0.4, -0.3, 0.6])
    x0 = np.array([-0.2, 0.5, 1.1])
    fwd = green_parts_curve(x, x0, k, system, spectral, resonances, warn=False)
    rev = green_parts_curve(x0, x, k, system, spectral, resonances, warn=False)
    for a, b in zip(fwd, rev):
        np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-300)


def test_perturbed_green_matches_curve(single_setup):
    system, spectral, resonances = single_setup
    x = np.array([0.4, -0.3, 0.6])
    x0 = np.array([-0.2, 0.5, 1.1])
    k = 0.25
    parts = perturbed_green(x, x0, k, system, spectral, resonances)
    curve = green_parts_curve(x, x0, np.array([k]), system, spectral, resonances,
                              warn=False)
    assert parts.g1 == curve[0][0]
    assert parts.g3 == curve[2][0]
    assert parts.total == pytest.approx(sum(c[0] for c in curve), rel=1e-14)


def test_free_space_part_is_plain_kernel(single_setup):
    system, spectral, resonances = single_setup
    x = np.array([0.0, 0.0, 1.5])
    x0 = np.array([1.0, 0.0, 0.5])
    k = 0.3
    parts = perturbed_green(x, x0, k, system, spectral, resonances)
    assert parts.g1 == pytest.approx(gex(x, x0, k), rel=1e-14)


def test_near_pole_warning(single_setup):
    system, spectral, resonances = single_setup
    k0 = resonances[0].value
    x = np.array([0.3, 0.0, 0.7])
    x0 = np.array([-0.4, 0.2, 0.9])
    with pytest.warns(NearPoleWarning):
        green_parts_curve(x, x0, np.array([k0.real]), system, spectral, resonances)


def test_resonant_peak_magnitude():
    """Peak of the pole part matches the residue estimate.

    For one aperture with no static shift the resonance sits at
    tau1 sqrt(eps) with line width eps^2 / pi^2, so the pole term peaks
    at (c eps)^{3/2} |D|^{-1/2} |zeta| pi^2 / eps^2.
    """
    eps = 1e-3
    system = build_system(1.0, eps, [[0.0, 0.0]], alpha0=0.0)
    spectral = interaction_matrices(system)
    res = resonances_asymptotic(system, spectral)
    plus = [r for r in res if r.branch == 1][0]
    x = np.array([0.0, 0.0, 0.5])
    x0 = np.array([0.3, 0.0, 0.5])
    parts = green_parts_curve(x, x0, np.array([plus.value.real]), system,
                              spectral, res, warn=False)
    z = zeta(0, x, x0, plus.value.real, spectral, system)
    predicted = (
        (2.0 * eps) ** 1.5 / math.sqrt(math.pi) * abs(z) * math.pi**2 / eps**2
    )
    assert abs(parts[2][0]) == pytest.approx(predicted, rel=1e-6)


def test_residual_part_scales_linearly(single_setup):
    system, spectral, resonances = single_setup
    x = np.array([0.4, -0.3, 0.6])
    x0 = np.array([-0.2, 0.5, 1.1])
    k = np.array([0.3])
    base = green_parts_curve(x, x0, k, system, spectral, resonances, warn=False)
    assert np.all(base[3] == 0.0)
    residual = np.full((1, 2), 1e-4 + 0j)
    with_res = green_parts_curve(x, x0, k, system, spectral, resonances,
                                 residual=residual, warn=False)
    doubled = green_parts_curve(x, x0, k, system, spectral, resonances,
                                residual=2.0 * residual, warn=False)
    assert with_res[3][0] != 0.0
    assert doubled[3][0] == pytest.approx(2.0 * with_res[3][0], rel=1e-14)


def test_fixed_frequency_formula_tracks_curve():
    """Two-term estimate converges to the full curve as eps shrinks."""
    xa = np.array([0.3, 0.4, 0.8])
    xb = np.array([-0.5, 1.0, 0.5])
    diffs = []
    for eps in (1e-2, 2.5e-3):
        system = build_system(1.0, eps, [[0.0, 0.0]], alpha0=1.0)
        spectral = interaction_matrices(system)
        res = resonances_asymptotic(system, spectral)
        k = math.sqrt(2.0 / math.pi) * math.sqrt(eps)
        curve = green_parts_curve(xa, xb, np.array([k]), system, spectral, res,
                                  warn=False)
        im_full = float(sum(c[0].imag for c in curve))
        diffs.append(abs(im_full - im_green_fixed_frequency(xa, xb, system, spectral)))
    assert diffs[1] < diffs[0]


def test_fixed_frequency_rejects_uncoupled_mode():
    system = build_system(1.0, 1e-2, [[0.0, 0.0]], alpha0=0.0)
    with pytest.raises(DegenerateModeError) as err:
        im_green_fixed_frequency(
            np.array([0.0, 0.0, 0.5]), np.array([0.5, 0.0, 0.5]), system
        )
    assert err.value.modes == [0]


def test_psf_rows_shape(single_setup):
    system, spectral, resonances = single_setup
    pts = np.column_stack(
        [np.linspace(-1, 1, 9), np.zeros(9), np.full(9, 0.5)]
    )
    rows = psf_scan_rows(pts, np.array([0.0, 0.0, 0.8]),
                         resonances[0].value.real, system, spectral, resonances)
    assert len(rows) == 9
    assert all(len(r) == 12 for r in rows)
    assert all(np.isfinite(r[3]) for r in rows)
