"""Tests for the time-reversal imaging functional and its diagnostics."""

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pytest import approx

from subwave.imaging import (
    AliasingWarning,
    ConvergenceWarning,
    GridResolutionError,
    NoPeakError,
    SignalSpec,
    band_term,
    convention_report,
    focal_metrics,
    fourier,
    imaging_functional,
    imaging_scan_rows,
    make_root_signal,
    quasi_stationary_report,
    recording_time,
    resonator_term,
    signal_lemma_metrics,
    theorem_prediction,
)
from subwave.lorentzian import LorentzianSpec, complex_lorentzian_integral
from subwave.resonance import interaction_matrices, resonances_asymptotic
from subwave.system import ParameterError, build_system, neumann_k1

X0 = np.array([0.0, 0.0, 0.5])


class _EpsCase:
    def __init__(self, eps, sig):
        self.eps = eps
        self.system = build_system(1.0, eps, [[0.0, 0.0]], alpha0=1.0)
        self.spectral = interaction_matrices(self.system)
        self.resonances = resonances_asymptotic(self.system, self.spectral)
        self.sig = sig.with_epsilon(eps)
        self.focal = imaging_functional(
            X0, X0, 0.0, self.sig, self.system, self.spectral, self.resonances
        )
        self.off = imaging_functional(
            np.array([0.4, 0.0, 0.5]), X0, 0.0, self.sig, self.system,
            self.spectral, self.resonances,
        )


@pytest.fixture(scope="module")
def eps_sweep(bump_signal):
    """Single resonator at the origin, evaluated at two hole sizes."""
    return {eps: _EpsCase(eps, bump_signal) for eps in (1e-2, 2.5e-3)}


# ---------------------------------------------------------------------------
# root signals and transforms


def test_bump_signal_unit_l2(bump_signal):
    assert bump_signal.l2_norm() == approx(1.0, rel=1e-12)
    assert bump_signal.samples[0] == 0.0
    assert bump_signal.samples[-1] == 0.0


def test_raised_cosine_profile():
    sig = make_root_signal("raised_cosine", c1=2.0, n_time=400, n_freq=201,
                           k_max=10.0)
    assert float(np.max(sig.samples)) == approx(1.0, abs=1e-12)
    assert sig.samples[0] == 0.0 and sig.samples[-1] == 0.0
    assert sig.c1 == 2.0


def test_custom_signal_endpoint_validation():
    t = np.linspace(0.0, 1.0, 301)
    good = np.sin(math.pi * t) ** 2
    sig = make_root_signal("custom", samples=good, n_time=300, n_freq=101,
                           k_max=5.0)
    assert sig.kind == "custom"
    with pytest.raises(ValueError, match="vanish"):
        make_root_signal("custom", samples=np.ones(301), n_time=300,
                         n_freq=101, k_max=5.0)


def test_signal_parameter_validation():
    with pytest.raises(ParameterError):
        make_root_signal("sawtooth")
    with pytest.raises(ParameterError):
        make_root_signal("smooth_bump", c1=0.0)
    with pytest.raises(ParameterError):
        make_root_signal("smooth_bump", delta=0.7)
    with pytest.raises(ParameterError):
        make_root_signal("custom")


def test_rectangle_transform_matches_analytic():
    # indicator of [0, 1]: transform (e^{ik} - 1) / (ik)
    t = np.linspace(0.0, 1.0, 3001)
    k = np.linspace(0.1, 20.0, 50)
    got = fourier(np.ones_like(t), t, k, warn=False)
    want = (np.exp(1j * k) - 1.0) / (1j * k)
    np.testing.assert_allclose(got, want, atol=1e-6)


def test_transform_conjugate_symmetry(bump_signal):
    k = np.linspace(0.5, 8.0, 23)
    plus = fourier(bump_signal.samples, bump_signal.t, k, warn=False)
    minus = fourier(bump_signal.samples, bump_signal.t, -k, warn=False)
    np.testing.assert_allclose(minus, np.conj(plus), rtol=1e-13, atol=1e-300)


def test_aliasing_warning():
    t = np.linspace(0.0, 1.0, 101)
    f = np.sin(math.pi * t)
    with pytest.warns(AliasingWarning):
        fourier(f, t, np.array([1e4]))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        fourier(f, t, np.array([1e4]), warn=False)


def test_physical_spectrum_rescales_root(bump_signal):
    sig = bump_signal.with_epsilon(4e-2)
    k_phys = np.array([0.05, 0.2, 0.6])
    want = (4e-2) ** -0.25 * sig.root_spectrum(k_phys / 0.2)
    np.testing.assert_allclose(sig.physical_spectrum(k_phys), want, rtol=1e-14)


# ---------------------------------------------------------------------------
# quasi-stationarity diagnostics


def test_rough_signal_flagged_by_sobolev_norm():
    t = np.linspace(0.0, 1.0, 1001)
    samples = np.where((t > 0.2) & (t < 0.8), 1.0, 0.0)
    k = np.linspace(0.0, 40.0, 2001)
    sig = SignalSpec("custom", 1.0, t, samples, k,
                     fourier(samples, t, k, warn=False), 1e-2, 0.25)
    assert sig.h2_norm() > 1e3
    report = quasi_stationary_report(sig)
    assert not report.h2_ok
    assert not report.passed


def test_bump_tail_diagnostic_reports_failure(bump_signal):
    # The bump family keeps a spectral shoulder of width ~1/c1, so its
    # tail mass beyond eps^(-delta) sits far above the eps scale for any
    # support length.  The diagnostic has to report that honestly.
    report = quasi_stationary_report(bump_signal)
    assert report.h2_ok
    assert report.tail_ratio > 1.0
    assert not report.tail_ok
    assert not report.passed
    d = report.as_dict()
    assert d["passed"] is False
    assert d["tail_integral"] == approx(report.tail_integral)


def test_tail_mass_shrinks_with_delta():
    tails = []
    for delta in (0.05, 0.1, 0.2, 0.3, 0.4):
        sig = make_root_signal("smooth_bump", epsilon=1e-2, delta=delta,
                               n_time=1500, n_freq=2401)
        tails.append(quasi_stationary_report(sig).tail_integral)
    assert all(a > b for a, b in zip(tails, tails[1:]))


def test_lemma_metric_values(bump_signal):
    m = signal_lemma_metrics(bump_signal)
    assert m["l1_ratio"] == approx(3.200039349, rel=1e-6)
    assert m["lipschitz_ratio"] == approx(0.3569097351, rel=1e-6)
    assert m["l1"] == approx(m["l1_ratio"] * 1e-2**0.25, rel=1e-12)


def test_lemma_ratios_stable_in_epsilon(bump_signal):
    a = signal_lemma_metrics(bump_signal)
    b = signal_lemma_metrics(bump_signal.with_epsilon(1e-3))
    assert 0.5 < a["l1_ratio"] / b["l1_ratio"] < 2.0
    assert 0.5 < a["lipschitz_ratio"] / b["lipschitz_ratio"] < 2.0


# ---------------------------------------------------------------------------
# the functional and its five-part split


def test_free_space_has_no_resonator_parts(bump_signal):
    bd = imaging_functional(np.array([0.6, 0.0, 0.8]), X0, 0.0, bump_signal)
    assert bd.i2 == 0.0 and bd.i3 == 0.0 and bd.i4 == 0.0
    assert bd.i1 != 0.0
    assert bd.total == bd.i1 + bd.i2 + bd.i3 + bd.i4 + bd.i5


def test_narrowband_free_space_matches_dense_quadrature():
    """Carrier signal against a brute-force trapezoid reference."""
    c1 = 10.0
    t = np.linspace(0.0, c1, 4001)
    samples = np.sin(math.pi * t / c1) ** 2 * np.sin(5.0 * t)
    sig = make_root_signal("custom", c1=c1, epsilon=1e-2, samples=samples,
                           n_time=4000, k_max=15.0, n_freq=15001)
    x = np.array([0.6, 0.0, 0.8])
    bd = imaging_functional(x, X0, 0.0, sig)
    r = float(np.linalg.norm(x - X0))
    kk = np.linspace(0.0, 0.5 * neumann_k1(1.0), 400001)
    kernel = kk / (2.0 * math.pi) * np.sinc(kk * r / math.pi)
    ref = float(np.trapezoid(kernel * sig.s_weight(kk, 0.0), kk))
    assert bd.i1 == approx(ref, rel=2e-4)


def test_resonant_part_matches_pole_integrals(eps_sweep):
    """I3 against the closed-form Lorentzian window integrals.

    With the static coupling factor the resonant part is a constant
    times Im(1/(k - k2) - 1/(k - k1)); weighting each pole by the
    spectral weight at the retained resonance gives the quadrature
    value up to the slow variation of s across the line width.
    """
    diffs = {}
    for eps, case in eps_sweep.items():
        k_half = 0.5 * neumann_k1(case.system.height)
        table = {(r.mode, r.branch): r.value for r in case.resonances}
        k1v, k2v = table[(0, 1)], table[(0, 2)]
        a = float(np.linalg.norm(X0 - case.system.centers[0]))
        b = float(np.linalg.norm(np.array([0.4, 0.0, 0.5]) - case.system.centers[0]))
        zeta = 1.0 / (4.0 * math.pi**2 * a * b)
        coeff = (2.0 * eps) ** 1.5 / math.sqrt(case.system.cavity_volume)
        sval = float(case.sig.s_weight(np.array([k1v.real]), 0.0)[0])
        c_1 = complex_lorentzian_integral(
            LorentzianSpec(0.0, k_half, k1v.real, k1v.imag))
        c_2 = complex_lorentzian_integral(
            LorentzianSpec(0.0, k_half, k2v.real, k2v.imag))
        closed = -coeff * zeta * sval * (c_2.imag - c_1.imag)
        diffs[eps] = abs(case.off.i3 - closed)
    assert diffs[1e-2] <= 1e-7
    assert diffs[2.5e-3] <= 1e-8
    assert diffs[2.5e-3] < diffs[1e-2]


def test_prediction_difference_decays(eps_sweep):
    # The two-term prediction truncates the band integral at 2 tau1
    # sqrt(eps); that truncation alone contributes at order eps^(3/4),
    # so the defect decays with an exponent below one but must shrink.
    d = {}
    for eps, case in eps_sweep.items():
        pred = theorem_prediction(X0, X0, 0.0, case.sig, case.system)
        d[eps] = abs(case.focal.total - pred)
    assert d[1e-2] < 5e-3
    assert d[2.5e-3] <= d[1e-2] * 0.25**0.4


def test_band_interference_bound(eps_sweep):
    # |sin(k(a+b))| <= k(a+b) and |s(k)| <= |fcheck(k)| give a rigorous
    # bound eps * c * (a+b)/(4 pi^2 a b) * eps^(3/4) * int kappa |Fcheck|.
    for eps, case in eps_sweep.items():
        a = b = 0.5
        geom = (a + b) / (4.0 * math.pi**2 * a * b)
        kap = case.sig.k
        moment = float(np.trapezoid(kap * np.abs(case.sig.spectrum), kap))
        bound = eps * 2.0 * geom * eps**0.75 * moment
        assert abs(case.focal.i2) > 0.0
        assert abs(case.focal.i2) <= bound


def test_band_interference_decays_fast(eps_sweep):
    # int kappa Im Fcheck vanishes for admissible root signals, so the
    # interference term loses more than its nominal eps^(7/4) scale.
    # A decay exponent of 1.5 leaves a comfortable margin.
    i2_coarse = abs(eps_sweep[1e-2].focal.i2)
    i2_fine = abs(eps_sweep[2.5e-3].focal.i2)
    assert i2_fine <= i2_coarse * 0.25**1.5


def test_point_source_term_scale_invariance(eps_sweep):
    r1 = resonator_term(X0, X0, 0.0, eps_sweep[1e-2].sig,
                        eps_sweep[1e-2].system)
    r2 = resonator_term(X0, X0, 0.0, eps_sweep[2.5e-3].sig,
                        eps_sweep[2.5e-3].system)
    assert r1 / r2 == approx(4.0**1.25, rel=1e-12)


def test_convention_report_identifies_signs(eps_sweep, bump_signal):
    case = eps_sweep[1e-2]
    report = convention_report(np.array([0.3, 0.1, 0.6]), X0, 3.0,
                               bump_signal, case.system, case.spectral)
    assert report["best"] == (-1.0, 1.0)
    assert report["best_error"] <= 0.05 * abs(report["i3_quadrature"])
    assert report["variants"][(1.0, 1.0)] == -report["variants"][(-1.0, 1.0)]
    assert abs(report["band_truncated"]) < abs(report["i1_full"])


def test_refine_reports_achieved_tolerance(eps_sweep, bump_signal):
    case = eps_sweep[1e-2]
    with pytest.warns(ConvergenceWarning):
        bd = imaging_functional(
            np.array([0.6, 0.0, 0.8]), X0, 0.0, bump_signal, case.system,
            case.spectral, case.resonances, refine=True, tol=1e-13,
        )
    assert bd.achieved_tol is not None
    assert 0.0 < bd.achieved_tol < 1e-6


def test_grid_resolution_guard(bump_signal):
    with pytest.raises(GridResolutionError):
        imaging_functional(np.array([0.6, 0.0, 0.8]), X0, 0.0, bump_signal,
                           lorentz_nodes=13)


def test_scan_rows_shape(bump_signal):
    points = [np.array([-1.0, 0.0, 0.5]), np.array([0.2, 0.0, 0.6]),
              np.array([1.0, 0.0, 0.5])]
    rows = np.array(imaging_scan_rows(points, X0, 0.0, bump_signal))
    assert rows.shape == (3, 10)
    assert np.all(np.isfinite(rows))
    np.testing.assert_allclose(rows[:, 0], [-1.0, 0.2, 1.0])


# ---------------------------------------------------------------------------
# focal metrology and recording length


@given(
    m=st.floats(-0.5, 0.5),
    w=st.floats(0.5, 2.0),
    h=st.floats(0.1, 10.0),
)
@settings(max_examples=25, deadline=None)
def test_focal_metrics_parabola(m, w, h):
    x = np.linspace(-4.0, 4.0, 4001)
    v = h * (1.0 - ((x - m) / w) ** 2)
    met = focal_metrics(x, v)
    assert met.peak_position == approx(m, abs=1e-6)
    assert met.peak_value == approx(h, rel=1e-6)
    assert met.fwhm == approx(w * math.sqrt(2.0), rel=1e-3)


def test_focal_metrics_sinc_width():
    k = 3.0
    x = np.linspace(-3.0, 3.0, 6001)
    met = focal_metrics(x, np.sinc(k * x / math.pi))
    assert met.fwhm == approx(2.0 * 1.8954942670339809 / k, rel=1e-5)


def test_focal_metrics_rejects_bad_profiles():
    x = np.linspace(0.0, 1.0, 51)
    with pytest.raises(NoPeakError, match="boundary"):
        focal_metrics(x, x)
    with pytest.raises(NoPeakError, match="cross"):
        focal_metrics(x, 0.9 + 0.2 / (1.0 + (x - 0.5) ** 2))


def test_recording_time_scale():
    assert recording_time(1e-2) == approx(1e4)
    assert recording_time(2e-3, safety=3.0) == approx(7.5e5)
    with pytest.raises(ParameterError):
        recording_time(0.0)
    with pytest.raises(ParameterError):
        recording_time(1e-2, safety=0.5)
