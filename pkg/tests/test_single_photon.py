import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fano_qed.coupling import MicroscopicParams, ScatteringModel, SystemSpec
from fano_qed.errors import DomainError, UnsupportedConfigurationError
from fano_qed.single_photon import (
    SpectralGrid,
    fano_features,
    s1_amplitude,
    transmission_spectrum,
    unitarity_residual,
)
from strategies import system_specs

S75 = math.sqrt(0.75)


def test_side_coupled_reflection_dip():
    assert abs(s1_amplitude(SystemSpec(t_bg=1.0), 1, 1, 1.0)) <= 1e-15


def test_lorentzian_peak():
    assert abs(s1_amplitude(SystemSpec(t_bg=0.0), 1, 1, 1.0)) ** 2 == pytest.approx(1.0, abs=1e-15)


def test_fano_zero():
    assert abs(s1_amplitude(SystemSpec(t_bg=0.5), 1, 1, 0.6535898)) < 1e-7


@given(system_specs(), st.floats(-3, 5))
def test_closed_forms(spec, k):
    t, r = spec.t_bg, spec.parity * spec.r
    x = k - spec.omega
    gamma = spec.sigma.real
    phase = np.exp(1j * spec.phi)
    t11 = phase * (t * x + r * gamma) / (x + 1j * gamma)
    t21 = spec.parity * phase * 1j * (r * x - t * gamma) / (x + 1j * gamma)
    assert abs(s1_amplitude(spec, 1, 1, k) - t11) <= 1e-12
    assert abs(s1_amplitude(spec, 2, 1, k) - t21) <= 1e-12


def test_vectorized_matches_scalar():
    spec = SystemSpec(t_bg=0.3)
    k = np.linspace(0, 2, 7)
    np.testing.assert_array_equal(s1_amplitude(spec, 2, 1, k), [s1_amplitude(spec, 2, 1, x) for x in k])


def test_channel_label_checked():
    with pytest.raises(DomainError):
        s1_amplitude(SystemSpec(), 0, 1, 1.0)
    with pytest.raises(DomainError):
        s1_amplitude(SystemSpec(), 3, 1, 1.0)


def test_multichannel_rejected():
    with pytest.raises(UnsupportedConfigurationError):
        s1_amplitude(SystemSpec(n_channels=3), 1, 1, 1.0)


class TestSpectrum:
    def test_lorentzian_symmetric(self):
        grid = SpectralGrid.linspace(0.0, 2.0, 2001)
        p = transmission_spectrum(SystemSpec(t_bg=0.0), grid).probabilities[:, 0, 0]
        np.testing.assert_allclose(p, p[::-1], atol=1e-12)
        half = grid.k_values[np.argmin(np.abs(p[1000:] - 0.5)) + 1000] - 1.0
        assert half == pytest.approx(0.2, abs=1e-3)

    def test_on_resonance_reflection_weight(self):
        grid = SpectralGrid(np.array([1.0]))
        assert transmission_spectrum(SystemSpec(t_bg=0.5), grid).probabilities[0, 0, 0] == pytest.approx(0.75, abs=1e-12)

    @given(system_specs(), st.floats(-20, 20), st.floats(0.1, 20), st.integers(2, 300))
    def test_unitarity(self, spec, k_min, span, points):
        grid = SpectralGrid.linspace(k_min, k_min + span, points)
        assert unitarity_residual(spec, grid) <= 1e-12

    @given(system_specs(complex_sigma=True))
    def test_unitarity_with_shift(self, spec):
        # with |d|^2 tied to Re(Sigma) the shift only moves the pole
        table = transmission_spectrum(spec, SpectralGrid.linspace(-2, 4, 301))
        assert table.complex_sigma == (spec.sigma.imag != 0)
        assert np.max(table.unitarity_residual) <= 1e-12

    @given(st.floats(0, 1), st.floats(0.01, 1))
    def test_microscopic_unitarity(self, t, gamma):
        model = ScatteringModel.from_microscopic(MicroscopicParams.for_background(t, gamma))
        assert unitarity_residual(model, SpectralGrid.linspace(-3, 5, 401)) <= 1e-12

    @given(system_specs(), st.floats(-math.pi, math.pi))
    def test_phase_invariance(self, spec, phi):
        grid = SpectralGrid.linspace(0, 2, 101)
        other = SystemSpec(omega=spec.omega, sigma=spec.sigma, t_bg=spec.t_bg, r_sign=spec.r_sign,
                           phi=phi, parity=spec.parity)
        a = transmission_spectrum(spec, grid).probabilities
        b = transmission_spectrum(other, grid).probabilities
        np.testing.assert_allclose(a, b, atol=1e-12)

    @given(system_specs())
    def test_coupling_sign_invariance(self, spec):
        m = spec.model()
        flipped = ScatteringModel(m.c_matrix, -m.d, -m.kappa, m.sigma, m.omega)
        grid = SpectralGrid.linspace(0, 2, 51)
        np.testing.assert_array_equal(transmission_spectrum(m, grid).amplitudes,
                                      transmission_spectrum(flipped, grid).amplitudes)

    @given(system_specs())
    def test_far_detuned_limit(self, spec):
        # |t11|^2 - t^2 = (2 t r x + r^2 - t^2) / (x^2 + 1): a 1/x approach
        t, r = spec.t_bg, spec.r
        for x in (1e4, 1e6):
            k = spec.omega + x * spec.sigma.real
            dev = abs(abs(s1_amplitude(spec, 1, 1, k)) ** 2 - t**2)
            assert dev <= 2 * abs(t * r) / x + 1 / x**2 + 1e-12
        assert dev <= 1e-6

    def test_complex_sigma_flag(self):
        table = transmission_spectrum(SystemSpec(sigma=0.2 + 0.05j, t_bg=0.3), SpectralGrid.linspace(0, 2, 11))
        assert table.complex_sigma

    @pytest.mark.parametrize("k", [[], [1.0, 1.0], [2.0, 1.0], [0.0, math.inf]])
    def test_grid_validation(self, k):
        with pytest.raises(DomainError):
            SpectralGrid(np.array(k))


class TestFanoFeatures:
    def test_half_transmission(self):
        f = fano_features(SystemSpec(t_bg=0.5))
        assert f.k_zero == pytest.approx(0.6535898, abs=1e-7)
        assert f.k_peak == pytest.approx(1.1154701, abs=1e-7)

    def test_lorentzian(self):
        f = fano_features(SystemSpec(t_bg=0.0))
        assert f.k_zero is None and f.k_peak == pytest.approx(1.0, abs=1e-15)

    def test_inverted_lorentzian(self):
        f = fano_features(SystemSpec(t_bg=1.0))
        assert f.k_zero == pytest.approx(1.0, abs=1e-15) and f.k_peak is None

    @pytest.mark.parametrize("t", [0.2, 0.5, 0.9])
    def test_r_sign_mirror(self, t):
        r = math.sqrt(1 - t * t)
        f = fano_features(SystemSpec(t_bg=t, r_sign=-1))
        assert f.k_zero == pytest.approx(1.0 + r * 0.2 / t, abs=1e-12)

    def test_shift_moves_features(self):
        f = fano_features(SystemSpec(t_bg=0.5, sigma=0.2 - 0.1j))
        assert f.k_zero == pytest.approx(0.9 - S75 * 0.2 / 0.5, abs=1e-12)

    @pytest.mark.parametrize("t,sign", [(0.3, 1), (0.5, 1), (0.8, 1), (0.5, -1), (0.65, -1)])
    def test_match_dense_spectrum(self, t, sign):
        spec = SystemSpec(t_bg=t, r_sign=sign)
        grid = SpectralGrid.linspace(-1.0, 3.0, 100_000)
        p = transmission_spectrum(spec, grid).probabilities[:, 0, 0]
        step = grid.k_values[1] - grid.k_values[0]
        f = fano_features(spec)
        assert abs(grid.k_values[np.argmin(p)] - f.k_zero) <= step
        assert abs(grid.k_values[np.argmax(p)] - f.k_peak) <= step
        assert p.max() == pytest.approx(1.0, abs=1e-8)
