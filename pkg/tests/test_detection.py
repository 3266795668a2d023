import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mollow.detection import (
    BeatMap,
    DetectionParams,
    SpectrumSeries,
    beat_map,
    dressed_frequencies,
    field_harmonics,
    fwm_power,
    intensity_harmonics,
    psi_from_dip,
    scattered_amplitude,
    scattered_spectrum,
    switching_contrast,
    transmission_spectrum,
)
from mollow.dynamics import IntegratorConfig, integrate
from mollow.floquet import floquet_solve
from mollow.model import DriveConfig, EmitterParams, angular_rates, generalized_rabi

E = EmitterParams(20.0)
_, GAMMA2 = angular_rates(E)
WEAK = 1e-6 * E.gamma


def grid(lo, hi, n):
    g = np.linspace(lo, hi, n)
    return g[g != 0]


class TestDetectionParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            DetectionParams(psi=1.2)
        with pytest.raises(ValueError):
            DetectionParams(psi=-0.1)
        with pytest.raises(ValueError):
            DetectionParams(eps_pump=-1)

    def test_dip_calibration(self):
        assert psi_from_dip(0.3) == pytest.approx(1 - math.sqrt(0.7), rel=1e-15)
        assert DetectionParams.from_dip(0.3).psi == pytest.approx(0.16334, abs=1e-5)
        assert DetectionParams.fiber_filtered(0.5).eps_pump == pytest.approx(1 / math.sqrt(200))

    def test_series_invariants(self):
        with pytest.raises(ValueError):
            SpectrumSeries(np.array([0.0, 1.0, 0.5]), np.zeros(3), "transmission", {})
        with pytest.raises(ValueError):
            SpectrumSeries(np.array([0.0, 1.0]), np.array([0.0, np.nan]), "transmission", {})
        with pytest.raises(ValueError):
            SpectrumSeries(np.array([0.0, 1.0]), np.zeros(3), "transmission", {})


class TestScatteredAmplitude:
    def test_resonant_anchor(self):
        # pump detuned by -delta_pp puts the probe on resonance
        sol = floquet_solve(E, DriveConfig(0, WEAK, -3.0, 3.0))
        assert abs(scattered_amplitude(sol, E, 1) - 1) < 1e-9

    @pytest.mark.parametrize("offset", [10.0, -10.0])
    def test_half_width(self, offset):
        sol = floquet_solve(E, DriveConfig(0, WEAK, offset - 4.0, 4.0))
        f1 = scattered_amplitude(sol, E, 1)
        expected = GAMMA2 / (GAMMA2 + 1j * 2 * np.pi * offset)
        assert abs(f1 - expected) < 1e-9
        assert abs(f1) ** 2 == pytest.approx(0.5, abs=1e-9)

    def test_zero_probe_rejected(self):
        sol = floquet_solve(E, DriveConfig(10, 0, 0, 3.0))
        with pytest.raises(ValueError):
            scattered_amplitude(sol, E, 1)
        with pytest.raises(ValueError):
            scattered_amplitude(floquet_solve(E, DriveConfig(10, 1, 0, 3.0), n_max=4), E, 5)

    def test_zero_beat_column(self):
        f = scattered_spectrum(E, DriveConfig(0, WEAK, 0, 0), [-1.0, 0.0, 1.0], n_max=3)
        assert np.isnan(f[1, 0]) and abs(f[1, 4] - 1) < 1e-9


class TestTransmission:
    def test_perfect_extinction(self):
        t = transmission_spectrum(E, DriveConfig(0, WEAK, 0, 0), [0.0], DetectionParams(psi=1))
        assert t.y[0] < 1e-12

    def test_thirty_percent_dip(self):
        t = transmission_spectrum(E, DriveConfig(0, WEAK, 0, 0), [0.0], DetectionParams(psi=0.16334))
        assert t.y[0] == pytest.approx(0.70, abs=1e-4)

    def test_far_wing_is_unity(self):
        t = transmission_spectrum(E, DriveConfig(0, WEAK, 0, 0), [-5e4, 5e4], DetectionParams(psi=0.5))
        assert np.all(np.abs(t.y - 1) < 1e-5)

    @given(st.floats(0.0, 1.0), st.floats(-50.0, 50.0))
    def test_pump_off_closed_form(self, psi, delta_pump):
        x = grid(-90, 90, 37)
        t = transmission_spectrum(E, DriveConfig(0, WEAK, delta_pump, 0), x, DetectionParams(psi=psi), n_max=3)
        dpa = 2 * np.pi * (delta_pump + x)
        f1 = GAMMA2 / (GAMMA2 + 1j * dpa)
        np.testing.assert_allclose(t.y, np.abs(1 - psi * f1) ** 2, rtol=0, atol=1e-9)

    def test_ideal_extinction_energy_bookkeeping(self):
        # with psi = 1 the transmitted power is what the emitter does not remove
        x = grid(-120, 120, 61)
        t = transmission_spectrum(E, DriveConfig(0, WEAK, 0, 0), x, DetectionParams(psi=1.0), n_max=3)
        dpa = 2 * np.pi * x
        np.testing.assert_allclose(t.y, dpa**2 / (dpa**2 + GAMMA2**2), atol=1e-9)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(0.0, 60.0), st.floats(0.1, 10.0), st.floats(0.0, 1.0))
    def test_resonant_pump_mirror_symmetry(self, om_p, om_s, psi):
        x = np.linspace(-75, 75, 61)
        t = transmission_spectrum(E, DriveConfig(om_p, om_s, 0, 0), x, DetectionParams(psi=psi)).y
        assert np.max(np.abs(t - t[::-1])) < 1e-9

    def test_mollow_sideband_crossings(self):
        pump = DriveConfig(200.0, 0.2, 0, 0)
        x = np.linspace(150, 250, 401)
        t = transmission_spectrum(E, pump, x, DetectionParams(psi=1.0)).y - 1
        idx = np.flatnonzero(np.sign(t[:-1]) != np.sign(t[1:]))
        assert idx.size >= 1
        w = generalized_rabi(200.0, 0.0)
        crossings = x[idx] - t[idx] * (x[idx + 1] - x[idx]) / (t[idx + 1] - t[idx])
        assert np.min(np.abs(crossings - w)) < 0.05 * w

    @pytest.mark.parametrize("om_p", [30.0, 40.0, 50.0, 60.0])
    def test_gain_exists(self, om_p):
        x = grid(0, 120, 241)
        t = transmission_spectrum(E, DriveConfig(om_p, 1.0, 5.0, 0), x, DetectionParams(psi=0.3)).y
        assert t.max() > 1

    def test_dispersive_feature_at_zero_beat(self):
        x = np.linspace(-6, 6, 121)
        t = transmission_spectrum(E, DriveConfig(30, 1.0, 10.0, 0), x, DetectionParams(psi=0.5)).y
        left, right = t[x < 0].mean(), t[x > 0].mean()
        assert abs(left - right) > 1e-3


class TestSwitching:
    def test_pump_off_is_zero_db(self):
        off, on, c = switching_contrast(E, DetectionParams(0.4), DriveConfig(0, 2, 10, 0), grid(-50, 50, 21))
        assert np.max(np.abs(c.y)) < 1e-12
        assert c.kind == "contrast_db"

    def test_unbounded_contrast_reported(self):
        off, on, c = switching_contrast(E, DetectionParams(1), DriveConfig(30, 1e-9, 5, 0), [-5.0, 1.0])
        assert off.y[0] == 0 and math.isinf(c.y[0]) and math.isfinite(c.y[1])
        assert c.params["unbounded_at"] == [-5.0]


class TestMixing:
    def test_pump_off(self):
        assert fwm_power(E, DriveConfig(0, 5, 18, 7), DetectionParams(1)) < 1e-30

    def test_needs_beat(self):
        with pytest.raises(ValueError):
            fwm_power(E, DriveConfig(5, 5, 18, 0), DetectionParams(1))
        with pytest.raises(ValueError):
            fwm_power(E, DriveConfig(5, 5, 18, 3), DetectionParams(1), reference="watts")

    def test_weak_field_power_slopes(self):
        det = DetectionParams(1)
        pumps = np.geomspace(0.02, 0.2, 5)
        pw = [fwm_power(E, DriveConfig(p, 0.05, 18, 13), det, reference="gamma") for p in pumps]
        assert np.polyfit(np.log(pumps), np.log(pw), 1)[0] == pytest.approx(4.0, abs=0.1)
        probes = np.geomspace(0.005, 0.05, 5)
        pw = [fwm_power(E, DriveConfig(0.1, w, 18, 13), det, reference="gamma") for w in probes]
        assert np.polyfit(np.log(probes), np.log(pw), 1)[0] == pytest.approx(2.0, abs=0.1)
        # relative to the probe the power no longer depends on it
        pw = [fwm_power(E, DriveConfig(0.1, w, 18, 13), det) for w in probes]
        assert np.polyfit(np.log(probes), np.log(pw), 1)[0] == pytest.approx(0.0, abs=0.1)

    def test_peaks_at_dressed_resonances(self):
        # a narrow line separates the dressed-state resonances from the pump
        e = EmitterParams(2.0)
        pump = DriveConfig(30, 0.04, 18, 0)
        x = grid(5, 60, 1101)
        pw = np.array([fwm_power(e, pump.with_(delta_pp=v), DetectionParams(1)) for v in x])
        assert abs(x[np.argmax(pw)] - dressed_frequencies(e, pump).upper) < e.gamma / 2


class TestBeatMap:
    def test_pump_off_has_no_second_harmonic(self):
        x = grid(-80, 80, 41)
        for eps in (0.0, 1 / math.sqrt(200)):
            bm = beat_map(E, DetectionParams(1, eps_pump=eps), DriveConfig(0, 5, 18, 0), x)
            assert np.max(bm.magnitude[:, 1:]) < 1e-12

    def test_pump_on_ridges(self):
        x = grid(-80, 80, 41)
        bm = beat_map(E, DetectionParams(1, eps_pump=1 / math.sqrt(200)), DriveConfig(50, 5, 18, 0), x)
        assert np.all(bm.magnitude[:, 0] > 1e-3)
        assert np.all(bm.magnitude[:, 1] > 1e-12)
        assert np.all(bm.magnitude[:, 1] < bm.magnitude[:, 0])
        assert bm.db().shape == (x.size, 3)

    def test_coherent_scattering_keeps_first_harmonic(self):
        x = grid(-80, 80, 21)
        bm = beat_map(E, DetectionParams(1, eps_pump=0), DriveConfig(50, 5, 18, 0), x)
        assert np.all(bm.magnitude[:, 0] > 1e-3)

    def test_against_sampled_intensity(self):
        # independent path: integrate in time, build the detected field, Fourier transform
        e, pump, det = E, DriveConfig(40, 8, 12, 0), DetectionParams(0.7, eps_pump=0.05)
        beat = 16.0
        d = pump.with_(delta_pp=beat)
        cfg = IntegratorConfig.for_drive(e, d, periods=1, transient_periods=40)
        tr = integrate(e, d, cfg)
        per = int(round(1e3 / beat / cfg.dt))
        t = tr.times[-per - 1 : -1]
        sigma = tr.coherence[-per - 1 : -1]
        norm = -2j * GAMMA2 / (2 * np.pi * d.omega_probe)
        field = np.exp(2j * np.pi * beat * t * 1e-3) + det.eps_pump - det.psi * norm * sigma
        spec = np.fft.fft(np.abs(field) ** 2) / per
        oracle = 2 * np.abs(spec[1:4])
        bm = beat_map(e, det, pump, [beat], k_max=3)
        np.testing.assert_allclose(bm.magnitude[0], oracle, rtol=1e-5, atol=1e-8)

    def test_harmonic_algebra(self):
        a = field_harmonics(np.zeros((1, 5)), DetectionParams(1, eps_pump=0.1))
        np.testing.assert_array_equal(a[0], [0, 0, 0.1, 1, 0])
        i = intensity_harmonics(a, 2)
        assert i[0, 0] == pytest.approx(0.1) and i[0, 1] == 0

    def test_rejects_zero_beat(self):
        with pytest.raises(ValueError):
            beat_map(E, DetectionParams(1), DriveConfig(5, 5, 0, 0), [0.0, 1.0])
        with pytest.raises(ValueError):
            beat_map(E, DetectionParams(1), DriveConfig(5, 5, 0, 0), [1.0], n_max=3, k_max=4)

    def test_db_floor(self):
        bm = BeatMap(np.array([1.0]), np.array([1]), np.array([[0.0]]))
        assert np.isfinite(bm.db()).all()


class TestDressedMarkers:
    def test_detuned_pump(self):
        m = dressed_frequencies(E, DriveConfig(50, 1, 18, 0))
        assert m.upper == pytest.approx(53.1413, abs=5e-5) and m.lower == -m.upper
        assert m.bare_resonance == -18
        assert m.stark_resonance == pytest.approx(-53.1413, abs=5e-5)
        assert m.gain == pytest.approx(53.1413, abs=5e-5)
        assert m.as_list() == [m.lower, 0.0, m.upper]

    def test_no_pump(self):
        m = dressed_frequencies(E, DriveConfig(0, 1, -7, 0))
        assert (m.lower, m.upper) == (-7, 7)

    def test_resonant_pump(self):
        m = dressed_frequencies(E, DriveConfig(40, 1, 0, 0))
        assert (m.lower, m.upper) == (-40, 40)
        assert m.stark_resonance is None and m.gain is None
