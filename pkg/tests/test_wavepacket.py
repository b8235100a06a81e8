import io
import math
import warnings

import numpy as np
import pytest

from optoscatter.model import SystemParams
from optoscatter.scattering import SolverConfig, solve_exact, transmission_reflection
from optoscatter.spectra import SweepGrid, find_features, sweep, FeatureKind
from optoscatter.wavepacket import (
    WavepacketSpec,
    coverage_warnings,
    incident_totals,
    occupation_spectra,
    spectral_density,
    write_occupation_csv,
    write_occupation_summary,
)

WIDE = SweepGrid(-30, 20, 10001)


def test_spectral_density_normalised():
    x = np.linspace(-30, 30, 20001)
    assert np.trapezoid(spectral_density(x, 0.7, 4.0), x) == pytest.approx(1.0, abs=1e-12)
    assert spectral_density(0.7, 0.7, 4.0) == pytest.approx(math.sqrt(2 / (math.pi * 16)))


def test_invalid_width_rejected():
    with pytest.raises(ValueError):
        WavepacketSpec(0.0, 0.0, WIDE)


def test_broad_cavity_reflects_pointwise():
    p = SystemParams(Gamma=10.0)
    wp = WavepacketSpec(0.0, 4.0, SweepGrid(-25, 25, 5001))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        spec = occupation_spectra(p, wp)
    x = spec.delta
    expected_T = x**2 / (x**2 + 100.0) * spec.G
    assert np.max(np.abs(spec.S_T - expected_T)) < 1e-12
    assert spec.total_T < 0.05
    assert spec.total_R > 0.95


def test_elastic_limit_pointwise():
    p = SystemParams(lam=0.3, delta_ac=0.1)
    spec = occupation_spectra(p, WavepacketSpec(0.0, 2.0, SweepGrid(-15, 15, 3001)))
    assert np.max(np.abs(spec.S_T + spec.S_R - spec.G)) < 1e-10
    i = 1700
    T, _ = transmission_reflection(solve_exact(p, spec.delta[i]))
    assert spec.S_T[i] == pytest.approx(T * spec.G[i], abs=1e-14)


def test_probability_conservation():
    p = SystemParams(g0=1.0, lam=0.1)
    spec = occupation_spectra(p, WavepacketSpec(0.0, 4.0, WIDE))
    assert abs(spec.total_T + spec.total_R - 1.0) < 1e-4
    assert spec.warnings == []


def test_monotone_leakage():
    spec = occupation_spectra(SystemParams(g0=1.0, lam=0.1, gamma_a=0.01), WavepacketSpec(0.0, 4.0, WIDE))
    total = spec.total_T + spec.total_R
    assert total <= 1.0 + 1e-6
    assert spec.loss > 0


def test_narrow_band_recovers_monochromatic():
    p = SystemParams(g0=1.0, lam=0.1)
    T_mono, _ = transmission_reflection(solve_exact(p, 0.0))
    T_wp, R_wp = incident_totals(p, 0.0, 0.001)
    assert abs(T_wp - T_mono) < 1e-3
    assert abs(T_wp + R_wp - 1.0) < 1e-6


def test_incident_and_output_totals_agree():
    p = SystemParams(g0=1.0, lam=0.1, gamma_a=0.01)
    spec = occupation_spectra(p, WavepacketSpec(0.0, 4.0, WIDE))
    T_in, R_in = incident_totals(p, 0.0, 4.0)
    assert spec.total_T == pytest.approx(T_in, abs=1e-4)
    assert spec.total_R == pytest.approx(R_in, abs=1e-4)


def test_red_sideband_peaks_below_dips():
    p = SystemParams(g0=1.0, lam=0.1, gamma_a=0.01)
    spec = occupation_spectra(p, WavepacketSpec(0.0, 4.0, WIDE))
    dips = [f.location for f in find_features(sweep(p, SweepGrid()), threshold=0.9) if f.kind is FeatureKind.DIP]
    main = min(dips, key=lambda x: abs(x + 1.0))
    x, S = spec.delta, spec.S_T
    for n in (1, 2):
        window = (x > main - n - 0.3) & (x < main - n + 0.3)
        i = np.flatnonzero(window)[np.argmax(S[window])]
        assert abs(x[i] - (main - n)) < 0.1
        assert S[i] > spec.G[i]


def test_coverage_warning():
    wp = WavepacketSpec(0.0, 4.0, SweepGrid(-5, 5, 101))
    msgs = coverage_warnings(SystemParams(g0=1.0), wp, 4)
    assert len(msgs) == 1 and "mass will be lost" in msgs[0]
    with pytest.warns(UserWarning):
        occupation_spectra(SystemParams(g0=1.0), wp, SolverConfig(n_max=16))


def test_output_files():
    spec = occupation_spectra(SystemParams(), WavepacketSpec(0.0, 1.0, SweepGrid(-6, 6, 7)))
    buf = io.StringIO()
    write_occupation_csv(spec, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "delta_c,G,S_T,S_R"
    assert len(lines) == 8
    buf = io.StringIO()
    write_occupation_summary(spec, buf)
    keys = [line.split(" = ")[0] for line in buf.getvalue().splitlines()]
    assert keys == ["integral_S_T", "integral_S_R", "loss", "n_max"]
