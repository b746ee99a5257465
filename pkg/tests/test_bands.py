import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from omarray.bands import (
    band0_kd,
    band_edges,
    band_index_of,
    bloch_wavefunction,
    dispersion,
    helmholtz_to_schrodinger,
    unit_cell_trace,
    wannier_function,
)
from omarray.chebyshev import dispersion_functions
from omarray.errors import InvalidInputError
from omarray.geometry import ArraySpec
from omarray.resonance import find_transmissive_points, scan_spectrum


def _cell_quadrature(cells, nodes=48):
    t, w = np.polynomial.legendre.leggauss(nodes)
    cells = np.asarray(cells)
    x = (cells[:, None] + 0.5 * t[None, :]).ravel()
    return x, np.tile(0.5 * w, cells.size)


@pytest.mark.parametrize("zeta", [-5.0, -0.9, -0.1, 0.7])
def test_trace_identity_on_grid(zeta):
    kd = np.linspace(1e-3, 3 * np.pi, 100_000)
    tr = unit_cell_trace(kd[::50], zeta)
    a, _ = dispersion_functions(kd, zeta)
    np.testing.assert_allclose(tr, 2 * a[::50], atol=1e-12)
    assert np.array_equal(np.abs(2 * a) <= 2, np.abs(a) <= 1)
    bp = dispersion(kd, zeta)
    assert np.array_equal(bp.propagating, np.abs(a) <= 1)
    assert np.all(np.isnan(bp.q[~bp.propagating]))
    assert np.all(bp.kappa[bp.propagating] == 0)


@given(zeta=st.floats(-20.0, 20.0).filter(lambda z: abs(z) > 1e-3), band=st.integers(0, 4))
def test_band_edges_solve_unit_modulus(zeta, band):
    lo, hi = band_edges(zeta, band)
    a, _ = dispersion_functions(np.array([lo, hi]), zeta)
    np.testing.assert_allclose(np.abs(a), 1.0, atol=1e-9)
    assert band_index_of((lo + hi) / 2, zeta) == band


def test_band_edges_reject_negative_band():
    with pytest.raises(InvalidInputError):
        band_edges(-1.0, -1)


def test_decay_rate_in_gap():
    kd = 0.2
    bp = dispersion(kd, -5.0, d=2.0)
    a, _ = dispersion_functions(kd, -5.0)
    assert not bp.propagating
    assert bp.kappa == pytest.approx(np.arccosh(abs(a)) / 2.0)


def test_schrodinger_map():
    d, zeta = 500e-9, -0.9
    kd = 2.0
    m = helmholtz_to_schrodinger(kd / d * 299792458.0, zeta, d, alpha=1e-3)
    assert m.energy_E == pytest.approx(kd**2)
    assert m.potential_strength_beta == pytest.approx(2 * kd * zeta)
    assert m.defect_strength_Omega == pytest.approx(1e-3 * m.potential_strength_beta)
    lo, hi = band_edges(zeta)
    assert 4 * m.kinetic_scale_J == pytest.approx(hi**2 - lo**2)


@given(q=st.floats(-3.1, 3.1), zeta=st.sampled_from([-0.3, -0.9, -2.0, -5.0]))
def test_bloch_norm_and_periodicity(q, zeta):
    kd = band0_kd(q, zeta)
    x, w = _cell_quadrature([0], 64)
    psi = bloch_wavefunction(q, kd, zeta, x)
    assert np.sum(w * np.abs(psi) ** 2) == pytest.approx(1.0, abs=1e-8)
    shifted = bloch_wavefunction(q, kd, zeta, x + 3)
    np.testing.assert_allclose(shifted, np.exp(3j * q) * psi, atol=1e-12)


def test_bloch_rejects_off_shell():
    with pytest.raises(InvalidInputError):
        bloch_wavefunction(0.5, 1.0, -0.9, 0.0)


@pytest.mark.parametrize("zeta", [-0.9, -5.0])
def test_wannier_orthonormal(zeta):
    x, w = _cell_quadrature(np.arange(-15, 16))
    w0 = wannier_function(0, zeta, x)
    for j in (0, 1, 2, -3):
        overlap = np.sum(w * np.conj(w0) * wannier_function(j, zeta, x))
        assert abs(overlap - (j == 0)) < 1e-5
    with pytest.raises(InvalidInputError):
        wannier_function(0, 0.5, x)


def test_wannier_is_localized():
    x = np.array([0.0, 3.0, 6.0])
    w = np.abs(wannier_function(0, -5.0, x))
    assert w[0] > 10 * w[1] > 100 * w[2]


def test_transmissive_points_lie_in_bands():
    zeta, n = -0.9, 10
    system = ArraySpec(n, zeta, 1.0).system()
    spec = scan_spectrum(system, 0.01, 3 * np.pi, 60001, d_ref=1.0)
    pts = find_transmissive_points(spec, system)
    assert len(pts) == 3 * (n - 1)
    a, _ = dispersion_functions(np.array([p.k for p in pts]), zeta)
    assert np.all(np.abs(a) <= 1)
