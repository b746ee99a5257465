import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from omarray.errors import DegenerateMatrixError, InvalidInputError
from omarray.tmat import (
    Scatterer,
    SystemSpec,
    chain,
    chain_with_derivative,
    field_amplitude,
    field_profile,
    propagation_matrix,
    reflectivity,
    scatter_matrix,
    transmission,
)

zetas = st.floats(-30, 30, allow_nan=False)


@st.composite
def systems(draw, max_n=12):
    n = draw(st.integers(1, max_n))
    zs = draw(st.lists(zetas, min_size=n, max_size=n))
    gaps = draw(st.lists(st.floats(1e-8, 2e-6), min_size=n - 1, max_size=n - 1))
    xs = np.concatenate([[0.0], np.cumsum(gaps)]) if n > 1 else np.zeros(1)
    return SystemSpec(zs, xs)


def test_scatter_matrix_values():
    np.testing.assert_array_equal(scatter_matrix(0.0), np.eye(2))
    np.testing.assert_allclose(scatter_matrix(-5.0), [[1 - 5j, -5j], [5j, 1 + 5j]])
    assert reflectivity(scatter_matrix(-5.0)) == pytest.approx(25 / 26, rel=1e-15)


def test_scatter_matrix_rejects_nonfinite():
    with pytest.raises(InvalidInputError):
        scatter_matrix(np.nan)


def test_propagation_matrix():
    np.testing.assert_allclose(propagation_matrix(3.0, 0.0), np.eye(2))
    np.testing.assert_allclose(propagation_matrix(np.pi, 1.0), -np.eye(2), atol=1e-15)
    k = 2 * np.pi / 1064e-9
    np.testing.assert_allclose(propagation_matrix(k, 532e-9), -np.eye(2), atol=1e-12)
    with pytest.raises(InvalidInputError):
        propagation_matrix(1.0, -1e-9)


def test_reflectivity_conventions():
    assert reflectivity(np.eye(2)) == 0.0
    assert transmission(np.eye(2)) == 1.0
    chi = 1.0
    m = np.array([[1 + 1j * chi, 1j * chi], [-1j * chi, 1 - 1j * chi]])
    assert transmission(m) == pytest.approx(0.5)
    with pytest.raises(DegenerateMatrixError):
        transmission(np.zeros((2, 2)))


def test_single_scatterer_chain():
    s = SystemSpec([-3.0], [1e-6])
    np.testing.assert_allclose(chain(s, 4e6), scatter_matrix(-3.0))


def test_chain_matches_explicit_product(rng):
    zs = rng.uniform(-8, 0, 3)
    gaps = rng.uniform(1e-7, 1e-6, 2)
    xs = np.concatenate([[0.0], np.cumsum(gaps)])
    k = 7.3e6
    brute = (scatter_matrix(zs[0]) @ propagation_matrix(k, gaps[0]) @ scatter_matrix(zs[1])
             @ propagation_matrix(k, gaps[1]) @ scatter_matrix(zs[2]))
    np.testing.assert_allclose(chain(SystemSpec(zs, xs), k), brute, rtol=1e-13, atol=1e-13)


def test_chain_is_vectorized():
    s = SystemSpec([-5.0, -5.0], [0.0, 525e-9])
    ks = np.linspace(1e6, 1e7, 5)
    batch = chain(s, ks)
    assert batch.shape == (5, 2, 2)
    for k, m in zip(ks, batch):
        np.testing.assert_allclose(m, chain(s, k))


def test_unsorted_positions_rejected():
    with pytest.raises(InvalidInputError):
        SystemSpec([-1.0, -1.0], [1e-6, 0.0])
    with pytest.raises(InvalidInputError):
        SystemSpec([-1.0, -1.0], [0.0, 0.0])


def test_positive_zeta_warns():
    with pytest.warns(UserWarning):
        Scatterer(0.5, 0.0)


def test_empty_system():
    s = SystemSpec.empty()
    np.testing.assert_array_equal(chain(s, 1e6), np.eye(2))
    np.testing.assert_allclose(field_profile(s, 1e7, np.linspace(-1e-6, 1e-6, 7)), 1.0)


@pytest.mark.filterwarnings("ignore::UserWarning")
@given(systems(), st.floats(1e5, 3e7))
def test_unitarity(system, k):
    m = chain(system, k)
    scale = max(1.0, abs(m[1, 1]) ** 2)
    assert abs(np.linalg.det(m) - 1) <= 1e-12 * scale
    assert abs(reflectivity(m) + transmission(m) - 1) <= 1e-12


@pytest.mark.filterwarnings("ignore::UserWarning")
@given(systems(), st.floats(1e5, 3e7))
def test_mirrored_system_same_spectrum(system, k):
    a, b = chain(system, k), chain(system.mirrored(), k)
    assert reflectivity(a) == pytest.approx(reflectivity(b), abs=1e-10)
    assert transmission(a) == pytest.approx(transmission(b), rel=1e-10)


def test_offsets_compose_with_positions():
    base = SystemSpec([-2.0, -2.0, -2.0], [0.0, 4e-7, 9e-7])
    moved = base.displaced(1, 3e-9)
    direct = SystemSpec([-2.0, -2.0, -2.0], [0.0, 4.03e-7, 9e-7])
    np.testing.assert_allclose(chain(moved, 8e6), chain(direct, 8e6), rtol=1e-12, atol=1e-12)
    assert not moved.same_as(base)
    assert base.same_as(SystemSpec([-2.0, -2.0, -2.0], [0.0, 4e-7, 9e-7]))


def test_split_wavenumber_matches_plain():
    s = SystemSpec([-5.0, -5.0, -20.0], [0.0, 5e-7, 0.03])
    k, dk = 6e6, 0.37
    np.testing.assert_allclose(chain(s, k, dk), chain(s, k + dk), rtol=1e-7, atol=1e-7)


def test_derivative_matches_finite_difference():
    s = SystemSpec([-5.0, -3.0, -5.0], [0.0, 5.2e-7, 1.1e-6])
    k, h = 5.9e6, 1e-1
    m, dm = chain_with_derivative(s, k)
    fd = (chain(s, k, h) - chain(s, k, -h)) / (2 * h)
    np.testing.assert_allclose(dm, fd, rtol=1e-6, atol=1e-12)
    np.testing.assert_allclose(m, chain(s, k))


def test_field_continuous_with_derivative_jump():
    zs = [-5.0, -2.0, -7.0]
    xs = [0.0, 6e-7, 1.3e-6]
    s = SystemSpec(zs, xs)
    k = 5.5e6
    eps = 1e-19
    for z, x in zip(zs, xs):
        left = field_amplitude(s, k, x - eps)
        right = field_amplitude(s, k, x + eps)
        assert abs(left - right) <= 1e-9 * max(abs(left), 1.0)
        h = 1e-12
        dl = (field_amplitude(s, k, x - h) - field_amplitude(s, k, x - 2 * h)) / h
        dr = (field_amplitude(s, k, x + 2 * h) - field_amplitude(s, k, x + h)) / h
        centre = field_amplitude(s, k, x)
        assert dr - dl == pytest.approx(-2 * k * z * centre, rel=1e-4)


def test_field_boundary_conditions():
    s = SystemSpec([-5.0, -5.0], [0.0, 5e-7])
    k = 6e6
    m = chain(s, k)
    x_out = np.array([1e-6, 2e-6, 3.3e-6])
    # right of the stack only the transmitted wave remains
    np.testing.assert_allclose(np.abs(field_amplitude(s, k, x_out)), abs(1 / m[1, 1]), rtol=1e-12)
    x_in = np.array([-3e-6, -1e-6])
    e = field_amplitude(s, k, x_in)
    r = m[0, 1] / m[1, 1]
    np.testing.assert_allclose(e, np.exp(1j * k * x_in) + r * np.exp(-1j * k * x_in), rtol=1e-12)


def test_field_at_scatterer_takes_left_value():
    s = SystemSpec([-4.0], [0.0])
    k = 3e6
    np.testing.assert_allclose(field_amplitude(s, k, 0.0), field_amplitude(s, k, -1e-18), rtol=1e-9)


def test_standing_wave_between_two_mirrors_matches_mode_matching():
    # membrane at the centre of a two-mirror cavity; independent
    # segment-by-segment solution of E'' = -k^2 E with delta jumps
    zm, z, half = -20.0, -5.0, 2e-6
    s = SystemSpec([zm, z, zm], [-half, 0.0, half])
    ks = np.linspace(1e6, 4e6, 30001)
    t = transmission(chain(s, ks))
    k = ks[np.argmax(t)]
    x = np.linspace(-half, half, 801)
    e = field_amplitude(s, k, x)

    def propagate(e0, de0, dx):
        c, sn = np.cos(k * dx), np.sin(k * dx)
        return e0 * c + de0 / k * sn, -e0 * k * sn + de0 * c

    e_r = field_amplitude(s, k, half + 1e-7) * np.exp(-1j * k * 1e-7)
    ex, dex = e_r, 1j * k * e_r
    dex = dex + 2 * k * zm * ex
    ex, dex = propagate(ex, dex, -half)
    dex = dex + 2 * k * z * ex
    assert abs(ex - field_amplitude(s, k, 0.0)) < 1e-8 * abs(ex)
    xs_left = x[x < 0]
    ref = [propagate(ex, dex, xi)[0] for xi in xs_left]
    np.testing.assert_allclose(e[x < 0], ref, rtol=1e-7, atol=1e-7 * np.max(np.abs(e)))
