"""Super-cavity model of an optomechanical crystal.

Two periodic side arrays act as dispersive mirrors with polarizability
``chi_m(k)`` and phase ``mu_m(k)``; the length ``D`` between them sets the
free spectral range. Resonances are only well defined where the side arrays
sit in a band gap (``|a_m| > 1``); elsewhere the finesse is low and the
resonances of the analytic model are flagged as fake.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .chebyshev import chebyshev_u, dispersion_functions, effective_mirror
from .coupling import PhysicalScales, compute_couplings
from .errors import InvalidInputError, TrackingError
from .geometry import CrystalSpec, assemble_crystal
from .resonance import compound_resonances, find_transmissive_points, scan_spectrum
from .tmat import chain, transmission

__all__ = [
    "SideMirrorSpec",
    "SeriesRoot",
    "TuningHit",
    "side_mirror",
    "empty_transmission",
    "finesse",
    "linewidth",
    "mirror_phase",
    "resonance_series",
    "empty_peaks",
    "approx_resonance_equation",
    "approx_validity",
    "fsr_deviation",
    "series_deviation",
    "array_resonances",
    "tune_dm",
    "crystal_couplings",
]

FINESSE_VALIDITY = 3.0


@dataclass(frozen=True)
class SideMirrorSpec:
    """Periodic side array of ``n_m`` scatterers spaced ``d_m`` apart."""

    n_m: int
    zeta_m: float
    d_m: float

    def __post_init__(self):
        if self.n_m < 1:
            raise InvalidInputError("a side mirror needs at least one scatterer")
        if self.d_m < 0:
            raise InvalidInputError("side spacing must be non-negative")


def side_mirror(side, k):
    """Effective mirror of the side array at wavenumber(s) ``k``."""
    return effective_mirror(side.n_m, side.zeta_m, np.asarray(k, dtype=float) * side.d_m)


def empty_transmission(k, length, side):
    """Transmission of the empty super-cavity of length ``length``.

    ``T = 1/|e^{-i(kD + 2 mu)} (1 - i chi)^2 + e^{ikD} chi^2|^2``.
    """
    k = np.asarray(k, dtype=float)
    m = side_mirror(side, k)
    amp = np.exp(-1j * k * length) / m.phase**2 * (1 - 1j * m.chi) ** 2
    amp = amp + np.exp(1j * k * length) * m.chi**2
    return (1.0 / np.abs(amp) ** 2)[()]


def finesse(chi):
    """Finesse ``|chi| sqrt(1 + chi^2)`` and the high-finesse flag ``|chi| >= 3``."""
    chi = np.asarray(chi, dtype=float)
    return (np.abs(chi) * np.sqrt(1 + chi**2))[()], (np.abs(chi) >= FINESSE_VALIDITY)[()]


def linewidth(chi, length):
    """Linewidth ``pi / (D |chi| sqrt(1 + chi^2))`` in rad/m and the validity flag."""
    f, valid = finesse(chi)
    return (np.pi / (length * np.asarray(f)))[()], valid


def mirror_phase(side, k, samples_per_rad=64):
    """Continuous branch of ``mu_m`` on ``[0, k]``, anchored at ``mu_m(0) = 0``.

    Parameters
    ----------
    side : SideMirrorSpec
    k : array_like
        Increasing, non-negative wavenumbers in rad/m.
    samples_per_rad : int, optional
        Grid density in samples per radian of ``k d_m``.

    Returns
    -------
    ndarray
        Unwrapped ``mu_m`` at ``k``.
    """
    k = np.asarray(k, dtype=float)
    if side.d_m == 0:
        return np.zeros_like(k)
    top = float(np.max(k)) * side.d_m
    steps = max(int(np.ceil(top * samples_per_rad * side.n_m)), 16)
    x = np.linspace(0.0, top, steps + 1)
    mu = np.unwrap(effective_mirror(side.n_m, side.zeta_m, x).mu)
    # refine onto the requested points by local continuation from the grid
    idx = np.clip(np.searchsorted(x, k * side.d_m), 0, x.size - 1)
    local = effective_mirror(side.n_m, side.zeta_m, k * side.d_m).phase
    ref = np.exp(1j * mu[idx])
    return mu[idx] + np.angle(local / ref)


@dataclass
class SeriesRoot:
    """One solution of ``k D + mu_m(k) = n pi``.

    ``fake`` marks roots outside the side-mirror band gaps, where the
    high-finesse model does not apply.
    """

    n: int
    k: float
    kd_m_over_pi: float
    in_gap: bool
    chi: float
    fake: bool


def _phase_function(side, length, k_ref, mu_ref):
    phase_ref = side_mirror(side, k_ref).phase

    def phi(k):
        return k * length + mu_ref + np.angle(side_mirror(side, k).phase / phase_ref)

    return phi


def resonance_series(n_values, length, side, samples_per_fsr=200):
    """Resonances of the empty super-cavity from the phase condition.

    Every crossing of ``k D + mu_m(k)`` through ``n pi`` is bracketed on a
    grid and refined with Brent's method. ``k = 0`` (``n = 0``) is excluded.

    Parameters
    ----------
    n_values : iterable of int
        Positive resonance orders.
    length : float
        Super-cavity length ``D``, metres.
    side : SideMirrorSpec
    samples_per_fsr : int, optional

    Returns
    -------
    list of SeriesRoot
        Sorted by ``(n, k)``. Orders without a root are omitted.
    """
    n_values = sorted({int(n) for n in n_values})
    if not n_values:
        return []
    if n_values[0] < 1:
        raise InvalidInputError("resonance orders must be positive")
    if not length > 0:
        raise InvalidInputError("super-cavity length must be positive")
    fsr = np.pi / length
    step = fsr / samples_per_fsr
    if side.d_m > 0:
        step = min(step, 1.0 / (64 * side.n_m * side.d_m))
    # |mu_m| stays below n_m pi, so this bound always passes the last order
    k_max = (n_values[-1] + 1) * fsr + side.n_m * np.pi / length
    k = np.arange(step, k_max + step, step)
    phi = k * length + mirror_phase(side, k)
    out = []
    for n in n_values:
        f = phi - n * np.pi
        roots = list(k[f == 0])
        for i in np.nonzero(f[:-1] * f[1:] < 0)[0]:
            local = _phase_function(side, length, k[i], phi[i] - k[i] * length)
            roots.append(brentq(lambda q: local(q) - n * np.pi, k[i], k[i + 1],
                                xtol=1e-300, rtol=4 * np.finfo(float).eps))
        for root in roots:
            m = side_mirror(side, root)
            in_gap = bool(abs(m.a) > 1) if side.d_m > 0 else True
            out.append(SeriesRoot(
                n=n, k=float(root), kd_m_over_pi=float(root * side.d_m / np.pi),
                in_gap=in_gap, chi=float(m.chi), fake=not in_gap,
            ))
    return sorted(out, key=lambda r: (r.n, r.k))


def empty_peaks(length, side, k_min, k_max, samples=200001, threshold=0.5):
    """Refined transmission maxima of the empty super-cavity.

    Returns
    -------
    list of (k, T, in_gap)
    """
    k = np.linspace(k_min, k_max, int(samples))
    t = empty_transmission(k, length, side)
    out = []
    for i in range(1, k.size - 1):
        if not (t[i] > t[i - 1] and t[i] >= t[i + 1] and t[i] > threshold):
            continue
        res = minimize_scalar(lambda q: -empty_transmission(q, length, side),
                              bracket=(k[i - 1], k[i], k[i + 1]), method="golden",
                              tol=1e-15)
        kp = float(res.x) if k[i - 1] <= res.x <= k[i + 1] else float(k[i])
        a = side_mirror(side, kp).a
        out.append((kp, float(empty_transmission(kp, length, side)), bool(abs(a) > 1)))
    return out


def approx_validity(k, side, margin=3.0):
    """Validity of the simplified resonance equation at ``k``.

    Returns ``(ok, deep_gap, strong_mirror)``. ``deep_gap`` requires
    ``n_m |Im arccos a_m| >= margin`` so that ``cot(n_m arccos a_m)``
    has reached ``-i``; ``strong_mirror`` is
    ``|zeta_m| > (1 - cos k d_m) / sin k d_m``.
    """
    x = k * side.d_m
    a, _ = dispersion_functions(x, side.zeta_m)
    depth = np.arccosh(max(abs(a), 1.0))
    deep = bool(side.n_m * depth >= margin)
    s = np.sin(x)
    bound = np.inf if s == 0 else (1 - np.cos(x)) / s
    strong = bool(abs(side.zeta_m) > bound)
    return deep and strong, deep, strong


def approx_resonance_equation(k, n, side, length):
    """Residual ``tan(k d_m) - zeta_m[(-1)^n cos(k(d_m - D)) - 1]``.

    Returns
    -------
    residual : float
    valid : bool
        See :func:`approx_validity`.
    """
    x = k * side.d_m
    res = np.tan(x) - side.zeta_m * ((-1) ** n * np.cos(k * (side.d_m - length)) - 1)
    return float(res), approx_validity(k, side)[0]


def _ratio_term(k, side):
    a, _ = dispersion_functions(k * side.d_m, side.zeta_m)
    u1 = chebyshev_u(side.n_m - 1, a)
    u2 = chebyshev_u(side.n_m - 2, a)
    return 1 - np.exp(1j * k * side.d_m) / (1 - 1j * side.zeta_m) * u2 / u1


def fsr_deviation(k_i, k_j, side, length):
    """Extra spacing ``Delta_(i,j)`` between two resonances.

    ``Delta = log(X_i / X_j) / (i D)`` with
    ``X = 1 - e^{ikd_m} U_{n_m-2}(a_m) / [(1 - i zeta_m) U_{n_m-1}(a_m)]``.
    The logarithm keeps the principal branch, so the result is complex in
    general; it drops the variation of ``arg(1 - i chi_m)`` between the
    two resonances.
    """
    if side.d_m == 0:
        return 0j
    return complex(np.log(_ratio_term(k_i, side) / _ratio_term(k_j, side)) / (1j * length))


def series_deviation(k_i, k_j, i, j, length):
    """Actual deviation ``k_i - k_j - (i - j) pi / D``."""
    return k_i - k_j - (i - j) * np.pi / length


def array_resonances(inner, k_min, k_max, samples=40001):
    """Transmissive points of the central array, rad/m."""
    system = inner.system()
    spectrum = scan_spectrum(system, k_min, k_max, samples, d_ref=inner.spacing_d)
    return [p.k for p in find_transmissive_points(spectrum, system, zeta_ref=inner.zeta)]


@dataclass
class TuningHit:
    """A side spacing at which a super-cavity and an array resonance coincide."""

    d_m: float
    n: int
    k: float
    kd_m_over_pi: float
    in_gap: bool
    shifted_k: float
    validated: bool
    transmission: float
    crystal_k: float
    crystal_transmission: float

    def to_dict(self):
        return {key: (bool(v) if isinstance(v, (bool, np.bool_)) else v)
                for key, v in self.__dict__.items()}


def _unwrapped_mu(n_m, zeta, k, d_m, samples=2048):
    x = np.linspace(0.0, k * d_m, samples)
    return float(np.unwrap(effective_mirror(n_m, zeta, x).mu)[-1])


def _shifted_resonance(inner, n_side, zeta_m, d_m, k_a):
    # the outer membranes of the central array join the side mirrors
    side = SideMirrorSpec(n_side + 1, zeta_m, d_m)
    length = inner.total_length
    phi_a = k_a * length + _unwrapped_mu(side.n_m, zeta_m, k_a, d_m)
    n = np.round(phi_a / np.pi)
    local = _phase_function(side, length, k_a, phi_a - k_a * length)
    half = np.pi / length / 2
    lo, hi = k_a - half, k_a + half
    try:
        return float(brentq(lambda q: local(q) - n * np.pi, lo, hi, xtol=1e-12, rtol=1e-15))
    except ValueError:
        return float("nan")


def tune_dm(inner, n_side, zeta_m, dm_range, n_values=range(1, 9), steps=400,
            k_array=None, validate=True, min_transmission=0.99):
    """Side spacings where a super-cavity resonance meets an array resonance.

    The super-cavity length is ``D = (N - 1) d + 2 d_m``. For every array
    resonance ``k_a`` and order ``n`` the function
    ``k_a D(d_m) + mu_m(k_a; d_m) - n pi`` is scanned over ``d_m`` and its
    sign changes are refined to ``1e-12`` m. Only intersections in a side
    mirror band gap are kept. The shifted crystal resonance is recomputed
    analytically with ``n_side + 1`` mirror elements around the central
    ``(N - 1) d`` region.

    Parameters
    ----------
    inner : ArraySpec
        Central array.
    n_side : int
        Side membranes on each side.
    zeta_m : float
        Side membrane polarizability.
    dm_range : (float, float)
        Scan interval for ``d_m``, metres.
    n_values : iterable of int, optional
        Super-cavity orders considered.
    steps : int, optional
        Number of scan points.
    k_array : sequence of float, optional
        Array resonances; computed over ``kd/pi`` in ``(0.02, 2.5)`` if
        omitted.
    validate : bool, optional
        Check the full crystal transmission at the shifted resonance.
    min_transmission : float, optional

    Returns
    -------
    list of TuningHit
        Ordered by ``(n, d_m)``; empty when nothing intersects.
    """
    lo, hi = dm_range
    if not 0 < lo < hi:
        raise InvalidInputError("d_m range must be positive and increasing")
    if k_array is None:
        d = inner.spacing_d
        k_array = array_resonances(inner, 0.02 * np.pi / d, 2.5 * np.pi / d)
    orders = sorted({int(n) for n in n_values})
    grid = np.linspace(lo, hi, int(steps))
    hits = []
    for k_a in k_array:

        def phi(d_m, k_a=k_a):
            length = inner.total_length + 2 * d_m
            return k_a * length + _unwrapped_mu(n_side, zeta_m, k_a, d_m)

        vals = np.array([phi(x) for x in grid])
        gaps = np.abs(dispersion_functions(k_a * grid, zeta_m)[0]) > 1
        for n in orders:
            f = vals - n * np.pi
            for i in np.nonzero(np.sign(f[:-1]) * np.sign(f[1:]) < 0)[0]:
                if not (gaps[i] and gaps[i + 1]):
                    continue
                if abs(vals[i + 1] - vals[i]) > np.pi:
                    # a branch jump of the unwrapped phase, not a crossing
                    continue
                d_star = brentq(lambda x: phi(x) - n * np.pi, grid[i], grid[i + 1],
                                xtol=1e-12, rtol=1e-15)
                hits.append(_finish_hit(inner, n_side, zeta_m, d_star, n, k_a,
                                        validate, min_transmission))
    return sorted(hits, key=lambda h: (h.n, h.d_m))


def _finish_hit(inner, n_side, zeta_m, d_m, n, k_a, validate, min_transmission):
    shifted = _shifted_resonance(inner, n_side, zeta_m, d_m, k_a)
    t_shift, crystal_k, crystal_t, ok = float("nan"), float("nan"), float("nan"), False
    if validate and np.isfinite(shifted):
        system = assemble_crystal(CrystalSpec(inner, n_side, zeta_m, d_m))
        t_shift = float(transmission(chain(system, shifted)))
        try:
            span = system.positions[-1] - system.positions[0]
            crystal_k = compound_resonances(system, shifted, window=np.pi / span)[0]
            crystal_t = float(transmission(chain(system, crystal_k)))
        except (TrackingError, IndexError):
            pass
        ok = t_shift > min_transmission
    a, _ = dispersion_functions(k_a * d_m, zeta_m)
    return TuningHit(
        d_m=float(d_m), n=int(n), k=float(k_a), kd_m_over_pi=float(k_a * d_m / np.pi),
        in_gap=bool(abs(a) > 1), shifted_k=shifted, validated=bool(ok),
        transmission=t_shift, crystal_k=float(crystal_k), crystal_transmission=crystal_t,
    )


def crystal_couplings(crystal, k_guess, scales=PhysicalScales(), step_h=None, window=None):
    """Couplings of the central membranes of an assembled crystal.

    The crystal resonance nearest ``k_guess`` is refined first; side
    membranes stay fixed. ``extras["localization_estimate"]`` holds
    ``(c k / D) x0`` with ``D`` the distance between the innermost side
    membranes.
    """
    if not isinstance(crystal, CrystalSpec):
        raise InvalidInputError("crystal_couplings expects a CrystalSpec")
    system = assemble_crystal(crystal)
    found = compound_resonances(system, k_guess, window)
    if not found:
        raise TrackingError(f"no crystal resonance near {k_guess}")
    k0 = found[0]
    length = crystal.cavity_length
    report = compute_couplings(system, k0, length, crystal.inner.zeta, scales, step_h)
    report.extras["localization_estimate"] = float(scales.c * k0 / length * scales.x0)
    report.extras["transmission"] = float(transmission(chain(system, k0)))
    report.extras["side_gap"] = bool(
        abs(dispersion_functions(k0 * crystal.side_spacing, crystal.side_zeta)[0]) > 1
    )
    return report

