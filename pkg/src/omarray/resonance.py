"""Spectrum scans, transmissive points and resonance tracking.

Two notions of resonance are used. For a bare array a transmissive point is
a zero of the reflectivity. For a compound system (array in a cavity, or a
crystal) a resonance is a local maximum of the transmission ``1/|m22|^2``;
it is located as the root of ``Re(conj(m22) dm22/dk)``, which changes sign
from negative to positive there.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .bands import band_index_of
from .errors import InvalidInputError, TrackingError
from .tmat import chain, chain_with_derivative, reflectivity, transmission

__all__ = [
    "Spectrum",
    "Resonance",
    "scan_spectrum",
    "find_transmissive_points",
    "band_window",
    "local_linewidth",
    "compound_resonances",
    "find_compound_resonance",
    "track_offset",
    "resonance_offset",
    "track_resonance",
]


@dataclass
class Spectrum:
    """Reflectivity and transmission sampled on a uniform wavenumber grid.

    ``d_ref`` is the length used for the report coordinate ``kd/pi``.
    """

    k: np.ndarray
    reflectivity: np.ndarray
    transmission: np.ndarray
    d_ref: float

    @property
    def kd_over_pi(self):
        return self.k * self.d_ref / np.pi


@dataclass
class Resonance:
    """A refined spectral feature.

    Attributes
    ----------
    k : float
        Wavenumber, rad/m.
    band_index : int
        Nearest band of the reference infinite array, -1 if unknown.
    order_in_band : int
        1-based rank in wavenumber among features of the same band.
    residual_reflectivity : float
    kind : str
        ``"array-transmissive"``, ``"compound-cavity"`` or ``"supercavity"``.
    kd_over_pi : float
    verified : bool
        Reflectivity below the verification threshold.
    degenerate : bool
        One of a pair of transmissive points that merged into a single dip.
    refined : bool
        False if the local refinement did not converge.
    """

    k: float
    band_index: int
    order_in_band: int
    residual_reflectivity: float
    kind: str
    kd_over_pi: float
    verified: bool = True
    degenerate: bool = False
    refined: bool = True


def _default_d(system):
    if len(system) >= 2:
        return float(np.median(np.diff(system.positions)))
    return 1.0


def scan_spectrum(system, k_min, k_max, samples, d_ref=None):
    """Sample reflectivity and transmission on a uniform grid.

    Parameters
    ----------
    system : SystemSpec
    k_min, k_max : float
        Grid limits in rad/m, ``k_min < k_max``.
    samples : int
        Number of grid points, at least 2.
    d_ref : float, optional
        Length for the ``kd/pi`` coordinate. Defaults to the median gap.
    """
    if not k_min < k_max:
        raise InvalidInputError("k_min must be below k_max")
    if samples < 2:
        raise InvalidInputError("need at least two samples")
    k = np.linspace(k_min, k_max, int(samples))
    m = chain(system, k)
    d_ref = _default_d(system) if d_ref is None else d_ref
    return Spectrum(k=k, reflectivity=reflectivity(m), transmission=transmission(m), d_ref=d_ref)


def _abs_r(system, k):
    m = chain(system, k)
    return abs(m[0, 1] / m[1, 1])


def find_transmissive_points(spectrum, system, threshold=0.5, tol_kd=1e-12,
                             verify=1e-10, zeta_ref=None):
    """Refine the reflectivity minima of a scanned spectrum.

    Each strict local minimum below ``threshold`` is refined by golden-section
    search on ``|r(k)|``. A minimum whose reflectivity stays above ``verify``
    is not a true zero. In a mirror-symmetric system ``m12`` is purely
    imaginary, so such a dip marks two zeros that have merged; it is reported
    as two entries flagged ``degenerate``. Otherwise it is reported once as
    an unverified candidate.

    Parameters
    ----------
    spectrum : Spectrum
    system : SystemSpec
    threshold : float, optional
        Candidate cut on the sampled reflectivity.
    tol_kd : float, optional
        Target refinement accuracy in ``kd``.
    verify : float, optional
        Reflectivity below which a point counts as transmissive.
    zeta_ref : float, optional
        Polarizability used for band labels. Defaults to the median.

    Returns
    -------
    list of Resonance
    """
    r = spectrum.reflectivity
    k = spectrum.k
    d_ref = spectrum.d_ref
    if zeta_ref is None:
        zeta_ref = float(np.median(system.zetas)) if len(system) else 0.0
    symmetric = system.is_mirror_symmetric()
    found = []
    for i in range(1, r.size - 1):
        if not (r[i] < r[i - 1] and r[i] < r[i + 1] and r[i] < threshold):
            continue
        res = minimize_scalar(
            lambda q: _abs_r(system, q),
            bracket=(k[i - 1], k[i], k[i + 1]),
            method="golden",
            tol=tol_kd / (k[i] * d_ref),
            options={"maxiter": 500},
        )
        k_star = float(res.x)
        refined = bool(res.success) and k[i - 1] <= k_star <= k[i + 1]
        if not refined:
            k_star = float(k[i])
        big_r = float(res.fun) ** 2 if refined else float(r[i])
        verified = big_r < verify
        entry = dict(k=k_star, residual_reflectivity=big_r, verified=verified, refined=refined)
        if not verified and symmetric and refined:
            found.append(dict(entry, degenerate=True))
            found.append(dict(entry, degenerate=True))
        else:
            found.append(dict(entry, degenerate=False))
    out = []
    counts = {}
    for e in found:
        kd = e["k"] * d_ref
        band = band_index_of(kd, zeta_ref) if len(system) else -1
        counts[band] = counts.get(band, 0) + 1
        out.append(Resonance(
            k=e["k"], band_index=band, order_in_band=counts[band],
            residual_reflectivity=e["residual_reflectivity"], kind="array-transmissive",
            kd_over_pi=kd / np.pi, verified=e["verified"], degenerate=e["degenerate"],
            refined=e["refined"],
        ))
    return out


def band_window(n, zeta, band=0):
    """Interval in ``kd`` spanned by the transmissive points of a band.

    The ``n - 1`` points satisfy ``a(kd) = cos(m pi / n)``; they are centred
    on ``kd = pi/2 - arctan(zeta) + band*pi`` and span
    ``2 arcsin[cos(pi/n) / sqrt(1 + zeta^2)]``.

    Returns
    -------
    (kd_lo, kd_hi) : tuple of float
    """
    if n < 2:
        raise InvalidInputError("a band window needs at least two scatterers")
    centre = np.pi / 2 - np.arctan(zeta) + band * np.pi
    half = np.arcsin(np.cos(np.pi / n) / np.sqrt(1 + zeta**2))
    return centre - half, centre + half


def _slope(system, k0, dk):
    m, dm = chain_with_derivative(system, k0, dk)
    return float((np.conj(m[1, 1]) * dm[1, 1]).real)


def local_linewidth(system, k):
    """Half-width scale ``1/|d arg(m22)/dk|`` at ``k``.

    For an isolated Lorentzian transmission peak this equals the half width
    at half maximum when evaluated on resonance.
    """
    m, dm = chain_with_derivative(system, k)
    rate = abs((dm[1, 1] / m[1, 1]).imag)
    if rate == 0:
        return np.inf
    return 1.0 / rate


def _root(system, k0, lo, hi):
    return brentq(lambda q: _slope(system, k0, q), lo, hi, xtol=1e-300, rtol=1e-15, maxiter=300)


def _walk(system, k0, direction, w0, wmax, start=0.0):
    """Step away from ``k0 + start`` until a transmission maximum is bracketed."""
    prev = start
    h_prev = _slope(system, k0, prev)
    w = w0
    while w <= wmax:
        cur = start + direction * w
        h_cur = _slope(system, k0, cur)
        if direction > 0 and h_prev < 0 <= h_cur:
            return _root(system, k0, prev, cur) if h_cur else cur
        if direction < 0 and h_cur <= 0 < h_prev:
            return _root(system, k0, cur, prev) if h_cur else cur
        prev, h_prev = cur, h_cur
        w *= 2
    return None


def compound_resonances(system, k_guess, window=None, samples=2001):
    """All transmission maxima of a compound system near ``k_guess``.

    ``T`` is sampled on ``k_guess +/- window``; every grid maximum is
    refined as the sign change of ``Re(conj(m22) dm22/dk)`` between its
    neighbours.

    Parameters
    ----------
    system : SystemSpec
    k_guess : float
        Centre of the search, rad/m.
    window : float, optional
        Half-width of the search interval. Defaults to one free spectral
        range of the whole system, ``pi / (x_N - x_1)``.
    samples : int, optional

    Returns
    -------
    list of float
        Resonance wavenumbers ordered by distance from ``k_guess``.
    """
    if window is None:
        span = system.positions[-1] - system.positions[0] if len(system) > 1 else 0.0
        if span <= 0:
            raise TrackingError("a compound resonance needs at least two separated elements")
        window = np.pi / span
    dk = np.linspace(-window, window, int(samples))
    t = transmission(chain(system, k_guess + dk))
    peaks = [i for i in range(1, dk.size - 1) if t[i] >= t[i - 1] and t[i] > t[i + 1]]
    out = []
    for i in sorted(peaks, key=lambda i: abs(dk[i])):
        lo, hi = dk[i - 1], dk[i + 1]
        if _slope(system, k_guess, lo) < 0 < _slope(system, k_guess, hi):
            out.append(k_guess + _root(system, k_guess, lo, hi))
    return out


def find_compound_resonance(system, k_guess, window=None, samples=2001):
    """Transmission maximum of a compound system closest to ``k_guess``.

    See :func:`compound_resonances` for the parameters.

    Returns
    -------
    float
        Resonance wavenumber, rad/m.
    """
    found = compound_resonances(system, k_guess, window, samples)
    if not found:
        raise TrackingError(f"no transmission maximum near {k_guess}")
    return found[0]


def track_offset(system, k0, displaced_system, window=None):
    """Shift of a resonance under a small change of the system.

    The resonance of ``system`` at ``k0`` is followed onto
    ``displaced_system`` by walking downhill in ``|m22|`` within a trust
    window, then bracketing the maximum. The shift is returned relative to
    ``k0`` so it keeps full relative precision.

    Parameters
    ----------
    system : SystemSpec
        Reference system, resonant at ``k0``.
    k0 : float
        Reference resonance, rad/m.
    displaced_system : SystemSpec
    window : float, optional
        Maximum search distance. Defaults to ten local linewidths.

    Returns
    -------
    float
        ``k_new - k0`` in rad/m.
    """
    if displaced_system.same_as(system):
        return 0.0
    return _follow(system, k0, displaced_system, window)


def resonance_offset(system, k0, window=None):
    """Offset of the exact resonance from its double-precision estimate ``k0``.

    ``k0`` itself carries a rounding error of order ``eps * k0``; finite
    differences of tracked shifts must be taken relative to this offset.
    """
    return _follow(system, k0, system, window)


def _follow(system, k0, displaced_system, window):
    width = local_linewidth(system, k0)
    window = 10 * width if window is None else window
    h0 = _slope(displaced_system, k0, 0.0)
    if h0 == 0:
        return 0.0
    direction = 1 if h0 < 0 else -1
    dk = _walk(displaced_system, k0, direction, min(width, window) / 64, window)
    if dk is None:
        raise TrackingError(
            f"resonance at k={k0} lost within {window:.3g} rad/m; reduce the displacement"
        )
    return dk


def track_resonance(system, k0, displaced_system, window=None):
    """Resonance of ``displaced_system`` on the branch of ``k0``."""
    return k0 + track_offset(system, k0, displaced_system, window)
