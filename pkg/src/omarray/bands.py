"""Band structure of the infinite array and its Kronig-Penney counterpart.

One period of the infinite array has transfer matrix ``M F`` with trace
``2a(kd)``. Light propagates where ``|a| <= 1`` with Bloch wavenumber
``q = arccos(a)/d``, and decays as ``exp(-kappa x)`` with
``kappa = arccosh|a|/d`` in the gaps.

In dimensionless units ``xbar = x/d`` the wave equation becomes
``[-d^2/dxbar^2 - beta sum_i delta(xbar - xbar_i)] E = (kd)^2 E`` with
``beta = 2 kd zeta``. This module measures energies in those units. The
Bloch and Wannier functions below use cells ``(j - 1/2, j + 1/2]`` with
delta walls at half-integer ``xbar``.
"""

from dataclasses import dataclass

import numpy as np

from .chebyshev import dispersion_functions
from .errors import ConvergenceError, InvalidInputError
from .tmat import propagation_matrix, scatter_matrix

__all__ = [
    "BandPoint",
    "SchrodingerMap",
    "dispersion",
    "unit_cell_trace",
    "band_edges",
    "band_index_of",
    "helmholtz_to_schrodinger",
    "bloch_wavefunction",
    "band0_kd",
    "wannier_function",
]

SPEED_OF_LIGHT = 299792458.0


@dataclass
class BandPoint:
    """Dispersion data at one or more optical wavenumbers.

    ``q`` is the Bloch wavenumber where propagating and NaN elsewhere;
    ``kappa`` is the evanescent decay rate in gaps and zero in bands.
    """

    k: object
    q: object
    kappa: object
    propagating: object
    a: object


def dispersion(kd, zeta, d=1.0):
    """Bloch wavenumber or evanescent decay rate.

    Parameters
    ----------
    kd : float or array_like
    zeta : float
    d : float, optional
        Period in metres; ``q`` and ``kappa`` are returned per metre.
    """
    a, _ = dispersion_functions(kd, zeta)
    a = np.asarray(a)
    prop = np.abs(a) <= 1
    q = np.where(prop, np.arccos(np.clip(a, -1, 1)), np.nan) / d
    kappa = np.where(prop, 0.0, np.arccosh(np.maximum(np.abs(a), 1))) / d
    return BandPoint(k=np.asarray(kd) / d, q=q[()], kappa=kappa[()], propagating=prop[()], a=a[()])


def unit_cell_trace(kd, zeta):
    """Trace of ``M F`` for one period, computed from the matrices."""
    kd = np.atleast_1d(np.asarray(kd, dtype=float))
    m = scatter_matrix(zeta)
    out = np.array([np.trace(m @ propagation_matrix(x, 1.0)) for x in kd])
    return out.reshape(np.shape(kd))


def band_edges(zeta, band=0):
    """Edges in ``kd`` of band ``band`` of the infinite array.

    For ``zeta < 0`` the band is ``[n pi + 2 arctan|zeta|, (n + 1) pi]``,
    so the lowest band starts at a strictly positive ``kd`` and tops out at
    ``pi``. For ``zeta > 0`` it is ``[n pi, (n + 1) pi - 2 arctan zeta]``.
    Both edges solve ``|a(kd)| = 1``.
    """
    if band < 0:
        raise InvalidInputError("band index must be non-negative")
    off = 2 * np.arctan(abs(zeta))
    if zeta < 0:
        return band * np.pi + off, (band + 1) * np.pi
    return band * np.pi, (band + 1) * np.pi - off


def band_index_of(kd, zeta):
    """Index of the band whose interval is nearest to ``kd``."""
    base = max(int(np.floor(kd / np.pi)), 0)
    best, best_dist = base, np.inf
    for n in range(max(base - 1, 0), base + 2):
        lo, hi = band_edges(zeta, n)
        dist = 0.0 if lo <= kd <= hi else min(abs(kd - lo), abs(kd - hi))
        if dist < best_dist:
            best, best_dist = n, dist
    return best


@dataclass
class SchrodingerMap:
    """Parameters of the equivalent Schrodinger problem.

    Energies are in units of ``hbar^2 / (2 m d^2)``, so the photon energy is
    ``(kd)^2``.

    Attributes
    ----------
    energy_E : float
        ``(omega d / c)^2``.
    potential_strength_beta : float
        ``2 (omega/c)^2 zeta d / k = 2 kd zeta``; negative for mirrors.
    kinetic_scale_J : float
        A quarter of the energy width of the lowest band.
    defect_strength_Omega : float
        ``alpha * beta``.
    """

    energy_E: float
    potential_strength_beta: float
    kinetic_scale_J: float
    defect_strength_Omega: float


def helmholtz_to_schrodinger(omega, zeta, d, alpha=0.0, c=SPEED_OF_LIGHT):
    """Map an optical frequency and array onto Schrodinger parameters."""
    kd = omega / c * d
    beta = 2 * kd * zeta
    lo, hi = band_edges(zeta, 0)
    j = (hi**2 - lo**2) / 4
    return SchrodingerMap(
        energy_E=kd**2, potential_strength_beta=beta, kinetic_scale_J=j,
        defect_strength_Omega=alpha * beta,
    )


def _cell_norm(qd, kd):
    cq, sq = np.cos(qd / 2), np.sin(qd / 2)
    ck, sk = np.cos(kd / 2), np.sin(kd / 2)
    sinc = np.sin(kd) / (2 * kd)
    return (cq * sk) ** 2 * (0.5 + sinc) + (sq * ck) ** 2 * (0.5 - sinc)


def bloch_wavefunction(q, kd, zeta, x_over_d, check=True):
    """Normalised Bloch function of the delta-wall lattice.

    On the central cell ``(-1/2, 1/2]``::

        psi0 = A [cos(q/2) sin(kd/2) cos(kd x) + i sin(q/2) cos(kd/2) sin(kd x)]

    and ``psi(x) = exp(i q j) psi0(x - j)`` in cell ``j``. ``A`` is real and
    positive, which fixes the gauge ``psi0(0) > 0``, and normalises the
    central cell to one.

    Parameters
    ----------
    q : float
        Bloch phase per cell, ``q d``.
    kd : float
    zeta : float
    x_over_d : float or array_like
    check : bool, optional
        Verify ``cos(q) = a(kd)``.
    """
    if check:
        a, _ = dispersion_functions(kd, zeta)
        if abs(np.cos(q) - a) > 1e-9:
            raise InvalidInputError(f"(q={q}, kd={kd}) is not on the dispersion curve")
    norm = _cell_norm(q, kd)
    if norm <= 0:
        raise InvalidInputError(f"Bloch function vanishes at q={q}, kd={kd}")
    amp = 1.0 / np.sqrt(norm)
    x = np.asarray(x_over_d, dtype=float)
    j = np.ceil(x - 0.5)
    u = x - j
    psi0 = amp * (np.cos(q / 2) * np.sin(kd / 2) * np.cos(kd * u)
                  + 1j * np.sin(q / 2) * np.cos(kd / 2) * np.sin(kd * u))
    return (np.exp(1j * q * j) * psi0)[()]


def band0_kd(q, zeta):
    """Optical ``kd`` of the lowest band at Bloch phase ``q`` (``zeta < 0``)."""
    return np.arccos(np.cos(q) / np.sqrt(1 + zeta**2)) - np.arctan(zeta)


def _bz_nodes(nodes, panels):
    if nodes % panels:
        raise InvalidInputError("nodes must be a multiple of panels")
    t, w = np.polynomial.legendre.leggauss(nodes // panels)
    edges = np.linspace(-np.pi, np.pi, panels + 1)
    half = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    q = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    wq = (half[:, None] * w[None, :]).ravel()
    return q, wq


def _wannier(site, zeta, x, nodes, panels):
    q, wq = _bz_nodes(nodes, panels)
    out = np.zeros(np.shape(x), dtype=complex)
    for qi, wi in zip(q, wq):
        kd = band0_kd(qi, zeta)
        out += wi * np.exp(-1j * qi * site) * bloch_wavefunction(qi, kd, zeta, x, check=False)
    return out / (2 * np.pi)


def wannier_function(site, zeta, x_over_d, nodes=256, panels=8, tol=1e-8):
    """Lowest-band Wannier function centred on cell ``site``.

    ``w_j(x) = (1/2 pi) integral over q in (-pi, pi] of exp(-i q j) psi_q(x)``,
    evaluated by composite Gauss-Legendre quadrature. The result is checked
    against half the nodes; a disagreement above ``tol`` (relative to the
    peak) raises :class:`ConvergenceError`.

    Parameters
    ----------
    site : int
    zeta : float
        Must be negative so that the lowest band is separated by a gap.
    x_over_d : array_like
    nodes, panels : int, optional
        Total Gauss-Legendre nodes and the number of equal panels.
    tol : float, optional
    """
    if zeta >= 0:
        raise InvalidInputError("Wannier functions are built for negative zeta only")
    x = np.asarray(x_over_d, dtype=float)
    w = _wannier(site, zeta, x, nodes, panels)
    coarse = _wannier(site, zeta, x, nodes // 2, panels)
    scale = max(np.max(np.abs(w)), 1e-300)
    err = float(np.max(np.abs(w - coarse)) / scale)
    if err > tol:
        raise ConvergenceError(f"Wannier quadrature reached only {err:.2e} (tol {tol:.1e})")
    return w
