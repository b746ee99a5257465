"""Closed forms for periodic arrays and their first-order defect expansion.

An equidistant array of ``N`` identical scatterers acts as one effective
scatterer with polarizability ``chi = zeta U_{N-1}(a)`` and phase ``mu``::

    M_N = [[(1 + i chi) e^{i mu}, i chi], [-i chi, (1 - i chi) e^{-i mu}]]

with ``a = cos(kd) - zeta sin(kd)`` and ``U_n`` the Chebyshev polynomial of
the second kind. A weak quadratic spacing defect adds a first-order term
``alpha * M_corr`` built from products of Chebyshev polynomials.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneratePointError, InvalidInputError

__all__ = [
    "chebyshev_u",
    "dispersion_functions",
    "EffectiveMirror",
    "effective_mirror",
    "unwrap_phase",
    "DefectExpansion",
    "defect_correction_matrix",
    "first_order_defect",
]


def chebyshev_u(n, x):
    """Chebyshev polynomial of the second kind, ``U_n(x)``.

    Evaluated by the three-term recurrence, so arguments with ``|x| > 1``
    need no special handling. ``U_{-1} = 0`` is accepted as a convenience.

    Parameters
    ----------
    n : int
        Degree, ``n >= -1``.
    x : float or array_like

    Returns
    -------
    float or ndarray
    """
    x = np.asarray(x, dtype=float)
    if n < -1:
        raise InvalidInputError(f"degree must be >= -1, got {n}")
    if n == -1:
        return np.zeros_like(x)[()]
    u_prev, u = np.zeros_like(x), np.ones_like(x)
    for _ in range(n):
        u_prev, u = u, 2 * x * u - u_prev
    return u[()]


def dispersion_functions(kd, zeta):
    """Return ``a = cos(kd) - zeta sin(kd)`` and ``b = sin(kd) + zeta cos(kd)``.

    ``b(x)`` equals ``a(x - pi/2)``.
    """
    kd = np.asarray(kd, dtype=float)
    s, c = np.sin(kd), np.cos(kd)
    return (c - zeta * s)[()], (s + zeta * c)[()]


@dataclass(frozen=True)
class EffectiveMirror:
    """Effective polarizability and phase of an equidistant array.

    Attributes
    ----------
    chi : float or ndarray
        Effective polarizability.
    mu : float or ndarray
        Effective phase on the principal branch ``(-pi, pi]``.
    a : float or ndarray
        Dispersion function at the evaluation point.
    phase : complex or ndarray
        ``exp(i mu)`` as evaluated from the closed form.
    """

    chi: object
    mu: object
    a: object
    phase: object

    def matrix(self):
        """Parametrized transfer matrix, shape ``(..., 2, 2)``."""
        chi = np.asarray(self.chi)
        e = np.asarray(self.phase)
        out = np.empty(chi.shape + (2, 2), dtype=complex)
        out[..., 0, 0] = (1 + 1j * chi) * e
        out[..., 0, 1] = 1j * chi
        out[..., 1, 0] = -1j * chi
        out[..., 1, 1] = (1 - 1j * chi) / e
        return out


def effective_mirror(n, zeta, kd):
    """Effective mirror of ``n`` equidistant scatterers.

    ``exp(i mu) = (1 - i chi) / [(1 - i zeta) U_{n-1}(a) - e^{ikd} U_{n-2}(a)]``.

    Parameters
    ----------
    n : int
        Number of scatterers, at least 1.
    zeta : float
        Polarizability of each scatterer.
    kd : float or array_like
        Phase accumulated over one spacing.

    Returns
    -------
    EffectiveMirror
    """
    if n < 1:
        raise InvalidInputError(f"need at least one scatterer, got {n}")
    kd = np.asarray(kd, dtype=float)
    a, _ = dispersion_functions(kd, zeta)
    u1 = chebyshev_u(n - 1, a)
    u2 = chebyshev_u(n - 2, a)
    chi = zeta * u1
    den = (1 - 1j * zeta) * u1 - np.exp(1j * kd) * u2
    if np.any(np.abs(den) < 1e-300):
        bad = np.atleast_1d(kd)[np.argmax(np.atleast_1d(np.abs(den)) < 1e-300)]
        raise DegeneratePointError(f"effective phase undefined at kd={bad}")
    phase = (1 - 1j * chi) / den
    return EffectiveMirror(chi=chi, mu=np.angle(phase)[()], a=a, phase=phase[()])


def unwrap_phase(phase_values):
    """Continuous branch of a sampled phase.

    Adjacent samples are matched to the nearest multiple of ``2 pi``; the
    first sample keeps its principal value.
    """
    return np.unwrap(np.asarray(phase_values, dtype=float))


@dataclass
class DefectExpansion:
    """First-order quantities of a weakly defected array.

    Attributes
    ----------
    xi : float
        First-order polarizability.
    nu : complex
        First-order phase. It is complex in general because the corrected
        matrix only keeps unit determinant to first order.
    gamma : float
        ``chi + alpha * xi``.
    lam : complex
        Effective phase of the corrected matrix.
    m_n, m_corr, m_ar : ndarray, shape (2, 2)
        Unperturbed matrix, first-order term and ``m_n + alpha * m_corr``.
    warning : str or None
        Set when ``alpha`` exceeds the small-defect guard.
    """

    xi: float
    nu: complex
    gamma: float
    lam: complex
    mirror: EffectiveMirror
    m_n: np.ndarray
    m_corr: np.ndarray
    m_ar: np.ndarray
    warning: str = None
    extras: dict = field(default_factory=dict)


def _weights(n):
    j = np.arange(1, n // 2 + 1)
    return j, 1.0 - 0.5 * (2 * j == n)


def defect_correction_matrix(n, zeta, k, d, corrections):
    """First-order term ``M_corr`` of an array with spacing corrections.

    ``M_corr = -ik sum_j w_j dcorr_j [[C11 e^{-ikd}, -C12], [C12, -C11* e^{ikd}]]``
    where ``C11 = 2[CC_{j-1} CC_{n-j-1} - zeta^2 U_{j-1} U_{n-j-1}]``,
    ``C12 = 4 zeta b U_{j-1} U_{n-j-1}``,
    ``CC_i = U_{i-1}(a) - e^{ikd}(1 + i zeta) U_i(a)``, and the weight ``w_j``
    halves the self-paired middle gap of even arrays.

    Parameters
    ----------
    n : int
        Number of scatterers, at least 2.
    zeta : float
    k : float
        Wavenumber, rad/m.
    d : float
        Unperturbed spacing, metres.
    corrections : array_like
        The ``n - 1`` gap corrections (metres), mirror symmetric.

    Returns
    -------
    m_corr : ndarray, shape (2, 2)
    c22_sum : complex
        ``sum_j w_j dcorr_j [C]_22``.
    """
    corrections = np.asarray(corrections, dtype=float)
    if n < 2 or corrections.size != n - 1:
        raise InvalidInputError("corrections must list the n - 1 gaps")
    kd = k * d
    a, b = dispersion_functions(kd, zeta)
    e = np.exp(1j * kd)

    def cc(i):
        return chebyshev_u(i - 1, a) - e * (1 + 1j * zeta) * chebyshev_u(i, a)

    total = np.zeros((2, 2), dtype=complex)
    c22_sum = 0j
    for j, w in zip(*_weights(n)):
        uu = chebyshev_u(j - 1, a) * chebyshev_u(n - j - 1, a)
        c11 = 2 * (cc(j - 1) * cc(n - j - 1) - zeta**2 * uu)
        c12 = 4 * zeta * b * uu
        weight = w * corrections[j - 1]
        total += weight * np.array([[c11 / e, -c12], [c12, -np.conj(c11) * e]])
        c22_sum += weight * np.conj(c11)
    return -1j * k * total, c22_sum


def first_order_defect(n, zeta, k, d, corrections, alpha, guard=1e-3):
    """First-order expansion of an array with a weak spacing defect.

    Parameters
    ----------
    n : int
        Number of scatterers, at least 3.
    zeta : float
    k : float
        Wavenumber, rad/m.
    d : float
        Unperturbed spacing, metres.
    corrections : array_like
        The ``n - 1`` gap corrections (metres) as returned by
        :func:`omarray.geometry.gap_corrections`.
    alpha : float
        Defect strength.
    guard : float, optional
        Above this ``alpha`` the expansion is flagged as unreliable.

    Returns
    -------
    DefectExpansion
    """
    if n < 3:
        raise InvalidInputError(f"the defect expansion needs n >= 3, got {n}")
    corrections = np.asarray(corrections, dtype=float)
    kd = k * d
    mirror = effective_mirror(n, zeta, kd)
    m_n = mirror.matrix()
    m_corr, c22_sum = defect_correction_matrix(n, zeta, k, d, corrections)
    a, b = dispersion_functions(kd, zeta)
    xi = 0.0
    for j, w in zip(*_weights(n)):
        xi += corrections[j - 1] * w * chebyshev_u(j - 1, a) * chebyshev_u(n - j - 1, a)
    xi = float(4 * zeta * k * b * xi)
    # the middle-weight sign flips relative to xi: (delta/2 - 1) = -w
    den = -k * c22_sum
    if abs(den) < 1e-300:
        raise DegeneratePointError(f"first-order phase undefined at kd={kd}")
    e_nu = (1j + xi) * np.exp(-1j * kd) / den
    nu = complex(-1j * np.log(e_nu))
    gamma = float(mirror.chi + alpha * xi)
    e_lam = (1 - 1j * gamma) / ((1 - 1j * mirror.chi) / mirror.phase + alpha * (1 - 1j * xi) / e_nu)
    lam = complex(-1j * np.log(e_lam))
    warning = None
    if alpha > guard:
        warning = f"alpha={alpha} exceeds the small-defect guard {guard}"
    return DefectExpansion(
        xi=xi, nu=nu, gamma=gamma, lam=lam, mirror=mirror, m_n=m_n, m_corr=m_corr,
        m_ar=m_n + alpha * m_corr, warning=warning,
        extras={"e_nu": e_nu, "e_lambda": e_lam},
    )
