"""Transfer-matrix algebra for stacks of zero-thickness scatterers.

Field vectors are ``(L, R)``: the amplitudes of the left- and right-moving
waves, referenced to the position of the nearest scatterer on the left. A
transfer matrix maps the vector on the right side of an element to the vector
on its left side, so a stack is the left-to-right product
``M_1 F_12 M_2 ... M_N``. With unit incidence from the left the amplitude
reflection is ``m12/m22`` and the transmission is ``1/m22``.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMatrixError, InvalidInputError

__all__ = [
    "Scatterer",
    "SystemSpec",
    "scatter_matrix",
    "propagation_matrix",
    "chain",
    "chain_with_derivative",
    "reflectivity",
    "transmission",
    "field_amplitude",
    "field_profile",
]


@dataclass(frozen=True)
class Scatterer:
    """A single thin scatterer.

    Parameters
    ----------
    zeta : float
        Dimensionless polarizability. Physical mirrors and membranes have
        ``zeta < 0``; positive values are allowed but warned about.
    position : float
        Position in metres.
    """

    zeta: float
    position: float

    def __post_init__(self):
        if not (np.isfinite(self.zeta) and np.isfinite(self.position)):
            raise InvalidInputError("scatterer zeta and position must be finite")
        if self.zeta > 0:
            warnings.warn(
                f"positive polarizability {self.zeta} does not describe a mirror",
                stacklevel=3,
            )


class SystemSpec:
    """Ordered list of scatterers.

    Small displacements are stored in ``offsets``, separately from the
    equilibrium ``base_positions``. Phases are then accumulated as
    ``k*gap + k*(offset difference)``, which keeps sub-femtometre motions
    resolvable next to centimetre-long gaps in double precision.

    Parameters
    ----------
    zetas : array_like
        Polarizability of each scatterer.
    positions : array_like
        Equilibrium positions in metres, strictly increasing.
    offsets : array_like, optional
        Small displacements added to ``positions``. Defaults to zero.
    mobile : sequence of int, optional
        Indices of elements that may move when couplings are extracted.
        Defaults to every element.
    """

    def __init__(self, zetas, positions, offsets=None, mobile=None):
        zetas = np.array(zetas, dtype=float).reshape(-1)
        positions = np.array(positions, dtype=float).reshape(-1)
        if zetas.shape != positions.shape:
            raise InvalidInputError("zetas and positions must have equal length")
        if not (np.all(np.isfinite(zetas)) and np.all(np.isfinite(positions))):
            raise InvalidInputError("zetas and positions must be finite")
        if offsets is None:
            offsets = np.zeros_like(positions)
        offsets = np.array(offsets, dtype=float).reshape(-1)
        if offsets.shape != positions.shape:
            raise InvalidInputError("offsets must match positions")
        gaps = np.diff(positions) + np.diff(offsets)
        if np.any(gaps <= 0):
            bad = int(np.argmax(gaps <= 0))
            raise InvalidInputError(
                f"positions must be strictly increasing (elements {bad} and {bad + 1})"
            )
        if np.any(zetas > 0):
            warnings.warn("system contains scatterers with positive polarizability", stacklevel=2)
        if mobile is None:
            mobile = tuple(range(zetas.size))
        mobile = tuple(int(j) for j in mobile)
        if any(j < 0 or j >= zetas.size for j in mobile):
            raise InvalidInputError("mobile index out of range")
        for arr in (zetas, positions, offsets):
            arr.flags.writeable = False
        self.zetas = zetas
        self.base_positions = positions
        self.offsets = offsets
        self.mobile = mobile

    @classmethod
    def from_scatterers(cls, scatterers, mobile=None):
        """Build a system from a sequence of :class:`Scatterer`."""
        scatterers = list(scatterers)
        return cls([s.zeta for s in scatterers], [s.position for s in scatterers], mobile=mobile)

    @classmethod
    def empty(cls):
        return cls([], [])

    def __len__(self):
        return self.zetas.size

    def __repr__(self):
        return f"SystemSpec(n={len(self)}, mobile={len(self.mobile)})"

    @property
    def positions(self):
        """Actual positions, equilibrium plus displacement."""
        return self.base_positions + self.offsets

    @property
    def scatterers(self):
        return [Scatterer(z, x) for z, x in zip(self.zetas, self.positions)]

    def same_as(self, other):
        """True when both systems describe identical element lists."""
        return (
            len(self) == len(other)
            and np.array_equal(self.zetas, other.zetas)
            and np.array_equal(self.base_positions, other.base_positions)
            and np.array_equal(self.offsets, other.offsets)
        )

    def displaced(self, j, dx):
        """Return a copy with element ``j`` moved by ``dx`` metres."""
        offsets = self.offsets.copy()
        offsets[j] += dx
        return SystemSpec(self.zetas, self.base_positions, offsets, self.mobile)

    def mirrored(self):
        """Reflect the system about ``x = 0``."""
        n = len(self)
        mobile = tuple(sorted(n - 1 - j for j in self.mobile))
        return SystemSpec(self.zetas[::-1], -self.base_positions[::-1], -self.offsets[::-1], mobile)

    def is_mirror_symmetric(self, rtol=1e-12):
        """True when the system equals its own reflection about the origin."""
        if len(self) == 0:
            return True
        x = self.positions
        scale = max(np.max(np.abs(x)), np.finfo(float).tiny)
        return bool(
            np.allclose(self.zetas, self.zetas[::-1], rtol=0, atol=0)
            and np.allclose(x, -x[::-1], rtol=0, atol=rtol * scale)
        )


def scatter_matrix(zeta):
    """Transfer matrix of a single scatterer.

    Parameters
    ----------
    zeta : float
        Polarizability.

    Returns
    -------
    ndarray, shape (2, 2)
        ``[[1 + i zeta, i zeta], [-i zeta, 1 - i zeta]]``.
    """
    if not np.isfinite(zeta):
        raise InvalidInputError(f"polarizability must be finite, got {zeta}")
    z = 1j * zeta
    return np.array([[1 + z, z], [-z, 1 - z]])


def propagation_matrix(k, d):
    """Free propagation over a distance ``d`` at wavenumber ``k``."""
    if d < 0:
        raise InvalidInputError(f"propagation distance must be non-negative, got {d}")
    p = np.exp(1j * k * d)
    return np.array([[p, 0], [0, np.conj(p)]])


def _gap_data(system):
    return np.diff(system.base_positions), np.diff(system.offsets)


def chain(system, k, dk=0.0):
    """Total transfer matrix of a system.

    Parameters
    ----------
    system : SystemSpec
    k : float or array_like
        Wavenumber(s) in rad/m.
    dk : float, optional
        Small wavenumber increment added to ``k``. Passing the increment
        separately keeps it at full relative precision.

    Returns
    -------
    ndarray, shape ``np.shape(k) + (2, 2)``
    """
    k = np.asarray(k, dtype=float)
    out = np.broadcast_to(np.eye(2, dtype=complex), k.shape + (2, 2)).copy()
    if len(system) == 0:
        return out
    gaps, dgaps = _gap_data(system)
    for i, z in enumerate(system.zetas):
        if i:
            g, dg = gaps[i - 1], dgaps[i - 1]
            p = np.exp(1j * k * g) * np.exp(1j * k * dg) * np.exp(1j * dk * (g + dg))
            out[..., :, 0] *= p[..., None]
            out[..., :, 1] *= np.conj(p)[..., None]
        out = out @ scatter_matrix(z)
    return out


def chain_with_derivative(system, k, dk=0.0):
    """Transfer matrix and its derivative with respect to ``k``.

    Uses ``dF/dk = i d sigma_3 F`` and the product rule.

    Parameters
    ----------
    system : SystemSpec
    k : float
        Base wavenumber.
    dk : float, optional
        Increment evaluated at full precision, see :func:`chain`.

    Returns
    -------
    M, dM : ndarray, shape (2, 2)
    """
    m = np.eye(2, dtype=complex)
    dm = np.zeros((2, 2), dtype=complex)
    if len(system) == 0:
        return m, dm
    gaps, dgaps = _gap_data(system)
    for i, z in enumerate(system.zetas):
        if i:
            g, dg = gaps[i - 1], dgaps[i - 1]
            p = np.exp(1j * k * g) * np.exp(1j * k * dg) * np.exp(1j * dk * (g + dg))
            length = g + dg
            # d/dk of M F: column scaling by p and conj(p)
            dm = dm * np.array([p, np.conj(p)]) + m * np.array([1j * length * p, -1j * length * np.conj(p)])
            m = m * np.array([p, np.conj(p)])
        s = scatter_matrix(z)
        m = m @ s
        dm = dm @ s
    return m, dm


def _m22(m):
    m = np.asarray(m)
    m22 = m[..., 1, 1]
    if np.any(np.abs(m22) < 1e-300):
        raise DegenerateMatrixError("|m22| vanishes; transfer matrix is not lossless")
    return m22


def reflectivity(m):
    """Intensity reflectivity ``|m12/m22|^2``.

    Evaluated as ``|m21/m22|^2``, equal for lossless chains. Both entries
    come from the same row of the product, so their rounding errors are
    correlated and the ratio stays accurate when ``|m22|`` is huge.
    """
    m22 = _m22(m)
    return np.abs(np.asarray(m)[..., 1, 0] / m22) ** 2


def transmission(m):
    """Intensity transmission ``1/|m22|^2``."""
    return 1.0 / np.abs(_m22(m)) ** 2


def field_amplitude(system, k, x):
    """Complex field for unit incidence from the left.

    No wave enters from the right. A point exactly at a scatterer is
    evaluated with the amplitudes of the region on its left; the field is
    continuous there, so the value is the common one.

    Parameters
    ----------
    system : SystemSpec
    k : float
        Wavenumber in rad/m.
    x : array_like
        Evaluation points in metres.

    Returns
    -------
    ndarray of complex
    """
    x = np.asarray(x, dtype=float)
    n = len(system)
    if n == 0:
        return np.exp(1j * k * x)
    xs = system.positions
    # amplitudes just right of each scatterer, walking from the right end
    right = np.empty((n, 2), dtype=complex)
    v = np.array([0.0, 1.0], dtype=complex)
    for j in range(n - 1, -1, -1):
        right[j] = v
        v = scatter_matrix(system.zetas[j]) @ v
        if j:
            v = propagation_matrix(k, xs[j] - xs[j - 1]) @ v
    left = v
    scale = 1.0 / left[1]
    idx = np.searchsorted(xs, x, side="left")
    amps = np.where(idx[..., None] == 0, left, right[np.maximum(idx - 1, 0)]) * scale
    ref = xs[np.maximum(idx - 1, 0)]
    u = x - ref
    return amps[..., 1] * np.exp(1j * k * u) + amps[..., 0] * np.exp(-1j * k * u)


def field_profile(system, k, x):
    """Field magnitude ``|E(x)|`` for unit incidence from the left."""
    return np.abs(field_amplitude(system, k, x))
