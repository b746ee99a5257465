"""Membrane position sets and platform assembly.

Two platforms are supported. Platform "a" is a membrane array between two
end mirrors at ``-L/2`` and ``+L/2``. Platform "b" is an optomechanical
crystal: a central array flanked on each side by a periodic side array.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .tmat import SystemSpec

__all__ = [
    "ArraySpec",
    "CavityPlatformSpec",
    "CrystalSpec",
    "equidistant_positions",
    "defect_bound",
    "defect_positions",
    "gap_corrections",
    "assemble_platform_a",
    "assemble_crystal",
]


def defect_bound(n):
    """Upper limit on the quadratic defect strength for ``n`` membranes.

    Odd ``n`` uses ``4/[(n-3)(n+1)]``, at which the central gaps close.
    Even ``n`` uses the more conservative ``2/[n(n-1)]``; the gaps next to
    the centre close only at ``2/[n(n-2)]``.
    """
    if n < 2 or n == 3:
        return np.inf
    if n % 2:
        return 4.0 / ((n - 3) * (n + 1))
    return 2.0 / (n * (n - 1))


def equidistant_positions(n, total_length):
    """Positions ``D(-1/2 + (j-1)/(n-1))`` for ``j = 1..n``."""
    if n < 2:
        raise InvalidInputError(f"need at least two membranes, got {n}")
    if total_length <= 0:
        raise InvalidInputError(f"total length must be positive, got {total_length}")
    j = np.arange(n)
    return total_length * (-0.5 + j / (n - 1))


def defect_positions(n, total_length, alpha):
    """Positions with a quadratic spacing defect.

    ``x_j = x0_j - (alpha/d)(D^2/4 - x0_j^2) sgn(x0_j)``. Membranes are
    pushed toward the centre while the outermost two stay put, so the total
    length ``D`` is unchanged.

    Parameters
    ----------
    n : int
        Number of membranes, at least 2.
    total_length : float
        Distance ``D`` between the outermost membranes, metres.
    alpha : float
        Dimensionless defect strength, ``0 <= alpha < defect_bound(n)``.
    """
    x0 = equidistant_positions(n, total_length)
    bound = defect_bound(n)
    if not np.isfinite(alpha) or alpha < 0:
        raise InvalidInputError(f"defect strength must be finite and non-negative, got {alpha}")
    if alpha >= bound:
        raise InvalidInputError(
            f"defect strength {alpha} is at or above the bound {bound:.6g} for n={n}"
        )
    if alpha == 0:
        return x0
    d = total_length / (n - 1)
    x = x0 - alpha / d * (total_length**2 / 4 - x0**2) * np.sign(x0)
    # endpoints are fixed analytically; remove rounding residue
    x[0], x[-1] = x0[0], x0[-1]
    return x


def gap_corrections(positions, d, alpha):
    """Normalised gap corrections ``[d - (x_{j+1} - x_j)] / alpha``."""
    if alpha == 0:
        raise InvalidInputError("gap corrections are undefined for alpha = 0")
    return (d - np.diff(np.asarray(positions, dtype=float))) / alpha


@dataclass(frozen=True)
class ArraySpec:
    """Membrane array with optional quadratic defect.

    Attributes
    ----------
    n_membranes : int
        Number of membranes ``N``. Zero gives an empty array and one a
        single membrane at the origin.
    zeta : float
        Polarizability of every membrane.
    spacing_d : float
        Equidistant gap ``d`` in metres.
    alpha : float
        Defect strength.
    """

    n_membranes: int
    zeta: float
    spacing_d: float
    alpha: float = 0.0

    def __post_init__(self):
        if self.n_membranes < 0:
            raise InvalidInputError("number of membranes must be non-negative")
        if self.n_membranes >= 2 and self.spacing_d <= 0:
            raise InvalidInputError("spacing must be positive")
        if self.alpha < 0 or self.alpha >= defect_bound(self.n_membranes):
            raise InvalidInputError(
                f"defect strength {self.alpha} outside [0, {defect_bound(self.n_membranes):.6g})"
            )

    @property
    def total_length(self):
        return max(self.n_membranes - 1, 0) * self.spacing_d

    def positions(self):
        if self.n_membranes == 0:
            return np.zeros(0)
        if self.n_membranes == 1:
            return np.zeros(1)
        return defect_positions(self.n_membranes, self.total_length, self.alpha)

    def corrections(self):
        """Gap corrections of this array (requires ``alpha > 0``)."""
        return gap_corrections(self.positions(), self.spacing_d, self.alpha)

    def system(self):
        """The free-standing array as a :class:`SystemSpec`."""
        return SystemSpec(np.full(self.n_membranes, self.zeta), self.positions())


@dataclass(frozen=True)
class CavityPlatformSpec:
    """Array centred between two end mirrors at ``-L/2`` and ``+L/2``."""

    array: ArraySpec
    cavity_length: float
    mirror_zeta: float

    def __post_init__(self):
        if self.cavity_length <= 0:
            raise InvalidInputError("cavity length must be positive")
        if self.cavity_length < 10 * self.array.total_length:
            warnings.warn(
                f"cavity length {self.cavity_length} is not much larger than the array "
                f"length {self.array.total_length}",
                stacklevel=3,
            )


@dataclass(frozen=True)
class CrystalSpec:
    """Central array flanked by ``n_side`` membranes on each side."""

    inner: ArraySpec
    n_side: int
    side_zeta: float
    side_spacing: float

    def __post_init__(self):
        if self.n_side < 0:
            raise InvalidInputError("side membrane count must be non-negative")
        if self.n_side and self.side_spacing <= 0:
            raise InvalidInputError("side spacing must be positive")

    @property
    def cavity_length(self):
        """Distance between the innermost side membranes."""
        return self.inner.total_length + 2 * self.side_spacing

    @property
    def n_total(self):
        return self.inner.n_membranes + 2 * self.n_side


def assemble_platform_a(spec):
    """Mirror, array, mirror. Only the array membranes are mobile."""
    xs = spec.array.positions()
    half = spec.cavity_length / 2
    if xs.size and (xs[0] <= -half or xs[-1] >= half):
        raise InvalidInputError("array does not fit inside the cavity")
    n = xs.size
    zetas = np.concatenate([[spec.mirror_zeta], np.full(n, spec.array.zeta), [spec.mirror_zeta]])
    positions = np.concatenate([[-half], xs, [half]])
    return SystemSpec(zetas, positions, mobile=range(1, n + 1))


def assemble_crystal(spec):
    """Side array, central array, side array; only the centre is mobile.

    The innermost side membrane sits ``side_spacing`` away from the outer
    membrane of the central array, and side membranes are ``side_spacing``
    apart.
    """
    xs = spec.inner.positions()
    if xs.size == 0:
        raise InvalidInputError("crystal needs a non-empty central array")
    steps = spec.side_spacing * np.arange(1, spec.n_side + 1)
    right = xs[-1] + steps
    left = (xs[0] - steps)[::-1]
    positions = np.concatenate([left, xs, right])
    zetas = np.concatenate(
        [np.full(spec.n_side, spec.side_zeta), np.full(xs.size, spec.inner.zeta),
         np.full(spec.n_side, spec.side_zeta)]
    )
    mobile = range(spec.n_side, spec.n_side + xs.size)
    return SystemSpec(zetas, positions, mobile=mobile)
