"""Optomechanical couplings from resonance shifts.

The linear and quadratic couplings of membrane ``j`` are the first and
second derivatives of a compound resonance with respect to the membrane
position, ``g1_j = c x0 dk/dx_j`` and ``g2_j = c x0^2 d^2k/dx_j^2``. They
are obtained by central differences of tracked resonance shifts, with one
level of Richardson extrapolation.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from .bands import SPEED_OF_LIGHT
from .errors import InvalidInputError, TrackingError
from .resonance import compound_resonances, resonance_offset, track_offset

__all__ = [
    "PhysicalScales",
    "CouplingReport",
    "ScalingEstimates",
    "reference_couplings",
    "membrane_derivatives",
    "linear_coupling",
    "quadratic_coupling",
    "sine_mode_amplitude",
    "sine_mode_profile",
    "collective_coupling",
    "scaling_estimates",
    "compute_couplings",
    "select_operating_point",
]

DEFAULT_STEP = 1e-6
MIN_STEP = 1e-10


@dataclass(frozen=True)
class PhysicalScales:
    """Conversion from wavenumber derivatives to coupling rates.

    Attributes
    ----------
    x0 : float
        Zero-point motion of the mechanical mode, metres.
    omega_m : float
        Mechanical frequency in rad/s. Carried as metadata only.
    c : float
        Speed of light, m/s.
    """

    x0: float = 2.7e-15
    omega_m: float = 2 * np.pi * 211e3
    c: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if not self.x0 > 0:
            raise InvalidInputError(f"zero-point motion must be positive, got {self.x0}")
        if not self.c > 0:
            raise InvalidInputError("speed of light must be positive")


@dataclass
class CouplingReport:
    """Per-membrane and collective couplings at one compound resonance.

    All rates are in rad/s. ``g1_sin`` and ``g2_sin`` sum the first
    ``sum_upper`` membranes; ``g1_sin_truncated`` and ``g2_sin_truncated``
    always sum the first ``N - 1`` so that both conventions are on record.
    Enhancements are ratios of magnitudes.
    """

    resonance_k: float
    omega_c: float
    g1_per_membrane: list
    g2_per_membrane: list
    g1_sin: float
    g2_sin: float
    g1_sin_truncated: float
    g2_sin_truncated: float
    g0_1: float
    g0_2: float
    g_opt: float
    enhancement_1: float
    enhancement_2: float
    sum_upper: int
    steps: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    def to_dict(self):
        out = asdict(self)
        out["g1_per_membrane"] = [float(v) for v in self.g1_per_membrane]
        out["g2_per_membrane"] = [float(v) for v in self.g2_per_membrane]
        out["steps"] = [float(v) for v in self.steps]
        return out


def reference_couplings(k, length, zeta, scales=PhysicalScales()):
    """Single-membrane reference couplings in a cavity of length ``length``.

    Returns
    -------
    g0_1, g0_2, g_opt : float
        ``(2ck/L) zeta/sqrt(1+zeta^2) x0``, ``(2ck^2/L) zeta x0^2`` and the
        unit-reflectivity optimum ``2ckx0/L``, all in rad/s.
    """
    if not length > 0:
        raise InvalidInputError(f"cavity length must be positive, got {length}")
    g_opt = 2 * scales.c * k * scales.x0 / length
    g0_1 = g_opt * zeta / np.sqrt(1 + zeta**2)
    g0_2 = 2 * scales.c * k**2 / length * zeta * scales.x0**2
    return float(g0_1), float(g0_2), float(g_opt)


def _mobile_spacing(system):
    xs = system.positions
    mob = sorted(system.mobile)
    if len(mob) >= 2:
        return float(np.median(np.diff(xs[mob])))
    if len(system) >= 2:
        return float(np.median(np.diff(xs)))
    raise InvalidInputError("cannot infer a length scale for the finite-difference step")


def _differences(system, k0, j, h, dk0):
    plus = track_offset(system, k0, system.displaced(j, h))
    minus = track_offset(system, k0, system.displaced(j, -h))
    return (plus - minus) / (2 * h), (plus - 2 * dk0 + minus) / h**2


def membrane_derivatives(system, k0, j, step_h=None, richardson=True, dk0=None,
                         min_step=None):
    """First and second derivative of a resonance with respect to ``x_j``.

    The step starts at ``step_h`` and is divided by ten whenever tracking
    fails, because a strongly coupled membrane can move the resonance by
    more than the tracking window.

    Parameters
    ----------
    system : SystemSpec
    k0 : float
        Resonance of ``system``, rad/m.
    j : int
        Index of the displaced element.
    step_h : float, optional
        Initial step in metres. Defaults to ``1e-6`` times the spacing of
        the mobile elements.
    richardson : bool, optional
        Combine steps ``h`` and ``h/2`` to cancel the ``h^2`` error term.
    dk0 : float, optional
        Offset of the exact resonance from ``k0``; computed if omitted.
    min_step : float, optional
        Smallest step tried before giving up.

    Returns
    -------
    dk_dx, d2k_dx2, h : float
        Derivatives in rad/m^2 and rad/m^3, and the step actually used.
    """
    spacing = _mobile_spacing(system)
    h = DEFAULT_STEP * spacing if step_h is None else float(step_h)
    floor = MIN_STEP * spacing if min_step is None else float(min_step)
    if not h > 0:
        raise InvalidInputError("step must be positive")
    if dk0 is None:
        dk0 = resonance_offset(system, k0)
    while True:
        try:
            d1, d2 = _differences(system, k0, j, h, dk0)
            if richardson:
                e1, e2 = _differences(system, k0, j, h / 2, dk0)
                d1, d2 = (4 * e1 - d1) / 3, (4 * e2 - d2) / 3
            return d1, d2, h
        except TrackingError as exc:
            h /= 10
            if h < floor:
                raise TrackingError(
                    f"membrane {j}: resonance lost for every step down to {h * 10:.3g} m"
                ) from exc


def linear_coupling(system, k0, j, scales=PhysicalScales(), step_h=None, richardson=True):
    """Linear coupling ``g1_j`` in rad/s."""
    d1, _, _ = membrane_derivatives(system, k0, j, step_h, richardson)
    return scales.c * scales.x0 * d1


def quadratic_coupling(system, k0, j, scales=PhysicalScales(), step_h=None, richardson=True):
    """Quadratic coupling ``g2_j`` in rad/s."""
    _, d2, _ = membrane_derivatives(system, k0, j, step_h, richardson)
    return scales.c * scales.x0**2 * d2


def sine_mode_amplitude(n, kd, zeta, d, length, scales=PhysicalScales()):
    """Amplitude ``G`` of the sinusoidal coupling profile, rad/s.

    Valid at the first transmissive point of an equidistant array in a long
    cavity, with ``omega_c = c k``.
    """
    k = kd / d
    s = np.sin(np.pi / n)
    root = np.sqrt(s**2 + zeta**2)
    num = zeta / s * (root - zeta)
    den = length - 2 * n * d * zeta / s**2 * root
    return float(-2 * scales.c * k * scales.x0 * num / den)


def sine_mode_profile(n, kd, zeta, d, length, scales=PhysicalScales()):
    """Expected ``g1_j = G sin(2 pi (j - 1/2) / n)`` for ``j = 1..n``."""
    j = np.arange(1, n + 1)
    return sine_mode_amplitude(n, kd, zeta, d, length, scales) * np.sin(2 * np.pi * (j - 0.5) / n)


def collective_coupling(g_list, upper=None):
    """Root-sum-square of the first ``upper`` couplings (all by default)."""
    g = np.asarray(g_list, dtype=float)
    if upper is not None:
        if upper < 0 or upper > g.size:
            raise InvalidInputError(f"upper must lie in [0, {g.size}], got {upper}")
        g = g[:upper]
    return float(np.sqrt(np.sum(g**2)))


@dataclass(frozen=True)
class ScalingEstimates:
    """Closed-form estimates of the collective linear coupling.

    Attributes
    ----------
    small_zeta : float
        ``g |zeta| sqrt(N/2)``, valid for ``N|zeta|/pi << 1``.
    large_zeta : float
        ``(sqrt(2)/pi) g zeta^2 N^(3/2)``, valid for ``N|zeta|/pi >> 1``.
    regime_parameter : float
        ``N |zeta| / pi``.
    regime : str
        ``"small"``, ``"large"`` or ``"crossover"``.
    length_margin : float
        ``2 (zeta N / pi)^2``, the relative growth of the effective
        optical length ``D + (2/pi^2) d zeta^2 N^3`` over ``D``.
    length_valid : bool
        ``length_margin < 1``.
    """

    small_zeta: float
    large_zeta: float
    regime_parameter: float
    regime: str
    length_margin: float
    length_valid: bool


def scaling_estimates(n, zeta, g=1.0):
    """Small- and large-``zeta`` estimates of ``g1_sin`` in units of ``g``."""
    small = g * abs(zeta) * np.sqrt(n / 2)
    large = np.sqrt(2) / np.pi * g * zeta**2 * n**1.5
    p = n * abs(zeta) / np.pi
    if np.isclose(p, 1.0):
        regime = "crossover"
    else:
        regime = "small" if p < 1 else "large"
    margin = 2 * (zeta * n / np.pi) ** 2
    return ScalingEstimates(
        small_zeta=float(small), large_zeta=float(large), regime_parameter=float(p),
        regime=regime, length_margin=float(margin), length_valid=bool(margin < 1),
    )


def compute_couplings(system, k0, length, zeta, scales=PhysicalScales(), step_h=None,
                      sum_upper=None, richardson=True):
    """Couplings of every mobile element at the resonance ``k0``.

    Parameters
    ----------
    system : SystemSpec
        Compound system; only ``system.mobile`` elements are displaced.
    k0 : float
        Refined resonance of ``system``, rad/m.
    length : float
        Cavity length for the reference couplings, metres.
    zeta : float
        Membrane polarizability for the reference couplings.
    scales : PhysicalScales, optional
    step_h : float, optional
        Initial finite-difference step, see :func:`membrane_derivatives`.
    sum_upper : int, optional
        Number of membranes in the collective sum. Defaults to all.
    richardson : bool, optional

    Returns
    -------
    CouplingReport
    """
    mobile = sorted(system.mobile)
    n = len(mobile)
    if n == 0:
        raise InvalidInputError("system has no mobile elements")
    upper = n if sum_upper is None else int(sum_upper)
    dk0 = resonance_offset(system, k0)
    g1, g2, steps = [], [], []
    for j in mobile:
        d1, d2, h = membrane_derivatives(system, k0, j, step_h, richardson, dk0=dk0)
        g1.append(scales.c * scales.x0 * d1)
        g2.append(scales.c * scales.x0**2 * d2)
        steps.append(h)
    g0_1, g0_2, g_opt = reference_couplings(k0, length, zeta, scales)
    g1_sin = collective_coupling(g1, upper)
    g2_sin = collective_coupling(g2, upper)
    return CouplingReport(
        resonance_k=float(k0), omega_c=float(scales.c * k0),
        g1_per_membrane=g1, g2_per_membrane=g2,
        g1_sin=g1_sin, g2_sin=g2_sin,
        g1_sin_truncated=collective_coupling(g1, max(n - 1, 0)),
        g2_sin_truncated=collective_coupling(g2, max(n - 1, 0)),
        g0_1=g0_1, g0_2=g0_2, g_opt=g_opt,
        enhancement_1=g1_sin / abs(g0_1) if g0_1 else np.inf,
        enhancement_2=g2_sin / abs(g0_2) if g0_2 else np.inf,
        sum_upper=upper, steps=steps, extras={"resonance_offset": float(dk0)},
    )


def select_operating_point(system, k_target, candidates=2, step_h=None, window=None):
    """Compound resonance near ``k_target`` with the largest linear coupling.

    Consecutive cavity modes around a transmissive point of the array have
    alternating parity and very different couplings. The ``candidates``
    modes closest to ``k_target`` are compared by the root-sum-square of
    their first derivatives (single step, no extrapolation).

    Returns
    -------
    k_best : float
    table : list of (k, rss_dk_dx)
    """
    modes = compound_resonances(system, k_target, window)[:candidates]
    if not modes:
        raise TrackingError(f"no compound resonance near {k_target}")
    table = []
    for k in modes:
        dk0 = resonance_offset(system, k)
        d1 = [membrane_derivatives(system, k, j, step_h, False, dk0=dk0)[0] for j in system.mobile]
        table.append((k, float(np.sqrt(np.sum(np.square(d1))))))
    best = max(table, key=lambda row: row[1])
    return best[0], table
