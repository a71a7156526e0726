"""
Corcos coherence model and closed-form difference-to-sum power ratios.

All functions accept scalar or array angular frequencies (rad/s) and
broadcast with numpy. Angles are in radians.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ALPHA1 = 0.125  # longitudinal decay rate
ALPHA2 = 0.7  # lateral decay rate
SPEED_OF_SOUND = 343.0
CONVECTIVE_FACTOR = 0.8

# |cos| below this is treated as exactly zero (broadside / cross-flow)
_COS_EPS = 1e-12


def _cos(theta: float) -> float:
    c = float(np.cos(theta))
    return 0.0 if abs(c) < _COS_EPS else c


def _sin(theta: float) -> float:
    s = float(np.sin(theta))
    return 0.0 if abs(s) < _COS_EPS else s


def _check_omega(omega):
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0) or not np.all(np.isfinite(omega)):
        raise ValueError("angular frequency must be finite and non-negative")
    return omega


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


@dataclass(frozen=True)
class CorcosParams:
    """Geometry and flow parameters of the convective turbulence model.

    Parameters
    ----------
    d : float
        Microphone spacing [m].
    theta_w : float
        Wind direction of arrival w.r.t. the microphone axis [rad].
    U : float
        Free-field wind speed [m/s].
    alpha1, alpha2 : float
        Longitudinal and lateral coherence decay rates.
    """

    d: float
    theta_w: float
    U: float
    alpha1: float = ALPHA1
    alpha2: float = ALPHA2

    def __post_init__(self):
        for name in ("d", "U", "alpha1", "alpha2"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise ValueError(f"{name} must be positive, got {v!r}")
        if not np.isfinite(self.theta_w):
            raise ValueError("theta_w must be finite")

    @property
    def Uc(self) -> float:
        """Convective turbulence speed."""
        return CONVECTIVE_FACTOR * self.U

    @property
    def alpha(self) -> float:
        return decay_rate(self.theta_w, self.alpha1, self.alpha2)


@dataclass(frozen=True)
class SpeechGeometry:
    """Speech direction of arrival, mic spacing [m] and speed of sound [m/s]."""

    d: float
    theta_s: float
    c: float = SPEED_OF_SOUND

    def __post_init__(self):
        if not np.isfinite(self.d) or self.d <= 0:
            raise ValueError(f"d must be positive, got {self.d!r}")
        if not np.isfinite(self.c) or self.c <= 0:
            raise ValueError(f"c must be positive, got {self.c!r}")
        if not np.isfinite(self.theta_s):
            raise ValueError("theta_s must be finite")

    @property
    def d_theta(self) -> float:
        """Projected spacing d*cos(theta_s)."""
        return self.d * _cos(self.theta_s)

    @property
    def tdoa(self) -> float:
        """Time difference of arrival [s]."""
        return self.d_theta / self.c


def decay_rate(theta_w: float, alpha1: float = ALPHA1, alpha2: float = ALPHA2) -> float:
    """Direction-dependent decay rate alpha1*|cos| + alpha2*|sin|."""
    if not (alpha1 > 0 and alpha2 > 0):
        raise ValueError("decay constants must be positive")
    return alpha1 * abs(_cos(theta_w)) + alpha2 * abs(_sin(theta_w))


def coherence(params: CorcosParams, omega):
    """Complex Corcos coherence between the two microphones.

    Magnitude decays as ``exp(-alpha*omega*d/Uc)``, the phase advances as
    ``omega*d*cos(theta_w)/Uc``. Returns exactly ``1+0j`` at ``omega=0``.
    """
    omega = _check_omega(omega)
    mag = np.exp(-params.alpha * omega * params.d / params.Uc)
    phase = omega * params.d * _cos(params.theta_w) / params.Uc
    g = mag * np.exp(1j * phase)
    return complex(g) if np.ndim(g) == 0 else g


def _speech_terms(geom: SpeechGeometry, omega):
    x = omega * geom.d_theta / (2.0 * geom.c)
    return np.sin(x) ** 2, np.cos(x) ** 2


def _ratio(num, den):
    # den below tiny -> asymptote, reported as +inf
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(den > _COS_EPS**2, num / np.where(den > 0, den, 1.0), np.inf)
    return r


def pr_speech(geom: SpeechGeometry, omega):
    """Power ratio of clean, direct-path speech: tan^2(omega*d*cos(theta_s)/(2c)).

    Exactly at an asymptote the result is ``numpy.inf``.
    """
    omega = _check_omega(omega)
    s2, c2 = _speech_terms(geom, omega)
    return _out(_ratio(s2, c2))


def _wind_terms(params: CorcosParams, omega):
    g = np.real(coherence(params, omega))
    return 1.0 - g, 1.0 + g


def pr_wind(params: CorcosParams, omega):
    """Power ratio of pure wind noise under the Corcos model.

    Non-negative; exceeds one where the real part of the coherence is
    negative. Exactly 0 at ``omega=0``.
    """
    omega = _check_omega(omega)
    num, den = _wind_terms(params, omega)
    return _out(num / den)


def pr_mixture(phi_ss, phi_vv, geom: SpeechGeometry, params: CorcosParams, omega):
    """Power ratio of a speech + wind mixture.

    Numerator ``4*phi_ss*sin^2 + 2*phi_vv*(1 - Re g)``, denominator
    ``4*phi_ss*cos^2 + 2*phi_vv*(1 + Re g)``. Both terms are normalised by
    the dominant PSD before division, so a zero PSD reduces the result to
    :func:`pr_speech` or :func:`pr_wind` without rounding.
    """
    omega = _check_omega(omega)
    phi_ss = np.asarray(phi_ss, dtype=float)
    phi_vv = np.asarray(phi_vv, dtype=float)
    if np.any(phi_ss < 0) or np.any(phi_vv < 0):
        raise ValueError("PSDs must be non-negative")
    if np.any((phi_ss == 0) & (phi_vv == 0)):
        raise ValueError("power ratio undefined when both PSDs are zero")

    s2, c2 = _speech_terms(geom, omega)
    w_num, w_den = _wind_terms(params, omega)
    speech_dominant = 2.0 * phi_ss >= phi_vv
    with np.errstate(divide="ignore", invalid="ignore"):
        # divide through by 4*phi_ss
        r_v = phi_vv / (2.0 * phi_ss)
        num_a = s2 + r_v * w_num
        den_a = c2 + r_v * w_den
        # divide through by 2*phi_vv
        r_s = 2.0 * phi_ss / phi_vv
        num_b = r_s * s2 + w_num
        den_b = r_s * c2 + w_den
    num = np.where(speech_dominant, num_a, num_b)
    den = np.where(speech_dominant, den_a, den_b)
    return _out(_ratio(num, den))
