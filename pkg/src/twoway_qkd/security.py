"""Closed-form security analysis of the two-cloner attack (direct reconciliation).

With the forward cloner symmetric and the backward cloner optimal with
clone-1' noise ``omega^2``:

* total channel noise seen by Alice and Bob: ``1/2 + omega^2``
* Bob's error variance: ``1 + 1/2 + omega^2``
* Eve's error variance: ``2 + 1/(4 omega^2)``

The protocol is secure while Bob's variance does not exceed Eve's.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .core_math import mi_two_quadratures

ONE_WAY_THRESHOLD = 0.5
FORWARD_CLONER_NOISE = 0.5
HETERODYNE_NOISE = 1.0


def _check_omega(omega_sq):
    if not (omega_sq > 0 and math.isfinite(omega_sq)):
        raise ValueError(f"omega_sq must be positive and finite, got {omega_sq!r}")


def sigma_ch_sq(omega_sq: float) -> float:
    _check_omega(omega_sq)
    return FORWARD_CLONER_NOISE + omega_sq


def sigma_B_sq(omega_sq: float) -> float:
    return HETERODYNE_NOISE + sigma_ch_sq(omega_sq)


def sigma_E_sq(omega_sq: float) -> float:
    _check_omega(omega_sq)
    return 2.0 + 1.0 / (4.0 * omega_sq)


def is_secure_direct(omega_sq: float) -> bool:
    return sigma_B_sq(omega_sq) <= sigma_E_sq(omega_sq)


def threshold_closed_form():
    """``((3 + sqrt 5)/4, (1 + sqrt 5)/4)``: channel-noise threshold and the matching ``omega^2``."""
    root5 = math.sqrt(5.0)
    return (3.0 + root5) / 4.0, (1.0 + root5) / 4.0


def _gap(omega_sq: float) -> float:
    return sigma_E_sq(omega_sq) - sigma_B_sq(omega_sq)


def threshold_numeric(tolerance: float = 1e-12, bracket=(1e-6, 10.0)) -> float:
    """Bisect ``sigma_E^2 - sigma_B^2`` for its root and return the channel noise there."""
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    lo, hi = bracket
    f_lo, f_hi = _gap(lo), _gap(hi)
    assert f_lo > 0 > f_hi, "bracket does not straddle the root"
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break  # float resolution reached
        if _gap(mid) > 0:
            lo = mid
        else:
            hi = mid
    return sigma_ch_sq(0.5 * (lo + hi))


def mutual_informations(signal_var: float, omega_sq: float):
    """``(I_AB, I_AE)`` in bits, both quadratures counted."""
    if not signal_var > 0:
        raise ValueError("signal_var must be positive")
    return (
        mi_two_quadratures(signal_var, sigma_B_sq(omega_sq)),
        mi_two_quadratures(signal_var, sigma_E_sq(omega_sq)),
    )


@dataclass(frozen=True)
class SecurityReport:
    signal_var: float
    omega_sq: float
    sigma_ch_sq: float
    sigma_B_sq: float
    sigma_E_sq: float
    gamma_AB: float
    gamma_AE: float
    I_AB: float
    I_AE: float
    key_rate_gap: float
    secure: bool
    threshold_sigma_ch_sq: float
    one_way_threshold: float = ONE_WAY_THRESHOLD

    def to_dict(self) -> dict:
        return asdict(self)


class InconsistentSecurityVerdict(AssertionError):
    pass


def build_report(signal_var: float, omega_sq: float) -> SecurityReport:
    """Assemble every closed-form quantity and cross-check the three security tests."""
    s_b, s_e = sigma_B_sq(omega_sq), sigma_E_sq(omega_sq)
    g_b, g_e = signal_var / s_b, signal_var / s_e
    i_b, i_e = mutual_informations(signal_var, omega_sq)
    by_sigma, by_gamma, by_info = s_b <= s_e, g_b >= g_e, i_b >= i_e
    if not by_sigma == by_gamma == by_info:
        raise InconsistentSecurityVerdict(
            f"security tests disagree at omega^2={omega_sq}: "
            f"sigma={by_sigma} gamma={by_gamma} info={by_info}"
        )
    return SecurityReport(
        signal_var=signal_var,
        omega_sq=omega_sq,
        sigma_ch_sq=sigma_ch_sq(omega_sq),
        sigma_B_sq=s_b,
        sigma_E_sq=s_e,
        gamma_AB=g_b,
        gamma_AE=g_e,
        I_AB=i_b,
        I_AE=i_e,
        key_rate_gap=i_b - i_e,
        secure=by_sigma,
        threshold_sigma_ch_sq=threshold_closed_form()[0],
    )
