"""Universal 1 -> 2 Gaussian cloning machines, symmetric in the two quadratures.

Trajectory samplers return coherent-state *labels*: the amplitude of the
coherent state a clone is displaced into. Vacuum and detector noise are added
once, at measurement time, so they are never counted twice.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from .core_math import ComplexAmplitude, sample_modulation
from .phase_space import GaussianState

OPTIMAL_PRODUCT = 0.25
_TOL = 1e-12

Amplitudes = Union[ComplexAmplitude, np.ndarray]


class UncertaintyViolationError(ValueError):
    """Clone noise variances whose product falls below 1/4."""


@dataclass(frozen=True)
class GqcmParams:
    """Per-quadrature noise variances added to clone 1 and clone 2."""

    sigma1_sq: float
    sigma2_sq: float

    def __post_init__(self):
        if not (self.sigma1_sq > 0 and self.sigma2_sq > 0):
            raise ValueError("cloning noise variances must be positive")
        if self.sigma1_sq * self.sigma2_sq < OPTIMAL_PRODUCT - _TOL:
            raise UncertaintyViolationError(
                f"sigma1^2 * sigma2^2 = {self.sigma1_sq * self.sigma2_sq:.6g} < 1/4"
            )

    @classmethod
    def optimal(cls, sigma1_sq: float) -> "GqcmParams":
        """Optimal machine with clone-1 noise ``sigma1_sq``."""
        return cls(sigma1_sq, OPTIMAL_PRODUCT / sigma1_sq)

    @property
    def is_optimal(self) -> bool:
        return abs(self.sigma1_sq * self.sigma2_sq - OPTIMAL_PRODUCT) < _TOL

    @property
    def is_symmetric(self) -> bool:
        return self.sigma1_sq == self.sigma2_sq


def validate(params: GqcmParams) -> GqcmParams:
    """Re-check a parameter set (construction already validates)."""
    return GqcmParams(params.sigma1_sq, params.sigma2_sq)


class ClonePairSample(NamedTuple):
    clone1: Amplitudes
    clone2: Amplitudes
    shared_shift: Amplitudes


def gqcm_joint_cm(sigma_sq: float) -> np.ndarray:
    """Joint covariance matrix of the two clones of an optimal machine.

    Clone 1 carries excess noise ``sigma_sq``, clone 2 ``1/(4 sigma_sq)``, and
    the cross block is ``I/2``.
    """
    if not sigma_sq > 0:
        raise ValueError("sigma_sq must be positive")
    eye = np.eye(2)
    return 0.5 * np.block(
        [
            [(1.0 + 2.0 * sigma_sq) * eye, eye],
            [eye, (1.0 + 1.0 / (2.0 * sigma_sq)) * eye],
        ]
    )


def joint_output_state(input: ComplexAmplitude, sigma_sq: float) -> GaussianState:
    x, p = float(input[0]), float(input[1])
    return GaussianState(np.array([x, p, x, p]), gqcm_joint_cm(sigma_sq))


def _shift(input, noise):
    if isinstance(input, ComplexAmplitude):
        return input + noise
    return np.asarray(input, dtype=float) + noise


def _noise_like(input, sigma2, rng):
    if isinstance(input, ComplexAmplitude):
        return sample_modulation(sigma2, rng)
    a = np.asarray(input, dtype=float)
    if a.ndim == 1:
        return np.asarray(sample_modulation(sigma2, rng))
    return sample_modulation(sigma2, rng, size=a.shape[0])


def sample_symmetric_pair(input: Amplitudes, rng: np.random.Generator) -> ClonePairSample:
    """One trajectory of the optimal symmetric cloner.

    Both clones are coherent states displaced by the same random ``mu`` drawn
    with per-quadrature variance 1/2. Accepts a single amplitude or an
    ``(n, 2)`` array of them.
    """
    mu = _noise_like(input, 0.5, rng)
    clone = _shift(input, mu)
    return ClonePairSample(clone, clone, mu)


def _check_omega(omega_sq):
    if not omega_sq > 0:
        raise ValueError("omega_sq must be positive")


def sample_asymmetric_kept_clone(input: Amplitudes, omega_sq: float, rng: np.random.Generator) -> Amplitudes:
    """Clone 2' of the asymmetric optimal cloner: noise variance ``1/(4 omega_sq)``."""
    _check_omega(omega_sq)
    return _shift(input, _noise_like(input, 0.25 / omega_sq, rng))


def sample_asymmetric_sent_clone(input: Amplitudes, omega_sq: float, rng: np.random.Generator) -> Amplitudes:
    """Clone 1' of the asymmetric optimal cloner: noise variance ``omega_sq``."""
    _check_omega(omega_sq)
    return _shift(input, _noise_like(input, omega_sq, rng))
