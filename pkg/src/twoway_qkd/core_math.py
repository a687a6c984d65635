"""Scalar Gaussian statistics and Shannon mutual information of additive Gaussian channels.

Conventions used throughout the package:

* quadratures obey ``[x, p] = i`` so the vacuum variance is 1/2 per quadrature;
* a complex amplitude is ``mu = (x + i p) / sqrt(2)``;
* mutual informations are in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class InsufficientDataError(ValueError):
    """Raised when an estimator is given too few samples."""


class ComplexAmplitude(NamedTuple):
    """Phase-space point stored as its quadrature pair ``(x, p)``."""

    x: float
    p: float

    @classmethod
    def from_complex(cls, mu: complex) -> "ComplexAmplitude":
        return cls(math.sqrt(2.0) * mu.real, math.sqrt(2.0) * mu.imag)

    @property
    def mu(self) -> complex:
        """The complex amplitude ``(x + i p) / sqrt(2)``."""
        return complex(self.x, self.p) / math.sqrt(2.0)

    def __add__(self, other):  # type: ignore[override]
        if isinstance(other, ComplexAmplitude):
            return ComplexAmplitude(self.x + other.x, self.p + other.p)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, ComplexAmplitude):
            return ComplexAmplitude(self.x - other.x, self.p - other.p)
        return NotImplemented


def _check_variance(variance, name="variance", strict=False):
    v = np.asarray(variance, dtype=float)
    bad = v <= 0 if strict else v < 0
    if np.any(bad) or np.any(~np.isfinite(v)):
        bound = "> 0" if strict else ">= 0"
        raise ValueError(f"{name} must be finite and {bound}, got {variance!r}")


def gaussian_pdf(x, variance):
    """Density of a zero-mean real Gaussian with the given variance.

    Works elementwise on arrays.
    """
    _check_variance(variance, strict=True)
    x = np.asarray(x, dtype=float)
    out = np.exp(-(x**2) / (2.0 * variance)) / np.sqrt(2.0 * np.pi * variance)
    return float(out) if out.ndim == 0 else out


def sample_real(variance, rng: np.random.Generator, size=None):
    """Zero-mean Gaussian draw(s). ``variance == 0`` returns exact zeros."""
    _check_variance(variance)
    if variance == 0:
        return 0.0 if size is None else np.zeros(size)
    return rng.normal(0.0, math.sqrt(variance), size=size)


def sample_modulation(sigma2, rng: np.random.Generator, size=None):
    """Draw from the isotropic phase-space kernel ``exp(-|mu|^2/sigma2) / (pi sigma2)``.

    Each quadrature gets variance ``sigma2``. Without ``size`` a single
    :class:`ComplexAmplitude` is returned, otherwise an ``(size, 2)`` array of
    ``(x, p)`` rows.
    """
    _check_variance(sigma2, name="sigma2")
    if size is None:
        if sigma2 == 0:
            return ComplexAmplitude(0.0, 0.0)
        x, p = rng.normal(0.0, math.sqrt(sigma2), size=2)
        return ComplexAmplitude(float(x), float(p))
    if sigma2 == 0:
        return np.zeros((size, 2))
    return rng.normal(0.0, math.sqrt(sigma2), size=(size, 2))


def mi_per_quadrature(signal_var, noise_var):
    """Shannon information ``0.5 * log2(1 + signal_var / noise_var)`` in bits."""
    _check_variance(signal_var, name="signal_var")
    _check_variance(noise_var, name="noise_var", strict=True)
    out = 0.5 * np.log2(1.0 + np.asarray(signal_var, float) / noise_var)
    return float(out) if out.ndim == 0 else out


def mi_two_quadratures(signal_var, noise_var):
    """Information carried by both quadratures of one mode, ``log2(1 + SNR)``."""
    return 2.0 * mi_per_quadrature(signal_var, noise_var)


def _as_pairs(pairs) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("pairs must have shape (n, 2) of (true, estimate)")
    if arr.shape[0] < 2:
        raise InsufficientDataError(f"need at least 2 pairs, got {arr.shape[0]}")
    return arr


def empirical_error_variance(pairs) -> float:
    """Unbiased sample variance of ``estimate - true`` over ``(true, estimate)`` pairs."""
    arr = _as_pairs(pairs)
    return float(np.var(arr[:, 1] - arr[:, 0], ddof=1))


def empirical_mi(pairs, signal_var) -> float:
    """Gaussian plug-in estimate of the information per quadrature.

    Substitutes the empirical error variance into the Shannon formula. Returns
    ``math.inf`` when the estimates are exact.
    """
    _check_variance(signal_var, name="signal_var", strict=True)
    noise = empirical_error_variance(pairs)
    if noise == 0.0:
        return math.inf
    return float(mi_per_quadrature(signal_var, noise))


def correlation_mi(pairs) -> float:
    """Gaussian information estimate ``-0.5 * log2(1 - rho^2)`` from the sample correlation.

    Unlike :func:`empirical_mi` this does not assume the estimate is an unbiased
    copy of the true value, so it reads zero for independent streams.
    """
    arr = _as_pairs(pairs)
    rho = np.corrcoef(arr[:, 0], arr[:, 1])[0, 1]
    if abs(rho) >= 1.0:
        return math.inf
    return float(-0.5 * np.log2(1.0 - rho**2))


@dataclass(frozen=True)
class SampleStats:
    """Streaming count / mean / sum of squared deviations, mergeable across workers."""

    count: int = 0
    mean: float = 0.0
    second_moment_accumulator: float = 0.0

    @classmethod
    def from_samples(cls, samples) -> "SampleStats":
        a = np.asarray(samples, dtype=float).ravel()
        if a.size == 0:
            return cls()
        m = float(a.mean())
        return cls(int(a.size), m, float(np.sum((a - m) ** 2)))

    def merge(self, other: "SampleStats") -> "SampleStats":
        # Chan et al. pairwise update
        if other.count == 0:
            return self
        if self.count == 0:
            return other
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / n
        m2 = (
            self.second_moment_accumulator
            + other.second_moment_accumulator
            + delta**2 * self.count * other.count / n
        )
        return SampleStats(n, mean, m2)

    @property
    def variance(self) -> float:
        if self.count < 2:
            raise InsufficientDataError("variance needs at least 2 samples")
        return max(self.second_moment_accumulator, 0.0) / (self.count - 1)
