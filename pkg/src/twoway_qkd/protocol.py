"""Two-way coherent-state protocol: ON (encode) and OFF (check) rounds.

Bob sends a randomly displaced coherent state forward. In an ON round Alice
adds her Gaussian displacement and returns the state; Bob heterodynes it and
subtracts his reference. In an OFF round Alice heterodynes the incoming state
and sends a fresh coherent state back, which lets the two parties estimate
the forward and backward channel noise separately.

Rounds are simulated in vectorised blocks. Each block draws from its own
substream derived from ``(seed, block index)``, so a session gives identical
output whatever the number of worker threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Iterator, Optional

import numpy as np

from .attack import EveRecord
from .core_math import (
    ComplexAmplitude,
    InsufficientDataError,
    empirical_error_variance,
    sample_modulation,
)
from .phase_space import heterodyne_labels

BLOCK_SIZE = 1 << 14
HETERODYNE_NOISE = 1.0  # vacuum 1/2 + detection 1/2, per quadrature


@dataclass(frozen=True)
class ProtocolConfig:
    signal_var: float = 100.0
    reference_var: float = 1000.0
    off_probability: float = 0.1
    rounds: int = 10**5
    seed: int = 0

    def __post_init__(self):
        if not (self.signal_var > 0 and self.reference_var > 0):
            raise ValueError("signal_var and reference_var must be positive")
        if not 0.0 <= self.off_probability <= 1.0:
            raise ValueError("off_probability must lie in [0, 1]")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")


@dataclass(frozen=True)
class ChannelModel:
    """Per-quadrature Gaussian noise on each path, or an eavesdropper hook.

    When ``attack`` is set it replaces the plain noise on both paths. The hook
    must provide ``forward(labels, rng) -> (to_alice, kept)``,
    ``backward(labels, rng) -> (to_bob, kept)`` and
    ``measure(kept_forward, kept_backward, rng) -> EveRecord``.
    """

    forward_noise: float = 0.0
    backward_noise: float = 0.0
    attack: Optional[Any] = None

    def __post_init__(self):
        if self.forward_noise < 0 or self.backward_noise < 0:
            raise ValueError("channel noise variances must be >= 0")

    @property
    def total_noise(self) -> float:
        return self.forward_noise + self.backward_noise


@dataclass(frozen=True)
class RoundRecord:
    kind: str
    beta: ComplexAmplitude
    bob_outcome: ComplexAmplitude
    alpha: Optional[ComplexAmplitude] = None
    bob_estimate: Optional[ComplexAmplitude] = None
    alice_outcome: Optional[ComplexAmplitude] = None
    retransmit: Optional[ComplexAmplitude] = None
    eve_record: Optional[EveRecord] = None


@dataclass(frozen=True)
class NoiseEstimate:
    forward: float
    backward: float
    sample_counts: tuple

    @property
    def total(self) -> float:
        return self.forward + self.backward


def _amp(row) -> Optional[ComplexAmplitude]:
    if np.isnan(row[0]):
        return None
    return ComplexAmplitude(float(row[0]), float(row[1]))


@dataclass(eq=False)
class Transcript:
    """Column-wise store of a session. Quadrature columns are ``(n, 2)`` arrays, NaN where unused."""

    off: np.ndarray
    beta: np.ndarray
    alpha: np.ndarray
    alice_outcome: np.ndarray
    retransmit: np.ndarray
    bob_outcome: np.ndarray
    bob_estimate: np.ndarray
    eve: Optional[EveRecord] = None
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return int(self.off.size)

    @property
    def n_off(self) -> int:
        return int(self.off.sum())

    @property
    def n_on(self) -> int:
        return len(self) - self.n_off

    def record(self, i: int) -> RoundRecord:
        return RoundRecord(
            kind="OFF" if self.off[i] else "ON",
            beta=_amp(self.beta[i]),
            bob_outcome=_amp(self.bob_outcome[i]),
            alpha=_amp(self.alpha[i]),
            bob_estimate=_amp(self.bob_estimate[i]),
            alice_outcome=_amp(self.alice_outcome[i]),
            retransmit=_amp(self.retransmit[i]),
            eve_record=None if self.eve is None else self.eve.take(i),
        )

    def __iter__(self) -> Iterator[RoundRecord]:
        for i in range(len(self)):
            yield self.record(i)

    def select(self, mask) -> "Transcript":
        return Transcript(
            self.off[mask],
            self.beta[mask],
            self.alpha[mask],
            self.alice_outcome[mask],
            self.retransmit[mask],
            self.bob_outcome[mask],
            self.bob_estimate[mask],
            None if self.eve is None else self.eve.select(mask),
            dict(self.meta),
        )

    @property
    def on_rounds(self) -> "Transcript":
        return self.select(~self.off)

    @property
    def off_rounds(self) -> "Transcript":
        return self.select(self.off)

    @staticmethod
    def concatenate(parts) -> "Transcript":
        parts = list(parts)
        cat = lambda name: np.concatenate([getattr(p, name) for p in parts])
        eves = [p.eve for p in parts]
        return Transcript(
            cat("off"),
            cat("beta"),
            cat("alpha"),
            cat("alice_outcome"),
            cat("retransmit"),
            cat("bob_outcome"),
            cat("bob_estimate"),
            None if any(e is None for e in eves) else EveRecord.concatenate(eves),
            dict(parts[0].meta) if parts else {},
        )


def simulate_block(config: ProtocolConfig, channel: ChannelModel, rng: np.random.Generator, n: int) -> Transcript:
    """Simulate ``n`` independent rounds with one random stream."""
    attack = channel.attack
    off = rng.random(n) < config.off_probability
    beta = sample_modulation(config.reference_var, rng, size=n)

    kept_forward = None
    if attack is not None:
        at_alice, kept_forward = attack.forward(beta, rng)
    else:
        at_alice = beta + sample_modulation(channel.forward_noise, rng, size=n)

    # ON: Alice displaces; OFF: she measures and re-prepares a fresh state
    alpha = sample_modulation(config.signal_var, rng, size=n)
    alice_outcome = heterodyne_labels(at_alice, rng)
    retransmit = sample_modulation(config.reference_var, rng, size=n)
    sent_back = np.where(off[:, None], retransmit, at_alice + alpha)

    kept_backward = None
    if attack is not None:
        at_bob, kept_backward = attack.backward(sent_back, rng)
    else:
        at_bob = sent_back + sample_modulation(channel.backward_noise, rng, size=n)
    bob_outcome = heterodyne_labels(at_bob, rng)
    eve = attack.measure(kept_forward, kept_backward, rng) if attack is not None else None

    on_mask = (~off)[:, None]
    nan = np.nan
    return Transcript(
        off=off,
        beta=beta,
        alpha=np.where(on_mask, alpha, nan),
        alice_outcome=np.where(on_mask, nan, alice_outcome),
        retransmit=np.where(on_mask, nan, retransmit),
        bob_outcome=bob_outcome,
        bob_estimate=np.where(on_mask, bob_outcome - beta, nan),
        eve=eve,
    )


def run_round(config: ProtocolConfig, channel: ChannelModel, rng: np.random.Generator) -> RoundRecord:
    return simulate_block(config, channel, rng, 1).record(0)


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))


def run_session(config: ProtocolConfig, channel: ChannelModel, workers: int = 1) -> Transcript:
    """Run ``config.rounds`` rounds. Output depends only on the seed, not on ``workers``."""
    n_blocks = -(-config.rounds // BLOCK_SIZE)

    def work(b: int) -> Transcript:
        n = min(BLOCK_SIZE, config.rounds - b * BLOCK_SIZE)
        return simulate_block(config, channel, block_rng(config.seed, b), n)

    if workers <= 1 or n_blocks == 1:
        blocks = [work(b) for b in range(n_blocks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(work, range(n_blocks)))
    out = Transcript.concatenate(blocks)
    out.meta.update(config=config, channel=channel)
    return out


def _pooled(true_vals: np.ndarray, est_vals: np.ndarray) -> np.ndarray:
    # stack x and p streams into one list of (true, estimate) pairs
    return np.column_stack([true_vals.reshape(-1), est_vals.reshape(-1)])


def estimate_channel_noise(transcript: Transcript) -> NoiseEstimate:
    """Forward and backward noise from OFF rounds, x and p pooled.

    Each estimate is the error variance of the heterodyne pair minus the unit
    vacuum-plus-detection noise. Finite samples may give slightly negative
    values; they are not clamped here.
    """
    off = transcript.off_rounds
    if len(off) < 2:
        raise InsufficientDataError(f"need at least 2 OFF rounds, got {len(off)}")
    fwd = empirical_error_variance(_pooled(off.beta, off.alice_outcome)) - HETERODYNE_NOISE
    bwd = empirical_error_variance(_pooled(off.retransmit, off.bob_outcome)) - HETERODYNE_NOISE
    return NoiseEstimate(fwd, bwd, (len(off), len(off)))


def extract_on_pairs(transcript: Transcript):
    """``(x_pairs, p_pairs)``: ``(n_on, 2)`` arrays of ``(alpha, bob_estimate)``."""
    on = transcript.on_rounds
    if len(on) == 0:
        raise InsufficientDataError("transcript has no ON rounds")
    x = np.column_stack([on.alpha[:, 0], on.bob_estimate[:, 0]])
    p = np.column_stack([on.alpha[:, 1], on.bob_estimate[:, 1]])
    return x, p


def extract_eve_pairs(transcript: Transcript):
    """Like :func:`extract_on_pairs` but with Eve's estimate of ``alpha``."""
    on = transcript.on_rounds
    if len(on) == 0:
        raise InsufficientDataError("transcript has no ON rounds")
    if on.eve is None or on.eve.alpha_estimate is None:
        raise InsufficientDataError("transcript carries no Eve estimates")
    est = on.eve.alpha_estimate
    return (
        np.column_stack([on.alpha[:, 0], est[:, 0]]),
        np.column_stack([on.alpha[:, 1], est[:, 1]]),
    )
