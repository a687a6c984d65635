"""Eve's individual attack built from two optimal Gaussian cloners.

A symmetric cloner ``M`` sits on the forward path (Bob -> Alice) and an
asymmetric one ``M'`` on the backward path (Alice -> Bob). Eve keeps one
clone from each and either interferes them on a beam splitter, so that the
reference amplitude cancels in the minus port, or heterodynes them directly.

Every function here accepts a single :class:`ComplexAmplitude` or a batch as
an ``(n, 2)`` array of ``(x, p)`` rows.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

from .cloner import (
    Amplitudes,
    sample_asymmetric_kept_clone,
    sample_asymmetric_sent_clone,
    sample_symmetric_pair,
)
from .core_math import ComplexAmplitude
from .phase_space import BeamSplitter, heterodyne_labels


class Strategy(enum.Enum):
    BS_COMBINE = "bs_combine"
    DIRECT_HETERODYNE = "direct_heterodyne"


@dataclass(frozen=True)
class AttackConfig:
    omega_sq: float
    bs: BeamSplitter = field(default_factory=BeamSplitter.balanced)
    strategy: Strategy = Strategy.BS_COMBINE

    def __post_init__(self):
        if not self.omega_sq > 0:
            raise ValueError("omega_sq must be positive")


@dataclass(frozen=True)
class EveRecord:
    """What Eve holds for one round, or for a batch of rounds.

    ``kept_forward_clone`` is clone 2 of ``M`` and ``kept_backward_clone``
    clone 2' of ``M'`` (both coherent-state labels). The remaining fields are
    heterodyne outcomes and Eve's estimate of Alice's displacement.
    """

    kept_forward_clone: Optional[Amplitudes] = None
    kept_backward_clone: Optional[Amplitudes] = None
    minus_port_outcome: Optional[Amplitudes] = None
    plus_port_outcome: Optional[Amplitudes] = None
    forward_outcome: Optional[Amplitudes] = None
    backward_outcome: Optional[Amplitudes] = None
    alpha_estimate: Optional[Amplitudes] = None

    def take(self, i: int) -> "EveRecord":
        """Single-round view of a batched record."""
        vals = {}
        for f in fields(self):
            v = getattr(self, f.name)
            vals[f.name] = None if v is None else ComplexAmplitude(float(v[i, 0]), float(v[i, 1]))
        return EveRecord(**vals)

    def select(self, index) -> "EveRecord":
        vals = {f.name: getattr(self, f.name) for f in fields(self)}
        return EveRecord(**{k: None if v is None else v[index] for k, v in vals.items()})

    @staticmethod
    def concatenate(records) -> "EveRecord":
        records = list(records)
        out = {}
        for f in fields(EveRecord):
            parts = [getattr(r, f.name) for r in records]
            out[f.name] = None if any(p is None for p in parts) else np.concatenate(parts)
        return EveRecord(**out)


def intercept_forward(input: Amplitudes, rng: np.random.Generator):
    """Clone the forward state with the symmetric machine.

    Returns ``(to_alice, eve_kept)``; both labels equal ``input + mu``.
    """
    pair = sample_symmetric_pair(input, rng)
    return pair.clone1, pair.clone2


def intercept_backward(input: Amplitudes, cfg: AttackConfig, rng: np.random.Generator):
    """Clone the backward state with the asymmetric machine.

    Bob receives ``input + nu`` with ``Var(nu) = omega^2``; Eve keeps
    ``input + lambda`` with ``Var(lambda) = 1/(4 omega^2)``. The two
    displacements are drawn independently (only marginals matter downstream).
    """
    to_bob = sample_asymmetric_sent_clone(input, cfg.omega_sq, rng)
    kept = sample_asymmetric_kept_clone(input, cfg.omega_sq, rng)
    return to_bob, kept


def _require_clones(record: EveRecord):
    if record.kept_forward_clone is None or record.kept_backward_clone is None:
        raise RuntimeError("Eve's record is missing a kept clone")


def combine_and_measure(record: EveRecord, cfg: AttackConfig, rng: np.random.Generator) -> EveRecord:
    """Interfere the kept clones and heterodyne both output ports.

    The backward clone enters as ``a_i`` and the forward clone as ``a_j``, so
    the minus port carries ``t (alpha + lambda) + (t - r)(beta + mu)``. The
    estimate of ``alpha`` is the minus-port outcome divided by ``t``, i.e.
    ``sqrt(2)`` times it for a balanced splitter.
    """
    if cfg.strategy is not Strategy.BS_COMBINE:
        raise ValueError("combine_and_measure needs the BS_COMBINE strategy")
    _require_clones(record)
    a_i, a_j = record.kept_backward_clone, record.kept_forward_clone
    if isinstance(a_i, ComplexAmplitude):
        a_i, a_j = np.asarray(a_i), np.asarray(a_j)
        scalar = True
    else:
        scalar = False
    plus, minus = cfg.bs.apply(a_i, a_j)
    plus_out = heterodyne_labels(plus, rng)
    minus_out = heterodyne_labels(minus, rng)
    estimate = minus_out / cfg.bs.t if cfg.bs.t > 0 else None
    if scalar:
        plus_out, minus_out = ComplexAmplitude(*map(float, plus_out)), ComplexAmplitude(*map(float, minus_out))
        estimate = None if estimate is None else ComplexAmplitude(*map(float, estimate))
    return replace(record, plus_port_outcome=plus_out, minus_port_outcome=minus_out, alpha_estimate=estimate)


def direct_heterodyne(record: EveRecord, rng: np.random.Generator) -> EveRecord:
    """Heterodyne the two kept clones separately.

    The estimate is backward outcome minus forward outcome, the linear
    combination that removes ``beta + mu``.
    """
    _require_clones(record)
    fwd = heterodyne_labels(record.kept_forward_clone, rng)
    bwd = heterodyne_labels(record.kept_backward_clone, rng)
    return replace(record, forward_outcome=fwd, backward_outcome=bwd, alpha_estimate=bwd - fwd)


class CloningAttack:
    """Channel hook running the attack on every round, ON or OFF alike."""

    def __init__(self, cfg: AttackConfig):
        self.cfg = cfg

    def forward(self, labels, rng):
        return intercept_forward(labels, rng)

    def backward(self, labels, rng):
        return intercept_backward(labels, self.cfg, rng)

    def measure(self, kept_forward, kept_backward, rng) -> EveRecord:
        rec = EveRecord(kept_forward_clone=kept_forward, kept_backward_clone=kept_backward)
        if self.cfg.strategy is Strategy.BS_COMBINE:
            return combine_and_measure(rec, self.cfg, rng)
        return direct_heterodyne(rec, rng)

    def __repr__(self):
        return f"CloningAttack({self.cfg!r})"


def as_channel_hook(cfg: AttackConfig) -> CloningAttack:
    return CloningAttack(cfg)
