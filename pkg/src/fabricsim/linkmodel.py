"""Link semantics: slot reconciliation versus fire-and-forget with timeouts.

A reconciled link resolves every slot to exactly one bilateral outcome - both
endpoint registers hold the payload, or neither does, or the link itself
failed - and both endpoints record the identical outcome at the slot
boundary. A conventional link dispatches unilaterally; the sender learns
delivery status only from acknowledgments or infers failure from timeouts,
which can be wrong when delays are heavy-tailed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


class SlotOutcome(enum.Enum):
    COMMITTED = "committed"
    ABORTED = "aborted"
    LINK_FAILED = "link-failed"


class KnowledgeState(enum.Enum):
    AMBIGUOUS = "ambiguous"
    ASYMMETRIC = "asymmetric"
    COMMON_KNOWLEDGE = "common-knowledge"


def stationary_bad_fraction(to_bad: float, to_good: float) -> float:
    """Long-run fraction of slots a two-state good/bad link spends bad."""
    if not (0.0 <= to_bad <= 1.0 and 0.0 <= to_good <= 1.0):
        raise ValueError("transition probabilities must lie in [0, 1]")
    if to_bad + to_good == 0.0:
        raise ValueError("stationary distribution undefined when both rates are 0")
    return to_bad / (to_bad + to_good)


@dataclass
class FlappingModel:
    """Two-state Markov link: good/bad states with per-slot failure probabilities."""

    to_bad: float
    to_good: float
    p_good: float
    p_bad: float
    bad: bool = False

    def __post_init__(self) -> None:
        for name in ("to_bad", "to_good", "p_good", "p_bad"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")

    def step(self, rng: np.random.Generator) -> bool:
        """Advance one slot; returns whether the slot failed.

        Draw order (failure uniform, then transition uniform) matches the
        bulk kernel, so stepping and kernel runs are stream-compatible.
        """
        u_fail = rng.random()
        u_trans = rng.random()
        failed = u_fail < (self.p_bad if self.bad else self.p_good)
        if self.bad:
            if u_trans < self.to_good:
                self.bad = False
        elif u_trans < self.to_bad:
            self.bad = True
        return failed


def effective_failure_prob(model: FlappingModel) -> float:
    """Stationary per-slot failure probability of a flapping link."""
    pi_b = stationary_bad_fraction(model.to_bad, model.to_good)
    return pi_b * model.p_bad + (1.0 - pi_b) * model.p_good


def occupancy_std_error(to_bad: float, to_good: float, slots: int) -> float:
    """Standard error of the empirical bad-state fraction over `slots` slots.

    Successive slots are Markov-correlated; the naive binomial error is
    scaled by the integrated autocorrelation (1+r)/(1-r), r = 1-a-b.
    """
    pi = stationary_bad_fraction(to_bad, to_good)
    r = 1.0 - to_bad - to_good
    factor = (1.0 + r) / (1.0 - r)
    return math.sqrt(pi * (1.0 - pi) * factor / slots)


def failure_rate_std_error(model: FlappingModel, slots: int) -> float:
    """Standard error of the empirical failure rate of a flapping link."""
    pi = stationary_bad_fraction(model.to_bad, model.to_good)
    r = 1.0 - model.to_bad - model.to_good
    p_eff = effective_failure_prob(model)
    var = p_eff * (1.0 - p_eff)
    var += 2.0 * (model.p_bad - model.p_good) ** 2 * pi * (1.0 - pi) * r / (1.0 - r)
    return math.sqrt(var / slots)


class BernoulliAbortModel:
    """Per-slot independent abort probability."""

    def __init__(self, p_abort: float):
        if not 0.0 <= p_abort <= 1.0:
            raise ValueError("abort probability outside [0, 1]")
        self.p_abort = p_abort

    def slot_failed(self, rng: np.random.Generator) -> bool:
        if self.p_abort == 0.0:
            return False
        return rng.random() < self.p_abort


HEALTHY = BernoulliAbortModel(0.0)


@dataclass
class LinkEndpointPair:
    """The paired registers of one bilateral link plus its slot state."""

    delta: int = 1
    failure_model: object = HEALTHY  # anything with slot_failed(rng) -> bool
    alice_register: object = None
    bob_register: object = None
    slot_counter: int = 0
    down: bool = False

    def __post_init__(self) -> None:
        if self.delta < 1:
            raise ValueError("slot duration must be at least one tick")


def slot_reconcile(
    link: LinkEndpointPair, payload: object = None, rng: np.random.Generator | None = None
) -> SlotOutcome:
    """Run one reconciliation slot; completes in exactly `delta` ticks.

    Both registers always end identical: (payload, payload) on commit,
    (None, None) otherwise. An empty slot on a healthy link is an ABORTED
    outcome too - silence is definitive, the receiver knows none was sent.
    Failure is an outcome, never an exception.
    """
    link.slot_counter += 1
    if link.down:
        link.alice_register = None
        link.bob_register = None
        return SlotOutcome.LINK_FAILED
    failed = link.failure_model.slot_failed(rng)
    if failed or payload is None:
        link.alice_register = None
        link.bob_register = None
        return SlotOutcome.ABORTED
    link.alice_register = payload
    link.bob_register = payload
    return SlotOutcome.COMMITTED


@dataclass
class DelayModel:
    """Lognormal-body delay with an optional Pareto tail and loss probability."""

    body_mu: float = 1.0  # lognormal parameters of the delay in ticks
    body_sigma: float = 0.5
    tail_prob: float = 0.0
    tail_alpha: float = 1.5
    tail_scale: float = 50.0
    loss_prob: float = 0.0

    def sample_delay(self, rng: np.random.Generator) -> int | None:
        """Delay in whole ticks (>= 1), or None when the message is lost."""
        if self.loss_prob > 0.0 and rng.random() < self.loss_prob:
            return None
        if self.tail_prob > 0.0 and rng.random() < self.tail_prob:
            value = self.tail_scale * (1.0 + rng.pareto(self.tail_alpha))
        else:
            value = rng.lognormal(self.body_mu, self.body_sigma)
        return max(1, int(round(value)))


@dataclass
class InFlightMessage:
    payload_id: int
    dispatched: int
    deliver_at: int | None  # None: lost in transit
    ack_at: int | None  # arrival of the acknowledgment at the sender


@dataclass
class ConventionalLink:
    """Fire-and-forget link: unilateral sends, acknowledgment-or-timeout only."""

    timeout_threshold: int
    delay_model: DelayModel = field(default_factory=DelayModel)
    in_flight: list[InFlightMessage] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.timeout_threshold < 1:
            raise ValueError("timeout threshold must be positive")


def conventional_send(
    link: ConventionalLink, payload_id: int, now: int, rng: np.random.Generator
) -> InFlightMessage:
    """Dispatch a message; the sender learns nothing about delivery here."""
    delay = link.delay_model.sample_delay(rng)
    if delay is None:
        msg = InFlightMessage(payload_id, now, None, None)
    else:
        ack_delay = link.delay_model.sample_delay(rng)
        ack_at = None if ack_delay is None else now + delay + ack_delay
        msg = InFlightMessage(payload_id, now, now + delay, ack_at)
    link.in_flight.append(msg)
    return msg


def timeout_failure_detector(link: ConventionalLink, now: int) -> bool:
    """Suspect the peer iff some dispatch has no acknowledgment in time.

    The verdict can be wrong - a message may merely be slow - so this is an
    eventually-perfect detector at best, never a perfect one.
    """
    for msg in link.in_flight:
        if now - msg.dispatched >= link.timeout_threshold:
            if msg.ack_at is None or msg.ack_at > now:
                return True
    return False


def false_suspicions(link: ConventionalLink, now: int) -> int:
    """Timeouts declared against messages that were in fact delivered."""
    count = 0
    for msg in link.in_flight:
        if now - msg.dispatched >= link.timeout_threshold:
            undecided_at_timeout = msg.ack_at is None or msg.ack_at > msg.dispatched + link.timeout_threshold
            if undecided_at_timeout and msg.deliver_at is not None:
                count += 1
    return count


def knowledge_state(link_kind: str, moment: str) -> KnowledgeState:
    """What each party can know about a transfer at a given moment.

    A reconciled link reaches common knowledge at every slot boundary; a
    conventional link is ambiguous while a send is unresolved and at best
    asymmetric (sender-only knowledge) once the ack arrives.
    """
    table = {
        ("bisync", "slot-boundary"): KnowledgeState.COMMON_KNOWLEDGE,
        ("conventional", "in-flight"): KnowledgeState.AMBIGUOUS,
        ("conventional", "acked"): KnowledgeState.ASYMMETRIC,
    }
    try:
        return table[(link_kind, moment)]
    except KeyError:
        raise ValueError(f"no knowledge state defined for {link_kind!r} at {moment!r}") from None
