"""Trickle node state machine with a configurable listen-only fraction.

Implements the classic "polite gossip" rules: each node runs intervals of
length tau (doubling up to tau_h, reset to tau_l on inconsistency), counts
consistent messages heard during the interval, and broadcasts once per
interval at a random offset t unless suppressed by the redundancy constant k.

The variation implemented here replaces the fixed half-interval listen-only
period at tau = tau_l: the broadcast offset is drawn uniformly from
[eta * tau, tau] instead of [tau / 2, tau].  eta = 1/2 recovers the original
algorithm; eta = 0 lets freshly updated nodes rebroadcast immediately.
Intervals at tau > tau_l always keep the original [tau / 2, tau] window.

All transitions are pure: they take a NodeState and return a new one, and
randomness comes from an injected stream (anything with a ``uniform(a, b)``
method, e.g. random.Random or numpy Generator).  Drivers own scheduling; see
the event loop in :mod:`tricklelab.simulate`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

# Sentinel for an unbounded maximum interval: nodes whose tau reached this
# value never schedule timer or interval-end events.
TAU_INFINITE = math.inf


@dataclass(slots=True)
class TrickleParams:
    """Protocol configuration: redundancy constant k, interval bounds, eta."""

    k: int = 1
    tau_l: float = 1.0
    tau_h: float = TAU_INFINITE
    eta: float = 0.5

    def __post_init__(self) -> None:
        if self.k < 1 or int(self.k) != self.k:
            raise ValueError(f"k must be a positive integer, got {self.k}")
        if not self.tau_l > 0:
            raise ValueError(f"tau_l must be positive, got {self.tau_l}")
        if self.tau_h < self.tau_l:
            raise ValueError(f"need tau_l <= tau_h, got {self.tau_l} > {self.tau_h}")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")


@dataclass(slots=True)
class NodeState:
    """Per-node runtime state.

    Treated as immutable: transition functions return fresh instances.
    """

    tau: float
    c: int
    t: float
    interval_start: float
    version: int
    has_fired: bool

    def to_dict(self) -> dict:
        """JSON-safe dict; infinite tau/t encode as the string "inf"."""
        enc = lambda x: "inf" if x == TAU_INFINITE else x
        return {
            "tau": enc(self.tau),
            "c": self.c,
            "t": enc(self.t),
            "interval_start": self.interval_start,
            "version": self.version,
            "has_fired": self.has_fired,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NodeState":
        dec = lambda x: TAU_INFINITE if x == "inf" else float(x)
        return cls(
            tau=dec(d["tau"]),
            c=int(d["c"]),
            t=dec(d["t"]),
            interval_start=float(d["interval_start"]),
            version=int(d["version"]),
            has_fired=bool(d["has_fired"]),
        )


@dataclass(slots=True)
class Message:
    version: int
    sender: int


class Reaction(Enum):
    """Outcome of processing a received message."""

    CONSISTENT_HEARD = "consistent_heard"
    ADOPTED_UPDATE = "adopted_update"
    INCONSISTENCY_RESET = "inconsistency_reset"


def quiet_state(params: TrickleParams) -> NodeState:
    """State of a node idling at tau = tau_h that has not seen any update."""
    return NodeState(
        tau=params.tau_h,
        c=0,
        t=params.tau_h,
        interval_start=0.0,
        version=0,
        has_fired=False,
    )


def start_interval(state: NodeState, params: TrickleParams, now: float, rng) -> NodeState:
    """Begin a new interval at `now`: reset c, redraw the broadcast offset.

    The offset window is [eta * tau, tau] when tau == tau_l and
    [tau / 2, tau] otherwise.
    """
    tau = state.tau
    lo = params.eta * tau if tau == params.tau_l else 0.5 * tau
    return NodeState(
        tau=tau,
        c=0,
        t=rng.uniform(lo, tau),
        interval_start=now,
        version=state.version,
        has_fired=False,
    )


def on_message(
    state: NodeState, params: TrickleParams, msg: Message, now: float
) -> tuple[NodeState, Reaction]:
    """Process a received message.

    Consistent (equal version): increment c.  Newer version: adopt it and
    drop tau to tau_l; the caller must then start a new interval (see
    `needs_new_interval` / `receive_message`).  Older version: drop tau to
    tau_l if currently above it (new interval required), otherwise no-op.
    """
    if msg.version == state.version:
        return (
            NodeState(state.tau, state.c + 1, state.t, state.interval_start,
                      state.version, state.has_fired),
            Reaction.CONSISTENT_HEARD,
        )
    if msg.version > state.version:
        return (
            NodeState(params.tau_l, state.c, state.t, state.interval_start,
                      msg.version, state.has_fired),
            Reaction.ADOPTED_UPDATE,
        )
    # Heard stale data: rebroadcast soon if we had slowed down.
    if state.tau > params.tau_l:
        return (
            NodeState(params.tau_l, state.c, state.t, state.interval_start,
                      state.version, state.has_fired),
            Reaction.INCONSISTENCY_RESET,
        )
    return state, Reaction.INCONSISTENCY_RESET


def needs_new_interval(old: NodeState, params: TrickleParams, reaction: Reaction) -> bool:
    """Whether the reaction returned by `on_message` requires a fresh interval.

    Adoption always resynchronizes (even at tau == tau_l); a reset only does
    when tau actually dropped.
    """
    if reaction is Reaction.ADOPTED_UPDATE:
        return True
    if reaction is Reaction.INCONSISTENCY_RESET:
        return old.tau > params.tau_l
    return False


def receive_message(
    state: NodeState, params: TrickleParams, msg: Message, now: float, rng
) -> tuple[NodeState, Reaction, bool]:
    """`on_message` composed with the interval restart it may trigger."""
    new_state, reaction = on_message(state, params, msg, now)
    restarted = needs_new_interval(state, params, reaction)
    if restarted:
        new_state = start_interval(new_state, params, now, rng)
    return new_state, reaction, restarted


def on_timer(
    state: NodeState, params: TrickleParams, now: float, sender: int
) -> tuple[NodeState, Message | None]:
    """Fire the broadcast timer: transmit iff fewer than k messages heard."""
    fired = NodeState(state.tau, state.c, state.t, state.interval_start,
                      state.version, True)
    if state.c < params.k:
        return fired, Message(version=state.version, sender=sender)
    return fired, None


def on_interval_end(state: NodeState, params: TrickleParams, now: float, rng) -> NodeState:
    """Double tau (capped at tau_h) and start the next interval."""
    doubled = NodeState(min(2.0 * state.tau, params.tau_h), state.c, state.t,
                        state.interval_start, state.version, state.has_fired)
    return start_interval(doubled, params, now, rng)
