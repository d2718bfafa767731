"""Monte-Carlo simulation of the three-state memory synchronisation channel."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .codec import as_bits, bits_to_str
from .exceptions import ConfigError
from .markov import STATES3, TransitionMatrix, capped_row, stationary_distribution

T, D, I = 0, 1, 2  # row/column order of STATES3


class ChannelEvent(NamedTuple):
    """One channel event. ``kind`` is one of 'T', 'S', 'D', 'I'.

    'S' is a transmission whose bit was flipped; ``bit`` is only set for
    insertions.
    """

    kind: str
    bit: int | None = None

    @property
    def tag(self) -> str:
        return f"I{self.bit}" if self.kind == "I" else self.kind

    @classmethod
    def from_tag(cls, tag: str) -> "ChannelEvent":
        if tag in ("T", "S", "D"):
            return cls(tag)
        if tag in ("I0", "I1"):
            return cls("I", int(tag[1]))
        raise ValueError(f"unknown event tag {tag!r}")


TRANSMIT = ChannelEvent("T")
SUBSTITUTED = ChannelEvent("S")
DELETE = ChannelEvent("D")


@dataclass(frozen=True)
class TransmissionRecord:
    """Ground truth of one channel use.

    ``events[n]`` holds the events of time step n (zero or more inserts then
    exactly one T/S/D). ``drift[n]`` is the offset before bit n enters.
    """

    t: np.ndarray = field(repr=False)
    t_hat: np.ndarray = field(repr=False)
    events: tuple = field(repr=False)
    drift: np.ndarray = field(repr=False)
    n_deletions: int = 0
    n_insertions: int = 0
    n_substitutions: int = 0

    @property
    def gamma(self) -> int:
        return int(self.t.size)

    @property
    def counts(self) -> tuple[int, int, int]:
        return self.n_deletions, self.n_insertions, self.n_substitutions

    def to_dict(self) -> dict:
        return {
            "t": bits_to_str(self.t),
            "t_hat": bits_to_str(self.t_hat),
            "events": [[e.tag for e in step] for step in self.events],
            "drift": [int(x) for x in self.drift],
            "counts": list(self.counts),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "TransmissionRecord":
        events = tuple(tuple(ChannelEvent.from_tag(tag) for tag in step)
                       for step in data["events"])
        n_del, n_ins, n_sub = data["counts"]
        return cls(as_bits(data["t"]), as_bits(data["t_hat"]), events,
                   np.asarray(data["drift"], dtype=np.int64), n_del, n_ins, n_sub)

    @classmethod
    def from_json(cls, text: str) -> "TransmissionRecord":
        return cls.from_dict(json.loads(text))


def transmit(t, a3: TransitionMatrix, p_s: float, max_insertions: int = 1,
             rng: np.random.Generator | None = None,
             initial_state: str = "T") -> TransmissionRecord:
    """Send ``t`` through the three-state channel.

    Each event is drawn from the row of the previous event's state. Once
    ``max_insertions`` inserts happened within a step, the next draw uses
    that row with its I entry removed. ``initial_state`` is a state label or
    ``"stationary"``.
    """
    t = as_bits(t)
    if a3.states != STATES3:
        raise ConfigError("transmit needs a three-state matrix")
    if not 0.0 <= p_s <= 1.0:
        raise ConfigError(f"p_s must lie in [0, 1], got {p_s}")
    if max_insertions < 0:
        raise ConfigError("max_insertions must be non-negative")
    rng = rng if rng is not None else np.random.default_rng()

    cum = np.cumsum(a3.entries, axis=1)
    capped_cum = {}
    if initial_state == "stationary":
        prev = int(rng.choice(3, p=stationary_distribution(a3.entries)))
    elif initial_state in STATES3:
        prev = STATES3.index(initial_state)
    else:
        raise ConfigError(f"unknown initial state {initial_state!r}")

    out = []
    events = []
    drift = np.empty(t.size, dtype=np.int64)
    n_del = n_ins = n_sub = 0
    for n, bit in enumerate(t):
        drift[n] = len(out) - n
        step = []
        inserted = 0
        while True:
            if inserted >= max_insertions:
                if prev not in capped_cum:
                    capped_cum[prev] = np.cumsum(capped_row(a3.entries[prev], I))
                row = capped_cum[prev]
            else:
                row = cum[prev]
            ev = min(int(np.searchsorted(row, rng.random(), side="right")), 2)
            prev = ev
            if ev == I:
                b = int(rng.integers(0, 2))
                out.append(b)
                step.append(ChannelEvent("I", b))
                inserted += 1
                n_ins += 1
                continue
            if ev == T:
                if rng.random() < p_s:
                    out.append(int(bit) ^ 1)
                    step.append(SUBSTITUTED)
                    n_sub += 1
                else:
                    out.append(int(bit))
                    step.append(TRANSMIT)
            else:
                step.append(DELETE)
                n_del += 1
            break
        events.append(tuple(step))
    return TransmissionRecord(t, np.asarray(out, dtype=np.uint8), tuple(events),
                              drift, n_del, n_ins, n_sub)


def replay(t, events) -> np.ndarray:
    """Rebuild the received sequence from transmitted bits and an event list."""
    out = []
    for bit, step in zip(as_bits(t), events):
        for ev in step:
            if ev.kind == "I":
                out.append(ev.bit)
            elif ev.kind == "T":
                out.append(int(bit))
            elif ev.kind == "S":
                out.append(int(bit) ^ 1)
    return np.asarray(out, dtype=np.uint8)


def drift_from_events(events) -> np.ndarray:
    drift = np.empty(len(events), dtype=np.int64)
    emitted = 0
    for n, step in enumerate(events):
        drift[n] = emitted - n
        emitted += sum(1 for ev in step if ev.kind != "D")
    return drift


def realized_rates(rec: TransmissionRecord) -> tuple[float, float, float]:
    """Empirical (p_d, p_i, p_s) of one channel use, normalised by Gamma."""
    g = rec.gamma
    return rec.n_deletions / g, rec.n_insertions / g, rec.n_substitutions / g


def final_offset(rec: TransmissionRecord) -> int:
    return int(rec.t_hat.size - rec.t.size)
