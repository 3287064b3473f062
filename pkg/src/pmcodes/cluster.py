"""Deterministic single-process storage-cluster simulator.

Nodes hold shares; a script of events fails nodes, repairs them, reads the
message back, hands nodes to an adversary and taps nodes for an
eavesdropper.  Compromised nodes keep correct data but lie in everything
they send; the decoders are never told which nodes those are.

Script schema (JSON)::

    {
      "version": 1,
      "code": {...},              # see pmcodes.config
      "message": [ints],          # or "stripes": S for a random message
      "seed": 0,
      "adversary": "random",      # or "flip-one"
      "events": [
        {"kind": "compromise", "node": 3},
        {"kind": "fail", "node": 1},
        {"kind": "repair", "node": 1, "helpers": [2, 3, 4, 5], "p": 1},
        {"kind": "reconstruct", "readers": [1, 2, 3, 4], "p": 1},
        {"kind": "tap_storage", "node": 2},
        {"kind": "tap_repair", "node": 5}
      ]
    }
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .audit import EavesdropperView
from .code import ProductMatrixCode, Share
from .config import code_from_config, code_to_config
from .errors import DecodeFailure, InvalidParams, PMCodeError

EVENT_KINDS = ("fail", "repair", "reconstruct", "compromise", "tap_storage", "tap_repair")
SCRIPT_VERSION = 1


class RepairFailed(DecodeFailure):
    """A repair or read met more corruption than its protection level."""


class InvalidEvent(PMCodeError, ValueError):
    pass


@dataclass(frozen=True)
class Event:
    kind: str
    node: int | None = None
    helpers: tuple | None = None
    readers: tuple | None = None
    p: int = 0

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise InvalidEvent(f"unknown event kind {self.kind!r}")
        if self.kind == "reconstruct":
            if not self.readers:
                raise InvalidEvent("reconstruct needs readers")
        elif self.node is None:
            raise InvalidEvent(f"{self.kind} needs a node")
        if self.kind == "repair" and not self.helpers:
            raise InvalidEvent("repair needs helpers")
        if self.p < 0:
            raise InvalidEvent("p must be non-negative")
        for name in ("helpers", "readers"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, tuple(int(v) for v in val))

    @classmethod
    def from_dict(cls, d: dict) -> Event:
        extra = set(d) - {"kind", "node", "helpers", "readers", "p"}
        if extra:
            raise InvalidEvent(f"unknown event fields {sorted(extra)}")
        return cls(d.get("kind"), d.get("node"), d.get("helpers"), d.get("readers"), int(d.get("p", 0)))

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.node is not None:
            out["node"] = self.node
        if self.helpers is not None:
            out["helpers"] = list(self.helpers)
        if self.readers is not None:
            out["readers"] = list(self.readers)
        if self.kind in ("repair", "reconstruct"):
            out["p"] = self.p
        return out


# --------------------------------------------------------------------------
# adversaries


class Adversary:
    """Chooses what a compromised node sends instead of the truth."""

    name = ""

    def corrupt(self, values: np.ndarray, q: int, gen: np.random.Generator) -> np.ndarray:
        raise NotImplementedError


class RandomAdversary(Adversary):
    """Uniformly random symbols, redrawn until at least one changes."""

    name = "random"

    def corrupt(self, values, q, gen):
        values = np.asarray(values, dtype=np.int64)
        while True:
            out = gen.integers(0, q, size=values.shape)
            if not np.array_equal(out, values):
                return out


class FlipOneAdversary(Adversary):
    """Change exactly one symbol: the smallest possible lie."""

    name = "flip-one"

    def corrupt(self, values, q, gen):
        out = np.array(values, dtype=np.int64, copy=True)
        flat = out.reshape(-1)
        pos = int(gen.integers(0, flat.size))
        flat[pos] = (flat[pos] + int(gen.integers(1, q))) % q
        return out


ADVERSARIES = {cls.name: cls for cls in (RandomAdversary, FlipOneAdversary)}


def get_adversary(name: str) -> Adversary:
    try:
        return ADVERSARIES[name]()
    except KeyError:
        raise InvalidParams(f"unknown adversary {name!r}; choose from {sorted(ADVERSARIES)}") from None


# --------------------------------------------------------------------------
# state


@dataclass
class ClusterState:
    code: ProductMatrixCode
    message: np.ndarray
    original: dict
    nodes: dict  # node -> Share, or None when failed
    rng_seed: int
    adversary: Adversary
    compromised: set = field(default_factory=set)
    eaves: EavesdropperView = field(default_factory=EavesdropperView)
    event_log: list = field(default_factory=list)
    rng: np.random.Generator | None = None

    def __post_init__(self):
        if self.rng is None:
            self.rng = np.random.default_rng(self.rng_seed)

    @property
    def live(self) -> list[int]:
        return [j for j, s in sorted(self.nodes.items()) if s is not None]

    @property
    def failed(self) -> list[int]:
        return [j for j, s in sorted(self.nodes.items()) if s is None]

    def consistent(self) -> bool:
        """Every live share equals what the encoder produced."""
        return all(self.nodes[j] == self.original[j] for j in self.live)

    def fingerprint(self) -> dict:
        return {
            "nodes": {str(j): None if s is None else s.data.tolist() for j, s in sorted(self.nodes.items())},
            "compromised": sorted(self.compromised),
            "log": self.event_log,
        }


def cluster_init(code: ProductMatrixCode, message, seed: int = 0, adversary: str = "random") -> ClusterState:
    """Encode ``message`` onto ``n`` live nodes.  Randomness comes from ``seed``."""
    gen = np.random.default_rng(seed)
    shares = code.encode(message, rng=gen)
    original = {s.node: s for s in shares}
    return ClusterState(code, np.asarray(message, dtype=np.int64).reshape(-1), original, dict(original),
                        seed, get_adversary(adversary), rng=gen)


def _outgoing(state: ClusterState, node: int, values: np.ndarray) -> np.ndarray:
    if node in state.compromised:
        return state.adversary.corrupt(values, state.code.field.q, state.rng)
    return values


def apply_event(state: ClusterState, event: Event | dict) -> ClusterState:
    """Apply one event in place and log its outcome.

    Decoding failures are recorded in the log (outcome ``"failed"``), not
    raised; invalid events raise :class:`InvalidEvent`.
    """
    ev = Event.from_dict(event) if isinstance(event, dict) else event
    code = state.code
    entry = ev.to_dict()
    if ev.node is not None and not 1 <= ev.node <= code.n:
        raise InvalidEvent(f"node {ev.node} outside 1..{code.n}")

    if ev.kind == "fail":
        state.nodes[ev.node] = None
        entry["outcome"] = "ok"
    elif ev.kind == "compromise":
        state.compromised.add(ev.node)
        entry["outcome"] = "ok"
    elif ev.kind in ("tap_storage", "tap_repair"):
        if ev.node in state.eaves.nodes:
            raise InvalidEvent(f"node {ev.node} is already tapped")
        if ev.kind == "tap_storage":
            state.eaves.storage_nodes = state.eaves.storage_nodes | {ev.node}
        else:
            state.eaves.repair_nodes = state.eaves.repair_nodes | {ev.node}
        share = state.nodes[ev.node]
        if share is not None:
            state.eaves.record(("store", ev.node), share.data)
        entry["outcome"] = "ok"
    elif ev.kind == "repair":
        entry.update(_repair(state, ev))
    else:
        entry.update(_reconstruct(state, ev))
    state.event_log.append(entry)
    return state


def _repair(state: ClusterState, ev: Event) -> dict:
    code = state.code
    if state.nodes[ev.node] is not None:
        raise InvalidEvent(f"node {ev.node} is not failed")
    if ev.node in ev.helpers:
        raise InvalidEvent("a node cannot help its own repair")
    answers = {}
    for j in ev.helpers:
        share = state.nodes.get(j)
        if share is None:
            answers[j] = None  # a failed helper never answers
            continue
        answers[j] = _outgoing(state, j, code.helper_symbol(share, ev.node))
        if ev.node in state.eaves.repair_nodes:
            state.eaves.record(("repair", ev.node, j), answers[j])
    liars = sorted(set(ev.helpers) & state.compromised)
    try:
        share = code.repair(ev.node, answers, ev.p)
    except PMCodeError as exc:
        return _failure(exc, liars)
    state.nodes[ev.node] = share
    if ev.node in state.eaves.nodes:
        state.eaves.record(("store", ev.node), share.data)
    return {"outcome": "ok", "exact": share == state.original[ev.node], "liars": liars}


def _failure(exc: Exception, liars: list) -> dict:
    # corruption beyond p is reported as RepairFailed; other errors by name
    name = RepairFailed.__name__ if isinstance(exc, DecodeFailure) else type(exc).__name__
    return {"outcome": "failed", "error": name, "detail": str(exc), "liars": liars}


def _reconstruct(state: ClusterState, ev: Event) -> dict:
    code = state.code
    shares = {}
    for j in ev.readers:
        share = state.nodes.get(j)
        if share is None:
            continue
        shares[j] = Share(j, _outgoing(state, j, share.data))
    liars = sorted(set(shares) & state.compromised)
    try:
        out = code.reconstruct(shares, ev.p)
    except PMCodeError as exc:
        return _failure(exc, liars)
    return {"outcome": "ok", "exact": bool(np.array_equal(out, state.message)), "liars": liars}


@dataclass
class SimulationReport:
    successes: int = 0
    failures: int = 0
    inexact: int = 0
    entries: list = field(default_factory=list)
    leakage_trace: list = field(default_factory=list)
    consistent: bool = True

    def to_dict(self) -> dict:
        return {
            "successes": self.successes,
            "failures": self.failures,
            "inexact": self.inexact,
            "consistent": self.consistent,
            "events": self.entries,
            "leakage_trace": self.leakage_trace,
        }


def run_script(state: ClusterState, events) -> SimulationReport:
    """Apply ``events`` in order and summarise repairs and reads.

    ``successes`` and ``failures`` count repair and reconstruct events;
    ``inexact`` counts successful ones whose output differs from the
    original (never expected when each used enough protection).
    """
    report = SimulationReport()
    start = len(state.event_log)
    for ev in events:
        apply_event(state, ev)
    for entry in state.event_log[start:]:
        report.entries.append(entry)
        if entry["kind"] not in ("repair", "reconstruct"):
            continue
        if entry["outcome"] == "ok":
            report.successes += 1
            if not entry["exact"]:
                report.inexact += 1
        else:
            report.failures += 1
    report.leakage_trace = [[list(map(_plain, label)), vals.tolist()] for label, vals in state.eaves.captured]
    report.consistent = state.consistent()
    return report


def _plain(x):
    return x if isinstance(x, str) else int(x)


# --------------------------------------------------------------------------
# scripts


def load_script(doc: dict) -> tuple[ClusterState, list[Event]]:
    """Build the initial state and event list from a script document."""
    version = doc.get("version", SCRIPT_VERSION)
    if version != SCRIPT_VERSION:
        raise InvalidParams(f"unsupported script version {version}")
    code = code_from_config(doc["code"])
    seed = int(doc.get("seed", 0))
    if "message" in doc:
        message = np.asarray(doc["message"], dtype=np.int64)
    else:
        stripes = int(doc.get("stripes", 1))
        gen = np.random.default_rng([seed, 1])
        message = code.field.random(gen, size=stripes * code.beta * code.unit_message)
    state = cluster_init(code, message, seed, doc.get("adversary", "random"))
    events = [Event.from_dict(e) for e in doc.get("events", [])]
    return state, events


def random_script(code: ProductMatrixCode, length: int, p: int, seed: int = 0,
                  compromised: int = 0) -> dict:
    """A valid random script: compromises first, then fail/repair/read steps.

    Every repair and read contacts ``d + 2p`` / ``k + 2p`` live nodes, so
    with ``compromised <= p`` every step must succeed exactly.
    """
    gen = np.random.default_rng(seed)
    nodes = list(range(1, code.n + 1))
    bad = [int(x) for x in gen.choice(nodes, size=compromised, replace=False)] if compromised else []
    events = [{"kind": "compromise", "node": j} for j in bad]
    failed: list[int] = []
    while len(events) < length + len(bad):
        live = [j for j in nodes if j not in failed]
        choices = ["reconstruct"]
        if failed:
            choices.append("repair")
        # keep enough live nodes for both a repair and a read
        if len(live) - 1 >= max(code.d, code.k) + 2 * p:
            choices.append("fail")
        kind = choices[int(gen.integers(len(choices)))]
        if kind == "fail":
            j = int(gen.choice(live))
            failed.append(j)
            events.append({"kind": "fail", "node": j})
        elif kind == "repair":
            j = failed.pop(int(gen.integers(len(failed))))
            helpers = sorted(int(x) for x in gen.choice(live, size=code.d + 2 * p, replace=False))
            events.append({"kind": "repair", "node": j, "helpers": helpers, "p": p})
        else:
            readers = sorted(int(x) for x in gen.choice(live, size=code.k + 2 * p, replace=False))
            events.append({"kind": "reconstruct", "readers": readers, "p": p})
    return {"version": SCRIPT_VERSION, "code": code_to_config(code), "seed": seed, "events": events}


def simulate(doc: dict) -> dict:
    """Run a script document and return the JSON report."""
    state, events = load_script(copy.deepcopy(doc))
    report = run_script(state, events)
    out = report.to_dict()
    out["final"] = {"live": state.live, "failed": state.failed, "compromised": sorted(state.compromised)}
    return out
