"""Shares and the machinery common to both product-matrix regimes.

Data is handled at *unit-stripe* granularity: a code with ``beta > 1`` is
``beta`` independent ``beta = 1`` instances, so a share's array has one row
per unit stripe and ``alpha / beta`` columns.  A logical stripe is ``beta``
consecutive rows.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .algebra import EncodingMatrix, PrimeField, mod_matmul
from .errors import DecodeFailure, DimensionMismatch, InvalidParams, NotEnoughShares, ShortMessage
from .mds import CLEAN, CORRUPTED


@dataclass(frozen=True, eq=False)
class Share:
    """Data held by one node: ``data[s]`` is its vector for unit stripe ``s``."""

    node: int
    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.int64)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2:
            raise DimensionMismatch("share data must be (stripes, alpha)")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def units(self) -> int:
        return self.data.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Share):
            return NotImplemented
        return self.node == other.node and np.array_equal(self.data, other.data)

    def __repr__(self):
        return f"Share(node={self.node}, stripes={self.units}, alpha={self.data.shape[1]})"


def helper_symbol(share: Share, vector: Sequence[int], field: PrimeField) -> np.ndarray:
    """Inner product of every stored unit-stripe vector with ``vector``.

    This is all a helper ever sends: it depends on its own data and on the
    failed node's vector, never on which other nodes are helping.
    """
    vec = np.asarray(vector, dtype=np.int64).reshape(-1, 1)
    if vec.shape[0] != share.data.shape[1]:
        raise DimensionMismatch(
            f"projection vector has length {vec.shape[0]}, share stores {share.data.shape[1]}"
        )
    return mod_matmul(share.data, vec, field.q)[:, 0]


def make_rng(rng) -> np.random.Generator:
    """``None`` -> OS entropy, int -> seeded, Generator -> as is."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def symmetric_fill(mats: np.ndarray, cells: Sequence[tuple[int, int]], values: np.ndarray, offset=(0, 0)):
    """Write ``values[:, t]`` into cell ``t`` and its mirror (in place)."""
    r0, c0 = offset
    for t, (i, j) in enumerate(cells):
        mats[:, r0 + i, c0 + j] = values[:, t]
        mats[:, r0 + j, c0 + i] = values[:, t]


def upper_cells(size: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(size) for j in range(i, size)]


class ProductMatrixCode:
    """Behaviour shared by :class:`~pmcodes.mbr.MBRCode` and :class:`~pmcodes.msr.MSRCode`.

    Subclasses provide the message-matrix layout and the decoders; this
    class owns message/randomness shaping and the share bookkeeping.
    """

    regime: str = ""

    def __init__(self, params, psi: EncodingMatrix):
        self.params = params
        self.psi = psi
        self.field = psi.field

    # sizes per unit stripe
    @property
    def n(self) -> int:
        return self.params.n

    @property
    def k(self) -> int:
        return self.params.k

    @property
    def d(self) -> int:
        return self.params.d

    @property
    def beta(self) -> int:
        return self.params.beta

    @property
    def unit_alpha(self) -> int:
        return self.params.alpha // self.params.beta

    @property
    def unit_message(self) -> int:
        return self.params.B_star // self.params.beta

    @property
    def unit_random(self) -> int:
        return self.params.R // self.params.beta

    @property
    def secure(self) -> bool:
        return self.params.ell > 0

    def describe(self) -> dict:
        p = self.params
        return {
            "regime": self.regime,
            "n": p.n, "k": p.k, "d": p.d, "beta": p.beta, "ell": p.ell, "m": p.m,
            "alpha": p.alpha, "B": p.B, "B_star": p.B_star, "R": p.R,
            "field": self.field.q,
        }

    def max_repair_p(self) -> int:
        return (self.n - 1 - self.d) // 2

    def max_reconstruct_p(self) -> int:
        return (self.n - self.k) // 2

    # -- message shaping ---------------------------------------------------

    def _message_units(self, message) -> np.ndarray:
        msg = np.asarray(message, dtype=np.int64)
        per = self.unit_message
        if msg.ndim == 2 and msg.shape[1] == per:
            pass
        else:
            msg = msg.reshape(-1)
            stripe = per * self.beta
            if stripe == 0:
                raise InvalidParams("code stores no message symbols")
            if msg.size == 0 or msg.size % stripe:
                raise ShortMessage(
                    f"message length {msg.size} is not a positive multiple of {stripe} symbols"
                )
            msg = msg.reshape(-1, per)
        if np.any(msg < 0) or np.any(msg >= self.field.q):
            raise ValueError("message symbols must lie in [0, q)")
        return msg

    def _randomness_units(self, units: int, rng=None, randomness=None) -> np.ndarray:
        per = self.unit_random
        if randomness is not None:
            rnd = np.asarray(randomness, dtype=np.int64).reshape(units, per) % self.field.q
            return rnd
        if per == 0:
            return np.zeros((units, 0), dtype=np.int64)
        return self.field.random(make_rng(rng), size=(units, per))

    # -- public API --------------------------------------------------------

    def encode(self, message, rng=None, randomness=None) -> list[Share]:
        """Encode ``message`` into ``n`` shares (node order 1..n).

        ``message`` holds ``B_star`` symbols per stripe, stripe after stripe.
        Secure codes draw their random symbols from ``rng`` (OS entropy when
        None) unless explicit ``randomness`` is given.
        """
        msg = self._message_units(message)
        rnd = self._randomness_units(msg.shape[0], rng, randomness)
        return self.encode_units(msg, rnd)

    def encode_units(self, msg: np.ndarray, rnd: np.ndarray, nodes: Sequence[int] | None = None) -> list[Share]:
        mats = self.message_matrices(msg, rnd)
        nodes = list(range(1, self.n + 1)) if nodes is None else list(nodes)
        return [Share(j, self.stored(mats, j)) for j in nodes]

    def helper_symbol(self, share: Share, failed: int) -> np.ndarray:
        return helper_symbol(share, self.projection(failed), self.field)

    def helper_symbols(self, shares: Mapping[int, Share] | Sequence[Share], failed: int, helpers=None) -> dict[int, np.ndarray]:
        shares = _as_share_map(shares)
        helpers = sorted(shares) if helpers is None else helpers
        return {j: self.helper_symbol(shares[j], failed) for j in helpers}

    def message_from_units(self, units: np.ndarray) -> np.ndarray:
        return units.reshape(-1)

    def repair(self, failed: int, helpers: Mapping[int, object], p: int = 0) -> Share:
        """Rebuild node ``failed`` from helper symbols tolerating ``p`` liars.

        ``helpers`` maps node index to that helper's symbols (one per unit
        stripe); ``None`` marks a helper that never answered.
        """
        data, ok = self.repair_many(failed, helpers, p)
        if not ok.all():
            raise DecodeFailure(f"repair of node {failed}: {int((~ok).sum())} stripe(s) beyond p={p}")
        return Share(failed, data)

    def detect_repair(self, failed: int, helpers: Mapping[int, object], p: int = 0) -> str:
        """Flag corruption of up to ``p`` helper symbols using ``d + p`` helpers."""
        return CLEAN if self.repair_consistency(failed, helpers, p).all() else CORRUPTED

    def decode_matrices(self, shares, p: int = 0) -> np.ndarray:
        """Recover every stripe's message matrix from ``k + 2p`` shares."""
        mats, ok = self.decode_matrices_many(shares, p)
        if not ok.all():
            raise DecodeFailure(f"{int((~ok).sum())} stripe(s) have more than {p} corrupt shares")
        return mats

    def reconstruct_units(self, shares, p: int = 0) -> np.ndarray:
        return self.cells_of(self.decode_matrices(shares, p))

    def reconstruct(self, shares, p: int = 0) -> np.ndarray:
        """Message symbols (random symbols dropped), stripe after stripe."""
        return self.reconstruct_units(shares, p).reshape(-1)

    def reconstruct_consistency(self, shares, p: int = 0) -> np.ndarray:
        """Per stripe: True iff all given shares agree with one message.

        Needs ``k + p`` shares so that up to ``p`` corrupt ones are noticed.
        """
        smap = _as_share_map(shares)
        if len(smap) < self.k + p:
            raise NotEnoughShares(f"detection at p={p} needs {self.k + p} shares")
        nodes = sorted(smap)
        mats, ok = self.decode_matrices_many({j: smap[j] for j in nodes[: self.k]}, 0)
        for j in nodes[self.k:]:
            ok &= np.all(self.stored(mats, j) == smap[j].data, axis=1)
        return ok

    def detect_reconstruct(self, shares, p: int = 0) -> str:
        """Flag up to ``p`` corrupt shares among ``k + p`` or more."""
        return CLEAN if self.reconstruct_consistency(shares, p).all() else CORRUPTED

    # subclass hooks
    def repair_many(self, failed, helpers, p=0) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def repair_consistency(self, failed, helpers, p=0) -> np.ndarray:
        raise NotImplementedError

    def decode_matrices_many(self, shares, p=0) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def cells_of(self, mats: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def message_matrices(self, msg: np.ndarray, rnd: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def stored(self, mats: np.ndarray, node: int) -> np.ndarray:
        raise NotImplementedError

    def projection(self, failed: int) -> tuple[int, ...]:
        raise NotImplementedError

    def _check_node(self, node: int):
        if not 1 <= node <= self.n:
            raise ValueError(f"node index {node} outside 1..{self.n}")


def _as_share_map(shares) -> dict[int, Share]:
    if isinstance(shares, Mapping):
        out = {}
        for j, s in shares.items():
            out[j] = s if isinstance(s, Share) else Share(j, s)
        return out
    return {s.node: s for s in shares}


def stack_helpers(helpers: Mapping[int, object]) -> tuple[list[int], list[int], np.ndarray | None]:
    """Split helper answers into (live indices, erased indices, received array)."""
    live = sorted(j for j, v in helpers.items() if v is not None)
    erased = sorted(j for j, v in helpers.items() if v is None)
    if not live:
        return live, erased, None
    rec = np.stack([np.asarray(helpers[j], dtype=np.int64).reshape(-1) for j in live])
    return live, erased, rec
