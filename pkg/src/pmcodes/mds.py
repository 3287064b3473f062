"""Error and erasure decoding for MDS generator matrices.

An observation is ``received = G @ msg`` with at most ``p`` corrupted
entries, where any ``w`` rows of the ``n' x w`` generator ``G`` are
independent.  With ``n' >= w + 2p`` the minimum distance is ``2p + 1`` and
the message is unique.

Two scalar decoders are offered: Berlekamp-Welch for Vandermonde
generators (``G[i] = [1, x_i, ..., x_i**(w-1)]``) and an exhaustive
error-location search for any MDS generator.  :func:`decode_many` is the
bulk path used by the codes: the exhaustive search vectorised over stripes.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb
from typing import Sequence

import numpy as np

from .algebra import (
    EncodingMatrix,
    Matrix,
    PrimeField,
    SingularSystem,
    _row_reduce,
    inverse_array,
    mat_mul,
    mat_solve,
    mod_matmul,
)
from .errors import DecodeFailure, TooFewObservations, TooManyErasures

CLEAN = "clean"
CORRUPTED = "corrupted"

# vectorised exhaustive search is used while the number of candidate error
# sets stays below this; beyond it decode_many falls back to per-stripe BW
MAX_CANDIDATE_SETS = 20000


@dataclass(frozen=True)
class Observation:
    """Symbols received through ``generator`` rows, some possibly erased.

    ``erased`` holds row positions (0-based, into ``generator``) whose
    symbols never arrived; their ``received`` entries are ignored.
    """

    generator: Matrix
    received: tuple[int, ...]
    erased: frozenset[int] = field(default_factory=frozenset)
    points: tuple[int, ...] | None = None

    def __post_init__(self):
        q = self.generator.field.q
        object.__setattr__(self, "received", tuple(int(v) % q for v in self.received))
        object.__setattr__(self, "erased", frozenset(self.erased))
        if len(self.received) != self.generator.rows:
            raise ValueError("one received symbol per generator row")
        if self.points is not None and len(self.points) != self.generator.rows:
            raise ValueError("one point per generator row")
        if any(not 0 <= e < self.generator.rows for e in self.erased):
            raise ValueError("erased index out of range")

    @classmethod
    def from_encoding(
        cls,
        enc: EncodingMatrix,
        rows: Sequence[int],
        received: Sequence[int],
        width: int | None = None,
        erased: Sequence[int] = (),
    ) -> Observation:
        """Observation through 0-based ``rows`` of ``enc`` cut to ``width`` columns."""
        width = enc.d if width is None else width
        gen = enc.psi.take_rows(rows).take_cols(range(width))
        pts = None if enc.points is None else tuple(enc.points[r] for r in rows)
        return cls(gen, tuple(received), frozenset(erased), pts)

    @property
    def field(self) -> PrimeField:
        return self.generator.field

    @property
    def width(self) -> int:
        return self.generator.cols

    def live_rows(self) -> list[int]:
        return [i for i in range(self.generator.rows) if i not in self.erased]


def _require(obs: Observation, needed: int) -> list[int]:
    live = obs.live_rows()
    if len(live) < needed:
        raise TooFewObservations(f"{len(live)} usable symbols, need {needed}")
    return live


def _is_vandermonde(obs: Observation) -> bool:
    if obs.points is None:
        return False
    f = obs.field
    return all(
        obs.generator.row(i) == tuple(f.pow(x, j) for j in range(obs.width))
        for i, x in enumerate(obs.points)
    )


def _within_radius(obs: Observation, live: list[int], msg: Sequence[int], p: int) -> bool:
    enc = mat_mul(obs.generator.take_rows(live), msg)
    return sum(e != obs.received[i] for e, i in zip(enc, live)) <= p


def _solve_any(rows: list[list[int]], q: int, nvars: int) -> list[int] | None:
    """Some solution of the augmented system (free variables set to 0)."""
    aug = [list(r) for r in rows]
    pivots = _row_reduce(aug, q, ncols=nvars)
    if any(r[-1] for r in aug[len(pivots):]):
        return None
    sol = [0] * nvars
    for i, c in enumerate(pivots):
        sol[c] = aug[i][-1]
    return sol


def _poly_divmod(num: list[int], den: list[int], q: int) -> tuple[list[int], list[int]]:
    """Polynomial division over GF(q), coefficient lists low-degree first."""
    num = list(num)
    while len(den) > 1 and den[-1] == 0:
        den = den[:-1]
    inv_lead = pow(den[-1], q - 2, q)
    quot = [0] * max(len(num) - len(den) + 1, 1)
    for shift in range(len(num) - len(den), -1, -1):
        coef = num[shift + len(den) - 1] * inv_lead % q
        quot[shift] = coef
        if coef:
            for j, dv in enumerate(den):
                num[shift + j] = (num[shift + j] - coef * dv) % q
    return quot, num[: len(den) - 1]


def decode_bw(obs: Observation, p: int) -> tuple[int, ...]:
    """Berlekamp-Welch decoding on a Vandermonde observation.

    Erased rows are dropped first.  Raises :class:`DecodeFailure` when no
    message re-encodes to within ``p`` of the received symbols.
    """
    if not _is_vandermonde(obs):
        raise ValueError("Berlekamp-Welch needs Vandermonde generator rows with points")
    w = obs.width
    live = _require(obs, w + 2 * p)
    q = obs.field.q
    xs = [obs.points[i] for i in live]
    ys = [obs.received[i] for i in live]
    # unknowns: Q_0..Q_{w+p-1}, E_0..E_{p-1}; E is monic of degree p
    rows = []
    for x, y in zip(xs, ys):
        powers = [pow(x, t, q) for t in range(w + p + 1)]
        rows.append(powers[: w + p] + [(-y * powers[t]) % q for t in range(p)] + [y * powers[p] % q])
    sol = _solve_any(rows, q, w + 2 * p)
    if sol is None:
        raise DecodeFailure("key equation has no solution: more than p errors")
    qpoly = sol[: w + p]
    epoly = sol[w + p:] + [1]
    quot, rem = _poly_divmod(qpoly, epoly, q)
    if any(rem):
        raise DecodeFailure("error locator does not divide: more than p errors")
    msg = tuple((quot + [0] * w)[:w])
    if any(quot[w:]) or not _within_radius(obs, live, msg, p):
        raise DecodeFailure("decoded message lies outside the correction radius")
    return msg


def _candidate_sets(rows: Sequence[int], p: int):
    for size in range(p + 1):
        yield from itertools.combinations(rows, size)


def decode_exhaustive(obs: Observation, p: int) -> tuple[int, ...]:
    """Try every error-location set of size <= p, lowest index first.

    A set is accepted when the remaining symbols form a consistent system.
    Works for any MDS generator.
    """
    w = obs.width
    live = _require(obs, w + 2 * p)
    for bad in _candidate_sets(live, p):
        keep = [i for i in live if i not in bad]
        try:
            return mat_solve(obs.generator.take_rows(keep), [obs.received[i] for i in keep])
        except SingularSystem:
            continue
    raise DecodeFailure(f"no codeword within distance {p}")


def decode(obs: Observation, p: int) -> tuple[int, ...]:
    """Berlekamp-Welch when the generator allows it, exhaustive search otherwise."""
    if _is_vandermonde(obs):
        return decode_bw(obs, p)
    return decode_exhaustive(obs, p)


def decode_with_erasures(obs: Observation, p: int, p_prime: int) -> tuple[int, ...]:
    if len(obs.erased) > p_prime:
        raise TooManyErasures(f"{len(obs.erased)} erasures exceed the declared {p_prime}")
    return decode(obs, p)


def detect(obs: Observation, p: int) -> str:
    """``"clean"`` iff the live symbols are consistent with one codeword.

    Needs ``width + p`` live symbols; then any corruption of weight ``<= p``
    is flagged.
    """
    live = _require(obs, obs.width + p)
    try:
        mat_solve(obs.generator.take_rows(live), [obs.received[i] for i in live])
    except SingularSystem:
        return CORRUPTED
    return CLEAN


# --------------------------------------------------------------------------
# bulk decoding over stripes


def decode_many(
    generator: np.ndarray,
    received: np.ndarray,
    p: int,
    field: PrimeField,
    points: Sequence[int] | None = None,
    method: str = "auto",
) -> tuple[np.ndarray, np.ndarray]:
    """Decode every column of ``received`` (shape ``n' x S``).

    Returns ``(messages, ok)`` with messages of shape ``w x S``; columns
    where decoding failed have ``ok`` False and zero messages.  Never raises
    DecodeFailure, so callers can treat a failed column as a corrupt symbol.
    """
    gen = np.asarray(generator, dtype=np.int64)
    rec = np.asarray(received, dtype=np.int64)
    n_obs, w = gen.shape
    if rec.shape[0] != n_obs:
        raise ValueError("received rows must match generator rows")
    if n_obs < w + 2 * p:
        raise TooFewObservations(f"{n_obs} symbols, need {w + 2 * p}")
    if method == "auto":
        n_sets = sum(comb(n_obs, s) for s in range(p + 1))
        method = "exhaustive" if n_sets <= MAX_CANDIDATE_SETS or points is None else "bw"
    if method == "bw":
        return _decode_many_scalar(gen, rec, p, field, points)
    if method != "exhaustive":
        raise ValueError(f"unknown method {method!r}")
    return _decode_many_exhaustive(gen, rec, p, field)


def _decode_many_exhaustive(gen, rec, p, field):
    q = field.q
    n_obs, w = gen.shape
    S = rec.shape[1]
    out = np.zeros((w, S), dtype=np.int64)
    ok = np.zeros(S, dtype=bool)
    todo = np.arange(S)
    inverses: dict[tuple[int, ...], np.ndarray] = {}
    for bad in _candidate_sets(range(n_obs), p):
        if todo.size == 0:
            break
        keep = [i for i in range(n_obs) if i not in bad]
        basis, rest = tuple(keep[:w]), keep[w:]
        if basis not in inverses:
            inverses[basis] = inverse_array(gen[list(basis)], field)
        y = rec[:, todo]
        msg = mod_matmul(inverses[basis], y[list(basis)], q)
        if rest:
            consistent = np.all(mod_matmul(gen[rest], msg, q) == y[rest], axis=0)
        else:
            consistent = np.ones(todo.size, dtype=bool)
        hit = todo[consistent]
        out[:, hit] = msg[:, consistent]
        ok[hit] = True
        todo = todo[~consistent]
    return out, ok


def _decode_many_scalar(gen, rec, p, field, points):
    matrix = Matrix(field, gen.tolist())
    pts = None if points is None else tuple(points)
    w = gen.shape[1]
    out = np.zeros((w, rec.shape[1]), dtype=np.int64)
    ok = np.zeros(rec.shape[1], dtype=bool)
    for s in range(rec.shape[1]):
        obs = Observation(matrix, tuple(rec[:, s].tolist()), points=pts)
        try:
            out[:, s] = decode(obs, p)
            ok[s] = True
        except DecodeFailure:
            pass
    return out, ok


def consistent_many(generator: np.ndarray, received: np.ndarray, field: PrimeField) -> np.ndarray:
    """Per column: True iff ``received`` lies in the column space of ``generator``."""
    gen = np.asarray(generator, dtype=np.int64)
    w = gen.shape[1]
    inv = inverse_array(gen[:w], field)
    msg = mod_matmul(inv, received[:w], field.q)
    return np.all(mod_matmul(gen, msg, field.q) == received, axis=0)
