"""Product-matrix MBR codes with on-demand protection against corrupt nodes.

The message matrix is the symmetric ``d x d`` matrix ``[[S, V], [V^T, 0]]``
with ``S`` symmetric ``k x k``; node ``i`` stores ``psi_i^T M``.  A secure
code puts random symbols in the first ``ell`` rows (and, by symmetry,
columns).  Cell order, used by both encoder and decoder:

* upper triangle of ``S`` row by row, then ``V`` row by row;
* a cell is random iff its row index is below ``ell``; random symbols and
  message symbols are each consumed in this order.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .algebra import EncodingMatrix, mod_matmul
from .code import ProductMatrixCode, Share, _as_share_map, helper_symbol, stack_helpers
from .errors import (
    InvalidParams,
    NotEnoughHelpers,
    NotEnoughShares,
)
from .mds import consistent_many, decode_many

FILL_ORDER_VERSION = 1


@dataclass(frozen=True)
class MbrParams:
    n: int
    k: int
    d: int
    beta: int
    ell: int
    m: int
    alpha: int
    B: int
    B_star: int
    R: int

    regime = "mbr"


def mbr_derive(n: int, k: int, d: int, beta: int = 1, ell: int = 0, m: int = 0) -> MbrParams:
    """Derive the per-node storage and the plain and secure file sizes of an MBR code."""
    if not (1 <= k <= d <= n - 1):
        raise InvalidParams(f"MBR needs 1 <= k <= d <= n-1, got n={n} k={k} d={d}")
    if not (0 <= m <= ell < k):
        raise InvalidParams(f"need 0 <= m <= ell < k, got ell={ell} m={m} k={k}")
    if beta < 1:
        raise InvalidParams("beta must be at least 1")
    alpha = d * beta
    B = (k * d - k * (k - 1) // 2) * beta
    R = (ell * d - ell * (ell - 1) // 2) * beta
    return MbrParams(n, k, d, beta, ell, m, alpha, B, B - R, R)


def mbr_cells(k: int, d: int) -> list[tuple[int, int]]:
    """Every free cell of the message matrix in fill order."""
    s = [(i, j) for i in range(k) for j in range(i, k)]
    v = [(i, j) for i in range(k) for j in range(k, d)]
    return s + v


def _check_psi(params: MbrParams, psi: EncodingMatrix):
    if psi.n != params.n or psi.d != params.d:
        raise InvalidParams(f"encoding matrix is {psi.n}x{psi.d}, code needs {params.n}x{params.d}")
    bad = psi.violations(k=params.k, ell=params.ell)
    if bad:
        raise InvalidParams("encoding matrix violates: " + ", ".join(bad))


class MBRCode(ProductMatrixCode):
    """An MBR code instance: parameters plus a validated encoding matrix."""

    regime = "mbr"

    def __init__(self, params: MbrParams, psi: EncodingMatrix, validate: bool = True):
        if validate:
            _check_psi(params, psi)
        super().__init__(params, psi)
        cells = mbr_cells(params.k, params.d)
        self.random_cells = [c for c in cells if c[0] < params.ell]
        self.message_cells = [c for c in cells if c[0] >= params.ell]
        self._psi = psi.array
        self._phi = self._psi[:, : params.k]
        self._delta = self._psi[:, params.k:]

    # -- encoding -------------------------------------------------------------

    def message_matrices(self, msg: np.ndarray, rnd: np.ndarray) -> np.ndarray:
        d = self.d
        mats = np.zeros((msg.shape[0], d, d), dtype=np.int64)
        for cells, vals in ((self.message_cells, msg), (self.random_cells, rnd)):
            for t, (i, j) in enumerate(cells):
                mats[:, i, j] = vals[:, t]
                mats[:, j, i] = vals[:, t]
        return mats

    def stored(self, mats: np.ndarray, node: int) -> np.ndarray:
        self._check_node(node)
        return mod_matmul(self._psi[node - 1][None, None, :], mats, self.field.q)[:, 0, :]

    def encode_all(self, mats: np.ndarray) -> np.ndarray:
        """Shares of every node as one ``(n, stripes, alpha)`` array."""
        return np.moveaxis(mod_matmul(self._psi[None], mats, self.field.q), 1, 0)

    def projection(self, failed: int) -> tuple[int, ...]:
        self._check_node(failed)
        return tuple(int(v) for v in self._psi[failed - 1])

    # -- repair ---------------------------------------------------------------

    def repair_many(self, failed: int, helpers: Mapping[int, object], p: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """Per-stripe repair: ``(data, ok)`` where ``ok[s]`` is False for stripes beyond ``p``."""
        self._check_node(failed)
        if failed in helpers:
            raise ValueError("the failed node cannot help its own repair")
        live, _, rec = stack_helpers(helpers)
        if len(live) < self.d + 2 * p:
            raise NotEnoughHelpers(f"{len(live)} helpers answered, p={p} needs {self.d + 2 * p}")
        rows = [j - 1 for j in live]
        mu, ok = decode_many(self._psi[rows], rec, p, self.field, self._points(rows))
        # M psi_f = mu and M is symmetric, so psi_f^T M = mu^T
        return mu.T, ok

    def repair_consistency(self, failed: int, helpers: Mapping[int, object], p: int = 0) -> np.ndarray:
        """Per stripe: True iff the helper symbols agree with one codeword."""
        live, _, rec = stack_helpers(helpers)
        if len(live) < self.d + p:
            raise NotEnoughHelpers(f"detection at p={p} needs {self.d + p} helpers")
        rows = [j - 1 for j in live]
        return consistent_many(self._psi[rows], rec, self.field)

    # -- reconstruction -------------------------------------------------------

    def decode_matrices_many(self, shares, p: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """Message matrices of every stripe plus a per-stripe success mask."""
        smap = _as_share_map(shares)
        nodes = sorted(smap)
        if len(nodes) < self.k + 2 * p:
            raise NotEnoughShares(f"{len(nodes)} shares, p={p} needs {self.k + 2 * p}")
        for j in nodes:
            self._check_node(j)
        q, k, d = self.field.q, self.k, self.d
        rows = [j - 1 for j in nodes]
        Y = np.stack([smap[j].data for j in nodes])  # kappa x S x d
        units = Y.shape[1]
        phi = self._phi[rows]
        pts = self._points(rows)
        mats = np.zeros((units, d, d), dtype=np.int64)
        good = np.ones(units, dtype=bool)
        # columns k..d-1 of Y are Phi V
        for c in range(k, d):
            v, ok = decode_many(phi, Y[:, :, c], p, self.field, pts)
            good &= ok
            mats[:, :k, c] = v.T
            mats[:, c, :k] = v.T
        if d > k:
            # first k columns are Phi S + Delta V^T
            corr = mod_matmul(self._delta[rows][None], mats[:, k:, :k], q)  # S x kappa x k
            left = (Y[:, :, :k] - np.moveaxis(corr, 0, 1)) % q
        else:
            left = Y[:, :, :k]
        for c in range(k):
            s, ok = decode_many(phi, left[:, :, c], p, self.field, pts)
            good &= ok
            mats[:, :k, c] = s.T
        good &= np.all(mats == np.swapaxes(mats, 1, 2), axis=(1, 2))
        enc = mod_matmul(self._psi[rows][None], mats, q)  # S x kappa x d
        wrong = np.any(np.moveaxis(enc, 1, 0) != Y, axis=2).sum(axis=0)
        good &= wrong <= p
        return mats, good

    def cells_of(self, mats: np.ndarray) -> np.ndarray:
        """Message symbols read back from message matrices, ``(stripes, B_star)``."""
        out = np.empty((mats.shape[0], len(self.message_cells)), dtype=np.int64)
        for t, (i, j) in enumerate(self.message_cells):
            out[:, t] = mats[:, i, j]
        return out

    def _points(self, rows: Sequence[int]):
        if self.psi.points is None:
            return None
        return [self.psi.points[r] for r in rows]


# -- functional interface ------------------------------------------------------


def mbr_encode(params: MbrParams, psi: EncodingMatrix, message, rng=None, randomness=None) -> list[Share]:
    return MBRCode(params, psi).encode(message, rng=rng, randomness=randomness)


def mbr_repair_helper_symbol(helper: Share, psi_f: Sequence[int], field) -> np.ndarray:
    return helper_symbol(helper, psi_f, field)


def mbr_repair_decode(params: MbrParams, psi: EncodingMatrix, failed: int, helpers, p: int = 0) -> Share:
    return MBRCode(params, psi).repair(failed, helpers, p)


def mbr_reconstruct(params: MbrParams, psi: EncodingMatrix, shares, p: int = 0) -> np.ndarray:
    return MBRCode(params, psi).reconstruct(shares, p)
