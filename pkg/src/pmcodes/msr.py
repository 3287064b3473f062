"""Product-matrix MSR codes for ``d >= 2k - 2`` with on-demand protection.

Everything runs on a *base* code with ``d' = 2k' - 2``.  For ``d > 2k - 2``
the code is shortened by ``i = d - (2k - 2)``: the base code has ``i`` more
nodes whose stored data is forced to zero, and the real nodes are the last
``n`` base rows.  Those ``i`` virtual nodes are fed to the decoders as
known zero shares.

Base message matrix ``M = [S1; S2]`` (both ``alpha x alpha`` symmetric) and
node ``j`` stores ``phi_j^T S1 + lambda_j phi_j^T S2`` with
``lambda_j = x_j**alpha``.  Cell order (both encoder and decoder):

* plain: upper triangle of ``S1`` row by row, then of ``S2``;
* secure: the same traversal, where cells of ``S1`` in the first ``ell'``
  rows, and cells of ``S2`` inside the first ``ell' - 1`` rows/columns or
  the first ``m`` rows, are random; message symbols fill the rest in order;
* systematic or shortened plain codes take the message as the data of the
  first ``k'`` base nodes, row by row, skipping the ``i`` zero nodes.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .algebra import EncodingMatrix, SingularSystem, inverse_array, mod_matmul
from .code import ProductMatrixCode, Share, _as_share_map, helper_symbol, stack_helpers, upper_cells
from .errors import (
    InvalidParams,
    NotEnoughHelpers,
    NotEnoughShares,
)
from .mds import consistent_many, decode_many


@dataclass(frozen=True)
class MsrParams:
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
    shorten_i: int

    regime = "msr"

    @property
    def base(self) -> tuple[int, int, int]:
        """``(n', k', d')`` of the code this one is shortened from."""
        i = self.shorten_i
        return self.n + i, self.k + i, self.d + i

    @property
    def base_ell(self) -> int:
        return self.ell + self.shorten_i if self.ell else 0


def msr_derive(n: int, k: int, d: int, beta: int = 1, ell: int = 0, m: int = 0) -> MsrParams:
    """Derive the per-node storage and the plain and secure file sizes of an MSR code."""
    if k < 2:
        raise InvalidParams("MSR needs k >= 2")
    if d < 2 * k - 2:
        raise InvalidParams(f"d={d} < 2k-2={2 * k - 2}: no product-matrix MSR code")
    if d > n - 1:
        raise InvalidParams(f"d={d} exceeds n-1={n - 1}")
    if not (0 <= m <= ell < k):
        raise InvalidParams(f"need 0 <= m <= ell < k, got ell={ell} m={m} k={k}")
    if beta < 1:
        raise InvalidParams("beta must be at least 1")
    alpha = (d - k + 1) * beta
    B = k * alpha
    B_star = (k - ell) * (alpha - m * beta)
    R = m * (k - ell) * beta + ell * alpha
    return MsrParams(n, k, d, beta, ell, m, alpha, B, B_star, R, d - (2 * k - 2))


def msr_secure_random_cells(alpha: int, ell: int, m: int) -> tuple[list, list]:
    """Random cells of ``S1`` and of ``S2`` (upper triangle, fill order)."""
    s1 = [(i, j) for i, j in upper_cells(alpha) if i < ell]
    s2 = [(i, j) for i, j in upper_cells(alpha) if j < ell - 1 or i < m]
    return s1, s2


def _check_psi(params: MsrParams, psi: EncodingMatrix):
    n_b, _, d_b = params.base
    a = d_b // 2
    if psi.n != n_b or psi.d != d_b:
        raise InvalidParams(f"encoding matrix is {psi.n}x{psi.d}, base code needs {n_b}x{d_b}")
    if psi.points is None:
        raise InvalidParams("MSR requires a Vandermonde encoding matrix")
    bad = psi.violations(alpha=a, ell=params.base_ell)
    if bad:
        raise InvalidParams("encoding matrix violates: " + ", ".join(bad))


class MSRCode(ProductMatrixCode):
    """An MSR code instance; shortening and systematic or secure layouts are supported."""

    regime = "msr"

    def __init__(self, params: MsrParams, psi: EncodingMatrix, systematic: bool = False, validate: bool = True):
        if systematic and params.ell > 0:
            raise InvalidParams("a secure code cannot be systematic")
        if validate:
            _check_psi(params, psi)
        super().__init__(params, psi)
        q = self.field.q
        self.shift = params.shorten_i
        self.systematic = systematic or (params.ell == 0 and self.shift > 0)
        _, self.base_k, self.base_d = params.base
        a = self.base_d // 2
        self.a = a
        self._psi = psi.array
        self._phi = self._psi[:, :a]
        self._lam = np.array([pow(int(x), a, q) for x in psi.points], dtype=np.int64)
        cells = upper_cells(a)
        self.det_cells: list[tuple[int, tuple[int, int]]] = []
        if params.ell == 0:
            self.random_cells = []
            self.message_cells = [(0, c) for c in cells] + [(1, c) for c in cells]
        else:
            r1, r2 = msr_secure_random_cells(a, params.base_ell, params.m)
            rand = [(0, c) for c in r1] + [(1, c) for c in r2]
            rset = set(rand)
            self.message_cells = [(h, c) for h in (0, 1) for c in cells if (h, c) not in rset]
            i = self.shift
            det = {(0, c) for c in r1 if c[0] < i} | {(1, c) for c in r2 if c[1] < i - 1}
            self.det_cells = [c for c in rand if c in det]
            self.random_cells = [c for c in rand if c not in det]
            if self.det_cells:
                self._det_solver = self._build_det_solver()

    # -- layout helpers -------------------------------------------------------

    def _row(self, node: int) -> int:
        """0-based base row of real node ``node``."""
        self._check_node(node)
        return node - 1 + self.shift

    def _fill(self, mats, cells, vals):
        a = self.a
        for t, (h, (i, j)) in enumerate(cells):
            mats[:, h * a + i, j] = vals[:, t]
            mats[:, h * a + j, i] = vals[:, t]

    def _node_data(self, mats: np.ndarray, rows: Sequence[int]) -> np.ndarray:
        """``(len(rows), stripes, alpha)`` data of base rows ``rows``."""
        rows = list(rows)
        out = mod_matmul(self._psi[rows][None], mats, self.field.q)
        return np.moveaxis(out, 1, 0)

    def _build_det_solver(self) -> np.ndarray:
        # column u holds Psi_i E_u flattened, E_u the symmetric unit for cell u
        q, a, i = self.field.q, self.a, self.shift
        cols = []
        for h, (r, c) in self.det_cells:
            e = np.zeros((1, 2 * a, a), dtype=np.int64)
            e[0, h * a + r, c] = e[0, h * a + c, r] = 1
            cols.append(mod_matmul(self._psi[:i][None], e, q)[0].reshape(-1))
        A = np.stack(cols, axis=1)
        try:
            return inverse_array(A, self.field)
        except SingularSystem:
            raise InvalidParams("encoding matrix does not allow zeroing the shortened rows")

    # -- encoding -------------------------------------------------------------

    def message_matrices(self, msg: np.ndarray, rnd: np.ndarray) -> np.ndarray:
        q, a, i = self.field.q, self.a, self.shift
        units = msg.shape[0]
        if self.systematic:
            U = np.zeros((self.base_k, units, a), dtype=np.int64)
            U[i:] = np.moveaxis(msg.reshape(units, self.k, a), 1, 0)
            return self._solve_systematic(U)
        mats = np.zeros((units, 2 * a, a), dtype=np.int64)
        self._fill(mats, self.message_cells, msg)
        self._fill(mats, self.random_cells, rnd)
        if self.det_cells:
            rhs = (-mod_matmul(self._psi[:i][None], mats, q).reshape(units, -1)) % q
            sol = mod_matmul(self._det_solver[None], rhs[:, :, None], q)[:, :, 0]
            self._fill(mats, self.det_cells, sol)
        return mats

    def _solve_systematic(self, U: np.ndarray) -> np.ndarray:
        # any k' rows determine M, so this solve cannot fail
        mats, _ = self._decode_base(list(range(self.base_k)), U, 0)
        return mats

    def stored(self, mats: np.ndarray, node: int) -> np.ndarray:
        return self._node_data(mats, [self._row(node)])[0]

    def encode_all(self, mats: np.ndarray) -> np.ndarray:
        return self._node_data(mats, range(self.shift, self.shift + self.n))

    def projection(self, failed: int) -> tuple[int, ...]:
        return tuple(int(v) for v in self._phi[self._row(failed)])

    def virtual_zero_rows(self) -> np.ndarray:
        """Base rows forced to zero by shortening (empty when ``i = 0``)."""
        return self._psi[: self.shift]

    # -- repair ---------------------------------------------------------------

    def _with_virtual(self, nodes: Sequence[int], rec: np.ndarray) -> tuple[list[int], np.ndarray]:
        """Base rows and data with the shortened zero nodes prepended."""
        rows = list(range(self.shift)) + [self._row(j) for j in nodes]
        if self.shift:
            rec = np.concatenate([np.zeros((self.shift,) + rec.shape[1:], dtype=np.int64), rec])
        return rows, rec

    def repair_many(self, failed: int, helpers: Mapping[int, object], p: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """Per-stripe repair: ``(data, ok)`` where ``ok[s]`` is False for stripes beyond ``p``.

        A shortened code adds its ``i`` zero nodes as trusted helpers, so the
        caller contacts ``d + 2p`` real nodes.
        """
        rf = self._row(failed)
        if failed in helpers:
            raise ValueError("the failed node cannot help its own repair")
        live, _, rec = stack_helpers(helpers)
        if len(live) < self.d + 2 * p:
            raise NotEnoughHelpers(f"{len(live)} helpers answered, p={p} needs {self.d + 2 * p}")
        rows, rec = self._with_virtual(live, rec)
        mu, ok = decode_many(self._psi[rows], rec, p, self.field, self._points(rows))
        a, q = self.a, self.field.q
        # mu = [S1 phi_f; S2 phi_f]; by symmetry phi_f^T S1 + lambda_f phi_f^T S2
        data = (mu[:a] + self._lam[rf] * mu[a:] % q) % q
        return data.T, ok

    def repair_consistency(self, failed: int, helpers: Mapping[int, object], p: int = 0) -> np.ndarray:
        live, _, rec = stack_helpers(helpers)
        if len(live) < self.d + p:
            raise NotEnoughHelpers(f"detection at p={p} needs {self.d + p} helpers")
        rows, rec = self._with_virtual(live, rec)
        return consistent_many(self._psi[rows], rec, self.field)

    # -- reconstruction -------------------------------------------------------

    def _decode_base(self, rows: list[int], Y: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
        """Message matrices from base rows ``rows`` holding data ``Y`` (rows x S x alpha)."""
        q, a, F = self.field.q, self.a, self.field
        kappa, units = len(rows), Y.shape[1]
        phi = self._phi[rows]
        lam = self._lam[rows]
        if len(set(lam.tolist())) != kappa:
            raise InvalidParams("lambda values of the contacted nodes are not distinct")
        # Z = Y Phi^T = P + Lambda Q with P = Phi S1 Phi^T, Q = Phi S2 Phi^T
        Z = mod_matmul(np.moveaxis(Y, 0, 1), phi.T[None], q)  # S x kappa x kappa
        diff = (lam[:, None] - lam[None, :]) % q
        inv = np.zeros_like(diff)
        for r in range(kappa):
            for c in range(kappa):
                if r != c:
                    inv[r, c] = F.inv(int(diff[r, c]))
        Qm = (Z - np.swapaxes(Z, 1, 2)) % q * inv % q
        Pm = (Z - lam[None, :, None] * Qm % q) % q
        pts = self._points(rows)
        mats = np.zeros((units, 2 * a, a), dtype=np.int64)
        good = np.ones(units, dtype=bool)
        for h, blk in enumerate((Pm, Qm)):
            # row j of W = phi_j^T S for S in {S1, S2}, from column j off the diagonal
            W = np.zeros((kappa, units, a), dtype=np.int64)
            for j in range(kappa):
                others = [r for r in range(kappa) if r != j]
                v, _ok = decode_many(phi[others], blk[:, others, j].T, p, F, [pts[r] for r in others])
                # a failed column stays zero and counts as one corrupt row below
                W[j] = v.T
            for c in range(a):
                s, ok = decode_many(phi, W[:, :, c], p, F, pts)
                good &= ok
                mats[:, h * a: (h + 1) * a, c] = s.T
        for h in (0, 1):
            blk = mats[:, h * a: (h + 1) * a]
            good &= np.all(blk == np.swapaxes(blk, 1, 2), axis=(1, 2))
        wrong = np.any(self._node_data(mats, rows) != Y, axis=2).sum(axis=0)
        good &= wrong <= p
        return mats, good

    def decode_matrices_many(self, shares, p: int = 0) -> tuple[np.ndarray, np.ndarray]:
        smap = _as_share_map(shares)
        nodes = sorted(smap)
        if len(nodes) < self.k + 2 * p:
            raise NotEnoughShares(f"{len(nodes)} shares, p={p} needs {self.k + 2 * p}")
        rows, Y = self._with_virtual(nodes, np.stack([smap[j].data for j in nodes]))
        return self._decode_base(rows, Y, p)

    def cells_of(self, mats: np.ndarray) -> np.ndarray:
        """Message symbols read back from message matrices, ``(stripes, B_star)``."""
        if self.systematic:
            U = self._node_data(mats, range(self.shift, self.base_k))
            return np.moveaxis(U, 0, 1).reshape(mats.shape[0], -1)
        a = self.a
        out = np.empty((mats.shape[0], len(self.message_cells)), dtype=np.int64)
        for t, (h, (i, j)) in enumerate(self.message_cells):
            out[:, t] = mats[:, h * a + i, j]
        return out

    def _points(self, rows: Sequence[int]):
        return [self.psi.points[r] for r in rows]


# -- functional interface ------------------------------------------------------


def msr_encode(params: MsrParams, psi: EncodingMatrix, message, rng=None, randomness=None) -> list[Share]:
    return MSRCode(params, psi).encode(message, rng=rng, randomness=randomness)


def msr_make_systematic(params: MsrParams, psi: EncodingMatrix, message) -> list[Share]:
    """Encode so that the first ``k`` nodes store the message uncoded."""
    return MSRCode(params, psi, systematic=True).encode(message)


def msr_repair_helper_symbol(helper: Share, phi_f: Sequence[int], field) -> np.ndarray:
    return helper_symbol(helper, phi_f, field)


def msr_repair_decode(params: MsrParams, psi: EncodingMatrix, failed: int, helpers, p: int = 0,
                      systematic: bool = False) -> Share:
    return MSRCode(params, psi, systematic=systematic).repair(failed, helpers, p)


def msr_reconstruct(params: MsrParams, psi: EncodingMatrix, shares, p: int = 0,
                    systematic: bool = False) -> np.ndarray:
    return MSRCode(params, psi, systematic=systematic).reconstruct(shares, p)
