"""Executable security oracles for product-matrix codes at desk scale.

An eavesdropper reads the stored data of some nodes and, for a subset of
them, every symbol downloaded while they are repaired.  Because the codes
are linear, everything it captures is a linear map of (message,
randomness); :func:`view_map` builds that map by pushing unit vectors
through the real encoder and repair path, walking repair histories up to a
bounded depth.  The oracles then either enumerate exactly
(:func:`leakage_oracle`) or reason about ranks.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .algebra import Matrix, mat_rank, mat_solve, mod_matmul
from .code import ProductMatrixCode, Share, make_rng
from .errors import BudgetExceeded

DEFAULT_DEPTH = 2
DEFAULT_BUDGET = 10**7


@dataclass
class EavesdropperView:
    """Which nodes an eavesdropper watches.

    ``storage_nodes`` expose their stored data only; ``repair_nodes`` also
    expose every symbol sent to them during repair.  ``captured`` collects
    ``(label, values)`` pairs when the view is filled in by a simulation.
    """

    storage_nodes: frozenset = frozenset()
    repair_nodes: frozenset = frozenset()
    captured: list = field(default_factory=list)

    def __post_init__(self):
        self.storage_nodes = frozenset(self.storage_nodes)
        self.repair_nodes = frozenset(self.repair_nodes)
        if self.storage_nodes & self.repair_nodes:
            raise ValueError("storage and repair node sets must be disjoint")

    @property
    def size(self) -> int:
        return len(self.storage_nodes) + len(self.repair_nodes)

    @property
    def nodes(self) -> frozenset:
        return self.storage_nodes | self.repair_nodes

    def admissible(self, ell: int, m: int) -> bool:
        """True iff this view is within an ``{ell, m}`` design."""
        return self.size <= ell and len(self.repair_nodes) <= m

    def record(self, label, values):
        self.captured.append((label, np.asarray(values, dtype=np.int64).copy()))


def admissible_views(n: int, ell: int, m: int) -> list[EavesdropperView]:
    """Every view with exactly ``ell`` nodes of which ``m`` are repair-tapped."""
    out = []
    for nodes in itertools.combinations(range(1, n + 1), ell):
        for tapped in itertools.combinations(nodes, m):
            out.append(EavesdropperView(set(nodes) - set(tapped), set(tapped)))
    return out


# --------------------------------------------------------------------------
# the linear view map


@dataclass
class ViewMap:
    labels: list
    msg_part: np.ndarray  # captured x B_star
    rnd_part: np.ndarray  # captured x R
    histories: int
    states: int

    @property
    def full(self) -> np.ndarray:
        return np.concatenate([self.msg_part, self.rnd_part], axis=1)


def _helper_sets(code: ProductMatrixCode, failed: int, limit: int | None):
    others = [j for j in range(1, code.n + 1) if j != failed]
    sets = itertools.combinations(others, code.d)
    return itertools.islice(sets, limit) if limit else sets


def view_map(code: ProductMatrixCode, view: EavesdropperView, depth: int = DEFAULT_DEPTH,
             helper_sets_per_repair: int | None = None, dedupe: bool = True) -> ViewMap:
    """Linear map from (message, randomness) to everything ``view`` captures.

    Column ``t`` is what the eavesdropper sees when the input is the ``t``-th
    unit vector, so the basis is encoded as a batch of stripes.  Repair
    histories are all sequences of up to ``depth`` single-node repairs,
    each from every ``d``-subset of helpers (or the first
    ``helper_sets_per_repair`` of them); identical cluster states are
    explored once unless ``dedupe`` is False.
    """
    bm, r = code.unit_message, code.unit_random
    basis = np.eye(bm + r, dtype=np.int64)
    mats = code.message_matrices(basis[:, :bm], basis[:, bm:])
    state = {j: code.stored(mats, j) for j in range(1, code.n + 1)}
    captured: dict = {}

    def capture(label, values):
        values = np.asarray(values) % code.field.q
        if label in captured and not np.array_equal(captured[label], values):
            raise AssertionError(f"{label} differs across repair histories")
        captured[label] = values

    for j in sorted(view.nodes):
        for t in range(code.unit_alpha):
            capture(("store", j, t), state[j][:, t])

    seen = {_state_key(state)}
    frontier = [state]
    histories = 0
    for _ in range(depth):
        nxt = []
        for st in frontier:
            for f in range(1, code.n + 1):
                for hs in _helper_sets(code, f, helper_sets_per_repair):
                    sym = {j: code.helper_symbol(Share(j, st[j]), f) for j in hs}
                    histories += 1
                    if f in view.repair_nodes:
                        for j in hs:
                            capture(("repair", f, j), sym[j])
                    new = dict(st)
                    new[f] = code.repair(f, sym, 0).data
                    if f in view.nodes:
                        for t in range(code.unit_alpha):
                            capture(("store", f, t), new[f][:, t])
                    key = _state_key(new)
                    if key not in seen or not dedupe:
                        seen.add(key)
                        nxt.append(new)
        frontier = nxt
    labels = sorted(captured, key=repr)
    G = np.stack([captured[lbl] for lbl in labels]) if labels else np.zeros((0, bm + r), dtype=np.int64)
    return ViewMap(labels, G[:, :bm], G[:, bm:], histories, len(seen))


def _state_key(state: dict) -> bytes:
    return b"".join(np.ascontiguousarray(state[j]).tobytes() for j in sorted(state))


# --------------------------------------------------------------------------
# exact leakage enumeration


@dataclass
class LeakageReport:
    verdict: str  # "secure" or "leaky"
    witness: tuple | None
    pairs: int
    captured: int

    @property
    def secure(self) -> bool:
        return self.verdict == "secure"

    def to_dict(self) -> dict:
        w = None if self.witness is None else [list(map(int, x)) for x in self.witness]
        return {"verdict": self.verdict, "witness": w, "pairs": self.pairs, "captured": self.captured}


def _all_vectors(q: int, length: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Vectors of GF(q)^length with index in [start, stop), lexicographic."""
    stop = q**length if stop is None else stop
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.empty((idx.size, length), dtype=np.int64)
    for pos in range(length - 1, -1, -1):
        out[:, pos] = idx % q
        idx = idx // q
    return out


def _row_keys(values: np.ndarray, q: int) -> np.ndarray:
    if values.shape[-1] == 0:
        return np.zeros(values.shape[:-1], dtype=np.int64)
    if q ** values.shape[-1] < 2**62:
        weights = q ** np.arange(values.shape[-1], dtype=np.int64)
        return values @ weights
    flat = np.ascontiguousarray(values).view(np.dtype((np.void, values.shape[-1] * 8)))
    return flat[..., 0]


def leakage_oracle(code: ProductMatrixCode, view: EavesdropperView, budget: int = DEFAULT_BUDGET,
                   depth: int = DEFAULT_DEPTH) -> LeakageReport:
    """Decide exactly whether ``view`` learns anything about the message.

    Every (message, randomness) pair is evaluated; the view is secure iff the
    distribution of captured symbols is the same for every message, which
    is equivalent to zero mutual information.
    """
    q = code.field.q
    bm, r = code.unit_message, code.unit_random
    total = q ** (bm + r)
    if total > budget:
        raise BudgetExceeded(f"{total} (message, randomness) pairs exceed the budget {budget}")
    vm = view_map(code, view, depth)
    rnd = _all_vectors(q, r)
    # captured symbols for message 0, one row per randomness value
    noise = mod_matmul(rnd, vm.rnd_part.T, q)
    reference = np.sort(_row_keys(noise, q))
    n_msgs = q**bm
    chunk = max(1, 2**22 // max(1, noise.size))
    for start in range(0, n_msgs, chunk):
        msgs = _all_vectors(q, bm, start, min(n_msgs, start + chunk))
        shift = mod_matmul(msgs, vm.msg_part.T, q)
        seen = (shift[:, None, :] + noise[None, :, :]) % q
        keys = np.sort(_row_keys(seen, q), axis=1)
        same = np.all(keys == reference[None, :], axis=1)
        if not same.all():
            bad = msgs[int(np.argmin(same))]
            return LeakageReport("leaky", (tuple(np.zeros(bm, dtype=np.int64)), tuple(bad)), total, len(vm.labels))
    return LeakageReport("secure", None, total, len(vm.labels))


# --------------------------------------------------------------------------
# rank-based oracles


@dataclass
class RecoverabilityReport:
    verdict: str  # "determined" or "underdetermined"
    rank: int
    R: int
    recovered: tuple | None = None

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "rank": self.rank, "R": self.R,
                "recovered": None if self.recovered is None else list(map(int, self.recovered))}


def randomness_recoverability(code: ProductMatrixCode, view: EavesdropperView, message=None,
                              rng=None, depth: int = DEFAULT_DEPTH) -> RecoverabilityReport:
    """Can the random symbols be solved for from the view plus the message?

    With a ``message`` the check is carried out on an actual draw: the
    message contribution is removed from the captured symbols and the
    remaining system is solved for the randomness.
    """
    vm = view_map(code, view, depth)
    F = code.field
    r = code.unit_random
    if r == 0:
        return RecoverabilityReport("underdetermined", 0, 0)
    rank = mat_rank(Matrix(F, vm.rnd_part.tolist())) if vm.labels else 0
    verdict = "determined" if rank == r else "underdetermined"
    recovered = None
    if message is not None and verdict == "determined":
        msg = np.asarray(message, dtype=np.int64).reshape(-1)
        gen = make_rng(rng)
        rnd = F.random(gen, size=r)
        seen = (vm.msg_part @ msg + vm.rnd_part @ rnd) % F.q
        rhs = (seen - vm.msg_part @ msg) % F.q
        sol = mat_solve(Matrix(F, vm.rnd_part.tolist()), rhs.tolist())
        if not np.array_equal(np.asarray(sol), rnd):
            raise AssertionError("solved randomness disagrees with the draw")
        recovered = tuple(sol)
    return RecoverabilityReport(verdict, rank, r, recovered)


@dataclass
class EntropyReport:
    rank: int
    rank_randomness: int
    R: int
    captured: int
    counted_bound: int
    passed: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def counted_bound(code: ProductMatrixCode, view: EavesdropperView) -> int:
    """Independent-symbol count of a full ``{ell, m}`` view from the counting argument.

    MBR: ``ell*d - ell*(ell-1)/2``.  MSR: ``|E| - m(k + ell - 2)`` where
    ``|E| = 2m(k-1) + ell*alpha``.  Both equal ``R`` per unit stripe.
    """
    ell, m = view.size, len(view.repair_nodes)
    if code.regime == "mbr":
        return ell * code.d - ell * (ell - 1) // 2
    k, a = code.params.base[1], code.unit_alpha
    captured = 2 * m * (k - 1) + ell * a
    return captured - m * (k + ell - 2)


def entropy_rank_check(code: ProductMatrixCode, view: EavesdropperView, depth: int = DEFAULT_DEPTH) -> EntropyReport:
    """Rank of the captured symbols as a function of (message, randomness).

    Passes iff the rank does not exceed ``R`` and the randomness alone
    already spans it, i.e. the eavesdropper's entropy is at most ``R``.
    """
    vm = view_map(code, view, depth)
    F = code.field
    if vm.labels:
        rank = mat_rank(Matrix(F, vm.full.tolist()))
        rank_r = mat_rank(Matrix(F, vm.rnd_part.tolist())) if code.unit_random else 0
    else:
        rank = rank_r = 0
    R = code.unit_random
    bound = counted_bound(code, view)
    return EntropyReport(rank, rank_r, R, len(vm.labels), bound, rank <= R and rank == rank_r)


def linear_security(code: ProductMatrixCode, view: EavesdropperView, depth: int = DEFAULT_DEPTH) -> bool:
    """Secure iff the randomness part of the view spans the whole view.

    This is the rank form of the chain recoverability + ``H(E) <= R``.
    """
    rep = entropy_rank_check(code, view, depth)
    return rep.rank == rep.rank_randomness


# --------------------------------------------------------------------------
# helper independence


RepairScheme = Callable[[dict, int, int, tuple], np.ndarray]


def pm_scheme(code: ProductMatrixCode) -> RepairScheme:
    """The code's own repair emission; the helper set is passed but unused."""

    def emit(shares: dict, failed: int, helper: int, helper_set: tuple) -> np.ndarray:
        return code.helper_symbol(shares[helper], failed)

    return emit


def context_dependent_mock(code: ProductMatrixCode) -> RepairScheme:
    """A scheme whose emission leaks the helper set: a negative control."""

    def emit(shares: dict, failed: int, helper: int, helper_set: tuple) -> np.ndarray:
        base = code.helper_symbol(shares[helper], failed)
        return (base + sum(helper_set)) % code.field.q

    return emit


@dataclass
class IndependenceReport:
    verdict: str  # "holds" or "violated"
    witness: dict | None
    checked: int

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "witness": self.witness, "checked": self.checked}


def helper_independence(code: ProductMatrixCode, scheme: RepairScheme | None = None, seed: int = 0,
                        contexts: int = 8) -> IndependenceReport:
    """Check every helper emits the same symbol in every helper-set context.

    For each (failed, helper) pair up to ``contexts`` distinct helper sets
    containing the helper are compared.
    """
    scheme = scheme or pm_scheme(code)
    gen = make_rng(seed)
    msg = code.field.random(gen, size=code.unit_message * code.beta)
    shares = {s.node: s for s in code.encode(msg, rng=gen)}
    checked = 0
    for f in range(1, code.n + 1):
        others = [j for j in range(1, code.n + 1) if j != f]
        for h in others:
            rest = [j for j in others if j != h]
            sets = [tuple(sorted((h,) + c)) for c in itertools.islice(itertools.combinations(rest, code.d - 1), contexts)]
            first = None
            for hs in sets:
                sym = np.asarray(scheme(shares, f, h, hs))
                checked += 1
                if first is None:
                    first = (hs, sym)
                elif not np.array_equal(sym, first[1]):
                    return IndependenceReport("violated", {
                        "failed": f, "helper": h,
                        "contexts": [list(first[0]), list(hs)],
                        "symbols": [first[1].tolist(), sym.tolist()],
                    }, checked)
    return IndependenceReport("holds", None, checked)


# --------------------------------------------------------------------------
# corruption sweeps


@dataclass
class FuzzReport:
    cases: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)
    exhaustive: dict = field(default_factory=dict)
    examples: list = field(default_factory=list)

    def add(self, path: str, cases: int, failures: int, exhaustive: bool, example=None):
        self.cases[path] = self.cases.get(path, 0) + cases
        self.failures[path] = self.failures.get(path, 0) + failures
        self.exhaustive[path] = self.exhaustive.get(path, True) and exhaustive
        if failures and example is not None and len(self.examples) < 10:
            self.examples.append(example)

    @property
    def total_cases(self) -> int:
        return sum(self.cases.values())

    @property
    def total_failures(self) -> int:
        return sum(self.failures.values())

    def to_dict(self) -> dict:
        return {"cases": self.cases, "failures": self.failures, "exhaustive": self.exhaustive,
                "total_cases": self.total_cases, "total_failures": self.total_failures,
                "examples": self.examples}


def _error_patterns(q: int, positions: Sequence[int], width: int, weight: int):
    """All (rows, error values) with ``weight`` corrupted rows, nonzero errors.

    Yields ``(rows, errors)`` with ``errors`` of shape ``(count, weight, width)``.
    """
    nonzero = _all_vectors(q, width)[1:]
    for rows in itertools.combinations(positions, weight):
        if weight == 0:
            yield rows, np.zeros((1, 0, width), dtype=np.int64)
            continue
        idx = np.array(list(itertools.product(range(len(nonzero)), repeat=weight)), dtype=np.int64)
        yield rows, nonzero[idx]


def _count_patterns(q: int, n_pos: int, width: int, weight: int) -> int:
    from math import comb
    return comb(n_pos, weight) * (q**width - 1) ** weight


def _random_errors(gen, q, count, weight, width):
    err = gen.integers(0, q, size=(count, weight, width))
    # force every corrupted row to actually change
    zero = ~err.any(axis=2)
    err[zero, 0] = gen.integers(1, q, size=int(zero.sum()))
    return err


def _stripes_message(code, gen, stripes):
    return code.field.random(gen, size=(stripes, code.unit_message))


def sweep_repair(code: ProductMatrixCode, p: int, report: FuzzReport, gen, budget: int, trials: int,
                 detect: bool = False):
    """Repair (or detection) with ``d + 2p`` (or ``d + p``) helpers under weight-``<= p`` corruption."""
    q = code.field.q
    size = code.d + (p if detect else 2 * p)
    if size > code.n - 1:
        return
    path = "detect-repair" if detect else "repair"
    weights = range(1, p + 1) if detect else range(0, p + 1)
    per_set = sum(_count_patterns(q, size, 1, w) for w in weights)
    n_sets = code.n * len(list(itertools.combinations(range(code.n - 1), size)))
    exhaustive = per_set * n_sets <= budget
    for f in range(1, code.n + 1):
        others = [j for j in range(1, code.n + 1) if j != f]
        helper_sets = list(itertools.combinations(others, size))
        if not exhaustive:
            pick = gen.choice(len(helper_sets), size=min(len(helper_sets), 4), replace=False)
            helper_sets = [helper_sets[i] for i in pick]
        for hs in helper_sets:
            blocks = []
            if exhaustive:
                for w in weights:
                    for rows, errs in _error_patterns(q, range(size), 1, w):
                        e = np.zeros((errs.shape[0], size), dtype=np.int64)
                        for t, row in enumerate(rows):
                            e[:, row] = errs[:, t, 0]
                        blocks.append(e)
            else:
                count = max(1, trials // (code.n * len(helper_sets)))
                for w in weights:
                    e = np.zeros((count, size), dtype=np.int64)
                    for s in range(count):
                        rows = gen.choice(size, size=w, replace=False)
                        e[s, rows] = gen.integers(1, q, size=w)
                    blocks.append(e)
            if not blocks:
                continue
            E = np.concatenate(blocks)
            S = E.shape[0]
            msg = _stripes_message(code, gen, S)
            rnd = code._randomness_units(S, gen)
            mats = code.message_matrices(msg, rnd)
            truth = code.stored(mats, f)
            sym = {j: (code.helper_symbol(Share(j, code.stored(mats, j)), f) + E[:, t]) % q
                   for t, j in enumerate(hs)}
            if detect:
                flags = code.repair_consistency(f, sym, p)
                bad = int(flags.sum())  # every case carries corruption
                report.add(path, S, bad, exhaustive, {"failed": f, "helpers": list(hs)} if bad else None)
                clean = {j: code.helper_symbol(Share(j, code.stored(mats, j)), f) for j in hs}
                ok = code.repair_consistency(f, clean, p)
                report.add("detect-repair-clean", S, int((~ok).sum()), exhaustive)
            else:
                data, ok = code.repair_many(f, sym, p)
                good = ok & np.all(data == truth, axis=1)
                bad = int((~good).sum())
                report.add(path, S, bad, exhaustive, {"failed": f, "helpers": list(hs)} if bad else None)


def sweep_reconstruct(code: ProductMatrixCode, p: int, report: FuzzReport, gen, budget: int, trials: int,
                      detect: bool = False):
    """Reconstruction (or detection) from ``k + 2p`` (or ``k + p``) shares under ``<= p`` corrupt shares."""
    q, a = code.field.q, code.unit_alpha
    size = code.k + (p if detect else 2 * p)
    if size > code.n:
        return
    path = "detect-reconstruct" if detect else "reconstruct"
    weights = range(1, p + 1) if detect else range(0, p + 1)
    subsets = list(itertools.combinations(range(1, code.n + 1), size))
    per_set = sum(_count_patterns(q, size, a, w) for w in weights)
    exhaustive = per_set * len(subsets) <= budget
    if not exhaustive:
        pick = gen.choice(len(subsets), size=min(len(subsets), 8), replace=False)
        subsets = [subsets[i] for i in pick]
    for nodes in subsets:
        blocks = []
        if exhaustive:
            for w in weights:
                for rows, errs in _error_patterns(q, range(size), a, w):
                    e = np.zeros((errs.shape[0], size, a), dtype=np.int64)
                    for t, row in enumerate(rows):
                        e[:, row] = errs[:, t]
                    blocks.append(e)
        else:
            count = max(1, trials // len(subsets))
            for w in weights:
                e = np.zeros((count, size, a), dtype=np.int64)
                errs = _random_errors(gen, q, count, w, a)
                for s in range(count):
                    rows = gen.choice(size, size=w, replace=False)
                    e[s, rows] = errs[s]
                blocks.append(e)
        E = np.concatenate(blocks)
        S = E.shape[0]
        msg = _stripes_message(code, gen, S)
        rnd = code._randomness_units(S, gen)
        mats = code.message_matrices(msg, rnd)
        shares = {j: Share(j, (code.stored(mats, j) + E[:, t]) % q) for t, j in enumerate(nodes)}
        if detect:
            flags = code.reconstruct_consistency(shares, p)
            bad = int(flags.sum())
            report.add(path, S, bad, exhaustive, {"nodes": list(nodes)} if bad else None)
            clean = {j: Share(j, code.stored(mats, j)) for j in nodes}
            report.add("detect-reconstruct-clean", S, int((~code.reconstruct_consistency(clean, p)).sum()), exhaustive)
        else:
            got, ok = code.decode_matrices_many(shares, p)
            good = ok & np.all(code.cells_of(got) == msg, axis=1)
            bad = int((~good).sum())
            report.add(path, S, bad, exhaustive, {"nodes": list(nodes)} if bad else None)


def adversary_fuzz(code: ProductMatrixCode, p_max: int, trials: int = 10_000, seed: int = 0,
                   budget: int = 10**6, paths: Iterable[str] = ("repair", "reconstruct", "detect")) -> FuzzReport:
    """Corrupt up to ``p`` helpers or shares for every feasible ``p <= p_max``.

    Each path is swept exhaustively when its pattern space fits ``budget``
    and sampled with ``trials`` random patterns otherwise.  A correct code
    shows zero failures everywhere.
    """
    gen = make_rng(seed)
    report = FuzzReport()
    paths = set(paths)
    for p in range(p_max + 1):
        if "repair" in paths and code.d + 2 * p <= code.n - 1:
            sweep_repair(code, p, report, gen, budget, trials)
        if "reconstruct" in paths and code.k + 2 * p <= code.n:
            sweep_reconstruct(code, p, report, gen, budget, trials)
        if "detect" in paths and p > 0:
            if code.d + p <= code.n - 1:
                sweep_repair(code, p, report, gen, budget, trials, detect=True)
            if code.k + p <= code.n:
                sweep_reconstruct(code, p, report, gen, budget, trials, detect=True)
    return report


__all__ = [
    "EavesdropperView", "ViewMap", "view_map", "admissible_views", "leakage_oracle", "LeakageReport",
    "randomness_recoverability", "RecoverabilityReport", "entropy_rank_check", "EntropyReport",
    "counted_bound", "linear_security", "helper_independence", "IndependenceReport", "pm_scheme",
    "context_dependent_mock", "adversary_fuzz", "FuzzReport", "sweep_repair", "sweep_reconstruct",
]
