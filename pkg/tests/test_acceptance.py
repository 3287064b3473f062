"""Acceptance criteria, one test per criterion.

Each test pins its tolerance (exact equality throughout) and its runtime
limit.  The conftest prints a PASS/FAIL line per criterion at the end of
the run.
"""
import itertools
import re
import time

import numpy as np
import pytest
from conftest import (
    mbr_five_node,
    mbr_secure_three_node,
    msr_secure_seven_node,
    msr_seven_node,
    msr_shortened,
)

from pmcodes import Share, make_code, mbr_derive, msr_derive
from pmcodes.algebra import PrimeField, build_vandermonde
from pmcodes.audit import (
    EavesdropperView,
    admissible_views,
    context_dependent_mock,
    entropy_rank_check,
    helper_independence,
    leakage_oracle,
    randomness_recoverability,
    view_map,
)
from pmcodes.cli import main
from pmcodes.errors import DecodeFailure
from pmcodes.mds import Observation, decode_bw, decode_exhaustive
from pmcodes.sharefile import read_share, share_name, write_share


class Timer:
    def __init__(self, limit):
        self.limit = limit

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        if exc[0] is None:
            assert self.elapsed < self.limit, f"took {self.elapsed:.2f}s, limit {self.limit}s"


# --------------------------------------------------------------------------
# 1. parameter identities


def _secure_cut_set(k, d, alpha, beta, ell):
    return sum(min(alpha, (d - i) * beta) for i in range(ell, k))


def _sweep():
    for n in range(2, 11):
        for k in range(1, 6):
            for d in range(k, n):
                for beta in (1, 2):
                    for ell in range(k):
                        for m in range(ell + 1):
                            yield n, k, d, beta, ell, m


@pytest.mark.criterion(1, "parameter identities and spot values")
def test_parameter_identities():
    with Timer(1.0):
        checked = {"mbr": 0, "msr": 0}
        for n, k, d, beta, ell, m in _sweep():
            p = mbr_derive(n, k, d, beta, ell, m)
            assert p.alpha == d * beta
            assert 2 * k * p.alpha == 2 * p.B + k * (k - 1) * beta
            assert p.B == (k * d - k * (k - 1) // 2) * beta
            assert p.B_star == p.B - (ell * d - ell * (ell - 1) // 2) * beta
            assert p.R == p.B - p.B_star
            assert p.B_star == _secure_cut_set(k, d, p.alpha, beta, ell)
            checked["mbr"] += 1
            if d < 2 * k - 2 or k < 2:
                continue
            s = msr_derive(n, k, d, beta, ell, m)
            assert s.B == k * s.alpha
            assert d * beta == s.alpha + (k - 1) * beta
            assert s.B_star == (k - ell) * (s.alpha - m * beta)
            assert s.R == m * (k - ell) * beta + ell * s.alpha
            assert s.B == s.B_star + s.R
            if m == 1:
                assert s.B_star == (k - ell) * (s.alpha - beta)
            assert s.B_star <= _secure_cut_set(k, d, s.alpha, beta, ell)
            checked["msr"] += 1
        assert checked["mbr"] > 500 and checked["msr"] > 100

        assert mbr_derive(5, 2, 2).B == 3
        p = mbr_derive(3, 2, 2, 1, 1, 1)
        assert (p.B_star, p.R) == (1, 2)
        assert msr_derive(7, 3, 4).B == 6
        s = msr_derive(7, 3, 4, 1, 1, 0)
        assert (s.B_star, s.R) == (4, 2)


# --------------------------------------------------------------------------
# 2. worked examples via unit-vector coefficient matrices


def coefficients(code):
    """Per node, the (alpha x (B* + R)) matrix taking (message, randomness) to its data."""
    bm, r = code.unit_message, code.unit_random
    basis = np.eye(bm + r, dtype=np.int64)
    mats = code.message_matrices(basis[:, :bm], basis[:, bm:])
    return {j: code.stored(mats, j).T for j in range(1, code.n + 1)}


_TERM = re.compile(r"(\d*)([a-z]\d?)")


def parse_table(rows, symbols, q):
    """Turn rows of expressions like '6a+8b+2c' into coefficient matrices."""
    out = {}
    for node, exprs in enumerate(rows, start=1):
        mat = np.zeros((len(exprs), len(symbols)), dtype=np.int64)
        for t, expr in enumerate(exprs):
            for term in expr.replace(" ", "").split("+"):
                coef, sym = _TERM.fullmatch(term).groups()
                mat[t, symbols.index(sym)] += int(coef or 1)
        out[node] = mat % q
    return out


MBR5_TABLE = [("a", "b"), ("b", "c"), ("a+b", "b+c"), ("a+2b", "b+2c"), ("a+3b", "b+3c")]

MSR7_TABLE = [
    ("a", "b"),
    ("a+b+d+e", "b+c+e+f"),
    ("a+3b+9d+e", "b+3c+9e+f"),
    ("a+2b+4d+8e", "b+2c+4e+8f"),
    ("a+6b+10d+8e", "b+6c+10e+8f"),
    ("a+5b+12d+8e", "b+5c+12e+8f"),
    ("a+4b+3d+12e", "b+4c+3e+12f"),
]

MSR7_SYSTEMATIC_TABLE = [
    ("a", "b"),
    ("c", "d"),
    ("e", "f"),
    ("6a+8b+2c+6e", "6a+4b+3c+11d+4e+10f"),
    ("6a+4b+11c+10e", "3a+5b+8c+9d+2e+12f"),
    ("6a+9b+c+7e", "10a+7b+5c+3d+11e+5f"),
    ("2a+4b+5c+7e", "3a+b+8c+3d+2e+9f"),
]

MSR6_SHORTENED_TABLE = [
    ("a", "b"),
    ("c", "d"),
    ("2a+6c", "3a+11b+4c+10d"),
    ("11a+10c", "8a+9b+2c+12d"),
    ("a+7c", "5a+3b+11c+5d"),
    ("5a+7c", "8a+3b+2c+9d"),
]

MSR7_SECURE_TABLE = [
    ("r1", "r2"),
    ("r1+r2+b+c", "r2+a+c+d"),
    ("r1+3r2+9b+c", "r2+3a+9c+d"),
    ("r1+2r2+4b+8c", "r2+2a+4c+8d"),
    ("r1+6r2+10b+8c", "r2+6a+10c+8d"),
    ("r1+5r2+12b+8c", "r2+5a+12c+8d"),
    ("r1+4r2+3b+12c", "r2+4a+3c+12d"),
]


@pytest.mark.criterion(2, "worked-example encoder tables")
def test_example_tables():
    cases = [
        (mbr_five_node(), MBR5_TABLE, "abc"),
        (msr_seven_node(), MSR7_TABLE, "abcdef"),
        (msr_seven_node(systematic=True), MSR7_SYSTEMATIC_TABLE, "abcdef"),
        (msr_shortened(), MSR6_SHORTENED_TABLE, "abcd"),
        (msr_secure_seven_node(), MSR7_SECURE_TABLE, list("abcd") + ["r1", "r2"]),
    ]
    with Timer(1.0):
        for code, table, symbols in cases:
            want = parse_table(table, list(symbols), code.field.q)
            got = coefficients(code)
            assert set(got) == set(want)
            for node in want:
                np.testing.assert_array_equal(got[node], want[node], err_msg=f"{code.describe()} node {node}")


# --------------------------------------------------------------------------
# 3. exhaustive exact repair


def _all_messages(code):
    q, b = code.field.q, code.unit_message
    return np.array(list(itertools.product(range(q), repeat=b)), dtype=np.int64)


def _exhaustive_repair(code, messages):
    q = code.field.q
    shares = {s.node: s for s in code.encode(messages)}
    cases = 0
    for f in range(1, code.n + 1):
        others = [j for j in range(1, code.n + 1) if j != f]
        symbols = code.helper_symbols(shares, f, others)
        for p in (0, 1):
            for hs in itertools.combinations(others, code.d + 2 * p):
                base = {j: symbols[j] for j in hs}
                patterns = [None] if p == 0 else [(j, e) for j in hs for e in range(1, q)]
                for pat in patterns:
                    answers = dict(base)
                    if pat is not None:
                        answers[pat[0]] = (answers[pat[0]] + pat[1]) % q
                    got = code.repair(f, answers, p)
                    np.testing.assert_array_equal(got.data, shares[f].data)
                    cases += 1
    return cases


@pytest.mark.criterion(3, "exhaustive exact repair at p=0 and p=1")
def test_exhaustive_repair():
    with Timer(30.0):
        mbr = mbr_five_node()
        cases = _exhaustive_repair(mbr, _all_messages(mbr))
        assert cases == 5 * (6 + 4 * 4)
        msr = msr_seven_node()
        msgs = msr.field.random(np.random.default_rng(3), size=(256, msr.unit_message))
        cases = _exhaustive_repair(msr, msgs)
        assert cases == 7 * (15 + 6 * 12)


# --------------------------------------------------------------------------
# 4. exhaustive secure reconstruction


def _nonzero_errors(q, alpha):
    return np.array(list(itertools.product(range(q), repeat=alpha))[1:], dtype=np.int64)


def _exhaustive_reconstruct(code, messages):
    """Every (k+2p)-subset and every weight-<=p corruption for p in {0, 1}.

    Error values are spread over stripes: stripe ``s`` carries message
    ``s % len(messages)`` and error ``s // len(messages)``.
    """
    q = code.field.q
    errors = _nonzero_errors(q, code.unit_alpha)
    msgs = np.tile(messages, (len(errors), 1))
    err = np.repeat(errors, len(messages), axis=0)
    shares = {s.node: s for s in code.encode(msgs)}
    patterns = 0
    for p in (0, 1):
        for subset in itertools.combinations(range(1, code.n + 1), code.k + 2 * p):
            chosen = {j: shares[j] for j in subset}
            np.testing.assert_array_equal(code.reconstruct(chosen, p), msgs.reshape(-1))
            patterns += 1
            if p == 0:
                continue
            for bad in subset:
                tampered = dict(chosen)
                tampered[bad] = Share(bad, (shares[bad].data + err) % q)
                np.testing.assert_array_equal(code.reconstruct(tampered, p), msgs.reshape(-1))
                patterns += len(errors)
    return patterns


@pytest.mark.criterion(4, "exhaustive secure reconstruction at p=0 and p=1")
def test_exhaustive_reconstruct():
    with Timer(60.0):
        mbr = mbr_five_node()
        assert _exhaustive_reconstruct(mbr, _all_messages(mbr)) == 10 + 5 * (1 + 4 * 24)
        msr = msr_seven_node()
        msgs = msr.field.random(np.random.default_rng(4), size=(8, msr.unit_message))
        assert _exhaustive_reconstruct(msr, msgs) == 35 + 21 * (1 + 5 * 168)


# --------------------------------------------------------------------------
# 5. leakage oracle


@pytest.mark.criterion(5, "exact leakage oracle on the secure three-node MBR code")
def test_leakage_oracle():
    code = mbr_secure_three_node()
    with Timer(5.0):
        views = admissible_views(3, 1, 1) + admissible_views(3, 1, 0)
        assert len(views) == 6
        for v in views:
            rep = leakage_oracle(code, v, depth=2)
            assert rep.pairs == 27
            assert rep.verdict == "secure", v
        for v in admissible_views(3, 1, 1):
            # walk every depth-2 history without state dedupe: 3 first repairs, 3 x 3 second
            full = view_map(code, v, depth=2, dedupe=False)
            assert full.histories == 3 + 9
            short = view_map(code, v, depth=2)
            assert full.labels == short.labels
            np.testing.assert_array_equal(full.full, short.full)
        over = EavesdropperView({1}, {2})
        assert not over.admissible(1, 1)
        rep = leakage_oracle(code, over, depth=2)
        assert rep.verdict == "leaky"
        zero, bad = rep.witness
        assert zero != bad


# --------------------------------------------------------------------------
# 6. randomness and rank oracles


@pytest.mark.criterion(6, "randomness recoverability, entropy rank and leakage implication")
def test_rank_oracles():
    with Timer(10.0):
        for code, views in ((mbr_secure_three_node(), admissible_views(3, 1, 1)),
                            (msr_secure_seven_node(), admissible_views(7, 1, 0))):
            assert code.unit_random == 2
            for v in views:
                rec = randomness_recoverability(code, v, message=[1] * code.unit_message, rng=0)
                ent = entropy_rank_check(code, v)
                assert rec.verdict == "determined"
                assert ent.rank == ent.R == 2
                assert ent.passed
                assert leakage_oracle(code, v).verdict == "secure"


# --------------------------------------------------------------------------
# 7. detection


@pytest.mark.criterion(7, "detection with d+p helpers and k+p shares at p=1")
def test_detection_exhaustive():
    code = mbr_five_node()
    q, p = code.field.q, 1
    with Timer(5.0):
        msgs = _all_messages(code)
        shares = {s.node: s for s in code.encode(msgs)}
        for f in range(1, 6):
            others = [j for j in range(1, 6) if j != f]
            symbols = code.helper_symbols(shares, f, others)
            for hs in itertools.combinations(others, code.d + p):
                clean = {j: symbols[j] for j in hs}
                assert code.repair_consistency(f, clean, p).all()
                assert code.detect_repair(f, clean, p) == "clean"
                for j in hs:
                    for e in range(1, q):
                        bad = dict(clean)
                        bad[j] = (bad[j] + e) % q
                        assert not code.repair_consistency(f, bad, p).any()
                        assert code.detect_repair(f, bad, p) == "corrupted"
        errors = _nonzero_errors(q, code.unit_alpha)
        for subset in itertools.combinations(range(1, 6), code.k + p):
            chosen = {j: shares[j] for j in subset}
            assert code.detect_reconstruct(chosen, p) == "clean"
            for j in subset:
                for e in errors:
                    bad = dict(chosen)
                    bad[j] = Share(j, (shares[j].data + e) % q)
                    assert not code.reconstruct_consistency(bad, p).any()


# --------------------------------------------------------------------------
# 8. helper independence


@pytest.mark.criterion(8, "helper independence of product-matrix repair")
def test_helper_independence():
    codes = [
        mbr_five_node(),
        mbr_secure_three_node(),
        msr_seven_node(),
        msr_seven_node(systematic=True),
        msr_shortened(),
        msr_secure_seven_node(),
        make_code("mbr", 6, 3, 4, 13, beta=2, ell=1, m=1),
    ]
    with Timer(1.0):
        for code in codes:
            assert helper_independence(code).verdict == "holds"
        rep = helper_independence(mbr_five_node(), context_dependent_mock(mbr_five_node()))
        assert rep.verdict == "violated"
        assert rep.witness["contexts"][0] != rep.witness["contexts"][1]


# --------------------------------------------------------------------------
# 9. decoder equivalence


PRIMES = [11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53]


def _run(decoder, obs, p):
    try:
        return decoder(obs, p)
    except DecodeFailure:
        return None


@pytest.mark.criterion(9, "Berlekamp-Welch agrees with exhaustive decoding")
def test_decoder_equivalence():
    gen = np.random.default_rng(9)
    instances, failures = 10_000, 0
    with Timer(30.0):
        for _ in range(instances):
            q = int(gen.choice(PRIMES))
            p = int(gen.integers(0, 3))
            w = int(gen.integers(1, 9 - 2 * p + 1))
            n = int(gen.integers(w + 2 * p, 10))
            points = sorted(gen.choice(q, n, replace=False).tolist())
            enc = build_vandermonde(PrimeField(q), n, w, points=points)
            word = (enc.array @ gen.integers(0, q, w)) % q
            # up to p + 1 errors, so failures are compared too
            pos = gen.choice(n, min(n, int(gen.integers(0, p + 2))), replace=False)
            word[pos] = (word[pos] + gen.integers(1, q, len(pos))) % q
            obs = Observation.from_encoding(enc, range(n), word.tolist())
            bw = _run(decode_bw, obs, p)
            assert bw == _run(decode_exhaustive, obs, p), (q, p, points, word.tolist())
            failures += bw is None
        assert failures > 0  # the beyond-radius branch was exercised


# --------------------------------------------------------------------------
# 10. CLI round trip


@pytest.mark.criterion(10, "CLI 1 MiB fail/repair/reconstruct with one corrupt share")
def test_cli_round_trip(tmp_path, capsys):
    gen = np.random.default_rng(10)
    raw = gen.integers(0, 256, 1 << 20, dtype=np.uint8).tobytes()
    src = tmp_path / "input.bin"
    src.write_bytes(raw)
    out = tmp_path / "shares"
    q = 2**31 - 1
    with Timer(10.0):
        assert main(["encode", "--regime", "msr", "-n", "7", "-k", "3", "-d", "4", "--field", str(q),
                     "--seed", "1", str(src), str(out)]) == 0
        original = (out / share_name(2)).read_bytes()
        (out / share_name(2)).unlink()
        header, data = read_share(out / share_name(5))
        rows = gen.choice(data.shape[0], data.shape[0] // 3, replace=False)
        data = data.copy()
        data[rows, 0] = (data[rows, 0] + 1) % q
        write_share(out / share_name(5), header, data)
        assert main(["repair", "--failed", "2", "--helpers", "1,3,4,5,6,7", "-p", "1", str(out)]) == 0
        assert (out / share_name(2)).read_bytes() == original
        result = tmp_path / "output.bin"
        shares = [str(out / share_name(j)) for j in (1, 2, 4, 5, 7)]
        assert main(["reconstruct", "-p", "1", *shares, "-o", str(result)]) == 0
        assert result.read_bytes() == raw
    capsys.readouterr()
