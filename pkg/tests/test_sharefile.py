import struct
import zlib

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pmcodes.errors import InvalidParams, ShareFormatError
from pmcodes.sharefile import (
    ShareHeader,
    bytes_per_element,
    bytes_to_symbols,
    pack_share,
    read_share,
    symbols_to_bytes,
    unpack_share,
    write_share,
)

HEADER = ShareHeader("msr", 7, 3, 4, 1, 0, 0, 13, 2, 3, 10, symbols=True, points=(0, 1, 3, 2, 6, 5, 4))


def sample_data(header=HEADER):
    return np.arange(header.stripes * header.alpha).reshape(header.stripes, -1) % header.modulus


def test_round_trip(tmp_path):
    data = sample_data()
    write_share(tmp_path / "s.pmrc", HEADER, data)
    header, got = read_share(tmp_path / "s.pmrc")
    assert header == HEADER
    np.testing.assert_array_equal(got, data)


def test_beta_two_layout():
    h = ShareHeader("mbr", 6, 3, 4, 2, 0, 0, 13, 1, 2, 5, symbols=True)
    data = np.arange(2 * 2 * 4).reshape(4, 4) % 13  # stripes * beta unit rows
    header, got = unpack_share(pack_share(h, data))
    assert got.shape == (4, 4)
    np.testing.assert_array_equal(got, data)


def _recrc(blob, end):
    return blob[:end] + struct.pack("<I", zlib.crc32(blob[:end])) + blob[end + 4:]


def test_every_header_byte_flip_is_rejected():
    blob = pack_share(HEADER, sample_data())
    end = 46 + 4 * len(HEADER.points) + 4
    for pos in range(end):
        bad = bytearray(blob)
        bad[pos] ^= 0x01
        with pytest.raises(ShareFormatError):
            unpack_share(bytes(bad))


@pytest.mark.parametrize("offset,fmt,value,what", [
    (4, "<H", 2, "version"),
    (6, "<B", 5, "regime"),
    (7, "<B", 0x80, "flags"),
    (14, "<H", 9, "d"),
    (20, "<H", 8, "node"),
    (22, "<H", 7, "fill order"),
    (24, "<I", 15, "modulus"),
    (28, "<Q", 0, "stripes"),
    (36, "<Q", 10**6, "length"),
])
def test_semantic_header_errors_with_valid_checksum(offset, fmt, value, what):
    blob = bytearray(pack_share(HEADER, sample_data()))
    struct.pack_into(fmt, blob, offset, value)
    blob = _recrc(bytes(blob), 46 + 4 * len(HEADER.points))
    with pytest.raises(ShareFormatError):
        unpack_share(blob)


def test_payload_errors():
    blob = pack_share(HEADER, sample_data())
    with pytest.raises(ShareFormatError):
        unpack_share(blob[:-1])
    with pytest.raises(ShareFormatError):
        unpack_share(blob + b"\0" * 8)
    bad = bytearray(blob)
    bad[-8:] = struct.pack("<Q", 13)
    with pytest.raises(ShareFormatError):
        unpack_share(bytes(bad))
    with pytest.raises(ShareFormatError):
        unpack_share(b"PMRC")
    with pytest.raises(ShareFormatError):
        unpack_share(b"XXXX" + blob[4:])


def test_pack_rejects_wrong_data():
    with pytest.raises(ShareFormatError):
        pack_share(HEADER, np.zeros((3, 3)))
    with pytest.raises(ShareFormatError):
        pack_share(HEADER, np.full((3, 2), 13))


def test_bytes_per_element():
    assert bytes_per_element(13) == 0
    assert bytes_per_element(257) == 1
    assert bytes_per_element(65537) == 2
    assert bytes_per_element(2**31 - 1) == 3
    with pytest.raises(InvalidParams):
        bytes_to_symbols(b"x", 13, 4)


@given(st.binary(max_size=300), st.sampled_from([257, 65537, 2**31 - 1]), st.integers(1, 9))
def test_byte_packing_round_trip(raw, q, per_stripe):
    sym = bytes_to_symbols(raw, q, per_stripe)
    assert sym.size % per_stripe == 0 and sym.size >= per_stripe
    assert np.all(sym < q)
    assert symbols_to_bytes(sym, q, len(raw)) == raw
