"""On-disk share format.

Layout (all integers little-endian)::

    offset size  field
    0      4     magic b"PMRC"
    4      2     format version (1)
    6      1     regime (0 = mbr, 1 = msr)
    7      1     flags (bit 0 systematic, bit 1 symbols mode)
    8      2x7   n, k, d, beta, ell, m, node
    22     2     fill-order version
    24     4     field modulus
    28     8     logical stripe count
    36     8     original length (bytes, or symbols in symbols mode)
    44     2     number of explicit evaluation points (0 = default scan)
    46     4xP   the points
    ..     4     CRC-32 of everything above
    ..     8xS   payload: stripes x alpha elements as u64, stripe-major

Within a stripe the ``alpha`` elements are the ``beta`` unit-stripe
vectors of the node, one after another.  The CRC covers the header only;
payload corruption is what the decoders are for.
"""
from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .algebra import is_prime
from .errors import InvalidParams, ShareFormatError
from .mbr import FILL_ORDER_VERSION, mbr_derive
from .msr import msr_derive

MAGIC = b"PMRC"
FORMAT_VERSION = 1
REGIMES = ("mbr", "msr")
FLAG_SYSTEMATIC = 1
FLAG_SYMBOLS = 2

_FIXED = struct.Struct("<4sHBB7HHIQQH")
_CRC = struct.Struct("<I")


@dataclass(frozen=True)
class ShareHeader:
    regime: str
    n: int
    k: int
    d: int
    beta: int
    ell: int
    m: int
    modulus: int
    node: int
    stripes: int
    length: int
    systematic: bool = False
    symbols: bool = False
    points: tuple = ()
    fill_order: int = FILL_ORDER_VERSION
    version: int = FORMAT_VERSION

    @property
    def alpha(self) -> int:
        return self.params().alpha

    def params(self):
        derive = mbr_derive if self.regime == "mbr" else msr_derive
        return derive(self.n, self.k, self.d, self.beta, self.ell, self.m)

    def code_config(self) -> dict:
        cfg = {"regime": self.regime, "n": self.n, "k": self.k, "d": self.d, "field": self.modulus,
               "beta": self.beta, "ell": self.ell, "m": self.m}
        if self.points:
            cfg["points"] = list(self.points)
        if self.systematic:
            cfg["systematic"] = True
        return cfg

    def same_code(self, other: ShareHeader) -> bool:
        """True iff both headers describe shares of one encoding."""
        keys = ("regime", "n", "k", "d", "beta", "ell", "m", "modulus", "stripes", "length",
                "systematic", "symbols", "points", "fill_order")
        return all(getattr(self, k) == getattr(other, k) for k in keys)

    def with_node(self, node: int) -> ShareHeader:
        return ShareHeader(**{**self.__dict__, "node": node})

    def pack(self) -> bytes:
        flags = (FLAG_SYSTEMATIC if self.systematic else 0) | (FLAG_SYMBOLS if self.symbols else 0)
        body = _FIXED.pack(MAGIC, self.version, REGIMES.index(self.regime), flags,
                           self.n, self.k, self.d, self.beta, self.ell, self.m, self.node,
                           self.fill_order, self.modulus, self.stripes, self.length, len(self.points))
        body += struct.pack(f"<{len(self.points)}I", *self.points)
        return body + _CRC.pack(zlib.crc32(body))

    def validate(self):
        if self.version != FORMAT_VERSION:
            raise ShareFormatError(f"unsupported format version {self.version}")
        if self.fill_order != FILL_ORDER_VERSION:
            raise ShareFormatError(f"unsupported fill-order version {self.fill_order}")
        if self.regime not in REGIMES:
            raise ShareFormatError(f"unknown regime {self.regime!r}")
        if not is_prime(self.modulus):
            raise ShareFormatError(f"modulus {self.modulus} is not prime")
        try:
            params = self.params()
        except InvalidParams as exc:
            raise ShareFormatError(f"header parameters invalid: {exc}") from None
        if not 1 <= self.node <= self.n:
            raise ShareFormatError(f"node {self.node} outside 1..{self.n}")
        if self.stripes < 1:
            raise ShareFormatError("a share holds at least one stripe")
        if self.systematic and self.ell:
            raise ShareFormatError("secure codes cannot be systematic")
        if any(x >= self.modulus for x in self.points):
            raise ShareFormatError("evaluation point outside the field")
        per_stripe = params.B_star * (1 if self.symbols else _bytes_per_element(self.modulus))
        if self.length > self.stripes * per_stripe:
            raise ShareFormatError("original length exceeds what the stripes hold")


def _bytes_per_element(q: int) -> int:
    return (q.bit_length() - 1) // 8


def bytes_per_element(q: int) -> int:
    """Whole bytes that always fit below ``q``: floor((bits(q) - 1) / 8)."""
    return _bytes_per_element(q)


def pack_share(header: ShareHeader, data: np.ndarray) -> bytes:
    """Serialise one node's data, shape ``(stripes * beta, alpha / beta)``."""
    header.validate()
    arr = np.asarray(data, dtype=np.int64).reshape(header.stripes, -1)
    if arr.shape[1] != header.alpha:
        raise ShareFormatError(f"data has {arr.shape[1]} symbols per stripe, header says {header.alpha}")
    if np.any(arr < 0) or np.any(arr >= header.modulus):
        raise ShareFormatError("element outside the field")
    return header.pack() + arr.astype("<u8").tobytes()


def unpack_share(blob: bytes) -> tuple[ShareHeader, np.ndarray]:
    """Parse and validate; returns the header and ``(stripes * beta, alpha / beta)`` data."""
    if len(blob) < _FIXED.size + _CRC.size:
        raise ShareFormatError("file too short for a header")
    (magic, version, regime, flags, n, k, d, beta, ell, m, node, fill, modulus, stripes, length,
     npts) = _FIXED.unpack_from(blob)
    if magic != MAGIC:
        raise ShareFormatError("bad magic")
    end = _FIXED.size + 4 * npts
    if len(blob) < end + _CRC.size:
        raise ShareFormatError("file too short for its points block")
    points = struct.unpack_from(f"<{npts}I", blob, _FIXED.size)
    (crc,) = _CRC.unpack_from(blob, end)
    if zlib.crc32(blob[:end]) != crc:
        raise ShareFormatError("header checksum mismatch")
    if regime >= len(REGIMES):
        raise ShareFormatError(f"unknown regime tag {regime}")
    if flags & ~(FLAG_SYSTEMATIC | FLAG_SYMBOLS):
        raise ShareFormatError(f"unknown flags {flags:#x}")
    header = ShareHeader(REGIMES[regime], n, k, d, beta, ell, m, modulus, node, stripes, length,
                         bool(flags & FLAG_SYSTEMATIC), bool(flags & FLAG_SYMBOLS), tuple(points),
                         fill, version)
    header.validate()
    payload = blob[end + _CRC.size:]
    want = stripes * header.alpha * 8
    if len(payload) != want:
        raise ShareFormatError(f"payload is {len(payload)} bytes, header implies {want}")
    arr = np.frombuffer(payload, dtype="<u8")
    if np.any(arr >= modulus):
        raise ShareFormatError("payload element not below the modulus")
    unit = header.alpha // beta
    return header, arr.astype(np.int64).reshape(stripes * beta, unit)


def write_share(path: str | Path, header: ShareHeader, data: np.ndarray):
    Path(path).write_bytes(pack_share(header, data))


def read_share(path: str | Path) -> tuple[ShareHeader, np.ndarray]:
    return unpack_share(Path(path).read_bytes())


def share_name(node: int) -> str:
    return f"node_{node}.pmrc"


# --------------------------------------------------------------------------
# bytes <-> field elements


def bytes_to_symbols(raw: bytes, q: int, per_stripe: int) -> np.ndarray:
    """Pack ``raw`` into field elements, ``b`` little-endian bytes each, padded to whole stripes."""
    b = _bytes_per_element(q)
    if b == 0:
        raise InvalidParams(f"GF({q}) cannot hold a byte; use symbols mode")
    chunk = b * per_stripe
    stripes = max(1, -(-len(raw) // chunk))
    buf = np.zeros(stripes * chunk, dtype=np.uint8)
    buf[: len(raw)] = np.frombuffer(raw, dtype=np.uint8)
    groups = buf.reshape(-1, b).astype(np.int64)
    weights = 256 ** np.arange(b, dtype=np.int64)
    return groups @ weights


def symbols_to_bytes(symbols: np.ndarray, q: int, length: int) -> bytes:
    b = _bytes_per_element(q)
    sym = np.asarray(symbols, dtype=np.int64).reshape(-1)
    if np.any(sym >= 256**b):
        raise ValueError("decoded element does not fit the byte packing")
    out = np.empty((sym.size, b), dtype=np.uint8)
    for t in range(b):
        out[:, t] = (sym >> (8 * t)) & 0xFF
    return out.tobytes()[:length]
