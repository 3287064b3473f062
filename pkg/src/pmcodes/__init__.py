"""Product-matrix regenerating codes with on-demand corruption tolerance and eavesdropper secrecy."""
from .algebra import (
    EncodingMatrix,
    Fe,
    Matrix,
    PrimeField,
    build_systematic_mbr,
    build_vandermonde,
    custom_encoding,
    mat_mul,
    mat_rank,
    mat_solve,
)
from .code import Share, helper_symbol
from .config import code_from_config, make_code
from .errors import (
    BudgetExceeded,
    DecodeFailure,
    FieldTooSmall,
    InvalidParams,
    NotEnoughHelpers,
    NotEnoughShares,
    PMCodeError,
    ShareFormatError,
)
from .mbr import MBRCode, MbrParams, mbr_derive, mbr_encode, mbr_reconstruct, mbr_repair_decode
from .msr import MSRCode, MsrParams, msr_derive, msr_encode, msr_make_systematic, msr_reconstruct, msr_repair_decode

__version__ = "0.1.0"

__all__ = [
    "PrimeField", "Fe", "Matrix", "EncodingMatrix", "build_vandermonde", "build_systematic_mbr",
    "custom_encoding", "mat_mul", "mat_rank", "mat_solve", "Share", "helper_symbol",
    "PMCodeError", "InvalidParams", "DecodeFailure", "FieldTooSmall", "NotEnoughHelpers",
    "NotEnoughShares", "BudgetExceeded", "ShareFormatError",
    "MbrParams", "MBRCode", "mbr_derive", "mbr_encode", "mbr_repair_decode", "mbr_reconstruct",
    "MsrParams", "MSRCode", "msr_derive", "msr_encode", "msr_make_systematic", "msr_repair_decode",
    "msr_reconstruct", "make_code", "code_from_config",
]

