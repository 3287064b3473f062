"""Building code instances from parameters or JSON-style dictionaries.

A code description looks like::

    {"regime": "msr", "n": 7, "k": 3, "d": 4, "field": 13,
     "beta": 1, "ell": 0, "m": 0, "points": [0, 1, 3, 2, 6, 5, 4]}

``points`` is optional (a scan picks admissible ones).  MBR codes may give
``"psi"`` as explicit encoding rows instead, or ``"systematic": true`` for
the identity-topped construction.  MSR codes accept ``"systematic": true``.
"""
from __future__ import annotations

from .algebra import PrimeField, build_systematic_mbr, build_vandermonde, custom_encoding
from .errors import InvalidParams
from .mbr import MBRCode, mbr_derive
from .msr import MSRCode, msr_derive

CODE_KEYS = {"regime", "n", "k", "d", "field", "beta", "ell", "m", "points", "psi", "systematic"}


def make_code(regime: str, n: int, k: int, d: int, q: int, beta: int = 1, ell: int = 0, m: int = 0,
              points=None, systematic: bool = False, psi_rows=None):
    """Build a code over GF(q), by default with a Vandermonde encoding matrix.

    MSR codes get points with distinct ``alpha``-th powers, sized for the
    base code when shortening applies.
    """
    field = PrimeField(q)
    if regime == "mbr":
        params = mbr_derive(n, k, d, beta, ell, m)
        if psi_rows is not None:
            psi = custom_encoding(field, psi_rows)
        elif systematic:
            psi = build_systematic_mbr(field, n, k, d)
        else:
            psi = build_vandermonde(field, n, d, points=points)
        return MBRCode(params, psi)
    if regime == "msr":
        if psi_rows is not None:
            raise InvalidParams("MSR codes need a Vandermonde matrix; give points instead of psi")
        params = msr_derive(n, k, d, beta, ell, m)
        n_b, _, d_b = params.base
        psi = build_vandermonde(field, n_b, d_b, alpha=d_b // 2, points=points)
        return MSRCode(params, psi, systematic=systematic)
    raise InvalidParams(f"unknown regime {regime!r}")


def code_from_config(cfg: dict):
    unknown = set(cfg) - CODE_KEYS
    if unknown:
        raise InvalidParams(f"unknown code keys: {sorted(unknown)}")
    try:
        return make_code(
            cfg["regime"], int(cfg["n"]), int(cfg["k"]), int(cfg["d"]), int(cfg["field"]),
            beta=int(cfg.get("beta", 1)), ell=int(cfg.get("ell", 0)), m=int(cfg.get("m", 0)),
            points=cfg.get("points"), systematic=bool(cfg.get("systematic", False)),
            psi_rows=cfg.get("psi"),
        )
    except KeyError as exc:
        raise InvalidParams(f"code description lacks {exc.args[0]!r}") from None


def code_to_config(code) -> dict:
    cfg = {"regime": code.regime, "n": code.n, "k": code.k, "d": code.d, "field": code.field.q,
           "beta": code.beta, "ell": code.params.ell, "m": code.params.m}
    if code.psi.points is not None:
        cfg["points"] = list(code.psi.points)
    else:
        cfg["psi"] = code.psi.psi.tolist()
    if getattr(code, "systematic", False) and code.regime == "msr":
        cfg["systematic"] = True
    return cfg
