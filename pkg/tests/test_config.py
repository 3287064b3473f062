import pytest
from conftest import mbr_five_node, msr_secure_seven_node, msr_seven_node

from pmcodes import code_from_config, make_code
from pmcodes.config import code_to_config
from pmcodes.errors import InvalidParams


@pytest.mark.parametrize("build", [
    mbr_five_node,
    msr_secure_seven_node,
    lambda: msr_seven_node(systematic=True),
    lambda: make_code("mbr", 6, 3, 4, 13, beta=2, ell=1, m=1),
])
def test_config_round_trip(build):
    code = build()
    again = code_from_config(code_to_config(code))
    assert again.describe() == code.describe()
    assert again.psi == code.psi
    msg = list(range(code.params.B_star))
    assert again.encode(msg, randomness=[1] * code.params.R) == code.encode(msg, randomness=[1] * code.params.R)


@pytest.mark.parametrize("cfg", [
    {"regime": "mbr", "n": 5, "k": 2, "d": 2},
    {"regime": "rs", "n": 5, "k": 2, "d": 2, "field": 5},
    {"regime": "mbr", "n": 5, "k": 2, "d": 2, "field": 6},
    {"regime": "msr", "n": 7, "k": 3, "d": 4, "field": 13, "psi": [[1]]},
    {"regime": "mbr", "n": 5, "k": 2, "d": 2, "field": 5, "extra": 1},
])
def test_bad_configs(cfg):
    with pytest.raises(InvalidParams):
        code_from_config(cfg)
