import pytest

from torikam.config import PRESETS, loads, parse_angle, parse_complex, preset, validate
from torikam.errors import ConfigError
from torikam.lattice import golden_angle, liouville_angle, sqrt2_angle

MINIMAL = """
seed = 7
[lattice]
n = 1
e = [["1j"]]
[bundle]
d = 1
theta = [["golden"]]
[truncation]
K = 0
m_max = 8
"""


def fields(exc):
    return {d["field"] for d in exc.value.diagnostics}


def test_minimal_config_and_defaults():
    cfg = loads(MINIMAL)
    assert cfg.seed == 7
    assert cfg.truncation().m_max == 8
    assert cfg.schedule().delta0 == 0.02
    assert cfg.settings().resonance_threshold == 1e-14
    assert cfg.bundle().theta[0][0] == golden_angle()
    assert cfg.raw["scan"]["tau_max"] is None


def test_empty_config_lists_every_missing_block():
    with pytest.raises(ConfigError) as ei:
        loads("")
    assert fields(ei) == {"lattice", "bundle", "truncation"}


def test_unknown_keys_and_types():
    with pytest.raises(ConfigError) as ei:
        loads(MINIMAL + "bogus = 1\n[solver]\nfoo = 2\ntol = 'x'\n")
    assert {"truncation.bogus", "solver.foo", "solver.tol"} <= fields(ei)
    with pytest.raises(ConfigError) as ei:
        loads("bogus = 1\n" + MINIMAL)
    assert fields(ei) == {"bogus"}


def test_range_checks():
    with pytest.raises(ConfigError) as ei:
        loads(MINIMAL + "[domain]\ndelta0 = 0.5\n[scan]\nvariant = 'zz'\n")
    assert {"domain.delta0", "scan.variant"} <= fields(ei)
    with pytest.raises(ConfigError) as ei:
        loads(MINIMAL.replace('e = [["1j"]]', 'e = [["0.5"]]'))
    assert "lattice.e" in fields(ei)


def test_syntax_error_is_config_error():
    with pytest.raises(ConfigError):
        loads("[lattice\n")


def test_every_preset_validates():
    for name in PRESETS:
        cfg = preset(name)
        cfg.deck()
        cfg.schedule()
        cfg.synth_spec()
    with pytest.raises(ConfigError):
        preset("nope")


def test_to_dict_roundtrips_through_validate():
    cfg = preset("golden-2d")
    d = cfg.to_dict()
    d.pop("resolved")
    assert validate(d).raw == cfg.raw


def test_parse_helpers():
    assert parse_angle("1/3") == 1 / 3
    assert parse_angle("sqrt2") == sqrt2_angle()
    assert parse_angle("liouville(3)") == liouville_angle(3)
    assert parse_angle(0.25) == 0.25
    with pytest.raises(ValueError):
        parse_angle(True)
    with pytest.raises(ValueError):
        parse_angle("pi")
    assert parse_complex("0.3+0.15j") == 0.3 + 0.15j
    assert parse_complex([0.1, 2.0]) == 0.1 + 2j
