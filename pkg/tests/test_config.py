import pytest

from optofock import config


def test_examples_load():
    names = config.example_names()
    expected = {"bad_cavity_M10", "bad_cavity_M5", "good_cavity_M10",
                "good_cavity_wigner_M10", "desk_M3"}
    assert expected <= set(names)
    for name in names:
        cfg = config.load_example(name)
        assert cfg.sweep.values()[0] > 0


def test_yaml_round_trip():
    cfg = config.load_example("good_cavity_M10")
    again = config.loads(cfg.to_yaml())
    assert again == cfg and again.digest() == cfg.digest()


def test_float_strings_accepted():
    cfg = config.loads("target: 3\npoint: 1e-5\nsweep: {start: 1e-7, stop: 1e-3, count: 5}\n")
    assert cfg.point == 1e-5 and cfg.sweep.start == 1e-7


def test_defaults_and_solver_choice():
    cfg = config.loads("target: 4\n")
    assert cfg.solver_name == "effective" and cfg.truncation.N_m is None
    assert config.loads("target: 4\nregime: {mode: good}\n").solver_name == "full"


@pytest.mark.parametrize("text, where", [
    ("target: 3\nbogus: 1\n", "line 2, column 1"),
    ("target: 3\nsweep:\n  axis: gamma\n", "line 3, column 3"),
    ("target: 3\nsweep:\n  start: 1e-2\n  stop: 1e-4\n", "line 2"),
    ("target: 3\ndrive: fast\n", "line 2, column 1"),
    ("target: 3\ninitial: squeezed\n", "line 2"),
    ("target: 3\ntruncation: {N_m: 3}\n", "line 2"),
    ("target: 3\nregime: {mode: explicit}\n", "line 2"),
])
def test_errors_carry_positions(text, where):
    with pytest.raises(config.ConfigError, match=where):
        config.loads(text)


def test_malformed_yaml():
    with pytest.raises(config.ConfigError, match="malformed"):
        config.loads("target: [3\n")
    with pytest.raises(config.ConfigError):
        config.loads("")


def test_overrides():
    cfg = config.load_example("bad_cavity_M5")
    new = cfg.with_overrides(["nbar_m=0.1", "sweep.count=5", "truncation.N_m=9"])
    assert new.nbar_m == 0.1 and new.sweep.count == 5 and new.truncation.N_m == 9
    assert new.digest() != cfg.digest()
    with pytest.raises(config.ConfigError):
        cfg.with_overrides(["nope=1"])
    with pytest.raises(config.ConfigError):
        cfg.with_overrides(["nbar_m"])


def test_parse_initial():
    assert config.parse_initial("thermal") == ("thermal", None)
    assert config.parse_initial("fock:2") == ("fock", 2)
    assert config.parse_initial("coherent:1") == ("coherent", 1 + 0j)
    assert config.parse_initial("coherent:0.5+0.2j") == ("coherent", 0.5 + 0.2j)
    with pytest.raises(ValueError):
        config.parse_initial("fock:x")
