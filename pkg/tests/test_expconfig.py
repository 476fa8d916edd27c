import numpy as np
import pytest

from raftjamsec.expconfig import (DEFAULT_SEED, KIND_ALIASES, KINDS, PARAMETERS, SpecError, default_spec,
                                  load_spec, parse_spec)

COVERAGE_SPEC = """\
# coverage against threshold
[experiment]
kind = coverage_sweep
seed = 7
trials = 5000

[channel]
alpha = 3.5   # inline comment

[sweep]
axis = beta
start = -30
stop = 0
steps = 4
series = rho_jammer_factor
values = 1, 2, 4
"""


def test_every_kind_has_defaults():
    for kind in KINDS:
        spec = default_spec(kind)
        assert spec.kind == kind and spec.seed == DEFAULT_SEED
        assert spec.sweep.steps >= 2
    for alias, kind in KIND_ALIASES.items():
        assert default_spec(alias).kind == kind


def test_parse_full_spec():
    spec = parse_spec(COVERAGE_SPEC)
    assert spec.kind == "coverage_sweep"
    assert spec.seed == 7 and spec.trials == 5000
    assert spec.params["alpha"] == 3.5
    assert np.allclose(spec.sweep.points(), [-30, -20, -10, 0])
    assert spec.sweep.series_values() == (1.0, 2.0, 4.0)


def test_defaults_fill_unspecified_keys():
    spec = parse_spec("[channel]\nalpha = 4\n", kind="coverage")
    ref = default_spec("coverage")
    assert spec.sweep == ref.sweep and spec.trials == ref.trials
    assert {k: v for k, v in spec.params.items() if k != "alpha"} == \
           {k: v for k, v in ref.params.items() if k != "alpha"}


def test_cli_kind_must_agree_with_file():
    with pytest.raises(SpecError) as info:
        parse_spec(COVERAGE_SPEC, kind="roc", source="coverage.cfg")
    assert info.value.lineno == 3
    assert str(info.value).startswith("coverage.cfg:3:")
    assert parse_spec(COVERAGE_SPEC, kind="coverage").kind == "coverage_sweep"


def test_kind_required():
    with pytest.raises(SpecError):
        parse_spec("[channel]\nalpha = 3\n")


@pytest.mark.parametrize("text, line", [
    ("[experiment]\nkind = roc\n[nonsense]\n", 3),
    ("alpha = 3\n", 1),
    ("[channel]\nalpha 3\n", 2),
    ("[channel]\nalpha = 3\nbogus = 1\n", 3),
    ("[channel]\nz1 = 3\n", 2),
    ("[channel]\nalpha = 3\nalpha = 4\n", 3),
    ("[channel]\n\n\nalpha = three\n", 4),
    ("[channel]\nalpha = nan\n", 2),
    ("[experiment]\nlink = sideways\n", 2),
    ("[jammer]\nrho_fr_from_jammer = maybe\n", 2),
    ("[sweep]\nvalues = ,\n", 2),
    ("[channel\n", 1),
])
def test_errors_carry_line_numbers(text, line):
    with pytest.raises(SpecError) as info:
        parse_spec(text, kind="coverage", source="x.cfg")
    assert info.value.lineno == line
    assert f"x.cfg:{line}:" in str(info.value)


@pytest.mark.parametrize("sweep, key", [
    ("axis = z1\n", "axis"),
    ("axis = seed\nstart = 0\nstop = 1\nsteps = 3\n", "axis"),
    ("steps = 1\n", "steps"),
    ("series = alpha\n", "series"),
    ("series = beta\nvalues = 1, 2\n", "series"),
    ("scale = log\n", "scale"),
])
def test_sweep_validation(sweep, key):
    text = "[sweep]\n" + sweep
    with pytest.raises(SpecError) as info:
        parse_spec(text, kind="coverage")
    lines = text.splitlines()
    assert lines[info.value.lineno - 1].startswith(key)


def test_series_none_and_log_scale():
    spec = parse_spec("[sweep]\nseries = none\naxis = rho_jammer\nstart = 1e-5\nstop = 1e-3\nsteps = 3\n"
                      "scale = log\n", kind="coverage")
    assert spec.sweep.series is None and spec.sweep.series_values() == (None,)
    assert np.allclose(spec.sweep.points(), [1e-5, 1e-4, 1e-3])


def test_negative_trials_rejected():
    with pytest.raises(SpecError) as info:
        parse_spec("[experiment]\ntrials = -1\n", kind="roc")
    assert info.value.lineno == 2


def test_overrides():
    spec = default_spec("roc").with_overrides(seed=3, trials=0)
    assert spec.seed == 3 and spec.trials == 0
    assert default_spec("roc").with_overrides().seed == DEFAULT_SEED


def test_load_spec(tmp_path):
    path = tmp_path / "coverage.cfg"
    path.write_text(COVERAGE_SPEC)
    spec = load_spec(path)
    assert spec.source == str(path)
    with pytest.raises(SpecError) as info:
        load_spec(tmp_path / "missing.cfg")
    assert "missing.cfg" in str(info.value)


def test_every_parameter_key_parses_in_its_section():
    samples = {"kind": "roc", "link": "dl", "geometry": "receiver", "eve_model": "uniform",
               "pmd_normalization": "mean", "pmc_boundaries": "support", "scale": "linear",
               "rho_fr_from_jammer": "true", "resample_jammers": "no", "auth_enabled": "on",
               "axis": "target_pfa", "series": "lq_db", "values": "0, 10", "beta": "none"}
    for key, (section, _, _) in PARAMETERS.items():
        value = samples.get(key, "2")
        spec = parse_spec(f"[{section}]\n{key} = {value}\n", kind="roc")
        assert spec.kind == "roc"
