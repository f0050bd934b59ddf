"""Config parsing, schema validation, canonical hashing."""

import os

import pytest

from purefb.config import (
    SCHEMA,
    ConfigError,
    load_file,
    load_text,
    schema_markdown,
)

MINIMAL = "scenario.id = numeric-2d\n"
REPO = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def test_defaults_fill_in_per_scenario():
    cfg = load_text(MINIMAL)
    assert cfg.sid == "numeric-2d"
    assert cfg["integrator.T"] == 100.0
    assert cfg["integrator.decimation"] == 100
    assert cfg["design.mode"] == "paper"
    missile = load_text("scenario.id = stt-missile\n")
    assert missile["integrator.T"] == 20.0
    assert missile["integrator.decimation"] == 20


def test_hash_ignores_key_order_and_float_spelling():
    a = load_text("scenario.id = numeric-2d\ndesign.mu = 0.2, 0.2\nrun.seed = 3\n")
    b = load_text("run.seed = 3\nscenario.id = numeric-2d\ndesign.mu = 2e-1,0.20\n")
    assert a.sha256 == b.sha256
    assert a.run_id == b.run_id
    assert len(a.run_id) == 12


def test_hash_is_sensitive_to_values():
    a = load_text(MINIMAL)
    b = load_text("scenario.id = numeric-2d\nrun.seed = 1\n")
    assert a.sha256 != b.sha256


def test_registry_location_does_not_change_identity():
    a = load_text(MINIMAL)
    b = load_text("scenario.id = numeric-2d\nrun.out = elsewhere\n")
    assert a.sha256 == b.sha256
    assert "run.out" not in a.canonical


def test_unknown_key_rejected_with_path():
    with pytest.raises(ConfigError, match="bogus.key"):
        load_text(MINIMAL + "bogus.key = 1\n")


def test_foreign_scenario_key_rejected():
    with pytest.raises(ConfigError, match="missile.s"):
        load_text(MINIMAL + "missile.s = 0.42\n")
    with pytest.raises(ConfigError, match="design.mode"):
        load_text("scenario.id = stt-missile\ndesign.mode = auto\n")


def test_scenario_id_required_and_validated():
    with pytest.raises(ConfigError, match="required"):
        load_text("run.seed = 1\n")
    with pytest.raises(ConfigError, match="unknown scenario"):
        load_text("scenario.id = pendulum\n")


def test_line_level_errors():
    with pytest.raises(ConfigError, match="line 2"):
        load_text(MINIMAL + "not a setting\n")
    with pytest.raises(ConfigError, match="duplicate"):
        load_text(MINIMAL + "run.seed = 1\nrun.seed = 2\n")


def test_type_errors_name_the_key():
    with pytest.raises(ConfigError, match="run.seed"):
        load_text(MINIMAL + "run.seed = soon\n")
    with pytest.raises(ConfigError, match="design.mu"):
        load_text(MINIMAL + "design.mu = 0.2\n")  # needs two components
    with pytest.raises(ConfigError, match="design.sign_flip"):
        load_text(MINIMAL + "design.sign_flip = maybe\n")


def test_schema_checks_run_before_any_simulation():
    with pytest.raises(ConfigError, match="positive"):
        load_text(MINIMAL + "design.mu = -1.0, 0.2\n")
    with pytest.raises(ConfigError, match="integrator.h"):
        load_text(MINIMAL + "integrator.h = 0.0\n")
    with pytest.raises(ConfigError, match="verify.tail_frac"):
        load_text(MINIMAL + "verify.tail_frac = 0.9\n")


def test_comments_and_blank_lines_ignored():
    cfg = load_text("# leading note\n\nscenario.id = numeric-2d\n# tail\n")
    assert cfg.sid == "numeric-2d"


def test_overrides_go_through_validation():
    cfg = load_text(MINIMAL, overrides={"design.mode": "auto"})
    assert cfg["design.mode"] == "auto"
    with pytest.raises(ConfigError, match="design.mode"):
        load_text(MINIMAL, overrides={"design.mode": "wild"})


def test_scenario_overrides_mapping():
    cfg = load_text(
        MINIMAL
        + "uncertainty.box_lo = 0.8, 1.6\n"
        + "uncertainty.box_hi = 1.2, 2.4\n"
        + "design.sign_flip = true\n"
    )
    over = cfg.scenario_overrides()
    assert over["theta_box"] == ((0.8, 1.2), (1.6, 2.4))
    assert over["sign"] == -1.0
    assert over["T"] == 100.0
    assert over["mode"] == "paper"


def test_uncertainty_box_defaults_to_theta():
    over = load_text(MINIMAL).scenario_overrides()
    assert over["theta_box"] == ((1.0, 1.0), (2.0, 2.0))


def test_tolerances_mapping():
    cfg = load_text(MINIMAL + "verify.tol_x = 0.5\n")
    tol = cfg.tolerances()
    assert tol.tol_x == 0.5
    assert tol.tol_k == 1e-3


def test_missile_overrides_mapping():
    cfg = load_text("scenario.id = stt-missile\ndesign.k1 = 6.0\n")
    over = cfg.scenario_overrides()
    assert over["k1"] == 6.0
    assert over["tau_a"] == 0.01
    assert over["T"] == 20.0


def test_load_file_missing(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_file(tmp_path / "nope.cfg")


def test_bundled_configs_validate():
    paper = load_file(os.path.join(REPO, "configs", "numeric-2d.cfg"))
    assert paper.sid == "numeric-2d"
    missile = load_file(os.path.join(REPO, "configs", "stt-missile.cfg"))
    assert missile.sid == "stt-missile"
    assert missile["verify.tol_x"] == 0.00175


def test_schema_doc_covers_every_key():
    doc = schema_markdown()
    for key in SCHEMA:
        assert "`%s`" % key.name in doc, key.name
        assert key.doc  # every entry carries a description
    with open(os.path.join(REPO, "docs", "config-schema.md")) as fh:
        assert fh.read() == doc
