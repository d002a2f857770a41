"""Tests for scenario configuration parsing, validation, round-trip."""

import json

import pytest

from moonbeam.dust import mie_extinction_cross_section
from moonbeam.errors import ConfigError, ValidationError
from moonbeam.scenario import (
    NumericsConfig,
    OutputConfig,
    OUTPUT_DIR_ENV,
    Scenario,
    mapping_from_text,
    parse_and_validate,
    resolve_cext,
    scenario_from_mapping,
)


def test_defaults():
    s = scenario_from_mapping({})
    assert s.laser.P0 == 1000.0
    assert s.laser.wavelength == 1064e-9
    assert s.laser.w0 == 0.05 and s.laser.r_a == 0.05
    assert s.laser.eta == 377.0
    assert s.geometry.D == 5000.0
    assert s.geometry.h0 == 2.0 and s.geometry.hp == 2.0
    assert s.geometry.L == 0.5 and s.geometry.W == 0.5
    assert s.dust_enabled is False
    assert s.active_dust() is None
    assert s.dust.d_p == 175e-9 and s.dust.m_p == 1.733
    assert s.dust.A == 4.166e8 and s.dust.H == 8.68
    assert s.numerics.aperture_resolution is None
    assert s.numerics.workers == 1


def test_overrides_applied():
    s = scenario_from_mapping({"geometry.D": 25000, "laser.P0": 500.0})
    assert s.geometry.D == 25000.0
    assert s.laser.P0 == 500.0


def test_to_config_round_trip():
    s = scenario_from_mapping({
        "geometry.D": 20000,
        "dust.enabled": True,
        "dust.cext_source": "explicit",
        "dust.cext": 5e-14,
        "numerics.workers": 2,
    })
    again = scenario_from_mapping(s.to_config())
    assert again == s
    assert again.config_hash() == s.config_hash()


def test_config_hash_tracks_values():
    a = scenario_from_mapping({})
    b = scenario_from_mapping({"geometry.D": 5000.0})
    c = scenario_from_mapping({"geometry.D": 5001.0})
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != c.config_hash()
    assert len(a.config_hash()) == 16


def test_with_updates_keeps_frozen_semantics():
    s = scenario_from_mapping({})
    t = s.with_updates(dust_enabled=True)
    assert t.dust_enabled and not s.dust_enabled
    assert t.active_dust() is t.dust


def test_mapping_from_text_empty_and_objects():
    assert mapping_from_text("") == {}
    assert mapping_from_text("  \n ") == {}
    assert mapping_from_text('{"geometry.D": 1000}') == {"geometry.D": 1000}


def test_mapping_from_text_reports_position():
    with pytest.raises(ConfigError, match=r"line 2, column"):
        mapping_from_text('{\n  "geometry.D": }')


def test_mapping_from_text_rejects_non_object():
    with pytest.raises(ConfigError, match="JSON object"):
        mapping_from_text("[1, 2]")


def test_parse_and_validate_defaults_on_empty():
    assert parse_and_validate("") == scenario_from_mapping({})
    assert parse_and_validate('{"laser.P0": 2000}').laser.P0 == 2000.0


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="unknown config key"):
        scenario_from_mapping({"geometry.Q": 1.0})


def test_type_coercion_errors():
    with pytest.raises(ConfigError, match="boolean"):
        scenario_from_mapping({"dust.enabled": 1})
    with pytest.raises(ConfigError, match="string"):
        scenario_from_mapping({"dust.cext_source": 3})
    with pytest.raises(ConfigError, match="number"):
        scenario_from_mapping({"geometry.D": "far"})
    with pytest.raises(ConfigError, match="integer"):
        scenario_from_mapping({"numerics.workers": 1.5})
    with pytest.raises(ConfigError, match="null"):
        scenario_from_mapping({"geometry.D": None})


def test_optional_keys_accept_null():
    s = scenario_from_mapping({"numerics.aperture_resolution": None})
    assert s.numerics.aperture_resolution is None


def test_guard_limits():
    with pytest.raises(ValidationError, match="model validity"):
        scenario_from_mapping({"dust.d_p": 20e-6})
    with pytest.raises(ValidationError, match="exceeds the supported"):
        scenario_from_mapping({"geometry.D": 2e5})


def test_panel_clearance():
    with pytest.raises(ValidationError, match="panel below minimum height"):
        scenario_from_mapping({"geometry.hp": 0.2})


def test_source_clearance():
    with pytest.raises(ValidationError, match="source below minimum height"):
        scenario_from_mapping({"geometry.h0": 0.04})


def test_dust_requires_cross_section_source():
    with pytest.raises(ValidationError, match="mie .*calibrated .*explicit"):
        scenario_from_mapping({"dust.enabled": True})


def test_explicit_source_requires_positive_cext():
    with pytest.raises(ValidationError, match="positive dust.cext"):
        scenario_from_mapping({
            "dust.enabled": True, "dust.cext_source": "explicit", "dust.cext": 0.0,
        })


def test_calibrated_source_requires_reference_power():
    with pytest.raises(ValidationError, match="reference_power"):
        scenario_from_mapping({"dust.enabled": True, "dust.cext_source": "calibrated"})


def test_unknown_cext_source_rejected():
    with pytest.raises(ValidationError, match="cext_source must be one of"):
        scenario_from_mapping({"dust.enabled": True, "dust.cext_source": "guess"})


def test_resolve_cext_noop_when_dust_off():
    s = scenario_from_mapping({})
    assert resolve_cext(s) is s


def test_resolve_cext_explicit_keeps_value():
    s = scenario_from_mapping({
        "dust.enabled": True, "dust.cext_source": "explicit", "dust.cext": 5e-14,
    })
    assert resolve_cext(s).dust.C_ext == 5e-14


def test_resolve_cext_mie_fills_cross_section():
    s = scenario_from_mapping({"dust.enabled": True, "dust.cext_source": "mie"})
    resolved = resolve_cext(s)
    expected = mie_extinction_cross_section(175e-9, 1064e-9, 1.733)
    assert resolved.dust.C_ext == pytest.approx(expected, rel=1e-12)


def test_numerics_validation():
    with pytest.raises(ValidationError, match="aperture_resolution"):
        NumericsConfig(aperture_resolution=4)
    with pytest.raises(ValidationError, match="target_rel"):
        NumericsConfig(target_rel=0.5)
    with pytest.raises(ValidationError, match="max_refinements"):
        NumericsConfig(max_refinements=0)
    with pytest.raises(ValidationError, match="workers"):
        NumericsConfig(workers=0)


def test_output_directory_resolution(monkeypatch):
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)
    assert OutputConfig().resolve_directory() == "."
    assert OutputConfig(directory="/tmp/out").resolve_directory() == "/tmp/out"
    monkeypatch.setenv(OUTPUT_DIR_ENV, "/tmp/env")
    assert OutputConfig().resolve_directory() == "/tmp/env"
    assert OutputConfig(directory="/tmp/out").resolve_directory() == "/tmp/out"


def test_config_serializes_to_json():
    s = scenario_from_mapping({})
    text = json.dumps(s.to_config())
    assert parse_and_validate(text) == s
