import pathlib

import pytest

from claritk.asm1 import TransportConfig, export_transport_config, load_params

GOLDEN = pathlib.Path(__file__).parent / "golden" / "asm1_transport_default.txt"


def test_default_export_matches_golden():
    text = export_transport_config(load_params(), TransportConfig())
    assert text == GOLDEN.read_text()


def test_single_schmidt_override_changes_exactly_one_line():
    base = export_transport_config(load_params(), TransportConfig())
    tweaked = export_transport_config(
        load_params(), TransportConfig(schmidt={"S_NO": 0.9}))
    diff = [(a, b) for a, b in zip(base.splitlines(), tweaked.splitlines())
            if a != b]
    assert len(diff) == 1
    assert "S_NO" in diff[0][1] and "0.9" in diff[0][1]


def test_missing_label_defaults_to_latest():
    text = export_transport_config(load_params(), TransportConfig(),
                                   hydrodynamic_step=None)
    assert "hydrodynamicTimestep latest;" in text
    labeled = export_transport_config(load_params(), TransportConfig(),
                                      hydrodynamic_step="0.45")
    assert "hydrodynamicTimestep 0.45;" in labeled


def test_config_validation():
    with pytest.raises(ValueError):
        TransportConfig(D_T=-1.0)
    with pytest.raises(ValueError):
        TransportConfig(schmidt={"S_NO": 0.0})
    with pytest.raises(ValueError):
        TransportConfig(schmidt={"NOT_A_SCALAR": 0.7})
