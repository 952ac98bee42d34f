import runpy
from pathlib import Path

import pytest

from delaycert.cli import main
from delaycert.config import load_config

DEMOS = Path(__file__).resolve().parent.parent / "demos"
CONFIGS = {
    "halanay.ini": ("certify", 1),
    "linear_lag.ini": ("verify", 0),
    "periodic.ini": ("demo", 0),
    "sectorial.ini": ("sectorial", 1),
    "oracle.ini": ("oracle", 0),
    "neural.ini": ("demo", 0),
    "superlinear.ini": ("attractor", 0),
}


def test_every_config_is_covered():
    assert sorted(p.name for p in (DEMOS / "configs").glob("*.ini")) == sorted(CONFIGS)


@pytest.mark.slow
@pytest.mark.parametrize("name", sorted(CONFIGS))
def test_config_runs(name, tmp_path):
    load_config(DEMOS / "configs" / name)
    command, status = CONFIGS[name]
    assert main([command, "--config", str(DEMOS / "configs" / name), "--out", str(tmp_path)]) == status


@pytest.mark.slow
@pytest.mark.parametrize("script", sorted(p.name for p in DEMOS.glob("*.py")))
def test_demo_script_runs(script, capsys):
    runpy.run_path(str(DEMOS / script), run_name="__main__")
    assert capsys.readouterr().out.strip()
