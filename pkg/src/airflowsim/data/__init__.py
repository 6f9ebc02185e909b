"""Shipped scenario files and sample plant log."""

from importlib import resources
from pathlib import Path


def scenario_path(name: str) -> Path:
    return Path(str(resources.files(__package__).joinpath("scenarios", f"{name}.toml")))


def sample_log_path() -> Path:
    return Path(str(resources.files(__package__).joinpath("sample_plant_log.csv")))
