import pytest

from glowmap.demo import lakefront_scenario


@pytest.fixture
def lake():
    return lakefront_scenario()


@pytest.fixture
def store_root(tmp_path):
    root = tmp_path / "scenarios"
    root.mkdir()
    return root
