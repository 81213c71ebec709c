import pytest

from arcula import ArculaConfig, load_hierarchy
from arcula.hierarchy import AccessHierarchy

TEST_SEED = bytes(range(64))


def pytest_addoption(parser):
    parser.addoption(
        "--run-slow",
        action="store_true",
        default=False,
        help="Run the full-size acceptance corpora marked slow.",
    )


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "slow: full-size acceptance corpora; run with --run-slow",
    )


def pytest_collection_modifyitems(config: pytest.Config, items: list[pytest.Item]) -> None:
    if config.getoption("--run-slow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --run-slow")
    for item in items:
        if item.get_closest_marker("slow") is not None:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session")
def seed() -> bytes:
    return TEST_SEED


@pytest.fixture(scope="session")
def fast_config() -> ArculaConfig:
    """Low KDF cost so secrets files are cheap to write in tests."""
    return ArculaConfig(pbkdf2_iterations=1000)


@pytest.fixture(scope="session")
def diamond() -> AccessHierarchy:
    """0 -> {1, 2} -> 3 -> 4, with 3 reachable over two paths."""
    return load_hierarchy(
        {"nodes": [0, 1, 2, 3, 4], "edges": [[0, 1], [0, 2], [1, 3], [2, 3], [3, 4]]}
    )


@pytest.fixture(scope="session")
def forest() -> AccessHierarchy:
    """Two minimal nodes, so validation adds root 4."""
    return load_hierarchy({"nodes": [0, 1, 2, 3], "edges": [[0, 2], [1, 2], [1, 3]]})
