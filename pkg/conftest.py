import pytest


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="esegue anche i test lenti (scala reale)")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: test su dimensioni reali, esclusi senza --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="usa --runslow per eseguirlo")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)
