import pytest
from hypothesis import settings

from weakdisorder import canonical
from weakdisorder.bands import analyze_bands
from weakdisorder.config import config_from_dict
from weakdisorder.expansion import expand_edge

settings.register_profile("repo", deadline=None, max_examples=40)
settings.load_profile("repo")

ACCEPTANCE_LINES: list[str] = []


def edge(name: str, N: int = 64):
    cfg = config_from_dict(getattr(canonical, name)())
    disc = cfg.grid(N)
    band = analyze_bands(cfg.operator, disc, cfg.sweeps.theta_points, cfg.sweeps.n_bands)
    return cfg, disc, band, expand_edge(cfg.operator, cfg.family, cfg.disorder, disc, band)


@pytest.fixture(scope="session")
def cosine_edge():
    return edge("cosine")


@pytest.fixture(scope="session")
def shift_edge():
    return edge("constant_shift")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
