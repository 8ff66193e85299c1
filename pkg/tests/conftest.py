import numpy as np
import pytest

from certopt.instances import (
    MatrixGameInstance,
    QuadBoxToy,
    fisher_oracles,
    game_oracles,
    generate_fisher,
    generate_game,
    quadbox_oracles,
)

# Seeded 10x10 game used throughout the acceptance checks.
GAME_SEED, GAME_ALPHA, GAME_L = 7, 0.05, 1.0


@pytest.fixture
def game_eye():
    """A = I_2, L = alpha = 1."""
    return game_oracles(MatrixGameInstance(np.eye(2), L=1.0, alpha=1.0))


@pytest.fixture
def quadbox():
    """f = x^2/2 on [-1, 1], w = x^2/2, alpha = L = 1."""
    return quadbox_oracles(QuadBoxToy(n=1, alpha=1.0, L=1.0))


@pytest.fixture(scope="session")
def game10():
    return game_oracles(generate_game(10, GAME_SEED, alpha=GAME_ALPHA, L=GAME_L))


@pytest.fixture(scope="session")
def game2():
    return game_oracles(generate_game(2, GAME_SEED, alpha=GAME_ALPHA, L=GAME_L))


@pytest.fixture(scope="session")
def fisher2():
    return fisher_oracles(generate_fisher(2, 2, GAME_SEED))


def pytest_terminal_summary(terminalreporter):
    from tests import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.LINES:
            terminalreporter.write_line(line)
