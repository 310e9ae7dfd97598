import numpy as np
import pytest
from hypothesis import settings

from camrl.vlearn.networks import ModelConfig, make_network

# timing varies on a shared CPU; correctness, not speed, is under test here
settings.register_profile("camrl", deadline=None)
settings.load_profile("camrl")

TINY = dict(d_model=8, d_state=4, embed_dim=8, rnn_hidden=8, mlp_hidden=16)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_net():
    return make_network(ModelConfig(**TINY), np.random.default_rng(0))


def pytest_terminal_summary(terminalreporter):
    from acceptance_report import summary

    lines = summary()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
