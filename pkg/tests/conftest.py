import hypothesis
import numpy as np
import pytest

from pegsense import ModelParams

hypothesis.settings.register_profile("default", max_examples=40, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.load_profile("default")

np.seterr(over="raise", invalid="raise", divide="raise", under="ignore")

# lambda1 = 0.55, lambda2 = 0.42, R = 1.2, C = 0.301
P0 = ModelParams(alpha1=0.6, alpha2_tilde=0.3, tau=0.2, gamma=0.05, mu=2.0,
                 c_P=0.5, c_A=0.3, r_B=1.0, r_F=0.2, m=5)
# lambda1 = 0.9, lambda2 = 0.495, R = 2.5, C = 0.27
P1 = ModelParams(alpha1=1.0, alpha2_tilde=0.35, tau=0.1, gamma=0.1, mu=1.5,
                 c_P=0.4, c_A=0.2, r_B=2.0, r_F=0.5, m=5)

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def p0():
    return P0


@pytest.fixture
def p1():
    return P1


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
