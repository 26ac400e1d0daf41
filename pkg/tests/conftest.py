"""Shared fixtures and the acceptance-summary reporter."""

import math

import pytest

from ssct import SsctConfig

# Lines recorded by tests/test_acceptance.py; printed in the terminal
# summary so each criterion's pass/fail line is visible in normal runs.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_record():
    def _record(line: str) -> None:
        ACCEPTANCE_LINES.append(line)

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


# ---------------------------------------------------------------------------
# Benchmark design points used across the suite
# ---------------------------------------------------------------------------


@pytest.fixture(scope="session")
def cfg_0db() -> SsctConfig:
    """0 dB design: gamma_bar=-8.5, b_bar=27, delta_bar=3, M=40."""
    return SsctConfig(a_bar=-27.0, b_bar=27.0, gamma_bar=-8.5, delta_bar=3.0, M=40, snr_m=1.0)


@pytest.fixture(scope="session")
def cfg_m5db() -> SsctConfig:
    """-5 dB design: gamma_bar=-5.69, b_bar=35.32, delta_bar=2+snr, M=140."""
    snr = 10.0 ** (-0.5)
    return SsctConfig(
        a_bar=-35.32, b_bar=35.32, gamma_bar=-5.69, delta_bar=2.0 + snr, M=140, snr_m=snr
    )


@pytest.fixture(scope="session")
def cfg_toy() -> SsctConfig:
    """Small config whose nested integrals a quadrature oracle can reach."""
    return SsctConfig(a_bar=-3.0, b_bar=2.0, gamma_bar=-0.5, delta_bar=2.5, M=5, snr_m=1.0)


@pytest.fixture(scope="session")
def snr_m5() -> float:
    return 10.0 ** (-0.5)
