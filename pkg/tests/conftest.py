from __future__ import annotations

import math
from pathlib import Path

import pytest

from timebin.pulse_model import PhysicalParams, PulseShape, PulseTrain, write_peak_for_gain

REPO = Path(__file__).resolve().parents[1]
CONFIGS = REPO / "configs"
GOLDEN = Path(__file__).resolve().parent / "golden"

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def free_params() -> PhysicalParams:
    """Default system with every relaxation channel switched off."""
    return PhysicalParams(gamma32=0.0, gamma41=0.0, gamma_c=0.0)


def make_train(
    params: PhysicalParams,
    *,
    gain: float = math.log(2),
    read_peaks=(),
    duration: float = 20.0,
    first: float = 200.0,
    spacing: float = 150.0,
    kind: str = "gaussian",
) -> PulseTrain:
    write = PulseShape(kind, 0.0, duration, 0.0)
    write = write.with_peak(write_peak_for_gain(params, write, gain))
    reads = [PulseShape(kind, first + k * spacing, duration, p) for k, p in enumerate(read_peaks)]
    return PulseTrain(write, tuple(reads))
