"""Shared fixtures.  The FitzHugh-Nagumo runs are expensive (seconds to tens
of seconds each), so each is computed once per session."""
from __future__ import annotations

import numpy as np
import pytest

from wavemaslov.fhn import FhnParams
from wavemaslov.fhn_case import fhn_wave, run_fhn
from wavemaslov.pipeline import AnalysisOptions
from wavemaslov.system import FhnKinetics, PolynomialKinetics, SystemParams

EPS = 0.0005
EPS_HALF = EPS / 2


@pytest.fixture(scope="session")
def fhn_params():
    return FhnParams(0.25, EPS, 0.0)


@pytest.fixture(scope="session")
def fhn_half_params():
    return FhnParams(0.25, EPS_HALF, 0.0)


@pytest.fixture(scope="session")
def fhn_solved(fhn_params):
    wave, c = fhn_wave(fhn_params)
    return fhn_params.system(c), wave.with_tails(fhn_params.system(c))


@pytest.fixture(scope="session")
def fhn_half_solved(fhn_half_params):
    wave, c = fhn_wave(fhn_half_params)
    return fhn_half_params.system(c), wave.with_tails(fhn_half_params.system(c))


@pytest.fixture(scope="session")
def fhn_report(fhn_params, fhn_solved):
    return run_fhn(fhn_params, AnalysisOptions(scan_evans=False), wave=fhn_solved[1])


@pytest.fixture(scope="session")
def fhn_half_report(fhn_half_params, fhn_half_solved):
    return run_fhn(fhn_half_params, AnalysisOptions(scan_evans=False), wave=fhn_half_solved[1])


@pytest.fixture(scope="session")
def saved_profile(tmp_path_factory, fhn_solved):
    from wavemaslov.profile import save_profile

    path = tmp_path_factory.mktemp("profile") / "profile.json"
    save_profile(fhn_solved[1], path)
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def toy_params():
    """A non-FHN activator-inhibitor system at an arbitrary speed."""
    return SystemParams(PolynomialKinetics((0.0, -0.3, 1.4, -1.1), (0.0, -2.0, 0.1), 1.3, 0.4), -0.45)


@pytest.fixture
def fhn_system():
    return SystemParams(FhnKinetics(0.25, 0.01, 0.0), -0.35)


# -- acceptance summary ------------------------------------------------------

_ACCEPTANCE: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Append ``"CRITERION n ..."`` lines; they are echoed to stdout and
    repeated in the terminal summary."""

    def record(line: str) -> None:
        print(line)
        _ACCEPTANCE.append(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: (int(s.split()[1].rstrip(":")), s)):
            terminalreporter.write_line(line)
