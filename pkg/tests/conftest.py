import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from verifcal.core import Dataset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def two_gaussians(rng, n_pos, n_neg, pos_mean, neg_mean, pos_sd, neg_sd=None):
    neg_sd = pos_sd if neg_sd is None else neg_sd
    s = np.concatenate([rng.normal(pos_mean, pos_sd, n_pos), rng.normal(neg_mean, neg_sd, n_neg)])
    y = np.concatenate([np.ones(n_pos, dtype=int), -np.ones(n_neg, dtype=int)])
    return Dataset.from_arrays(np.clip(s, -1, 1), y)


ACCEPTANCE_RESULTS = []


def record_acceptance(number, title, passed, detail=""):
    ACCEPTANCE_RESULTS.append((number, title, bool(passed), detail))
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number:2d}. {title}: {detail}")
