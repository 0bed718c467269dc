"""Shared fixtures and gradient-check helpers for the test suite."""

from __future__ import annotations

import dataclasses
import shutil
from pathlib import Path

import numpy as np
import pytest

from topicflow.tensor.gradcheck import max_relative_error, numeric_gradient, pick_coords

GRAD_TOL = 1e-4

SAMPLE_BOT = Path(__file__).resolve().parent.parent / "sample_bot"


@pytest.fixture(scope="session")
def trained_bot(tmp_path_factory):
    """Copy of sample_bot with every model trained, shared by the session.

    Tests that hold conversations must point ``state`` at their own
    directory (see ``fresh_engine_config``); the trained models themselves
    are read-only and safe to share.
    """
    from topicflow.engine.config import load_engine_config
    from topicflow.engine.training import train_all

    root = tmp_path_factory.mktemp("bot")
    for name in ("config.yaml", "content.tsv", "hooks.py"):
        shutil.copy(SAMPLE_BOT / name, root / name)
    for sub in ("data", "dialogues", "topics"):
        shutil.copytree(SAMPLE_BOT / sub, root / sub)
    config = load_engine_config(root / "config.yaml")
    train_all(config)
    return config


@pytest.fixture
def fresh_engine_config(trained_bot, tmp_path):
    """The trained config with a private, empty session store."""
    return dataclasses.replace(trained_bot, state=tmp_path / "state")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Prints one verdict line per release gate when test_acceptance ran."""
    outcomes: dict[str, str] = {}
    for category in ("passed", "failed", "error", "skipped"):
        for report in terminalreporter.stats.get(category, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py::" not in nodeid:
                continue
            name = nodeid.split("::")[-1].split("[")[0]
            outcomes.setdefault(name, category)
    if not outcomes:
        return
    try:
        import test_acceptance as acceptance
    except ImportError:
        return
    labels = {"passed": "PASS", "failed": "FAIL", "error": "FAIL",
              "skipped": "SKIP"}
    terminalreporter.section("release gates")
    for name, label in acceptance.CRITERIA:
        verdict = labels.get(outcomes.get(name, ""), "NOT RUN")
        detail = acceptance.RESULTS.get(name, "")
        if verdict == "SKIP" and not detail:
            detail = "see skip reason above"
        line = f"{verdict:7} {label}"
        if detail:
            line += f": {detail}"
        terminalreporter.write_line(line)


def assert_grad_matches(loss_fn, arr: np.ndarray, analytic: np.ndarray,
                        rng: np.random.Generator, limit: int = 120) -> int:
    """Compares analytic to central-difference gradients at sampled coords.

    Returns the number of coordinates checked so callers can assert coverage.
    """
    coords = pick_coords(arr, limit, rng)
    numeric = numeric_gradient(loss_fn, arr, coords)
    ana = analytic.reshape(-1)[coords]
    err = max_relative_error(ana, numeric)
    assert err < GRAD_TOL, f"gradient mismatch: max relative error {err:.3e}"
    return len(coords)
