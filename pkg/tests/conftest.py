from __future__ import annotations

import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pytest

from sizetryon import imgio
from sizetryon.backends import BackendConfig, FixtureRegistry, InpaintBackend, make_backends
from sizetryon.catalog import load_catalog
from sizetryon.segmentation import LabelMap, load_label_map

FIXTURES = Path(__file__).parent / "fixtures"
CATALOG_PATH = Path(__file__).resolve().parents[1] / "assets" / "catalog" / "catalog.json"

PERSON_FIXTURES = ["person_a", "person_b", "person_canvas_a", "person_canvas_b"]


@dataclass
class PersonFixture:
    name: str
    path: Path
    image: np.ndarray
    labels: LabelMap
    truth: np.ndarray | None


def load_fixture(name: str) -> PersonFixture:
    path = FIXTURES / name
    truth_path = path / "truth_garment_mask.png"
    return PersonFixture(
        name=name,
        path=path,
        image=imgio.load_image(path / "image.png"),
        labels=load_label_map(path / "labels.png", path / "labels.json"),
        truth=imgio.load_mask(truth_path) if truth_path.exists() else None,
    )


@pytest.fixture(scope="session")
def person_a() -> PersonFixture:
    return load_fixture("person_a")


@pytest.fixture(scope="session")
def person_b() -> PersonFixture:
    return load_fixture("person_b")


@pytest.fixture(scope="session")
def legs_only() -> PersonFixture:
    return load_fixture("legs_only")


@pytest.fixture(scope="session")
def no_person() -> PersonFixture:
    return load_fixture("no_person")


@pytest.fixture(scope="session")
def catalog():
    return {g.id: g for g in load_catalog(CATALOG_PATH)}


def mock_backends(*fixtures: PersonFixture):
    """A mock backend set with the given person fixtures registered."""
    registry = FixtureRegistry()
    for fx in fixtures:
        registry.register(fx.image, fx.labels, fx.truth)
    return make_backends(BackendConfig(mode="mock"), registry)


class GatedInpaint(InpaintBackend):
    """Inpaint wrapper that blocks until released; simulates a slow model."""

    def __init__(self, inner):
        self.inner = inner
        self.gate = threading.Event()

    def inpaint(self, base, mask, edge_guidance, reference, prompt):
        assert self.gate.wait(timeout=30)
        return self.inner.inpaint(base, mask, edge_guidance, reference, prompt)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of every run."""
    lines = []
    for outcome in ("passed", "failed"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py" in nodeid and getattr(report, "when", "") == "call":
                lines.append((nodeid.split("::")[-1], "PASS" if outcome == "passed" else "FAIL"))
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, status in sorted(lines):
            terminalreporter.write_line(f"{status}  {name}")
