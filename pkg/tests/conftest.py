import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from expofuse import dataio, minidata, synthesis  # noqa: E402
from expofuse.imagecore import luma  # noqa: E402
from expofuse.maskgen import detect_overexposed  # noqa: E402

# fixed synthesis setup shared by regression and acceptance checks
MINI_SEED = 7


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def mini_manifest():
    return dataio.load_manifest(minidata.manifest_path())


@pytest.fixture(scope="session")
def mini_pairs(mini_manifest):
    """Bundled pairs with synthesized overexposure: dicts of planes and masks."""
    cfg = synthesis.SynthesisConfig(seed=MINI_SEED)
    out = []
    for e in mini_manifest:
        vi = dataio.read_image(e.visible_path)
        ir = dataio.read_image(e.infrared_path)
        labels = dataio.read_labels(e.label_path)
        specs = synthesis.sample_specs(labels, cfg, synthesis.image_rng(cfg.seed, e.id))
        vi_oe, _ = synthesis.synthesize_pair(vi, ir, specs)
        y = luma(vi_oe)
        out.append({"id": e.id, "vi_rgb": vi, "vi_oe_rgb": vi_oe, "vi": luma(vi), "vi_oe": y,
                    "ir": ir, "labels": labels, "specs": specs, "mask": detect_overexposed(y)})
    return out


_acceptance_lines = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid and report.when == "call":
        name = report.nodeid.split("::")[-1]
        _acceptance_lines.append(f"{'PASS' if report.passed else 'FAIL'}  {name}")


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
