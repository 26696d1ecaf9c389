import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fsiwave.assembly import DiscreteSpace, assemble_blocks  # noqa: E402
from fsiwave.geometry import Ellipsoid, GeometrySpec, MaterialParams, SurfaceProfile, build_mesh  # noqa: E402
from fsiwave.incident import IncidentSpec, causal_pulse  # noqa: E402

DATA = Path(__file__).parent / "data"
MAT = MaterialParams(rho_e=2.0, rho_0=1.0, c=1.0, lam=2.0, mu=1.0)
BODY_SPEC = GeometrySpec(R=1.0, profile=SurfaceProfile.bump(0.1, 0.5),
                         body=Ellipsoid((0.0, 0.0, 0.45), (0.25, 0.2, 0.15)))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def incident():
    return IncidentSpec(0.3, 2.6, 1.0, causal_pulse(1.0))


@pytest.fixture(scope="session")
def flat_mesh():
    return build_mesh(GeometrySpec(R=1.0), 0.25)


@pytest.fixture(scope="session")
def flat_blocks(flat_mesh):
    return assemble_blocks(DiscreteSpace.build(flat_mesh), MAT)


@pytest.fixture(scope="session")
def body_mesh():
    return build_mesh(BODY_SPEC, 0.2)


@pytest.fixture(scope="session")
def body_blocks(body_mesh):
    return assemble_blocks(DiscreteSpace.build(body_mesh), MAT)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
