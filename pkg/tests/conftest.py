import numpy as np
import pytest
from hypothesis import settings

from franson_erasure.scene import GlassObject, GridSpec, Noise, Rectangle, SceneConfig, Beam

settings.register_profile("default", deadline=None)
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def small_grid():
    return GridSpec(32, 32)


def random_scene(rs: np.random.Generator, grid=GridSpec(32, 32), dark=0.0, keep_open=True):
    """Scene with a few random plates in each arm.

    With ``keep_open`` the bottom rows stay uncovered so part of the beam
    always keeps full fringe contrast.
    """
    rows = grid.height - (4 if keep_open else 0)

    def objs():
        out = []
        for _ in range(rs.integers(0, 4)):
            x0, x1 = sorted(rs.integers(0, grid.width, 2))
            y0, y1 = sorted(rs.integers(0, rows, 2))
            # thin plates give partial visibility, thick ones none
            t = rs.choice([rs.uniform(0, 6e-5), rs.uniform(1e-4, 1e-3)])
            out.append(GlassObject(Rectangle(int(x0), int(y0), int(x1), int(y1)), float(t),
                                   tilt_opd_offset=float(rs.uniform(0, 7.1e-7))))
        return tuple(out)

    return SceneConfig(
        grid,
        signal_cw_objects=objs(),
        idler_cw_objects=objs(),
        crystal_phase=0.0,
        beam=Beam(radius=float(rs.uniform(0.5, 2.0) * grid.width)),
        noise=Noise(dark_counts=dark, heralding_efficiency=float(rs.uniform(0.2, 1.0))),
    )
