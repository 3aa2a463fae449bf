import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tsgalerkin.coupling import build_operators  # noqa: E402
from tsgalerkin.fem import P1Space  # noqa: E402
from tsgalerkin.mesh import gamma_classifier, make_rect_mesh, tag_boundary  # noqa: E402


def unit_spaces(nx=2, ny=None, gamma="top_edge"):
    ny = ny or nx
    macro = P1Space(make_rect_mesh((0, 0), (1, 1), nx, nx))
    micro = P1Space(tag_boundary(make_rect_mesh((0, 0), (1, 1), ny, ny), gamma_classifier(gamma, (0, 0), (1, 1))))
    return macro, micro


def unit_ops(nx=2, ny=None, gamma="top_edge"):
    return build_operators(*unit_spaces(nx, ny, gamma))


@pytest.fixture
def ops4():
    return unit_ops(4)
