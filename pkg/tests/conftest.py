import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from daogov._accel import HAVE_NUMBA  # noqa: E402
from daogov.covote.graph import CoVoteGraph  # noqa: E402

BACKENDS = ["numpy"] + (["numba"] if HAVE_NUMBA else [])

_criteria: dict[int, tuple[bool, str]] = {}


def addr(i: int) -> str:
    return "0x" + format(i, "040x")


def graph_from_edges(n, edges, contributors=(), weights=None):
    """CoVoteGraph on nodes 0..n-1 from (u, v) pairs."""
    e = np.array(sorted((min(a, b), max(a, b)) for a, b in edges), dtype=np.int64).reshape(-1, 2)
    w = np.ones(len(e), dtype=np.int64) if weights is None else np.asarray(weights, dtype=np.int64)
    flags = np.zeros(n, dtype=bool)
    flags[list(contributors)] = True
    return CoVoteGraph(tuple(addr(i + 1) for i in range(n)), flags, e[:, 0], e[:, 1], w)


def graph_from_nx(g, contributors=()):
    n = g.number_of_nodes()
    edges, weights = [], []
    for a, b, d in g.edges(data=True):
        edges.append((a, b))
        weights.append(d.get("weight", 1))
    order = sorted(range(len(edges)), key=lambda i: (min(edges[i]), max(edges[i])))
    return graph_from_edges(n, [edges[i] for i in order], contributors, [weights[i] for i in order])


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


def record_criterion(number: int, passed: bool, detail: str = "") -> None:
    _criteria[number] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        ok, detail = _criteria[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
