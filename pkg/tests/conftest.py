from __future__ import annotations

import numpy as np
import pytest

from causal_ot.spacetime import DiscreteSpacetime, grid_coords, minkowski


def line(n: int, length: float = 1.0, m=None, k=0.0) -> DiscreteSpacetime:
    """n events evenly spaced on one timelike line; l(i, j) = (j − i)·h for i ≤ j."""
    t = np.linspace(0.0, length, n)
    l = t[None, :] - t[:, None]
    l[l < 0] = -np.inf
    return DiscreteSpacetime(t[:, None], l, np.ones(n) if m is None else m, k, "line")


def grid(shape, box, k=0.0, m=None) -> DiscreteSpacetime:
    return minkowski(grid_coords(shape, box), m=m, k=k)


def three_lines(m=None, c=(1.0, 2.0, 0.5)):
    """Three vertical lines of 9 events; f moves mass c_i from the bottom to the top of line i."""
    ts = np.linspace(0.0, 2.0, 9)
    pts = np.array([[t, x] for x in (0.0, 0.3, 0.6) for t in ts])
    st = minkowski(pts, m=m)
    f = np.zeros(st.n)
    for i, ci in enumerate(c):
        f[9 * i] = ci / st.m[9 * i]
        f[9 * i + 8] = -ci / st.m[9 * i + 8]
    return st, f


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def grid_11():
    """1+1 Minkowski lattice on [0,2]×[0,1] with spacing 0.2 in t and 0.1 in x."""
    return grid((11, 11), [(0.0, 2.0), (0.0, 1.0)])


def index_of(st: DiscreteSpacetime, *point) -> int:
    hit = np.flatnonzero(np.all(np.abs(st.coords - np.asarray(point)) < 1e-9, axis=1))
    assert hit.size == 1, point
    return int(hit[0])


# --- acceptance summary ------------------------------------------------------

_ACCEPTANCE: dict[str, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(tag, title): one of the numbered acceptance criteria")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or rep.when != "call":
        return
    tag, title = mark.args
    detail = dict(item.user_properties).get("detail", "")
    _ACCEPTANCE[tag] = ("PASS" if rep.passed else "FAIL", f"{title}{': ' + detail if detail else ''}")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for tag in sorted(_ACCEPTANCE, key=lambda t: int(t[1:])):
        status, text = _ACCEPTANCE[tag]
        terminalreporter.write_line(f"{tag:>3} {status} {text}")
