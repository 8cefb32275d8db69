import math

import pytest

from dhtree import load_bundled, two_consumer_network


def two_consumer_oracle(u1=1.0, u2=1.0, p0=1.0):
    """Closed-form equilibrium of the two-consumer network.

    Combined pipe coefficient 1 on every edge and valve coefficient 1.
    Eliminating pressures gives

        p3 = p0 - Q**2 = (1 + u1**-2) q1**2 = (2 + u2**-2) q2**2,  Q = q1 + q2

    so ``q1 = r q2`` with ``r = sqrt((2 + u2**-2) / (1 + u1**-2))`` and
    ``q2 = sqrt(p0 / ((1 + r)**2 + 2 + u2**-2))``.
    """
    a, b = 1.0 + u1 ** -2, 2.0 + u2 ** -2
    r = math.sqrt(b / a)
    q2 = math.sqrt(p0 / ((1.0 + r) ** 2 + b))
    q1 = r * q2
    total = q1 + q2
    p3 = p0 - total ** 2
    p4 = p3 - q2 ** 2
    return {
        "q1": q1, "q2": q2, "total": total,
        "p": {0: p0, 1: q1 ** 2 / u1 ** 2, 2: q2 ** 2 / u2 ** 2, 3: p3, 4: p4},
    }


def two_consumer_bisection_oracle(u1=1.0, u2=1.0, p0=1.0):
    """Same equilibrium by plain bisection on q2 (no package code)."""
    a, b = 1.0 + u1 ** -2, 2.0 + u2 ** -2
    r = math.sqrt(b / a)
    lo, hi = 0.0, math.sqrt(p0)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if (mid * (1 + r)) ** 2 + b * mid ** 2 - p0 < 0:
            lo = mid
        else:
            hi = mid
    q2 = 0.5 * (lo + hi)
    return r * q2, q2


@pytest.fixture
def net2():
    return two_consumer_network()


@pytest.fixture(scope="session")
def net22_file():
    return load_bundled("network22")


# -- acceptance reporting ----------------------------------------------------

_ACCEPTANCE: list[tuple[str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        name = marker.args[0]
        callspec = getattr(item, "callspec", None)
        if callspec is not None:
            name += f" [{callspec.id}]"
        _ACCEPTANCE.append((name, "PASS" if rep.passed else "FAIL"))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, status in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"{status}  {name}")
