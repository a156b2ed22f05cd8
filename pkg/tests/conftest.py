import random
from collections import defaultdict

import pytest

from halldecomp.engine import Engine

HALL_PAIR = [{3, 4}, {1, 2, 3, 4}, {3, 4}, {2, 3, 4, 5}, {1}]


def make_vars(domains, values=True, trace=False, names=None):
    eng = Engine(trace=trace)
    xs = []
    for i, d in enumerate(domains):
        name = names[i] if names else f"X{i + 1}"
        if values:
            xs.append(eng.new_from_values(d, name))
        else:
            xs.append(eng.new_int(min(d), max(d), False, name))
    return eng, xs


def domains_of(eng, xs):
    return [frozenset(eng.domain_values(x)) for x in xs]


def random_domains(rng, n, d, holes=True, lo=1):
    out = []
    for _ in range(n):
        a = rng.randint(lo, lo + d - 1)
        b = rng.randint(a, lo + d - 1)
        if holes:
            vals = [v for v in range(a, b + 1) if rng.random() < 0.7] or [a]
        else:
            vals = list(range(a, b + 1))
        out.append(set(vals))
    return out


@pytest.fixture
def rng():
    return random.Random(12345)


# ----------------------------------------------- acceptance summary lines

_criteria = {}
_outcomes = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, title): acceptance criterion a test belongs to")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            _criteria[m.args[0]] = m.args[1]


def pytest_runtest_makereport(item, call):
    m = item.get_closest_marker("criterion")
    if m is None:
        return
    if call.when == "call" or (call.when == "setup" and call.excinfo is not None):
        _outcomes[m.args[0]].append((item.name, call.excinfo is None))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(_criteria):
        res = _outcomes.get(num, [])
        if not res:
            tr.write_line(f"criterion {num:>2}: NOT RUN  {_criteria[num]}")
            continue
        ok = sum(1 for _, passed in res if passed)
        verdict = "PASS" if ok == len(res) else "FAIL"
        tr.write_line(f"criterion {num:>2}: {verdict}  {_criteria[num]}  ({ok}/{len(res)} checks)")


def decomp_fixpoint(domains, con, values=True, trace=False):
    """Post ``con`` over fresh variables; fixpoint domains or None on conflict."""
    from halldecomp.decomp import post_global
    from halldecomp.engine import Fixpoint

    eng, xs = make_vars(domains, values=values, trace=trace)
    post_global(eng, con, xs)
    if eng.propagate() is Fixpoint.CONFLICT:
        return None
    return domains_of(eng, xs)

