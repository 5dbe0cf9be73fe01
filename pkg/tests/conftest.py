import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from simulcsp.core import Clause, Cut, Instance, PartialAssignment, Term, normalize

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")


def random_instance(rng, kind, n, m, q=2, w=2, arity=None):
    """Normalised instance with m random constraints; arity defaults to 1..w."""
    cons = []
    for _ in range(m):
        a = 2 if kind == "cut" else (arity or int(rng.integers(1, w + 1)))
        vs = rng.choice(n, size=a, replace=False)
        if kind == "cut":
            c = Cut(int(vs[0]), int(vs[1]))
        elif kind == "sat":
            c = Clause(tuple((int(v), bool(rng.integers(2))) for v in vs))
        else:
            c = Term({int(v): int(rng.integers(q)) for v in vs})
        cons.append((c, float(rng.uniform(0.1, 1.0))))
    return normalize(Instance(kind, n, cons, q=q, w=2 if kind == "cut" else w))


def random_rho(rng, n, q, size):
    S = rng.choice(n, size=size, replace=False)
    return PartialAssignment({int(v): int(rng.integers(q)) for v in S})


@st.composite
def instances(draw, kinds=("cut", "sat", "conj"), max_n=7, max_m=8):
    kind = draw(st.sampled_from(kinds))
    n = draw(st.integers(3, max_n))
    q = draw(st.integers(2, 3)) if kind == "conj" else 2
    w = draw(st.integers(1, 3)) if kind != "cut" else 2
    m = draw(st.integers(1, max_m))
    seed = draw(st.integers(0, 2 ** 31))
    return random_instance(np.random.default_rng(seed), kind, n, m, q=q, w=min(w, n))


@st.composite
def instance_and_rho(draw, **kw):
    W = draw(instances(**kw))
    size = draw(st.integers(0, W.n))
    seed = draw(st.integers(0, 2 ** 31))
    return W, random_rho(np.random.default_rng(seed), W.n, W.q, size)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance lines, filled by tests/test_acceptance.py and echoed at the end of the run
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
