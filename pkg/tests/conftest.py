import pytest

from mginf_mrp.dist import parse_spec
from mginf_mrp.renewal import QueueConfig

# one representative per kind, each with mean 1
CATALOG = {
    "exp": "exp:alpha=1.0",
    "det": "det:alpha=1.0",
    "erlang": "erlang:n=2,alpha=1.0",
    "hyperexp2": "hyperexp2:p=0.5,alpha1=0.5,alpha2=1.5",
    "uniform": "uniform:a=0,b=2",
}

# wider set for property checks
EXTENDED = list(CATALOG.values()) + [
    "erlang:n=5,alpha=2.0",
    "hyperexp2:p=0.1,alpha1=0.2,alpha2=5",
    "hyperexp2:p=0.7,alpha1=3,alpha2=3",
    "uniform:a=0.5,b=1.5",
    "exp:alpha=0.3",
]


def cfg_at(spec: str, rho: float) -> QueueConfig:
    d = parse_spec(spec)
    return QueueConfig(rho / d.mean, d)


@pytest.fixture(params=list(CATALOG), ids=list(CATALOG))
def catalog_dist(request):
    return parse_spec(CATALOG[request.param])


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number].line())
    passed = sum(v.passed for v in results.values())
    terminalreporter.write_line(f"{passed}/{len(results)} criteria passed")
