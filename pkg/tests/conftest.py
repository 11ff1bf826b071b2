import json
from pathlib import Path

import numpy as np
import pytest

from plcerf.family import TimeVaryingField
from plcerf.mesh import GridSpec, SimplicialComplex, grid_complex

FIXTURES = Path(__file__).parent / "fixtures"


def load_sphere() -> SimplicialComplex:
    return SimplicialComplex.from_json(json.loads((FIXTURES / "octahedron.json").read_text()))


def random_field(dims, periodic, T, seed, smooth=False) -> TimeVaryingField:
    """Random piecewise-linear family on a grid; ``smooth`` interpolates few knots in t."""
    rng = np.random.default_rng(seed)
    c = grid_complex(GridSpec(tuple(dims), tuple(periodic)))
    if smooth:
        knots = rng.standard_normal((c.vertex_count, 3))
        tk = np.linspace(0, 1, 3)
        ts = np.linspace(0, 1, T)
        vals = np.stack([np.interp(ts, tk, k) for k in knots])
    else:
        vals = rng.standard_normal((c.vertex_count, T))
    return TimeVaryingField(c, vals, np.linspace(0.0, 1.0, T))


@pytest.fixture
def sphere():
    return load_sphere()


@pytest.fixture
def torus3():
    return grid_complex(GridSpec((3, 3), (True, True)))


def random_gaussians(dims, periodic, T, seed, k=3) -> TimeVaryingField:
    """Bumps moving on straight lines with random widths and heights; generically PL Morse."""
    from plcerf.family import generate_gaussians

    rng = np.random.default_rng(seed)
    spec = GridSpec(tuple(dims), tuple(periodic))
    hi = np.array(dims, dtype=float) - 1
    a = rng.uniform(0, hi, (k, len(dims)))
    b = rng.uniform(0, hi, (k, len(dims)))
    paths = [(lambda t, a=a[i], b=b[i]: a + t * (b - a)) for i in range(k)]
    return generate_gaussians(spec, paths, rng.uniform(1.5, 3.0), rng.uniform(0.5, 1.5, k), T=T)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
