import sys
from pathlib import Path

import pytest

from ghostlens.aberration import AberrationSpec, MonomialTerm, ZernikeTerm, noll_to_nm, synthesize_phase
from ghostlens.scene import GridGeometry, make_layout

WAVELENGTH = 0.5e-6
CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture
def layout():
    return make_layout(WAVELENGTH, 0.2, 0.2)


@pytest.fixture
def grid256(layout):
    return GridGeometry.matched(layout, 256)


def cubic(grid, radians_at_half=20.0):
    """a*x**3 with a chosen so the phase is ``radians_at_half`` at x = L/2."""
    a = radians_at_half / (grid.extent / 2) ** 3
    return synthesize_phase(AberrationSpec((MonomialTerm(3, None, a),)), grid)


def quadratic(grid, radians_at_half=5.0):
    c = radians_at_half / (grid.extent / 2) ** 2
    return synthesize_phase(AberrationSpec((MonomialTerm(2, None, c),)), grid)


def random_spec(rng, grid, n_terms=None, parity=None):
    """Random mixture of monomials (and Zernikes on 2D grids).

    ``parity`` = "even" / "odd" restricts to terms of that parity.
    """
    R = grid.extent / 2
    n_terms = rng.integers(1, 6) if n_terms is None else n_terms
    terms = []
    while len(terms) < n_terms:
        if grid.dims == 2 and rng.random() < 0.5:
            j = int(rng.integers(1, 37))
            m = noll_to_nm(j)[1]
            if parity and (m % 2 == 0) != (parity == "even"):
                continue
            terms.append(ZernikeTerm(j, float(rng.normal())))
        else:
            px = int(rng.integers(0, 6))
            py = int(rng.integers(0, 4)) if grid.dims == 2 else None
            deg = px + (py or 0)
            if parity and (deg % 2 == 0) != (parity == "even"):
                continue
            terms.append(MonomialTerm(px, py, float(rng.normal() * 5) / R**deg))
    return AberrationSpec(tuple(terms), aperture_radius=R)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
