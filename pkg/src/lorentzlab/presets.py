"""Bundled example charts.

Four setups used throughout the tests, demos and the command line:

* ``minkowski``   flat strip, t in [-4, 4], x in [-2, 2]
* ``example-ex``  half-plane x > 0 with g = (dx^2 - dt^2) / x^2; time
                  separations to the x -> 0 edge diverge
* ``sin-lapse``   g = -(2 + sin t) dt^2 + dx^2; chart time is temporal
                  but not steep
* ``fig1``        Minkowski rectangle with a closed spacelike wedge
                  removed; the causal shadow of the wedge tip makes the
                  volume function kink along a null line

``fig1`` is not expressible in the chart-file grammar (it has an
excluded region), so it is exposed as a builder returning the grid plus
the probe data.
"""

from __future__ import annotations

from dataclasses import dataclass

from .geometry import GridSpacetime
from .specfile import parse_spec

BUNDLED_SOURCES = {
    "minkowski": (
        'spacetime "minkowski" {\n'
        "  coords: t, x;\n"
        "  domain: t in [-4, 4], x in [-2, 2];\n"
        "  g_tt = -1;\n"
        "  g_tx = 0;\n"
        "  g_xx = 1;\n"
        "}\n"
    ),
    "example-ex": (
        'spacetime "example-ex" {\n'
        "  coords: t, x;\n"
        "  # conformal to the flat half-plane; x = 0 is infinitely far\n"
        "  domain: t in [-4, 4], x in [0.05, 4];\n"
        "  g_tt = -1 / (x * x);\n"
        "  g_tx = 0;\n"
        "  g_xx = 1 / (x * x);\n"
        "}\n"
    ),
    "sin-lapse": (
        'spacetime "sin-lapse" {\n'
        "  coords: t, x;\n"
        "  domain: t in [-4, 4], x in [-2, 2];\n"
        "  g_tt = -(2 + sin(t));\n"
        "  g_tx = 0;\n"
        "  g_xx = 1;\n"
        "}\n"
    ),
    "fig1": (
        'spacetime "fig1" {\n'
        "  coords: t, x;\n"
        "  domain: t in [-0.5, 2.5], x in [-2, 2];\n"
        "  g_tt = -1;\n"
        "  g_tx = 0;\n"
        "  g_xx = 1;\n"
        "}\n"
    ),
}


def load_spec(name_or_path):
    """Resolve a bundled name or a path to a chart file."""
    if name_or_path in BUNDLED_SOURCES:
        return parse_spec(BUNDLED_SOURCES[name_or_path])
    with open(name_or_path, "r", encoding="utf-8") as fh:
        return parse_spec(fh.read())


# --- fig1: rectangle minus a closed wedge ---------------------------------

WEDGE_APEX = (1.0, 0.5)  # (t, x)
WEDGE_SLOPE = 2.0  # |dx/dt| of the wedge edges; > 1 means spacelike edges


def wedge_region(t, x):
    """Closed wedge poking in from the x = +2 side, apex at WEDGE_APEX."""
    ta, xa = WEDGE_APEX
    return x - xa >= WEDGE_SLOPE * abs(t - ta) - 1e-12


@dataclass(frozen=True)
class Fig1Probe:
    """Probe data for the volume-smoothness experiment."""

    slice_t: float  # Cauchy slice level (flat)
    z: tuple  # marked point on the null line through the wedge tip
    across: tuple  # chart direction crossing that null line
    along: tuple  # chart direction parallel to it


def fig1_probe():
    # null line through the apex, up-left: t = 1 + (0.5 - x)
    return Fig1Probe(slice_t=0.0, z=(1.3, 0.2), across=(1.0, 0.0), along=(1.0, -1.0))


def fig1_grid(spacing, with_wedge=True):
    spec = load_spec("fig1")
    excluded = wedge_region if with_wedge else None
    return GridSpacetime(spec, spacing, excluded=excluded)
