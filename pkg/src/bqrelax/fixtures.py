"""Bundled regression instances (shipped as package data).

``tight_n2``: two variables, one equality row; the plain SDR is unbounded
below while the lifted SDR attains -28 at a rank-one optimum that recovers
the binary solution (-1, -1).

``gap_n5``: five variables, three equality rows; the lifted SDR is bounded
(its feasible set is in fact a single point) but the optimum is not rank-one,
and the plain SDR is again unbounded.
"""

from importlib.resources import files

from .model import BqpInstance, MaxCutGraph, load_graph, load_instance


def fixture_path(name: str) -> str:
    """Filesystem path of a bundled data file (for CLI round trips)."""
    return str(files("bqrelax").joinpath("data", name))


def tight_n2() -> BqpInstance:
    return load_instance(fixture_path("bqp_n2_tight.json"))


def gap_n5() -> BqpInstance:
    return load_instance(fixture_path("bqp_n5_gap.json"))


def triangle() -> MaxCutGraph:
    return load_graph(fixture_path("triangle.graph"))
