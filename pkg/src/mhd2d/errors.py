"""Error taxonomy shared across the package.

Geometry failures (self-intersection, non-star-shaped charts) are
distinguished from resolution failures (under-resolved grids) and from
elliptic-solver failures so the CLI can map them to distinct exit codes.
"""


class GeometryError(ValueError):
    """Invalid or degenerate geometry (self-intersection, bad chart)."""


class ResolutionError(ValueError):
    """Grid too coarse / invalid for the requested operation."""


class EllipticError(RuntimeError):
    """An elliptic solve failed to converge to tolerance."""


class ConfigError(ValueError):
    """Invalid scenario or suite configuration."""


class ScenarioError(RuntimeError):
    """A constructed initial state violates its constraints."""


class SequencingError(RuntimeError):
    """An operation ran before the step data it depends on was computed."""


class ConsistencyError(RuntimeError):
    """Evolved fields left their constraint manifold beyond tolerance."""


class StabilityWarning(UserWarning):
    """Heuristic stability bound (advective CFL) exceeded."""
