"""Scenario library: validated configuration and initial-state construction.

Every scenario produces a ``SystemState`` holding a plasma disk domain, a
vacuum annulus domain sharing the interface nodes, covariant initial fields,
and the initial pressure solve, with all constraints (divergence freedom and
boundary tangency) verified at build time.

Scenarios
---------
static-zpinch
    Zero velocity, azimuthal field of Euclidean strength r inside the unit
    disk, quiescent vacuum.  The pressure solve reproduces the closed form
    mu (1 - r^2) / 2 and the interface sign margin equals mu, so the state
    is stationary and serves as the equilibrium fixture.
vacuum-azimuthal
    Zero plasma fields against the circulation-c azimuthal vacuum field
    c/(2 pi r) e_phi (scaled so the loop integral is c).  The total pressure
    is the constant vacuum trace, the jump gradient is outward, and the sign
    condition is violated by construction -- the fixture for the sign
    monitor's negative branch.
rotating-flow
    Rigid rotation at unit angular rate (or circulation / 2 pi when a
    circulation is configured), zero magnetic fields.  A genuinely dynamic
    column: the interface is advected, the pressure is centrifugal.
perturbed-interface
    The z-pinch construction on the domain bounded by
    r = 1 + amplitude cos(mode phi): the field is the perpendicular gradient
    of the solution of Lap psi = -2, psi = 0 on the boundary, which is
    divergence free and tangent on any shape and reduces exactly to the
    z-pinch at zero amplitude (where the closed form is used directly).
vacuum-only
    Zero plasma fields with a circulating vacuum field; the plasma side is
    marked inert so the time loop only exercises the vacuum solves.

All fields are stored in covariant label components on identity initial
maps, where they coincide with their Euclidean values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .charts import AnnulusChart, DiskChart
from .curves import ClosedCurve, _segments_intersect, compute_geometry
from .elliptic import LaplaceSolver, conormal_row
from .errors import ConfigError, ScenarioError
from .plasma import (PlasmaState, PressureProblem, TaylorReport,
                     constraint_defects, pressure_rhs,
                     project_divergence_free, solve_pressure, taylor_sign)
from .tensors import Domain
from .vacuum import VacuumState, solve_harmonic_field

SCENARIOS = ("static-zpinch", "vacuum-azimuthal", "rotating-flow",
             "perturbed-interface", "vacuum-only")
VACUUM_MODES = ("constrained", "evolved")
BUILD_TOL = 1e-8


@dataclass
class ScenarioConfig:
    """Validated inputs of one simulation.

    Resolutions are (radial, angular) node counts per domain; the angular
    counts must match because the two charts share the interface nodes.
    ``d0_ratio`` scales the interface collar width (relative to the normal
    geometry scales) used by the weighted energies, and ``eps1`` is the
    margin in the reach estimate.  ``checks`` selects the refinement-study
    checks.  ``output_dir`` of None keeps all artifacts in memory.
    """

    scenario: str
    plasma_resolution: tuple = (24, 64)
    vacuum_resolution: tuple = (24, 64)
    dt: float = 1e-2
    t_end: float = 0.5
    mu: float = 1.0
    circulation: float = 0.0
    amplitude: float = 0.0
    mode: int = 2
    d0_ratio: float = 0.8
    eps1: float = 0.5
    wall_radius: float = 2.0
    vacuum_mode: str = "constrained"
    checks: tuple = ("gauss", "pressure_mms", "stationarity")
    output_dir: str | None = None
    seed: int = 0

    def __post_init__(self):
        self.plasma_resolution = self._pair("plasma_resolution",
                                            self.plasma_resolution)
        self.vacuum_resolution = self._pair("vacuum_resolution",
                                            self.vacuum_resolution)
        self.checks = tuple(self.checks)
        self.validate()

    @staticmethod
    def _pair(name, value):
        try:
            a, b = (int(v) for v in value)
        except (TypeError, ValueError):
            raise ConfigError(f"{name} must be a (radial, angular) pair, "
                              f"got {value!r}") from None
        return (a, b)

    def validate(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; "
                              f"expected one of {', '.join(SCENARIOS)}")
        if self.vacuum_mode not in VACUUM_MODES:
            raise ConfigError(f"unknown vacuum_mode {self.vacuum_mode!r}")
        if not self.dt > 0.0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if not self.t_end >= self.dt:
            raise ConfigError(f"t_end must be at least dt, got "
                              f"t_end={self.t_end}, dt={self.dt}")
        for name, (n_s, n_phi) in (("plasma", self.plasma_resolution),
                                   ("vacuum", self.vacuum_resolution)):
            if n_s < 16 or n_phi < 16:
                raise ConfigError(f"{name} resolution must be at least 16 "
                                  f"nodes per direction, got {n_s}x{n_phi}")
            if n_phi % 2:
                raise ConfigError(f"{name} angular resolution must be even")
        if self.vacuum_resolution[1] != self.plasma_resolution[1]:
            raise ConfigError("the domains share interface nodes, so the "
                              "angular resolutions must match")
        if self.mu <= 0.0:
            raise ConfigError(f"mu must be positive, got {self.mu}")
        if self.amplitude < 0.0:
            raise ConfigError("perturbation amplitude must be nonnegative")
        if self.mode < 1:
            raise ConfigError(f"perturbation mode must be >= 1, got {self.mode}")
        if self.amplitude > 0.0:
            if self.mode % 2:
                raise ConfigError("perturbation mode must be even: the disk "
                                  "chart needs an antipodally symmetric "
                                  "boundary")
            if self.amplitude >= 1.0:
                raise ConfigError("perturbation amplitude must stay below 1 "
                                  "to keep the boundary radius positive")
            curve = ClosedCurve.from_polar(
                interface_radius(self, self.plasma_resolution[1]))
            if _segments_intersect(curve):
                raise ConfigError("perturbed interface self-intersects; "
                                  "reduce the amplitude")
        if not 0.0 < self.d0_ratio <= 1.0:
            raise ConfigError(f"d0_ratio must lie in (0, 1], got {self.d0_ratio}")
        if not 0.0 < self.eps1 < 1.0:
            raise ConfigError(f"eps1 must lie in (0, 1), got {self.eps1}")
        if self.wall_radius <= 1.0 + self.amplitude:
            raise ConfigError("wall_radius must exceed the largest interface "
                              "radius")
        if not isinstance(self.seed, (int, np.integer)) or isinstance(self.seed, bool):
            raise ConfigError(f"seed must be an integer, got {self.seed!r}")

    @classmethod
    def from_mapping(cls, data: Mapping):
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        if "scenario" not in data:
            raise ConfigError("config needs a 'scenario' key")
        try:
            return cls(**dict(data))
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def as_dict(self):
        return {
            "scenario": self.scenario,
            "plasma_resolution": list(self.plasma_resolution),
            "vacuum_resolution": list(self.vacuum_resolution),
            "dt": self.dt, "t_end": self.t_end, "mu": self.mu,
            "circulation": self.circulation, "amplitude": self.amplitude,
            "mode": self.mode, "d0_ratio": self.d0_ratio, "eps1": self.eps1,
            "wall_radius": self.wall_radius, "vacuum_mode": self.vacuum_mode,
            "checks": list(self.checks), "output_dir": self.output_dir,
            "seed": self.seed,
        }


@dataclass
class SystemState:
    """Coupled state of one simulation at one time."""

    config: ScenarioConfig
    t: float
    step: int
    plasma: Domain
    pstate: PlasmaState
    vacuum: Domain
    vstate: VacuumState
    wall: ClosedCurve
    taylor: TaylorReport | None
    plasma_inert: bool
    build_report: dict
    monitors: list = field(default_factory=list)
    step_reports: list = field(default_factory=list)
    workspace: dict = field(default_factory=dict, repr=False)

    def interface_curve(self):
        """Current physical interface sampled from the plasma map."""
        row = self.plasma.chart.interface_row
        return ClosedCurve(self.plasma.x[:, row, :].T)


def interface_radius(config, n_phi):
    """Radius samples of the configured interface at n_phi angles."""
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    r = np.ones(n_phi)
    if config.scenario == "perturbed-interface" and config.amplitude > 0.0:
        r = r + config.amplitude * np.cos(config.mode * phi)
    return r


def _rings(config):
    n_phi = config.plasma_resolution[1]
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    unit = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    ring = interface_radius(config, n_phi)[:, None] * unit
    wall = config.wall_radius * unit
    return ring, wall


def _azimuthal_profile(y):
    """Euclidean components of (-y2, y1) on a grid of positions y."""
    return np.stack([-y[1], y[0]])


def vacuum_constraint_defects(dom, w):
    """Sup norms of div w and of the normal traces on both boundaries."""
    div = float(np.abs(dom.divergence(w)).max())
    out = {"div_w": div}
    chart = dom.chart
    for label, row, sign in (("w_normal_interface", chart.interface_row, -1),
                             ("w_normal_wall", chart.n_s - 1, +1)):
        N_up, _ = conormal_row(dom, row, sign)
        out[label] = float(np.abs(
            np.einsum("a...,a...->...", N_up, w[:, row])).max())
    return out


def build_scenario(config):
    """Construct the validated initial state of a configured scenario.

    Raises ScenarioError when the constructed fields violate their
    constraints (divergence freedom, boundary tangency) beyond 1e-8.
    """
    ring, wall_ring = _rings(config)
    pchart = DiskChart(ring, config.plasma_resolution[0])
    pdom = Domain(pchart)
    pdom.set_map(pchart.y.copy())
    vchart = AnnulusChart(ring, wall_ring, config.vacuum_resolution[0])
    vdom = Domain(vchart, tag="vacuum")
    vdom.set_map(vchart.y.copy())
    wall_curve = ClosedCurve(wall_ring, is_fixed=True)

    y = pchart.y
    u = np.zeros((2,) + pchart.shape)
    beta = np.zeros_like(u)
    report = {}

    if config.scenario == "static-zpinch" or (
            config.scenario == "perturbed-interface" and config.amplitude == 0.0):
        beta = _azimuthal_profile(y)
    elif config.scenario == "perturbed-interface":
        solver = LaplaceSolver(pdom, bc_interface="dirichlet")
        psi, info = solver.solve(rhs=-2.0 * np.ones(pchart.shape),
                                 interface_values=0.0, tol=1e-12)
        # div(perp_grad) vanishes analytically but not discretely; project
        # the truncation residue out (the Neumann solve keeps the normal trace).
        beta, _, cleaned = project_divergence_free(
            pdom, pdom.perp_grad(psi), tol=1e-12)
        report["stream_iterations"] = info["iterations"]
        report["beta_projection"] = cleaned
    elif config.scenario == "rotating-flow":
        omega = config.circulation / (2.0 * np.pi) if config.circulation else 1.0
        u = omega * _azimuthal_profile(y)
        report["omega"] = omega

    if config.circulation != 0.0 and config.scenario != "rotating-flow":
        vstate, vinfo = solve_harmonic_field(vdom, config.circulation, tol=1e-12)
        vstate.mu = config.mu
        report["vacuum_iterations"] = vinfo["iterations"]
    else:
        vstate = VacuumState(np.zeros((2,) + vchart.shape), 0.0,
                             psi=np.zeros(vchart.shape), mu=config.mu)

    pstate = PlasmaState(u, beta, mu=config.mu)
    q_minus = vstate.magnetic_pressure(vdom)
    trace = q_minus[vchart.interface_row]
    q_plus, qinfo = solve_pressure(
        pdom, PressureProblem(pressure_rhs(pdom, pstate), trace), tol=1e-12)
    pstate.q_plus = q_plus
    report["pressure_iterations"] = qinfo["iterations"]

    taylor = taylor_sign(pdom, vdom, q_plus, q_minus)
    report["taylor_margin"] = taylor.margin

    defects = dict(constraint_defects(pdom, pstate))
    defects.update(vacuum_constraint_defects(vdom, vstate.w))
    report["constraints"] = defects
    worst = max(defects.values())
    if not np.isfinite(worst) or worst > BUILD_TOL:
        bad = ", ".join(f"{k}={v:.3e}" for k, v in defects.items()
                        if not v <= BUILD_TOL)
        raise ScenarioError(f"initial state violates constraints: {bad}")

    gamma = ClosedCurve(pdom.x[:, pchart.interface_row, :].T)
    report["interface"] = compute_geometry(gamma, eps1=config.eps1).as_report()

    return SystemState(config=config, t=0.0, step=0, plasma=pdom,
                       pstate=pstate, vacuum=vdom, vstate=vstate,
                       wall=wall_curve, taylor=taylor,
                       plasma_inert=config.scenario == "vacuum-only",
                       build_report=report)
