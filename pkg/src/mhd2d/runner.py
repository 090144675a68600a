"""Coupled time loop, per-step monitors, artifacts, and the refinement study.

One step advances the full system with a single RK4 integrator whose stage
evaluation follows a fixed coupling order:

    1. extend the interface velocity into the vacuum region,
    2. advance the plasma map (and, in constrained mode, the vacuum map)
       to the stage position and rebuild the metrics,
    3. vacuum solves: constrained mode re-solves the harmonic field with
       the conserved circulation on the stage geometry; evolved mode solves
       the electric potential and integrates the induction law on the fixed
       reference map,
    4. trace the vacuum magnetic pressure onto the interface,
    5. solve the total-pressure problem with that trace,
    6. evaluate the plasma momentum and induction right sides,
    7. combine the stage slopes into the update.

After the update the near-grid radial modes of the evolved fields are
filtered (``radial_smooth``), both plasma fields are re-projected onto the
divergence-free constraint, and the monitor appends an energy report.

``coupling="swapped"`` solves the pressure with the stage's incoming trace
before the vacuum solves -- the order-sensitivity diagnostic.  On a static
column the two orders agree to roundoff; on dynamic runs the difference is
one more observable truncation term, which is why the order above is fixed.

Vacuum modes.  "constrained" advects the vacuum map with the extended
velocity and re-solves the harmonic field, so the vacuum field is always
exactly curl- and divergence-free with the circulation it started with.
"evolved" integrates the induction law on the frozen reference map with the
extension velocity as the transport field: exact while the interface is
static, and a faithful-dynamics comparison otherwise; constraint drift is
monitored and a blow-up raises ConsistencyError.  ``compare_vacuum_modes``
runs both from the same build and reports how far they separate.
"""

from __future__ import annotations

import csv
import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .curves import ClosedCurve, compute_geometry
from .elliptic import BiharmonicSolver, LaplaceSolver
from .energy import (EnergyReport, build_energy_context, e0, e_r,
                     theorem_monitor, track_bounds)
from .errors import (ConfigError, ConsistencyError, EllipticError,
                     GeometryError, ResolutionError, ScenarioError,
                     SequencingError, StabilityWarning)
from .flowmap import extend_velocity_to_vacuum
from .plasma import (PlasmaState, PressureProblem, cfl_number,
                     constraint_defects, momentum_rhs, induction_rhs,
                     pressure_rhs, project_divergence_free, solve_pressure,
                     taylor_sign)
from .scenarios import (ScenarioConfig, SystemState, build_scenario,
                        vacuum_constraint_defects)
from .vacuum import (VacuumState, circulation, solve_electric_field,
                     solve_harmonic_field, vacuum_rate)
from .verifier import check_gauss

_WRAPPED = (EllipticError, ConsistencyError, ScenarioError, GeometryError,
            ResolutionError, SequencingError)
ENERGY_HEADER = "t,E0,E1,E2,E3,Kcal,Ecal,taylor_margin"


@dataclass
class RunArtifacts:
    """Everything one simulation produces."""

    config: ScenarioConfig
    state: SystemState
    monitors: list
    step_reports: list
    theorem: dict
    energy_csv: str
    paths: dict = field(default_factory=dict)


def prepare(state):
    """Build the solver workspace and the t=0 monitor row (idempotent)."""
    ws = state.workspace
    if ws.get("ready"):
        return state
    ws["pressure"] = LaplaceSolver(state.plasma, bc_interface="dirichlet")
    ws["cleaner"] = LaplaceSolver(state.plasma, bc_interface="neumann")
    ws["extension"] = BiharmonicSolver(state.vacuum)
    ws["vacuum"] = LaplaceSolver(state.vacuum, bc_interface="dirichlet",
                                 bc_wall="dirichlet")
    ws["warm"] = {"trace": _q_minus(state, state.vstate.w)[
        state.vacuum.chart.interface_row]}
    ws["cfl_warned"] = False
    ws["ready"] = True
    if not state.monitors:
        state.monitors.append(_monitor(state))
    return state


def _interface_velocity(state, u):
    """Eulerian velocity samples on the interface nodes."""
    row = state.plasma.chart.interface_row
    return state.plasma.pushforward_covector(u)[:, row, :]


def _q_minus(state, w):
    """Vacuum magnetic pressure field for a vacuum field w."""
    return 0.5 * state.vstate.mu * state.vacuum.norm2(w, 1)


def _stage_rates(state, t, xp, u, beta, xv, wv, coupling):
    """Slopes of every evolved quantity at one RK stage.

    Returns (k_xp, k_u, k_beta, k_xv, k_wv, info).  The plasma and (in
    constrained mode) vacuum domains are left bound to the stage maps.
    """
    cfg = state.config
    ws = state.workspace
    warm = ws["warm"]
    evolved = cfg.vacuum_mode == "evolved"
    zeros = np.zeros_like(u)
    info = {}

    if state.plasma_inert:
        if evolved:
            Xi, _ = solve_electric_field(state.vacuum, np.zeros_like(wv), wv,
                                         ws["vacuum"], x0=warm.get("xi"),
                                         tol=1e-11)
            warm["xi"] = Xi.ravel()
            k_wv = vacuum_rate(state.vacuum, wv, Xi, np.zeros_like(wv))
        else:
            k_wv = None
        return zeros, zeros, zeros, np.zeros_like(xv), k_wv, info

    state.plasma.set_map(xp)
    ws["pressure"].refresh()
    v_euler = state.plasma.pushforward_covector(u)
    row = state.plasma.chart.interface_row
    v_gamma = v_euler[:, row, :]
    gamma = ClosedCurve(xp[:, row, :].T)

    if not evolved:
        state.vacuum.set_map(xv)
        ws["extension"].refresh()
        ws["vacuum"].refresh()
    if np.max(np.abs(v_gamma)) == 0.0:
        v_hat = np.zeros((2,) + state.vacuum.chart.shape)
    else:
        v_hat, ereport = extend_velocity_to_vacuum(
            state.vacuum, gamma, v_gamma, solver=ws["extension"],
            warm=warm.get("extension"))
        warm["extension"] = ereport.warm
        info["extension_iterations"] = ereport.solver_iterations

    def vacuum_trace():
        if evolved:
            return _q_minus(state, wv)[state.vacuum.chart.interface_row]
        if cfg.circulation == 0.0:
            return np.zeros(cfg.plasma_resolution[1])
        vst, vinfo = solve_harmonic_field(state.vacuum, cfg.circulation,
                                          ws["vacuum"],
                                          x0=warm.get("generator"), tol=1e-11)
        warm["generator"] = vinfo["generator"].ravel()
        info["vacuum_iterations"] = vinfo["iterations"]
        info["stage_vacuum"] = vst
        return _q_minus(state, vst.w)[state.vacuum.chart.interface_row]

    def pressure(trace):
        problem = PressureProblem(pressure_rhs(state.plasma,
                                               PlasmaState(u, beta, cfg.mu)),
                                  trace)
        q, qinfo = solve_pressure(state.plasma, problem, ws["pressure"],
                                  x0=warm.get("pressure"), tol=1e-11)
        warm["pressure"] = q.ravel()
        info["pressure_iterations"] = qinfo["iterations"]
        return q

    if coupling == "swapped":
        q_plus = pressure(warm.get("trace", 0.0))
        warm["trace"] = vacuum_trace()
    else:
        warm["trace"] = vacuum_trace()
        q_plus = pressure(warm["trace"])

    stage_state = PlasmaState(u, beta, cfg.mu, q_plus)
    k_u = momentum_rhs(state.plasma, stage_state)
    k_beta = induction_rhs(state.plasma, stage_state)

    k_wv = None
    if evolved:
        u_hat = state.vacuum.pullback_covector(v_hat)
        Xi, _ = solve_electric_field(state.vacuum, u_hat, wv, ws["vacuum"],
                                     x0=warm.get("xi"), tol=1e-11)
        warm["xi"] = Xi.ravel()
        k_wv = vacuum_rate(state.vacuum, wv, Xi, u_hat)
        k_xv = np.zeros_like(xv)
    else:
        k_xv = v_hat
    return v_euler, k_u, k_beta, k_xv, k_wv, info


def step_system(state, config=None, coupling="standard"):
    """Advance the coupled system by one RK4 step of size config.dt.

    Mutates and returns ``state``; a module error raised inside the step is
    re-raised with the step index attached.
    """
    cfg = state.config if config is None else config
    if coupling not in ("standard", "swapped"):
        raise ConfigError(f"unknown coupling order {coupling!r}")
    prepare(state)
    try:
        return _step(state, cfg, coupling)
    except _WRAPPED as exc:
        raise type(exc)(f"step {state.step}: {exc}") from exc


def _step(state, cfg, coupling):
    dt = cfg.dt
    evolved = cfg.vacuum_mode == "evolved"
    ws = state.workspace
    xp0 = state.plasma.x.copy()
    xv0 = state.vacuum.x.copy()
    u0, b0 = state.pstate.u, state.pstate.beta
    wv0 = state.vstate.w

    def rates(frac, kxp, ku, kb, kxv, kwv):
        h = frac * dt
        return _stage_rates(
            state, state.t + h, xp0 + h * kxp, u0 + h * ku, b0 + h * kb,
            xv0 + h * kxv, wv0 if kwv is None else wv0 + h * kwv, coupling)

    k1 = rates(0.0, 0.0, 0.0, 0.0, 0.0, None)
    k2 = rates(0.5, *k1[:5])
    k3 = rates(0.5, *k2[:5])
    k4 = rates(1.0, *k3[:5])

    def combine(y0, i):
        parts = (k1[i], k2[i], k3[i], k4[i])
        if parts[0] is None:
            return y0
        return y0 + (dt / 6.0) * (parts[0] + 2.0 * parts[1]
                                  + 2.0 * parts[2] + parts[3])

    xp = combine(xp0, 0)
    u = combine(u0, 1)
    beta = combine(b0, 2)
    xv = combine(xv0, 3)
    wv = combine(wv0, 4)
    if not np.all(np.isfinite(xp)) or not np.all(np.isfinite(u)) \
            or not np.all(np.isfinite(beta)):
        raise ScenarioError("non-finite state after the update")

    report = {"step": state.step + 1, "t": state.t + dt}
    if not state.plasma_inert:
        state.plasma.set_map(xp)
        row = state.plasma.chart.interface_row
        if not evolved:
            # keep the shared interface nodes bit-identical across charts
            gap = np.abs(xv[:, 0, :] - xp[:, row, :]).max()
            report["interface_gap"] = float(gap)
            xv[:, 0, :] = xp[:, row, :]
            state.vacuum.set_map(xv)
        for solver in ("pressure", "cleaner", "extension", "vacuum"):
            ws[solver].refresh()

        # damp near-grid radial modes, then restore the constraints
        u = state.plasma.chart.radial_smooth(u)
        beta = state.plasma.chart.radial_smooth(beta)
        warm = ws["warm"]
        u, _, du = project_divergence_free(state.plasma, u, ws["cleaner"],
                                           x0=warm.get("clean_u"), tol=1e-11)
        beta, _, db = project_divergence_free(state.plasma, beta,
                                              ws["cleaner"],
                                              x0=warm.get("clean_b"),
                                              tol=1e-11)
        report["projection"] = {"u": du, "beta": db}

    state.pstate.u, state.pstate.beta = u, beta

    # final vacuum field and pressure on the end-of-step geometry
    warm = ws["warm"]
    if evolved:
        circ = circulation(state.vacuum, wv)
        state.vstate = VacuumState(wv, float(circ), Xi=state.vstate.Xi,
                                   mu=cfg.mu)
        defects = vacuum_constraint_defects(state.vacuum, wv)
        scale = 1.0 + float(np.sqrt(np.max(state.vacuum.norm2(wv, 1))))
        if max(defects.values()) > 1e-2 * scale:
            raise ConsistencyError(f"vacuum constraints blew up: {defects}")
        report["vacuum_circulation"] = float(circ)
    elif cfg.circulation != 0.0:
        vst, vinfo = solve_harmonic_field(state.vacuum, cfg.circulation,
                                          ws["vacuum"],
                                          x0=warm.get("generator"), tol=1e-11)
        warm["generator"] = vinfo["generator"].ravel()
        vst.mu = cfg.mu
        state.vstate = vst

    q_minus = _q_minus(state, state.vstate.w)
    if not state.plasma_inert:
        trace = q_minus[state.vacuum.chart.interface_row]
        problem = PressureProblem(pressure_rhs(state.plasma, state.pstate),
                                  trace)
        q_plus, _ = solve_pressure(state.plasma, problem, ws["pressure"],
                                   x0=warm.get("pressure"), tol=1e-11)
        ws["prev_pressure"] = (state.pstate.q_plus, ws.get("last_q_minus"))
        state.pstate.q_plus = q_plus
        ws["last_q_minus"] = q_minus
        state.taylor = taylor_sign(state.plasma, state.vacuum, q_plus, q_minus)

    state.t += dt
    state.step += 1

    defects = dict(constraint_defects(state.plasma, state.pstate))
    defects.update(vacuum_constraint_defects(state.vacuum, state.vstate.w))
    report["constraints"] = {k: float(v) for k, v in defects.items()}
    cfl = cfl_number(state.plasma, state.pstate, dt)
    report["cfl"] = float(cfl)
    if cfl > 0.5 and not ws["cfl_warned"]:
        ws["cfl_warned"] = True
        warnings.warn(f"advective CFL {cfl:.2f} exceeds 0.5; the radial "
                      "filter is carrying the stability margin",
                      StabilityWarning, stacklevel=3)
    for key in ("pressure_iterations", "vacuum_iterations",
                "extension_iterations"):
        if key in k4[5]:
            report[key] = k4[5][key]

    mon = _monitor(state)
    state.monitors.append(mon)
    report["E0"] = float(mon.E[0])
    report["volume"] = mon.vol_omega
    state.step_reports.append(report)
    return state


def _monitor(state):
    """Energy/bound report of the current state."""
    cfg = state.config
    gamma = state.interface_curve()
    geom = compute_geometry(gamma, eps1=cfg.eps1, check=False)
    d0 = cfg.d0_ratio * min(geom.iota0, geom.iota1)
    ctx = build_energy_context(state.plasma, gamma, state.taylor, d0)
    q_minus = _q_minus(state, state.vstate.w)
    E = np.zeros(4)
    E[0] = e0(state.plasma, state.pstate, state.vacuum, state.vstate)
    flags = []
    for r in (1, 2, 3):
        E[r], fl = e_r(state.plasma, state.pstate, r, ctx,
                       vacuum_dom=state.vacuum, q_minus=q_minus)
        flags.extend(f for f in fl if f not in flags)
    prev = state.workspace.get("prev_pressure", (None, None))
    bounds = track_bounds(state.plasma, state.pstate, state.taylor,
                          compute_geometry(gamma, eps1=cfg.eps1, check=False),
                          wall_geom=compute_geometry(state.wall, eps1=cfg.eps1,
                                                     check=False),
                          vacuum_dom=state.vacuum, q_minus=q_minus,
                          q_plus_prev=prev[0], q_minus_prev=prev[1],
                          dt=cfg.dt if prev[0] is not None else None)
    flags.extend(f for f in bounds["flags"] if f not in flags)
    return EnergyReport(t=state.t, E=E, K_cal=bounds["K_cal"],
                        E_cal=bounds["E_cal"], M=bounds["M"], L=bounds["L"],
                        taylor_margin=state.taylor.margin,
                        vol_omega=float(state.plasma.volume()), flags=flags)


def energy_csv(monitors):
    """Deterministic CSV of the per-step energy reports."""
    lines = [ENERGY_HEADER]
    for m in monitors:
        lines.append(",".join(repr(float(v)) for v in
                              (m.t, m.E[0], m.E[1], m.E[2], m.E[3],
                               m.K_cal, m.E_cal, m.taylor_margin)))
    return "\n".join(lines) + "\n"


def bound_witness(monitors, horizon):
    """Largest time with both budgets (energy sum and 1/margin) within 2x."""
    out = theorem_monitor(monitors, horizon=horizon)
    if out["violated"]:
        return out
    cap = 2.0 * monitors[0].E_cal
    T = monitors[0].t
    for m in monitors:
        if float(np.sum(m.E)) > 2.0 * float(np.sum(monitors[0].E)) \
                or m.E_cal > cap:
            break
        T = m.t
    out["T_observed"] = float(min(out["T_observed"], T))
    out["holds_to_horizon"] = bool(horizon is not None
                                   and out["T_observed"] >= horizon)
    return out


def _final_state_rows(dom, fields):
    """Grid dump rows: labels, mapped points, then the named fields."""
    chart = dom.chart
    n_s, n_phi = chart.shape
    header = ["s_index", "phi_index", "y1", "y2", "x1", "x2"]
    cols = [None] * 4
    cols[0], cols[1] = chart.y[0], chart.y[1]
    cols[2], cols[3] = dom.x[0], dom.x[1]
    for name, arr in fields:
        if arr.ndim == 3:
            header += [f"{name}1", f"{name}2"]
            cols += [arr[0], arr[1]]
        else:
            header.append(name)
            cols.append(arr)
    rows = [header]
    for j in range(n_s):
        for k in range(n_phi):
            rows.append([j, k] + [repr(float(c[j, k])) for c in cols])
    return rows


def write_artifacts(artifacts, output_dir):
    """Write the CSV/JSON artifact set; returns the path map."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}

    paths["energy"] = out / "energy.csv"
    paths["energy"].write_text(artifacts.energy_csv)

    paths["steps"] = out / "steps.jsonl"
    with open(paths["steps"], "w") as fh:
        for rep in artifacts.step_reports:
            fh.write(json.dumps(rep, sort_keys=True) + "\n")

    state = artifacts.state
    for tag, dom, fields in (
            ("plasma", state.plasma,
             [("u", state.pstate.u), ("beta", state.pstate.beta),
              ("q", state.pstate.q_plus if state.pstate.q_plus is not None
               else np.zeros(state.plasma.chart.shape))]),
            ("vacuum", state.vacuum, [("w", state.vstate.w)])):
        paths[tag] = out / f"final_{tag}.csv"
        with open(paths[tag], "w", newline="") as fh:
            csv.writer(fh).writerows(_final_state_rows(dom, fields))

    paths["summary"] = out / "summary.json"
    summary = {"config": artifacts.config.as_dict(),
               "theorem": artifacts.theorem,
               "build": _jsonable(state.build_report),
               "flags": sorted({f for m in artifacts.monitors
                                for f in m.flags})}
    paths["summary"].write_text(json.dumps(summary, sort_keys=True, indent=1))
    artifacts.paths = {k: str(v) for k, v in paths.items()}
    return artifacts.paths


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return float(obj)
    return obj


def run(config, coupling="standard"):
    """Build the scenario, run the loop to t_end, assemble the artifacts."""
    state = build_scenario(config)
    prepare(state)
    n_steps = int(round(config.t_end / config.dt))
    n_steps = max(n_steps, 1)
    for _ in range(n_steps):
        step_system(state, coupling=coupling)

    times = [m.t for m in state.monitors]
    if len(times) != n_steps + 1 or any(b <= a for a, b in
                                        zip(times, times[1:])):
        raise ScenarioError("monitor series is incomplete or non-monotone")

    artifacts = RunArtifacts(config=config, state=state,
                             monitors=state.monitors,
                             step_reports=state.step_reports,
                             theorem=bound_witness(state.monitors,
                                                   horizon=state.t),
                             energy_csv=energy_csv(state.monitors))
    if config.output_dir is not None:
        write_artifacts(artifacts, config.output_dir)
    return artifacts


def compare_vacuum_modes(config, n_steps=5):
    """Run both vacuum modes from one build; report how far they separate.

    The constrained run re-solves the harmonic field on the advected
    geometry; the evolved run integrates the induction law on the reference
    map.  Returns sup differences of the vacuum field and of its interface
    pressure trace after ``n_steps`` steps.
    """
    results = {}
    for mode in ("constrained", "evolved"):
        cfg = ScenarioConfig.from_mapping(
            {**config.as_dict(), "vacuum_mode": mode, "output_dir": None})
        state = build_scenario(cfg)
        prepare(state)
        for _ in range(n_steps):
            step_system(state)
        results[mode] = state
    wc = results["constrained"].vstate.w
    we = results["evolved"].vstate.w
    qc = _q_minus(results["constrained"], wc)[0]
    qe = _q_minus(results["evolved"], we)[0]
    scale = max(np.abs(wc).max(), np.abs(we).max(), 1e-30)
    return {"w_sup_diff": float(np.abs(wc - we).max()),
            "w_rel_diff": float(np.abs(wc - we).max() / scale),
            "trace_sup_diff": float(np.abs(qc - qe).max()),
            "steps": n_steps}


# -- refinement study ---------------------------------------------------------

_STUDY_CHECKS = ("gauss", "pressure_mms", "stationarity")


def _study_field(dom):
    """Smooth transcendental covariant field on the mapped coordinates."""
    x = dom.x
    w_euler = np.stack([np.exp(0.4 * np.sin(2.0 * x[0]) - 0.3 * np.cos(x[1])),
                        np.sin(x[0] + 2.0 * x[1])])
    return dom.pullback_covector(w_euler)


def _study_level(config, n_s, n_phi, checks, n_probe):
    scale_v = config.vacuum_resolution[0] / config.plasma_resolution[0]
    cfg = ScenarioConfig.from_mapping({
        **config.as_dict(), "output_dir": None,
        "plasma_resolution": [n_s, n_phi],
        "vacuum_resolution": [max(16, int(round(scale_v * n_s))), n_phi]})
    state = build_scenario(cfg)
    out = {}
    if "gauss" in checks:
        rep = check_gauss(state.plasma, _study_field(state.plasma))
        out["gauss"] = rep.residual
    if "pressure_mms" in checks:
        x = state.plasma.x
        q_exact = np.exp(x[0]) * np.cos(2.0 * x[1])
        rhs = -3.0 * q_exact
        row = state.plasma.chart.interface_row
        q, _ = solve_pressure(state.plasma,
                              PressureProblem(rhs, q_exact[row]), tol=1e-12)
        num = np.sqrt(state.plasma.quad((q - q_exact) ** 2))
        den = np.sqrt(state.plasma.quad(q_exact ** 2))
        out["pressure_mms"] = float(num / den)
    if "stationarity" in checks:
        prepare(state)
        u0 = state.pstate.u.copy()
        b0 = state.pstate.beta.copy()
        x0 = state.plasma.x.copy()
        for _ in range(n_probe):
            step_system(state)
        scale = max(np.abs(b0).max(), np.abs(u0).max(), 1.0)
        drift = max(np.abs(state.pstate.u - u0).max(),
                    np.abs(state.pstate.beta - b0).max(),
                    np.abs(state.plasma.x - x0).max())
        out["stationarity"] = float(drift / scale)
    return out


def refine_study(config, levels=3, n_probe=3):
    """Residuals and Richardson orders across grid-doubled resolutions.

    ``levels`` is a level count (doubling from the configured resolution)
    or an explicit list of (radial, angular) pairs; at least two levels.
    Each level runs the checks enabled in ``config.checks``: the divergence
    theorem defect of a smooth field, a manufactured pressure solve, and
    the ``n_probe``-step stationarity drift.  Rows flag non-monotone
    residual sequences (order unreliable) and noise-floor saturation
    (order n/a).
    """
    if isinstance(levels, int):
        n_s, n_phi = config.plasma_resolution
        levels = [(n_s * 2 ** k, n_phi * 2 ** k) for k in range(levels)]
    levels = [tuple(int(v) for v in pair) for pair in levels]
    if len(levels) < 2:
        raise ConfigError("a refinement study needs at least two levels")
    checks = [c for c in config.checks if c in _STUDY_CHECKS]
    if not checks:
        raise ConfigError("no refinement checks enabled; pick from "
                          + ", ".join(_STUDY_CHECKS))

    with ThreadPoolExecutor(max_workers=min(len(levels), 4)) as pool:
        futures = [pool.submit(_study_level, config, n_s, n_phi, checks,
                               n_probe) for n_s, n_phi in levels]
        per_level = [f.result() for f in futures]

    table = []
    for check in checks:
        res = [lev[check] for lev in per_level]
        note = ""
        order = None
        floor = 100.0 * 1e-11
        if max(res) <= floor:
            note = "at_floor"
        elif res[-1] > res[0]:
            note = "non-monotone"
        else:
            a, b = max(res[-2], 1e-300), max(res[-1], 1e-300)
            if b > a:
                note = "non-monotone"
            else:
                order = float(np.log2(a / b))
        table.append({"check": check, "levels": [list(l) for l in levels],
                      "residuals": [float(r) for r in res],
                      "order": order, "note": note})
    return table


def format_study(table):
    """Plain-text rendering of a refinement table."""
    lines = []
    for row in table:
        res = " ".join(f"{r:.3e}" for r in row["residuals"])
        order = "n/a" if row["order"] is None else f"{row['order']:.2f}"
        note = f"  [{row['note']}]" if row["note"] else ""
        lines.append(f"{row['check']:<16} {res}  order={order}{note}")
    return "\n".join(lines)
