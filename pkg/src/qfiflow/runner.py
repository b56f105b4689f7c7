"""Scenario execution and report files."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import models
from .config import ScenarioConfig, emit_config
from .dynamics import DissipativeChannel, StepperConfig, TimeLocalGenerator, co_integrate
from .errors import InvariantViolation, NonpositiveQfi, QfiFlowError, StepSizeUnderflow
from .operators import (
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    matrix_to_bloch,
)
from .qfi_flow import analyze_trajectory, cramer_rao_bound, witness

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVARIANT = 2
EXIT_CONFIG = 3
EXIT_SINGULARITY = 4

FLOW_IDENTITY_TOL = 1e-8
SUBFLOW_FACTOR_TOL = 1e-10
ANALYTIC_MATCH_TOL = 1e-6

_JUMPS = {
    "sigma_minus": SIGMA_MINUS,
    "sigma_plus": SIGMA_PLUS,
    "sigma_x": SIGMA_X,
    "sigma_y": SIGMA_Y,
    "sigma_z": SIGMA_Z,
}


@dataclass
class RunReport:
    config: ScenarioConfig
    columns: list
    rows: np.ndarray
    witness: object = None
    qcr_table: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    exit_status: int = EXIT_OK
    error: str | None = None

    def column(self, name):
        return self.rows[:, self.columns.index(name)]

    def to_csv(self, columns=None):
        cols = list(columns) if columns else self.columns
        idx = [self.columns.index(c) for c in cols]
        lines = [",".join(cols)]
        for row in self.rows:
            lines.append(",".join(format(float(row[i]), ".17g") for i in idx))
        return "\n".join(lines) + "\n"

    def summary_text(self):
        lines = [f"exit_status: {self.exit_status}"]
        if self.error:
            lines.append(f"error: {self.error}")
        if self.witness is not None:
            w = self.witness
            lines.append(f"witness_eps: {w.eps:.17g}")
            lines.append(f"inward_interval_count: {len(w.inward_intervals)}")
            intervals = ";".join(f"{a:.17g}-{b:.17g}" for a, b in w.inward_intervals)
            lines.append(f"inward_intervals: {intervals}")
            lines.append(f"accumulated_inward: {w.accumulated_inward:.17g}")
            lines.append("accumulated_inward_note: ad hoc aggregate (integral of positive flow), "
                         "not an established non-Markovianity measure")
            lines.append(f"markovian_consistent: {str(w.is_markovian_consistent).lower()}")
        for entry in self.qcr_table:
            m = entry["M"]
            lines.append(f"qcr_bound_final_M{m}: {entry['final']}")
            lines.append(f"qcr_bound_best_M{m}: {entry['best']}")
            lines.append(f"qcr_bound_best_time_M{m}: {entry['best_time']:.17g}")
        for key, value in self.provenance.items():
            if key == "config":
                continue
            if isinstance(value, float):
                value = format(value, ".17g")
            elif isinstance(value, bool):
                value = str(value).lower()
            lines.append(f"{key}: {value}")
        for line in self.provenance.get("config", "").splitlines():
            lines.append(f"config.{line.split('=', 1)[0].strip()}: {line.split('=', 1)[1].strip()}")
        return "\n".join(lines) + "\n"


def time_grid(t_max, dt):
    n = max(1, math.ceil(t_max / dt - 1e-9))
    return np.linspace(0.0, t_max, n + 1)


def custom_generator(config):
    hx, hy, hz = config.hamiltonian
    ham = None
    if any(config.hamiltonian):
        ham = 0.5 * (hx * SIGMA_X + hy * SIGMA_Y + hz * SIGMA_Z)
    channels = tuple(DissipativeChannel(spec.rate, _JUMPS[spec.operator], spec.operator)
                     for spec in config.channels)
    return TimeLocalGenerator(2, channels, ham)


def _stepper(config, dt):
    return StepperConfig(dt=dt, method=config.stepper, tol=config.tol)


def _qcr_table(times, F, m_values):
    table = []
    best = int(np.argmax(F))
    for m in m_values:
        entry = {"M": m, "best_time": float(times[best])}
        for label, value in (("final", F[-1]), ("best", F[best])):
            try:
                entry[label] = format(cramer_rao_bound(float(value), m), ".17g")
            except NonpositiveQfi:
                entry[label] = "undefined (QFI is zero)"
        table.append(entry)
    return table


def run_scenario(config):
    """Integrate one scenario and evaluate QFI, flows and the inward-flow witness.

    Engine errors do not propagate: they set ``exit_status`` and ``error`` on
    the returned report so the caller can still write what was computed.
    """
    dt = config.effective_dt
    times = time_grid(config.t_max, dt)
    stepper = _stepper(config, times[1] - times[0])
    provenance = {"config": emit_config(config), "dt": float(times[1] - times[0]),
                  "grid_points": len(times)}
    f_exact = None
    integrated = np.ones(len(times), dtype=bool)
    try:
        if config.model == "damped_jc":
            params = models.DampedJCParams(config.W, config.lam, config.phi)
            keep = np.abs(models.h_function(times, params)) > models.RATE_GUARD
            if not np.all(keep):
                logger.info("omitting %d rows where the rate is undefined", np.count_nonzero(~keep))
                times = times[keep]
            gen = models.build_generator(params)
            traj, integrated = models.propagate(params, times, stepper)
            f_exact = models.analytic_qfi(times, params)
            provenance["regime"] = params.regime
        else:
            if config.model == "markov_control":
                gen = models.markov_control(config.gamma0)
            else:
                gen = custom_generator(config)
            traj = co_integrate(gen, models.optimal_probe(config.phi),
                                models.probe_param_deriv(config.phi), times, stepper, theta=config.phi)
            if config.model == "markov_control":
                f_exact = models.markov_control_qfi(times, config.gamma0)
        flows = analyze_trajectory(gen, traj)
    except StepSizeUnderflow as exc:
        return RunReport(config, [], np.empty((0, 0)), provenance=provenance,
                         exit_status=EXIT_SINGULARITY, error=str(exc))
    except (InvariantViolation, QfiFlowError) as exc:
        return RunReport(config, [], np.empty((0, 0)), provenance=provenance,
                         exit_status=EXIT_INVARIANT, error=str(exc))

    provenance.update({f"stepper.{k}": v for k, v in traj.stats.items()})
    F = flows.qfi
    decomposed = flows.decomposed
    columns = ["t", "F_numeric"]
    data = [times, F]
    if f_exact is not None:
        columns.append("F_analytic")
        data.append(f_exact)
    columns += ["I_direct", "I_decomposed"]
    data += [flows.direct, decomposed]
    names = [ch.name or f"ch{i}" for i, ch in enumerate(gen.channels)]
    for i, name in enumerate(names):
        columns += [f"gamma_{i}", f"J_{i}", f"I_{i}"]
        data += [np.array([s.channels[i].gamma for s in flows.samples]),
                 np.array([s.channels[i].J for s in flows.samples]),
                 np.array([s.channels[i].I for s in flows.samples])]
    bloch = np.array([matrix_to_bloch(r) for r in traj.states])
    columns += ["Bx", "By", "Bz", "integrated"]
    data += [bloch[:, 0], bloch[:, 1], bloch[:, 2], integrated.astype(float)]
    rows = np.column_stack(data)

    identity_gap = np.abs(flows.direct - decomposed) / (1.0 + np.abs(decomposed))
    max_j = max((c.J for s in flows.samples for c in s.channels), default=0.0)
    provenance["channels"] = ",".join(names)
    provenance["max_flow_identity_gap"] = float(np.max(identity_gap))
    provenance["flow_identity_ok"] = bool(np.max(identity_gap) <= FLOW_IDENTITY_TOL)
    provenance["max_subflow_factor"] = float(max_j)
    provenance["subflow_factors_nonpositive"] = bool(max_j <= SUBFLOW_FACTOR_TOL)
    ok = provenance["flow_identity_ok"] and provenance["subflow_factors_nonpositive"]
    if f_exact is not None:
        gap = float(np.max(np.abs(F - f_exact)[integrated], initial=0.0))
        provenance["max_qfi_analytic_gap"] = gap
        provenance["qfi_matches_analytic"] = gap <= ANALYTIC_MATCH_TOL
        ok = ok and gap <= ANALYTIC_MATCH_TOL

    series = witness(flows.samples, config.witness_eps)
    report = RunReport(config, columns, rows, series, _qcr_table(times, F, config.M_values),
                       provenance, EXIT_OK if ok else EXIT_INVARIANT)
    if not ok:
        report.error = "tolerance check failed; see provenance flags"
    return report


def write_report(report, out_dir, prefix=""):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if report.rows.size:
        cols = list(report.config.outputs) or None
        _write(out / f"{prefix}trajectory.csv", report.to_csv(cols))
    _write(out / f"{prefix}summary.txt", report.summary_text())


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def run_sweep(config, max_workers=None):
    """Run every entry of the sweep plan concurrently; results keep plan order."""
    plan = config.sweep_plan()
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(zip(plan, pool.map(run_scenario, plan)))


def write_sweep(config, results, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    index = [f"{config.sweep_param},directory,exit_status"]
    for k, (entry, report) in enumerate(results):
        value = config.sweep_values[k]
        sub = f"{config.sweep_param}={value!r}"
        write_report(report, out / sub)
        index.append(f"{value!r},{sub},{report.exit_status}")
    _write(out / "sweep_index.csv", "\n".join(index) + "\n")
    return max(r.exit_status for _, r in results)


FIG2_PANELS = {
    "a": ("weak", "I_decomposed", "fig2a_flow_weak.csv", "qfi_flow"),
    "b": ("weak", "gamma_0", "fig2b_rate_weak.csv", "gamma"),
    "c": ("strong", "I_decomposed", "fig2c_flow_strong.csv", "qfi_flow"),
    "d": ("strong", "gamma_0", "fig2d_rate_strong.csv", "gamma"),
}


def fig2_panels(lam=1.0, weak_W=0.3, strong_W=3.0, t_max=10.0, dt=None, phi=0.0):
    """Data for the four flow/rate panels in the weak and strong coupling regimes.

    Time and values are rescaled by the spectral width (``lambda t``,
    ``I / lambda``, ``gamma / lambda``). Rate rows inside guard bands are
    omitted. Returns ``{panel: (array of (lambda_t, value) rows, omitted count)}``
    and the two underlying reports.
    """
    t_max_abs = t_max / lam
    dt_abs = (dt if dt is not None else 1e-3) / lam
    reports = {}
    for regime, w in (("weak", weak_W), ("strong", strong_W)):
        cfg = ScenarioConfig(model="damped_jc", W=w * lam, lam=lam, phi=phi, t_max=t_max_abs, dt=dt_abs)
        reports[regime] = run_scenario(cfg)
    panels = {}
    for key, (regime, column, _, _) in FIG2_PANELS.items():
        rep = reports[regime]
        if rep.exit_status not in (EXIT_OK,):
            raise QfiFlowError(f"{regime} run failed: {rep.error}")
        lt = rep.column("t") * lam
        values = rep.column(column) / lam
        keep = np.ones(len(lt), dtype=bool)
        if column.startswith("gamma"):
            keep = rep.column("integrated") > 0.5
            omitted = int(np.count_nonzero(~keep))
            if omitted:
                logger.info("panel %s: omitted %d rate rows inside guard bands", key, omitted)
        panels[key] = (np.column_stack([lt[keep], values[keep]]), int(np.count_nonzero(~keep)))
    return panels, reports


def emit_fig2_panels(out_dir, **kwargs):
    """Write the four panel files; returns their paths."""
    panels, _ = fig2_panels(**kwargs)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    log = []
    for key, (_, _, filename, label) in FIG2_PANELS.items():
        data, omitted = panels[key]
        text = f"lambda_t,{label}\n" + "".join(
            f"{format(x, '.17g')},{format(y, '.17g')}\n" for x, y in data)
        _write(out / filename, text)
        paths.append(out / filename)
        log.append(f"panel_{key}_rows: {len(data)}")
        log.append(f"panel_{key}_omitted_guard_band_rows: {omitted}")
    _write(out / "fig2_log.txt", "\n".join(log) + "\n")
    return paths
