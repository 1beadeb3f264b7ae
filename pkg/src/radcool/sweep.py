"""Single runs, parameter sweeps and optimum searches, with flat-file persistence.

Layout under an output directory::

    runs/<id>/manifest.json   parameters, settings, digests and summary
    runs/<id>/series.csv      sampled time series
    sweeps/<name>/table.csv   one row per axis value

Run ids are content hashes of parameters and settings, so a rerun of the same
point reuses the stored manifest instead of recomputing.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analytics import limit_phonon, prior_strong_prediction, prior_weak_prediction
from .gaussian import GaussianState, InconsistentMomentsError, to_gaussian
from .model import InvalidParameterError, SystemParams, solve_for_J
from .observables import (
    PhononDecomposition,
    PhotonDecomposition,
    Regime,
    StabilizationReport,
    coherent_displacement,
    detect_stabilization,
    phonon_decomposition,
    photon_decomposition,
)
from .propagator import MeanTrajectory, Scheme, default_step, initial_second_moments, simulate

__all__ = [
    "SERIES_HEADER",
    "TABLE_HEADER",
    "RunSettings",
    "RunResult",
    "SweepSpec",
    "SweepTable",
    "OptimumResult",
    "run_id",
    "run_scenario",
    "write_run",
    "point_params",
    "sweep",
    "find_optimum_J",
]

SERIES_HEADER = ("t", "n_m_total", "n_m_sys", "n_m_cav", "n_m_bs", "n_m_sq",
                 "n_photon_total", "n_photon_coh", "q_m0", "p_m0")
TABLE_HEADER = ("curve_value", "axis_value", "J", "n_mf", "t_s", "regime", "n_m_sys",
                "n_m_cav", "n_m_bs", "n_m_sq", "n_photon", "t_s_photon", "diverged_at",
                "run_id", "error")
OVERLAYS = ("prior_weak", "prior_strong", "limit")


@dataclass(frozen=True)
class RunSettings:
    """Integration and detection settings shared by the points of a sweep.

    ``dt=None`` selects :func:`default_step` for each point.
    """

    t_end: float = 400.0
    dt: float | None = None
    scheme: str = Scheme.MIDPOINT_EXP.value
    sample_every: float = 0.05
    window: float = 50.0
    rel_tol: float = 1e-3

    def __post_init__(self):
        Scheme(self.scheme)
        if not self.t_end > 0 or not self.sample_every > 0 or not self.window > 0:
            raise InvalidParameterError("t_end, sample_every and window must be positive")
        if self.dt is not None and not self.dt > 0:
            raise InvalidParameterError("dt must be positive")

    def as_dict(self):
        return dataclasses.asdict(self)


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=float)


def run_id(params: SystemParams, settings: RunSettings) -> str:
    blob = _canonical({"params": dataclasses.asdict(params), "settings": settings.as_dict()})
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class RunResult:
    params: SystemParams
    settings: RunSettings
    run_id: str
    phonon: PhononDecomposition
    photon: PhotonDecomposition
    mean: MeanTrajectory
    report: StabilizationReport
    photon_report: StabilizationReport
    initial_state: GaussianState
    final_state: GaussianState | None
    diverged_at: float | None = None

    @property
    def t(self):
        return self.phonon.t

    @property
    def heating(self) -> bool:
        return self.report.regime is Regime.HEATING

    def summary(self) -> dict:
        """Scalar outcome of the run, as stored in the manifest and sweep rows."""
        last = self._last_window()
        ph = self.phonon
        return {
            "J": self.params.J,
            "n_mf": self.report.n_mf,
            "t_s": self.report.t_s,
            "regime": self.report.regime.value,
            "n_m_sys": _tail_mean(ph.n_s, last),
            "n_m_cav": _tail_mean(ph.n_n_cav, last),
            "n_m_bs": _tail_mean(ph.n_n_mech_bs, last),
            "n_m_sq": _tail_mean(ph.n_n_mech_sq, last),
            "n_photon": _tail_mean(self.photon.n_total, last),
            "t_s_photon": self.photon_report.t_s,
            "diverged_at": self.diverged_at,
        }

    def _last_window(self):
        dt = self.t[1] - self.t[0] if len(self.t) > 1 else 1.0
        return max(1, int(round(self.settings.window / dt)))


def _tail_mean(x, n):
    x = np.asarray(x)
    if x.size == 0:
        return None
    with np.errstate(over="ignore", invalid="ignore"):
        v = float(np.mean(x[-n:]))
    return v if math.isfinite(v) else None


def run_scenario(params: SystemParams, settings: RunSettings | None = None,
                 out_dir=None) -> RunResult:
    """Simulate one parameter point and classify it.

    A diverging propagation is not an error: the samples before the bad
    step are kept, ``diverged_at`` is set and the regime is heating.
    """
    settings = settings or RunSettings()
    dt = settings.dt or default_step(params)
    sample = max(dt, settings.sample_every)
    prop = simulate(params, settings.t_end, dt, settings.scheme, sample_every=sample,
                    raise_on_divergence=False)
    phonon = phonon_decomposition(prop.moments, prop.grid, params)
    photon = photon_decomposition(prop.moments, prop.mean, params)
    dt_sample = dt * prop.grid.stride

    if prop.diverged_at is not None:
        report = StabilizationReport(Regime.HEATING, None, None, settings.window, True)
        photon_report = report
    else:
        report = detect_stabilization(phonon.n_total, dt_sample, n_sys=phonon.n_s,
                                      n_th=params.n_th, window=settings.window,
                                      rel_tol=settings.rel_tol)
        thermal_photons = photon.n_sys + photon.n_noise
        photon_report = detect_stabilization(thermal_photons, dt_sample, n_sys=photon.n_sys,
                                             n_th=params.n_th, window=settings.window,
                                             rel_tol=settings.rel_tol)

    initial = to_gaussian(initial_second_moments(params))
    final = None
    if prop.diverged_at is None:
        mean4 = prop.mean.c_mean[-1].copy()
        shift = coherent_displacement(params, prop.moments.t[-1])
        mean4[0] += shift
        mean4[1] += np.conj(shift)
        try:
            final = to_gaussian(prop.moments.G[-1], mean4)
        except InconsistentMomentsError:  # runaway heating loses the commutators
            final = None

    result = RunResult(params, settings, run_id(params, settings), phonon, photon, prop.mean,
                       report, photon_report, initial, final, prop.diverged_at)
    if out_dir is not None:
        write_run(result, out_dir)
    return result


def write_run(result: RunResult, out_dir) -> Path:
    """Write ``runs/<id>/manifest.json`` and ``runs/<id>/series.csv``."""
    run_dir = Path(out_dir) / "runs" / result.run_id
    run_dir.mkdir(parents=True, exist_ok=True)
    ph, pt = result.phonon, result.photon
    cols = np.column_stack([
        ph.t, ph.n_total, ph.n_s, ph.n_n_cav, ph.n_n_mech_bs, ph.n_n_mech_sq,
        pt.n_total, pt.n_coh, result.mean.q_m0, result.mean.p_m0,
    ])
    series = run_dir / "series.csv"
    np.savetxt(series, cols, delimiter=",", header=",".join(SERIES_HEADER), comments="",
               fmt="%.12g")
    digest = hashlib.sha256(series.read_bytes()).hexdigest()
    manifest = {
        "run_id": result.run_id,
        "params": dataclasses.asdict(result.params),
        "settings": result.settings.as_dict(),
        "summary": result.summary(),
        "digests": {"series.csv": digest},
    }
    (run_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return run_dir


def _stored_summary(out_dir, rid):
    if out_dir is None:
        return None
    path = Path(out_dir) / "runs" / rid / "manifest.json"
    if not path.exists():
        return None
    try:
        return json.loads(path.read_text())["summary"]
    except (ValueError, KeyError):
        return None


@dataclass(frozen=True)
class SweepSpec:
    """One-parameter family of runs.

    Parameters
    ----------
    axis : str
        A :class:`SystemParams` field, ``"J"`` (solved through ``vary``),
        ``"s_m"`` (alias of ``omega_m``) or ``"Gamma_m"`` (alias of ``gamma_m``).
    hold_J : float, optional
        Re-solve the drive (or ``g``) at every point to keep this ``J``.
    delta_rel : float, optional
        Keep ``delta = delta_rel * omega_m`` at every point.
    overlays : tuple of str
        Reference curves added as table columns: ``prior_weak``,
        ``prior_strong``, ``limit``.
    curve : tuple, optional
        ``(name, values)`` of a second parameter; the axis is swept once for
        each of its values and rows are ordered curve by curve.
    """

    name: str
    base: SystemParams
    axis: str
    values: tuple
    settings: RunSettings = field(default_factory=RunSettings)
    hold_J: float | None = None
    vary: str = "E"
    delta_rel: float | None = None
    outputs: tuple = ("phonon", "photon")
    overlays: tuple = ()
    curve: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", _finite_tuple(self.values, "axis"))
        unknown = set(self.overlays) - set(OVERLAYS)
        if unknown:
            raise InvalidParameterError(f"unknown overlays {sorted(unknown)}")
        _axis_field(self.axis)
        if self.curve is not None:
            name, vals = self.curve
            if name == "J" or _axis_field(name) == _axis_field(self.axis):
                raise InvalidParameterError("curve parameter must differ from the axis and J")
            object.__setattr__(self, "curve", (name, _finite_tuple(vals, "curve")))

    def keys(self):
        """``(curve_value, axis_value)`` pairs in table order."""
        curves = (None,) if self.curve is None else self.curve[1]
        return [(c, v) for c in curves for v in self.values]

    def points(self):
        return [point_params(self, v, c) for c, v in self.keys()]

    def settings_hash(self) -> str:
        blob = _canonical({
            "base": dataclasses.asdict(self.base), "axis": self.axis, "values": self.values,
            "settings": self.settings.as_dict(), "hold_J": self.hold_J, "vary": self.vary,
            "delta_rel": self.delta_rel, "curve": self.curve,
        })
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


_ALIASES = {"s_m": "omega_m", "Gamma_m": "gamma_m", "E": "drive_E"}


def _finite_tuple(values, what):
    vals = tuple(float(v) for v in values)
    if not vals or not all(math.isfinite(v) for v in vals):
        raise InvalidParameterError(f"{what} values must be finite and nonempty")
    return vals


def _axis_field(axis):
    if axis == "J":
        return "J"
    name = _ALIASES.get(axis, axis)
    if name not in {f.name for f in dataclasses.fields(SystemParams)} or name == "kappa":
        raise InvalidParameterError(f"unknown sweep axis {axis!r}")
    return name


def point_params(spec: SweepSpec, value, curve_value=None) -> SystemParams:
    """Parameters of the sweep point at axis ``value`` (on curve ``curve_value``)."""
    name = _axis_field(spec.axis)
    p = spec.base
    if curve_value is not None:
        p = p.replace(**{_axis_field(spec.curve[0]): curve_value})
    if name == "J":
        if spec.delta_rel is not None:
            p = p.replace(delta=spec.delta_rel * p.omega_m)
        return solve_for_J(p, value, spec.vary)
    p = p.replace(**{name: value})
    if spec.delta_rel is not None:
        p = p.replace(delta=spec.delta_rel * p.omega_m)
    if spec.hold_J is not None:
        p = solve_for_J(p, spec.hold_J, spec.vary)
    return p


def _overlay_values(params, overlays):
    out = {}
    if "prior_weak" in overlays:
        out["prior_weak"] = prior_weak_prediction(params).n_mf_weak
    if "prior_strong" in overlays:
        out["prior_strong"] = prior_strong_prediction(params)
    if "limit" in overlays:
        Gm = params.gamma_m / params.kappa
        out["limit"] = limit_phonon(params.J, Gm, params.n_th) if 0 < Gm < 1 else None
    return out


def _run_point(params, settings, out_dir):
    rid = run_id(params, settings)
    stored = _stored_summary(out_dir, rid)
    if stored is not None:
        return rid, stored, None
    try:
        res = run_scenario(params, settings, out_dir)
    except Exception as exc:  # recorded in the table, the sweep goes on
        return rid, None, f"{type(exc).__name__}: {exc}"
    return rid, res.summary(), None


@dataclass(frozen=True)
class SweepTable:
    name: str
    axis: str
    rows: list
    settings_hash: str
    columns: tuple = TABLE_HEADER

    def column(self, key):
        return np.array([np.nan if r.get(key) is None else r[key] for r in self.rows],
                        dtype=float)

    def to_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns)
            for r in self.rows:
                w.writerow(["" if r.get(c) is None else _fmt(r[c]) for c in self.columns])
        return path


def _fmt(v):
    return f"{v:.12g}" if isinstance(v, float) else str(v)


def sweep(spec: SweepSpec, workers=1, out_dir=None) -> SweepTable:
    """Run every axis point; rows follow axis order whatever the completion order.

    Points that raise are kept as rows with regime ``"error"`` and the
    message in ``error``.
    """
    if out_dir is None:
        out_dir = os.environ.get("RADCOOL_OUT") or None
    keys = spec.keys()
    points = []
    for c, v in keys:
        try:
            points.append(point_params(spec, v, c))
        except InvalidParameterError as exc:
            points.append(exc)

    jobs = [(i, p) for i, p in enumerate(points) if isinstance(p, SystemParams)]
    results = {}
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = {i: pool.submit(_run_point, p, spec.settings, out_dir) for i, p in jobs}
            results = {i: f.result() for i, f in futs.items()}
    else:
        results = {i: _run_point(p, spec.settings, out_dir) for i, p in jobs}

    rows = []
    for i, (c, v) in enumerate(keys):
        row = dict.fromkeys(TABLE_HEADER)
        row["curve_value"] = c
        row["axis_value"] = v
        p = points[i]
        if not isinstance(p, SystemParams):
            row.update(regime="error", error=str(p))
        else:
            rid, summary, err = results[i]
            row["run_id"] = rid
            row["J"] = p.J
            if err is not None:
                row.update(regime="error", error=err)
            else:
                row.update(summary)
            row.update(_overlay_values(p, spec.overlays))
        rows.append(row)

    cols = TABLE_HEADER + tuple(o for o in OVERLAYS if o in spec.overlays)
    table = SweepTable(spec.name, spec.axis, rows, spec.settings_hash(), cols)
    if out_dir is not None:
        table.to_csv(Path(out_dir) / "sweeps" / spec.name / "table.csv")
    return table


@dataclass(frozen=True)
class OptimumResult:
    """``status`` is ``"found"`` or ``"not_found"``; ``evaluations`` maps J to n_mf."""

    J_opt: float | None
    n_mf_min: float | None
    status: str
    evaluations: dict


def find_optimum_J(base: SystemParams, s_m, J_range=(0.1, 3.0), tol=1e-2, *,
                   settings=None, n_scan=12, vary="E") -> OptimumResult:
    """Minimize the stabilized phonon number over ``J`` at fixed ``omega_m = s_m``.

    A uniform scan from the low end stops at the first point that is not a
    cooling run; the best scanned point is then refined by golden-section
    search inside its neighbouring bracket until the bracket is below ``tol``.
    """
    settings = settings or RunSettings()
    p0 = base.replace(omega_m=float(s_m), delta=float(s_m) * base.delta / base.omega_m)
    evals = {}

    def n_mf(J):
        if J not in evals:
            res = run_scenario(solve_for_J(p0, J, vary), settings)
            ok = res.report.regime is Regime.COOLING
            evals[J] = res.report.n_mf if ok else None
        return evals[J]

    grid = np.linspace(J_range[0], J_range[1], n_scan)
    scanned = []
    for J in grid:
        v = n_mf(float(J))
        if v is None:
            break
        scanned.append((float(J), v))
    if not scanned:
        return OptimumResult(None, None, "not_found", evals)

    k = int(np.argmin([v for _, v in scanned]))
    step = grid[1] - grid[0] if len(grid) > 1 else 0.0
    a = max(J_range[0], scanned[k][0] - step)
    b = scanned[k][0] + step if k + 1 < len(scanned) else scanned[k][0]

    def f(J):
        v = n_mf(J)
        return math.inf if v is None else v

    inv_phi = (math.sqrt(5) - 1) / 2
    c, d = b - inv_phi * (b - a), a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    best = min(((J, v) for J, v in evals.items() if v is not None), key=lambda jv: jv[1])
    return OptimumResult(best[0], best[1], "found", evals)
