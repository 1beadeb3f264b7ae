"""Command-line entry point.

Commands::

    radcool simulate --config run.cfg     one run, written under runs/<id>/
    radcool sweep    --config sweep.cfg   one-parameter sweep, sweeps/<name>/table.csv
    radcool limit    --J 0.6 --gamma-m 1e-3 --n-th 100
    radcool spectrum --config run.cfg     cavity noise spectrum of a stabilized run
    radcool figure   fig2b                preset sweep for one figure
    radcool validate --config run.cfg     check a config and list every violation

Config files are flat ``key = value`` text; ``#`` starts a comment.
Exit codes: 0 success, 1 invalid input, 2 numerical divergence.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .analytics import limit_branch, limit_phonon
from .gaussian import wigner_grid
from .model import InvalidParameterError, SystemParams, solve_for_J
from .propagator import Scheme
from .spectrum import NotStabilizedError, noise_spectrum, two_time_correlation
from .sweep import RunSettings, SweepSpec, run_scenario, sweep

__all__ = [
    "ConfigError",
    "RunConfig",
    "SweepConfig",
    "PRESET_IDS",
    "PRESET_DEFAULTS",
    "parse_and_validate",
    "parse_sweep_config",
    "emit",
    "figure_preset",
    "main",
]

EXIT_OK, EXIT_INVALID, EXIT_DIVERGED = 0, 1, 2
DEFAULT_OUT = "radcool_out"

RATE_KEYS = ("g", "gamma_m", "omega_m", "delta", "drive_E", "J", "n_th")
SETTING_KEYS = ("t_end", "dt", "scheme", "sample_every", "window", "tau_max")
CONFIG_KEYS = RATE_KEYS + SETTING_KEYS + ("outputs",)
SWEEP_KEYS = ("name", "axis", "values", "hold_J", "curve", "curve_values")
OUTPUTS = ("phonon", "photon", "displacement", "gaussian", "spectrum")


class ConfigError(ValueError):
    """Carries every violation found in a config document."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class RunConfig:
    """Validated single-run config.

    Exactly one of ``drive_E`` and ``J`` is set; ``delta`` defaults to
    ``omega_m`` and ``dt=None`` to the automatic step.
    """

    g: float
    gamma_m: float
    omega_m: float
    delta: float
    n_th: float
    drive_E: float | None = None
    J: float | None = None
    t_end: float = 400.0
    dt: float | None = None
    scheme: str = Scheme.MIDPOINT_EXP.value
    sample_every: float = 0.05
    window: float = 50.0
    tau_max: float = 250.0
    outputs: tuple = ("phonon", "photon")

    def params(self) -> SystemParams:
        p = SystemParams(g=self.g, gamma_m=self.gamma_m, omega_m=self.omega_m,
                         delta=self.delta, drive_E=self.drive_E or 0.0, n_th=self.n_th)
        return p if self.J is None else solve_for_J(p, self.J)

    def settings(self) -> RunSettings:
        return RunSettings(t_end=self.t_end, dt=self.dt, scheme=self.scheme,
                           sample_every=self.sample_every, window=self.window)


@dataclass(frozen=True)
class SweepConfig:
    run: RunConfig
    name: str
    axis: str
    values: tuple
    hold_J: float | None = None
    curve: tuple | None = None

    def spec(self) -> SweepSpec:
        hold = self.hold_J
        if hold is None and self.run.J is not None and self.axis != "J":
            hold = self.run.J
        return SweepSpec(self.name, self.run.params(), self.axis, self.values,
                         settings=self.run.settings(), hold_J=hold,
                         delta_rel=self.run.delta / self.run.omega_m,
                         outputs=self.run.outputs, curve=self.curve)


def _read_pairs(document, violations):
    if isinstance(document, dict):
        return {str(k): v for k, v in document.items()}
    pairs = {}
    for lineno, raw in enumerate(str(document).splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            violations.append(f"line {lineno}: expected key = value")
            continue
        key, value = (s.strip() for s in line.split("=", 1))
        if key in pairs:
            violations.append(f"line {lineno}: duplicate key {key!r}")
        pairs[key] = value
    return pairs


def _number(pairs, key, violations, *, minimum=None, positive=False, optional=False):
    if key not in pairs or pairs[key] in (None, "", "auto"):
        if not optional:
            violations.append(f"missing required key {key!r}")
        return None
    try:
        v = float(pairs[key])
    except (TypeError, ValueError):
        violations.append(f"{key}: not a number: {pairs[key]!r}")
        return None
    if not math.isfinite(v):
        violations.append(f"{key}: must be finite")
    elif positive and not v > 0:
        violations.append(f"{key}: must be > 0, got {v:g}")
    elif minimum is not None and v < minimum:
        violations.append(f"{key}: must be >= {minimum:g}, got {v:g}")
    return v


def _validate_run(pairs, violations, extra_keys=()) -> RunConfig | None:
    for key in pairs:
        if key not in CONFIG_KEYS and key not in extra_keys:
            violations.append(f"unknown key {key!r}")

    vals = {}
    for key in ("g", "gamma_m", "n_th"):
        vals[key] = _number(pairs, key, violations, minimum=0.0)
    vals["omega_m"] = _number(pairs, "omega_m", violations, positive=True)
    vals["delta"] = _number(pairs, "delta", violations, optional=True)
    has_E = pairs.get("drive_E") not in (None, "")
    has_J = pairs.get("J") not in (None, "")
    if has_E and has_J:
        violations.append("both drive_E and J given; specify exactly one")
    elif not has_E and not has_J:
        violations.append("neither drive_E nor J given; specify exactly one")
    vals["drive_E"] = _number(pairs, "drive_E", violations, minimum=0.0, optional=True)
    vals["J"] = _number(pairs, "J", violations, minimum=0.0, optional=True)
    if has_J and vals["g"] == 0 and vals["J"]:
        violations.append("J > 0 needs g > 0")

    for key in ("t_end", "sample_every", "window", "tau_max"):
        v = _number(pairs, key, violations, positive=True, optional=True)
        if v is not None:
            vals[key] = v
    vals["dt"] = _number(pairs, "dt", violations, positive=True, optional=True)
    if "scheme" in pairs:
        try:
            vals["scheme"] = Scheme(str(pairs["scheme"]).strip()).value
        except ValueError:
            violations.append(f"scheme: expected one of {[s.value for s in Scheme]}")
    if "outputs" in pairs:
        raw = pairs["outputs"]
        outs = tuple(raw) if isinstance(raw, (list, tuple)) else tuple(
            s.strip() for s in str(raw).split(",") if s.strip())
        bad = [o for o in outs if o not in OUTPUTS]
        if bad or not outs:
            violations.append(f"outputs: unknown {bad}, allowed {list(OUTPUTS)}")
        vals["outputs"] = outs

    if violations:
        return None
    if vals["delta"] is None:
        vals["delta"] = vals["omega_m"]
    cfg = RunConfig(**vals)
    try:
        cfg.params()
        cfg.settings()
    except InvalidParameterError as exc:
        violations.append(str(exc))
        return None
    return cfg


def parse_and_validate(document) -> RunConfig:
    """Parse a flat ``key = value`` document (or a dict) into a :class:`RunConfig`.

    Raises
    ------
    ConfigError
        Listing all violations, not only the first.
    """
    violations = []
    pairs = _read_pairs(document, violations)
    cfg = _validate_run(pairs, violations)
    if violations:
        raise ConfigError(violations)
    return cfg


def _float_list(raw, key, violations):
    items = raw if isinstance(raw, (list, tuple)) else str(raw).split(",")
    try:
        out = tuple(float(v) for v in items if str(v).strip())
    except ValueError:
        violations.append(f"{key}: expected a comma-separated list of numbers")
        return ()
    if not out or not all(math.isfinite(v) for v in out):
        violations.append(f"{key}: must be a nonempty list of finite numbers")
    return out


def parse_sweep_config(document) -> SweepConfig:
    """Run config plus ``axis``, ``values`` and optionally ``name``, ``hold_J``,
    ``curve`` and ``curve_values``."""
    violations = []
    pairs = _read_pairs(document, violations)
    run = _validate_run(pairs, violations, extra_keys=SWEEP_KEYS)
    axis = str(pairs.get("axis", "")).strip()
    if not axis:
        violations.append("missing required key 'axis'")
    values = _float_list(pairs.get("values", ""), "values", violations)
    hold = _number(pairs, "hold_J", violations, minimum=0.0, optional=True)
    curve = None
    if pairs.get("curve"):
        curve = (str(pairs["curve"]).strip(),
                 _float_list(pairs.get("curve_values", ""), "curve_values", violations))
    if violations:
        raise ConfigError(violations)
    cfg = SweepConfig(run, str(pairs.get("name", "sweep")).strip(), axis, values, hold, curve)
    try:
        cfg.spec()
    except InvalidParameterError as exc:
        raise ConfigError([str(exc)]) from exc
    return cfg


def emit(config: RunConfig) -> str:
    """Serialize a config so that ``parse_and_validate(emit(c)) == c``."""
    lines = []
    for key in CONFIG_KEYS:
        v = getattr(config, key)
        if v is None:
            continue
        if key == "outputs":
            v = ",".join(v)
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{key} = {v}")
    return "\n".join(lines) + "\n"


# --- figure presets -----------------------------------------------------------

PRESET_IDS = ("fig2a", "fig2b", "fig3a", "fig3b", "fig3c", "fig3d", "fig4",
              "figS1", "figS3", "figS4", "figS5")

# values a preset has to choose, with the reason for each choice
PRESET_DEFAULTS = {
    "fig2a": {"J values": ("0.5, 1.0, 1.5, 2.0, 2.5, 3.0", "curve grid not stated"),
              "t_end": ("400", "long enough for three 50/kappa windows after t_s")},
    "fig2b": {"s_m values": ("4, 8, 20", "inset at s_m=4, curves unstated")},
    "fig3a": {"delta": ("omega_m", "detuning stated only for panels (b) and (d)"),
              "s_m values": ("2 .. 50", "grid not stated")},
    "fig3b": {"E values": ("4e5, 8e5, 1.6e6", "curve drive intensities not stated"),
              "s_m values": ("2 .. 50", "grid not stated")},
    "fig3c": {"delta": ("omega_m", "detuning stated only for panels (b) and (d)"),
              "s_m values": ("4 .. 50", "grid not stated")},
    "fig3d": {"E values": ("4e5, 8e5, 1e6", "curve drive intensities not stated; 1e6 "
                                             "matches the strong-coupling overlay"),
              "s_m values": ("4 .. 50", "grid not stated")},
    "fig4": {"s_m values": ("8, 20, 50", "curve resolutions not stated"),
             "J values": ("0.1 .. 1.5", "grid not stated"),
             "n_th": ("100", "not stated; the cooling limit scales with n_th")},
    "figS1": {"J values": ("0, 0.15, 0.20, 0.25", "listed panel values; J=0 is the uncoupled panel")},
    "figS3": {"panels": ("s_m in 10, 15, 30 for n_th in 1, 10", "covers (a)-(d) as a grid")},
    "figS4": {"s_m values": ("2 .. 40", "grid not stated"),
              "panel": ("a", "panel (b) is reproduced by fig3d-style overlays")},
    "figS5": {"s_m": ("200", "finite surrogate for omega_m/kappa -> infinity"),
              "g": ("1e-5", "not stated; E is solved from J")},
}


def figure_preset(preset_id: str, settings: RunSettings | None = None) -> SweepSpec:
    """Sweep producing the data behind one named figure preset."""
    s = settings or RunSettings()
    g, gm = 1e-5, 1e-3
    sm_wide = (2.0, 3.0, 4.0, 6.0, 8.0, 10.0, 15.0, 20.0, 30.0, 50.0)
    sm_cool = (4.0, 6.0, 8.0, 10.0, 15.0, 20.0, 30.0, 50.0)

    def base(omega_m=10.0, n_th=100.0, J=1.0, gamma_m=gm, g_=g):
        return SystemParams.from_J(J, omega_m=omega_m, gamma_m=gamma_m, n_th=n_th, g=g_)

    if preset_id == "fig2a":
        return SweepSpec("fig2a", base(), "J", (0.5, 1.0, 1.5, 2.0, 2.5, 3.0), s,
                         delta_rel=1.0)
    if preset_id == "fig2b":
        return SweepSpec("fig2b", base(omega_m=8.0, n_th=1.0), "s_m", (4.0, 8.0, 20.0), s,
                         hold_J=1.0, delta_rel=1.0)
    if preset_id == "fig3a":
        b = base().replace(drive_E=8e5)
        return SweepSpec("fig3a", b, "s_m", sm_wide, s, delta_rel=1.0)
    if preset_id == "fig3b":
        return SweepSpec("fig3b", base(), "s_m", sm_wide, s, delta_rel=1.0,
                         curve=("drive_E", (4e5, 8e5, 1.6e6)))
    if preset_id == "fig3c":
        b = base(n_th=0.0).replace(drive_E=8e5)
        return SweepSpec("fig3c", b, "s_m", sm_cool, s, delta_rel=1.0)
    if preset_id == "fig3d":
        return SweepSpec("fig3d", base(n_th=0.0), "s_m", sm_cool, s, delta_rel=1.0,
                         curve=("drive_E", (4e5, 8e5, 1e6)),
                         overlays=("prior_weak", "prior_strong"))
    if preset_id == "fig4":
        J = tuple(np.round(np.arange(0.1, 1.51, 0.1), 10))
        return SweepSpec("fig4", base(), "J", J, s, delta_rel=1.0,
                         curve=("s_m", (8.0, 20.0, 50.0)), overlays=("limit",))
    if preset_id == "figS1":
        b = base().replace(drive_E=1e3)
        return SweepSpec("figS1", b, "J", (0.0, 0.15, 0.20, 0.25), s, vary="g",
                         delta_rel=1.0, outputs=("photon", "displacement"))
    if preset_id == "figS3":
        return SweepSpec("figS3", base(J=0.5, n_th=1.0), "s_m", (10.0, 15.0, 30.0), s,
                         hold_J=0.5, delta_rel=1.0, curve=("n_th", (1.0, 10.0)))
    if preset_id == "figS4":
        b = SystemParams(g=math.sqrt(0.5e-5), gamma_m=1e-4, omega_m=10.0, delta=10.0,
                         drive_E=math.sqrt(1e5), n_th=100.0)
        return SweepSpec("figS4", b, "s_m", (2.0, 4.0, 6.0, 10.0, 15.0, 20.0, 30.0, 40.0), s,
                         delta_rel=1.0, overlays=("prior_weak",))
    if preset_id == "figS5":
        return SweepSpec("figS5", base(omega_m=200.0), "J", (0.3, 2.0), s, delta_rel=1.0,
                         outputs=("phonon", "spectrum"))
    raise KeyError(f"unknown figure preset {preset_id!r}; known: {', '.join(PRESET_IDS)}")


# --- command handlers -----------------------------------------------------------

def _out_dir(args) -> Path:
    return Path(os.environ.get("RADCOOL_OUT") or args.out or DEFAULT_OUT)


def _read_config(path):
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ConfigError([f"cannot read config: {exc}"]) from exc


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    changes = {}
    if args.dt is not None:
        changes["dt"] = args.dt
    if args.scheme is not None:
        changes["scheme"] = args.scheme
    return replace(cfg, **changes) if changes else cfg


def _say(args, msg):
    if not args.quiet:
        print(msg)


def _fmt(v):
    return "none" if v is None else f"{v:.6g}"


def _write_csv(path, header, cols):
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, np.column_stack(cols), delimiter=",", header=",".join(header),
               comments="", fmt="%.12g")


def _write_wigner(result, run_dir, n=81):
    st = result.final_state.block("mechanical")
    half = 4 * math.sqrt(float(np.max(np.diag(st.sigma))))
    q = st.mean[0] + np.linspace(-half, half, n)
    p = st.mean[1] + np.linspace(-half, half, n)
    W = wigner_grid(result.final_state, q, p, "mechanical")
    Q, P = np.meshgrid(q, p, indexing="ij")
    _write_csv(run_dir / "wigner.csv", ("x", "y", "W"), (Q.ravel(), P.ravel(), W.ravel()))


def _spectrum_for(params, result, tau_max, out_path):
    tau, C = two_time_correlation(params, result.report.t_s, tau_max, result.settings.dt,
                                  result.settings.scheme, report=result.report)
    spec = noise_spectrum(tau, C)
    _write_csv(out_path, ("omega", "value"), (spec.omega_grid, spec.C_omega))
    return spec


def cmd_simulate(args) -> int:
    cfg = _apply_overrides(parse_and_validate(_read_config(args.config)), args)
    out = _out_dir(args)
    res = run_scenario(cfg.params(), cfg.settings(), out)
    run_dir = out / "runs" / res.run_id
    if "gaussian" in cfg.outputs and res.final_state is not None:
        _write_wigner(res, run_dir)
    if "spectrum" in cfg.outputs and res.report.stabilized:
        _spectrum_for(cfg.params(), res, cfg.tau_max, run_dir / "spectrum.csv")
    r = res.report
    _say(args, f"t_s={_fmt(r.t_s)} n_mf={_fmt(r.n_mf)} regime={r.regime.value} "
               f"run={res.run_id}")
    return EXIT_DIVERGED if res.diverged_at is not None else EXIT_OK


def cmd_spectrum(args) -> int:
    cfg = _apply_overrides(parse_and_validate(_read_config(args.config)), args)
    out = _out_dir(args)
    params = cfg.params()
    res = run_scenario(params, cfg.settings(), out)
    if res.diverged_at is not None:
        print(f"run diverged at kappa*t={res.diverged_at:.6g}", file=sys.stderr)
        return EXIT_DIVERGED
    try:
        spec = _spectrum_for(params, res, args.tau_max or cfg.tau_max,
                             out / "runs" / res.run_id / "spectrum.csv")
    except NotStabilizedError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INVALID
    peaks = " ".join(f"{w:.4g}" for w in spec.peak_frequencies)
    _say(args, f"t_s={_fmt(res.report.t_s)} n_mf={_fmt(res.report.n_mf)} "
               f"regime={res.report.regime.value} peaks=[{peaks}]")
    return EXIT_OK


def _run_sweep(spec: SweepSpec, args) -> int:
    out = _out_dir(args)
    table = sweep(spec, workers=args.workers, out_dir=out)
    if "spectrum" in spec.outputs:
        for (c, v), p, row in zip(spec.keys(), spec.points(), table.rows):
            if row["regime"] in ("heating", "error") or row["t_s"] is None:
                continue
            res = run_scenario(p, spec.settings)
            tag = f"{spec.axis}={v:g}" if c is None else f"{spec.curve[0]}={c:g}_{spec.axis}={v:g}"
            _spectrum_for(p, res, 250.0, out / "sweeps" / spec.name / f"spectrum_{tag}.csv")
    for row in table.rows:
        cv = "" if row["curve_value"] is None else f"{spec.curve[0]}={row['curve_value']:g} "
        _say(args, f"{cv}{spec.axis}={row['axis_value']:g} t_s={_fmt(row['t_s'])} "
                   f"n_mf={_fmt(row['n_mf'])} regime={row['regime']}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = parse_sweep_config(_read_config(args.config))
    spec = cfg.spec()
    spec = replace(spec, settings=replace(spec.settings, **_setting_overrides(args)))
    return _run_sweep(spec, args)


def _setting_overrides(args):
    out = {}
    if args.dt is not None:
        out["dt"] = args.dt
    if args.scheme is not None:
        out["scheme"] = args.scheme
    return out


def cmd_figure(args) -> int:
    try:
        spec = figure_preset(args.preset, RunSettings(**_setting_overrides(args)))
    except KeyError as exc:
        print(exc.args[0], file=sys.stderr)
        return EXIT_INVALID
    if not args.quiet:
        print(f"defaults for {args.preset}:")
        for key, (value, why) in PRESET_DEFAULTS[args.preset].items():
            print(f"  {key} = {value}  ({why})")
    return _run_sweep(spec, args)


def cmd_limit(args) -> int:
    try:
        value = limit_phonon(args.J, args.gamma_m, args.n_th)
    except InvalidParameterError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INVALID
    print(f"{value:.6g}")
    if not args.quiet:
        print(f"branch={limit_branch(args.J, args.gamma_m)}", file=sys.stderr)
    return EXIT_OK


def cmd_validate(args) -> int:
    text = _read_config(args.config)
    try:
        parse_and_validate(text)
    except ConfigError as first:
        try:
            parse_sweep_config(text)
        except ConfigError:
            raise first from None
    _say(args, "config ok")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory (RADCOOL_OUT overrides)")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--dt", type=float, default=None)
    common.add_argument("--scheme", choices=[s.value for s in Scheme], default=None)
    common.add_argument("--quiet", action="store_true")

    parser = argparse.ArgumentParser(prog="radcool", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("simulate", cmd_simulate), ("sweep", cmd_sweep),
                     ("validate", cmd_validate)):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--config", required=True)
        p.set_defaults(func=fn)
    p = sub.add_parser("spectrum", parents=[common])
    p.add_argument("--config", required=True)
    p.add_argument("--tau-max", type=float, default=None)
    p.set_defaults(func=cmd_spectrum)
    p = sub.add_parser("figure", parents=[common])
    p.add_argument("preset", help=", ".join(PRESET_IDS))
    p.set_defaults(func=cmd_figure)
    p = sub.add_parser("limit", parents=[common])
    p.add_argument("--J", type=float, required=True)
    p.add_argument("--gamma-m", type=float, required=True)
    p.add_argument("--n-th", type=float, required=True)
    p.set_defaults(func=cmd_limit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print("invalid config:", file=sys.stderr)
        for v in exc.violations:
            print(f"  - {v}", file=sys.stderr)
        return EXIT_INVALID
    except InvalidParameterError as exc:
        print(f"invalid parameters: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
