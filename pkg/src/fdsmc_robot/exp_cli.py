"""Experiment runner: configs in, CSV/SVG artifacts and a manifest out.

Usage::

    python -m fdsmc_robot run CONFIG.json [--out DIR]
    python -m fdsmc_robot preset NAME [--out DIR]
    python -m fdsmc_robot plot CSV SPEC
    python -m fdsmc_robot list-presets

Configs are flat JSON objects whose keys are the fields of
:class:`~fdsmc_robot.dde_sim.ScenarioConfig`. Outputs land in ``--out``, else
the config's ``output_dir``, else ``$FDSMC_ROBOT_OUT/<name>`` (default root
``./fdsmc_runs``).

Exit codes: 0 success, 2 config error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import chaos_kit as ck
from ._csvio import read_columns, write_columns, write_trajectory
from ._svg import PlotSpec, render
from .dde_sim import (
    ConfigError,
    MasterSlaveRun,
    ScenarioConfig,
    SimulationDiverged,
    Trajectory,
    desired_trajectory,
    grid_window,
    simulate,
)
from .robot_model import RobotParams, fk_endeffector

ENV_OUT = "FDSMC_ROBOT_OUT"
DEFAULT_ROOT = "fdsmc_runs"
SCHEMA_VERSION = 1
MANIFEST = "manifest.json"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
REACH_BAND = 0.05

_BASE = {"h": 5e-4, "delay_master": 0.005, "delay_slave": 0.015, "plots": True}
_SYNC = dict(_BASE, mode="master_slave_fdsmc", t_end=100.0, activation_time=0.1,
             rms_window=[10.0, 100.0])

PRESETS: dict[str, dict] = {
    "fig2-chaotic": dict(_BASE, mode="single_pd", t_end=200.0),
    "fig3a-bifurcation": dict(_BASE, mode="single_pd", t_end=300.0, transient=100.0,
                              bifurcation_delays=[round(0.001 * k, 3) for k in range(1, 21)]),
    "fig3b-embedding": dict(_BASE, mode="single_pd", t_end=400.0, transient=100.0,
                            embedding=True, embedding_dim=4),
    "fig4-attractor": dict(_BASE, mode="single_pd", t_end=400.0, transient=100.0,
                           poincare_plane=0.5, lyapunov=True),
    "fig5-sync": dict(_SYNC),
    "fig6-surfaces": dict(_SYNC, t_end=20.0, rms_window=[10.0, 20.0]),
    "fig7-attractor": dict(_SYNC, transient=10.0, lyapunov=True, embedding=True),
    "fig8-uncertain": dict(_SYNC, uncertainty=True),
}

PRESET_NOTES = {
    "fig2-chaotic": "PD robot with 15 ms dead time: workspace path and theta2 series",
    "fig3a-bifurcation": "theta2 maxima vs dead time L = 1..20 ms",
    "fig3b-embedding": "delay-coordinate reconstruction of theta2",
    "fig4-attractor": "Poincare section at theta1 = 0.5 rad and largest Lyapunov exponent",
    "fig5-sync": "FDSMC master-slave synchronization, activated at 0.1 s",
    "fig6-surfaces": "sliding surfaces S1, S2 over the first 20 s",
    "fig7-attractor": "controlled slave: Lyapunov exponent and embedding",
    "fig8-uncertain": "FDSMC with 60 % slave parameter uncertainty (also the torque traces)",
}


def presets() -> list[str]:
    return list(PRESETS)


def preset_config(name: str) -> ScenarioConfig:
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; try list-presets")
    return ScenarioConfig.from_dict(PRESETS[name])


def load_config(path) -> ScenarioConfig:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(data, dict):
        raise ConfigError("config", "top level must be an object")
    return ScenarioConfig.from_dict(data)


def default_out_dir(name: str) -> Path:
    return Path(os.environ.get(ENV_OUT) or DEFAULT_ROOT) / name


# -- artifacts -------------------------------------------------------------


class _Artifacts:
    """Writes files under one directory and remembers their names."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.files: list[str] = []

    def path(self, name: str) -> Path:
        p = (self.root / name).resolve()
        if self.root.resolve() not in p.parents:
            raise ValueError(f"refusing to write outside {self.root}: {name}")
        self.files.append(name)
        return p


def _error_columns(tr_or_run, cfg: ScenarioConfig):
    if isinstance(tr_or_run, MasterSlaveRun):
        e = tr_or_run.error
        return tr_or_run.slave.t, e
    tr = tr_or_run
    ref = np.array([desired_trajectory(t)[0] for t in tr.t])
    return tr.t, ref[:, None] - tr.theta


def reaching_time(t: np.ndarray, S: np.ndarray, t_from: float, band: float = REACH_BAND) -> float | None:
    """First time >= t_from with |S| < band, or None."""
    idx = np.flatnonzero((t >= t_from - 1e-12) & (np.abs(S) < band))
    return float(t[idx[0]]) if len(idx) else None


def _write_error_and_scalars(art: _Artifacts, cfg: ScenarioConfig, result, driven: Trajectory,
                             scalars: dict) -> None:
    t, e = _error_columns(result, cfg)
    write_columns(art.path("error.csv"), ("t", "e1", "e2"), (t, e[:, 0], e[:, 1]))
    w = grid_window(len(t), cfg.h, *cfg.rms_window)
    i0, i1 = w.start, w.stop
    scalars["metric_window"] = [i0, i1]
    if i1 > i0:
        for k in (0, 1):
            scalars[f"rms_link{k + 1}"] = ck.rms(e[i0:i1, k])
            scalars[f"tv_link{k + 1}"] = ck.total_variation(driven.tau_applied[i0:i1, k])
            scalars[f"max_increment_link{k + 1}"] = float(np.max(np.abs(np.diff(driven.tau_applied[i0:i1, k])))) \
                if i1 - i0 > 1 else 0.0


def _diagnostics(art: _Artifacts, cfg: ScenarioConfig, tr: Trajectory, scalars: dict) -> None:
    seg = tr.segment(cfg.transient)
    if cfg.poincare_plane is not None:
        pts = ck.poincare_section(seg, cfg.poincare_plane, +1)
        write_columns(art.path("poincare.csv"), ("theta2", "omega2"), (pts[:, 0], pts[:, 1]))
        scalars["poincare_points"] = int(len(pts))
    if not (cfg.lyapunov or cfg.embedding):
        return
    series = ck.downsample(seg.theta[:, 1], tr.h, ck.DIAG_DT)
    if cfg.embedding_delay is None:
        spec = ck.default_embedding(series, ck.DIAG_DT, cfg.embedding_dim)
    else:
        spec = ck.EmbeddingSpec(cfg.embedding_dim, max(1, int(round(cfg.embedding_delay / ck.DIAG_DT))))
    scalars["embedding_delay_s"] = spec.delay_samples * ck.DIAG_DT
    if cfg.embedding:
        Y = ck.delay_embed(series, spec)
        write_columns(art.path("embedding.csv"), [f"x{i}" for i in range(spec.dim)], Y.T)
    if cfg.lyapunov:
        est = ck.max_lyapunov(series, ck.DIAG_DT, spec)
        a, b = est.fit_range
        write_columns(art.path("lyapunov.csv"), ("t", "mean_log_div"), (est.times, est.divergence),
                      comments=[f"lambda_max={est.exponent:.17g} fit_start={a} fit_stop={b} "
                                f"dim={spec.dim} delay_samples={spec.delay_samples} "
                                f"theiler={est.theiler} pairs={est.n_pairs}"])
        scalars["lambda_max"] = est.exponent


def _plots(art: _Artifacts, names: list[str]) -> None:
    specs = {
        "error.csv": dict(x="t", y=["e1", "e2"], title="Tracking error", xlabel="t [s]", ylabel="e [rad]"),
        "theta2.csv": dict(x="t", y="theta2", title="Link 2 angle", xlabel="t [s]", ylabel="theta2 [rad]"),
        "workspace.csv": dict(x="x", y="y", title="End-effector path", xlabel="x [m]", ylabel="y [m]"),
        "bifurcation.csv": dict(x="L", y="theta2_max", kind="scatter", title="Bifurcation w.r.t. L",
                                xlabel="L [s]", ylabel="theta2 maxima [rad]"),
        "poincare.csv": dict(x="theta2", y="omega2", kind="scatter", title="Poincare section",
                             xlabel="theta2 [rad]", ylabel="omega2 [rad/s]"),
        "embedding.csv": dict(x="x0", y="x1", title="Reconstructed attractor", xlabel="s(t)",
                              ylabel="s(t + tau)"),
        "lyapunov.csv": dict(x="t", y="mean_log_div", title="Mean log divergence", xlabel="t [s]"),
        "slave.csv": dict(x="t", y=["S1", "S2"], title="Sliding surfaces", xlabel="t [s]", ylabel="S"),
    }
    for name in names:
        if name in specs:
            _, cols, _ = read_columns(art.root / name)
            svg = render(PlotSpec.from_dict(specs[name]), cols)
            art.path(name.replace(".csv", ".svg")).write_text(svg)


def _write_manifest(out: Path, cfg: ScenarioConfig, art: _Artifacts, scalars: dict, status: str,
                    started: float, failure: dict | None = None) -> dict:
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "status": status,
        "config": cfg.to_dict(),
        "files": list(art.files),
        "scalars": scalars,
        "wall_clock_s": round(time.perf_counter() - started, 3),
    }
    if failure:
        manifest["failure"] = failure
    (out / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def _write_run(art: _Artifacts, cfg: ScenarioConfig, result, scalars: dict) -> Trajectory:
    if isinstance(result, MasterSlaveRun):
        write_trajectory(art.path("master.csv"), result.master)
        write_trajectory(art.path("slave.csv"), result.slave)
        driven = result.slave
        if result.slave.S is not None:
            for k in (0, 1):
                rt = reaching_time(driven.t, driven.S[:, k], cfg.activation_time)
                if rt is not None:
                    scalars[f"reaching_time_{k + 1}"] = rt
    else:
        driven = result
        write_trajectory(art.path("trajectory.csv"), result)
        x, y = fk_endeffector(RobotParams.nominal(), result.theta)
        write_columns(art.path("workspace.csv"), ("t", "x", "y"), (result.t, x, y))
        write_columns(art.path("theta2.csv"), ("t", "theta2"), (result.t, result.theta[:, 1]))
    _write_error_and_scalars(art, cfg, result, driven, scalars)
    return driven


def run_scenario(cfg: ScenarioConfig, out_dir) -> tuple[int, dict]:
    """Execute ``cfg`` into ``out_dir``; returns (exit code, manifest)."""
    started = time.perf_counter()
    cfg.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    art = _Artifacts(out)
    scalars: dict = {}

    if cfg.bifurcation_delays:
        try:
            res = ck.bifurcation_sweep(cfg, cfg.bifurcation_delays, cfg.transient, cfg.t_end, cfg.workers)
        except SimulationDiverged as exc:
            return EXIT_NUMERIC, _write_manifest(out, cfg, art, scalars, "diverged", started,
                                                 {"step": exc.step, "time": exc.time, "message": str(exc)})
        rows = list(res.rows())
        write_columns(art.path("bifurcation.csv"), ("L", "theta2_max"),
                      (np.array([r[0] for r in rows]), np.array([r[1] for r in rows])))
        for L, m in sorted(res.maxima.items()):
            scalars[f"spread_L{L:.3f}"] = ck.maxima_spread(m)
    else:
        try:
            result = simulate(cfg)
        except SimulationDiverged as exc:
            if exc.partial is not None:
                _write_run(art, cfg, exc.partial, scalars)
            return EXIT_NUMERIC, _write_manifest(out, cfg, art, scalars, "diverged", started,
                                                 {"step": exc.step, "time": exc.time, "message": str(exc)})
        driven = _write_run(art, cfg, result, scalars)
        _diagnostics(art, cfg, driven, scalars)

    if cfg.plots:
        _plots(art, list(art.files))
    bad = [k for k, v in scalars.items() if isinstance(v, float) and not math.isfinite(v)]
    if bad:
        return EXIT_NUMERIC, _write_manifest(out, cfg, art, scalars, "failed", started,
                                             {"message": f"non-finite scalars: {bad}"})
    return EXIT_OK, _write_manifest(out, cfg, art, scalars, "ok", started)


def run(config_path, out_dir=None) -> tuple[int, dict]:
    cfg = load_config(config_path)
    out = out_dir or cfg.output_dir or default_out_dir(Path(config_path).stem)
    return run_scenario(cfg, out)


def run_preset(name: str, out_dir=None) -> tuple[int, dict]:
    cfg = preset_config(name)
    return run_scenario(cfg, out_dir or default_out_dir(name))


def plot(csv_path, spec) -> Path:
    """Render ``csv_path`` to SVG. ``spec`` is a dict, a JSON file path or inline JSON."""
    if isinstance(spec, (str, Path)):
        text = str(spec)
        spec = json.loads(Path(text).read_text() if Path(text).is_file() else text)
    ps = PlotSpec.from_dict(spec)
    _, cols, _ = read_columns(csv_path)
    out = Path(ps.out) if ps.out else Path(csv_path).with_suffix(".svg")
    out.write_text(render(ps, cols))
    return out


# -- entry point -----------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fdsmc-robot", description="Delayed robot experiments.")
    sub = p.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run a JSON scenario config")
    r.add_argument("config")
    r.add_argument("--out")
    pr = sub.add_parser("preset", help="run a named preset")
    pr.add_argument("name")
    pr.add_argument("--out")
    pl = sub.add_parser("plot", help="render a CSV to SVG")
    pl.add_argument("csv")
    pl.add_argument("spec", help="JSON file or inline JSON: {x, y, kind, title, xlabel, ylabel, out}")
    sub.add_parser("list-presets", help="print preset names")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.cmd == "list-presets":
            for name in presets():
                print(f"{name:20s} {PRESET_NOTES[name]}")
            return EXIT_OK
        if args.cmd == "plot":
            try:
                print(plot(args.csv, args.spec))
            except (OSError, ValueError) as exc:
                print(f"error: {exc}", file=sys.stderr)
                return EXIT_CONFIG
            return EXIT_OK
        if args.cmd == "run":
            code, manifest = run(args.config, args.out)
        else:
            code, manifest = run_preset(args.name, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if code != EXIT_OK:
        print(f"numeric failure: {manifest.get('failure', {}).get('message', '')}", file=sys.stderr)
    else:
        for k, v in sorted(manifest["scalars"].items()):
            print(f"{k} = {v}")
    return code


if __name__ == "__main__":
    sys.exit(main())
