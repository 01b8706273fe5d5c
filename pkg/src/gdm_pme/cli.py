"""Batch driver: ``pme run|convergence|front|diagnose --config <path> [--out <dir>]``.

Configs are INI-style ``key = value`` files; section headers only group keys
and are flattened (a key may appear in one section only). Recognised keys::

    scheme      mlp1 | hmm
    mesh        tri:n | hex:n | file:path        (run, temporal sweeps, front)
    meshes      comma list of mesh specs        (spatial sweeps, diagnose)
    m           exponent (required)
    C_B, t0     Barenblatt constants (preset by the regime if omitted)
    T           final time, default 1
    dt          number or h2, default h2
    lambda      id | scalar:<c>
    initial     barenblatt | zero
    snapshots   absolute times at which ``run`` writes field files
    sweep       spatial | temporal                (convergence)
    dts         comma list of time steps          (temporal sweeps)
    ms          comma list of exponents           (front)
    threshold   relative support threshold        (front), default 1e-6
    scalar_probes, vector_probes                  (diagnose)
    tol         Newton tolerance, default 1e-8
    timing      yes | no: add a wall-time column (not reproducible), default no
    out         output directory, default ``results``

Exit codes: 0 on success, 2 on a configuration error, 3 on a solver error.
"""
from __future__ import annotations

import argparse
import configparser
import hashlib
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import diagnostics
from .barenblatt import error_beta, error_u
from .experiments import barenblatt_problem, build, front_study, preset, scalar_tensor, spatial_sweep, temporal_sweep
from .linalg import LinearSolverError
from .mesh import MeshError
from .scheme import EnergyInequalityError, NewtonError, ProblemSpec, TimeGrid, energy_ledger, run

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3


class ConfigError(ValueError):
    pass


def _floats(text, key):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{key}: expected a comma separated list of numbers, got {text!r}") from None


def _names(text):
    return [v.strip() for v in text.split(",") if v.strip()]


@dataclass
class Config:
    scheme: str = "mlp1"
    m: float = 2.0
    mesh: str | None = None
    meshes: list = field(default_factory=list)
    C_B: float | None = None
    t0: float | None = None
    T: float = 1.0
    dt: object = "h2"
    diffusivity: float = 1.0
    initial: str = "barenblatt"
    snapshots: list = field(default_factory=list)
    sweep: str = "spatial"
    dts: list = field(default_factory=list)
    ms: list = field(default_factory=list)
    threshold: float = 1e-6
    scalar_probes: list = field(default_factory=list)
    vector_probes: list = field(default_factory=list)
    tol: float = 1e-8
    timing: bool = False
    out: str = "results"
    sha256: str = ""


def parse_config(text: str) -> Config:
    """Parse config text; raises :class:`ConfigError` with the offending key."""
    cp = configparser.ConfigParser(interpolation=None, default_section="__defaults__")
    cp.optionxform = str
    try:
        cp.read_string(text if text.lstrip().startswith("[") else "[main]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    flat = {}
    for sec in cp.sections():
        for k, v in cp.items(sec):
            if k in flat:
                raise ConfigError(f"key {k!r} is set twice")
            flat[k] = v.strip()

    cfg = Config(sha256=hashlib.sha256(text.encode()).hexdigest())
    if "m" not in flat:
        raise ConfigError("missing required key 'm'")

    def num(key, positive=False):
        try:
            val = float(flat.pop(key))
        except ValueError:
            raise ConfigError(f"{key}: expected a number") from None
        if positive and not val > 0:
            raise ConfigError(f"{key}: must be positive")
        return val

    cfg.m = num("m", positive=True)
    for key in ("C_B", "t0"):
        if key in flat:
            setattr(cfg, key, num(key, positive=True))
    if "T" in flat:
        cfg.T = num("T", positive=True)
    if "tol" in flat:
        cfg.tol = num("tol", positive=True)
    if "threshold" in flat:
        cfg.threshold = num("threshold", positive=True)
    if flat.get("dt") == "h2":
        cfg.dt = flat.pop("dt")
    elif "dt" in flat:
        cfg.dt = num("dt", positive=True)
    cfg.scheme = flat.pop("scheme", cfg.scheme)
    if cfg.scheme not in ("mlp1", "hmm"):
        raise ConfigError(f"scheme: expected mlp1 or hmm, got {cfg.scheme!r}")
    cfg.mesh = flat.pop("mesh", None)
    cfg.meshes = _names(flat.pop("meshes", ""))
    lam = flat.pop("lambda", "id")
    if lam == "id":
        cfg.diffusivity = 1.0
    elif lam.startswith("scalar:"):
        try:
            cfg.diffusivity = float(lam[len("scalar:"):])
        except ValueError:
            raise ConfigError(f"lambda: bad scalar in {lam!r}") from None
        if not cfg.diffusivity > 0:
            raise ConfigError("lambda: scalar must be positive")
    else:
        raise ConfigError(f"lambda: expected id or scalar:<c>, got {lam!r}")
    cfg.initial = flat.pop("initial", cfg.initial)
    if cfg.initial not in ("barenblatt", "zero"):
        raise ConfigError(f"initial: expected barenblatt or zero, got {cfg.initial!r}")
    cfg.snapshots = _floats(flat.pop("snapshots", ""), "snapshots")
    cfg.sweep = flat.pop("sweep", cfg.sweep)
    if cfg.sweep not in ("spatial", "temporal"):
        raise ConfigError(f"sweep: expected spatial or temporal, got {cfg.sweep!r}")
    cfg.dts = _floats(flat.pop("dts", ""), "dts")
    cfg.ms = _floats(flat.pop("ms", ""), "ms")
    cfg.scalar_probes = _names(flat.pop("scalar_probes", ""))
    cfg.vector_probes = _names(flat.pop("vector_probes", ""))
    for name in cfg.scalar_probes:
        if name not in diagnostics.SCALAR_PROBES:
            raise ConfigError(f"scalar_probes: unknown probe {name!r}; choose from {sorted(diagnostics.SCALAR_PROBES)}")
    for name in cfg.vector_probes:
        if name not in diagnostics.VECTOR_PROBES:
            raise ConfigError(f"vector_probes: unknown probe {name!r}; choose from {sorted(diagnostics.VECTOR_PROBES)}")
    timing = flat.pop("timing", "no").lower()
    if timing not in ("yes", "no", "true", "false"):
        raise ConfigError("timing: expected yes or no")
    cfg.timing = timing in ("yes", "true")
    cfg.out = flat.pop("out", cfg.out)
    if flat:
        raise ConfigError(f"unknown keys: {', '.join(sorted(flat))}")
    return cfg


def load_config(path) -> Config:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text)


# -- output -----------------------------------------------------------------

def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return f"{float(v):.5e}"


def write_table(path, cfg: Config, columns, units, rows):
    """CSV with a comment line carrying the config hash and the column units."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    unit_txt = "; ".join(f"{c} [{u}]" for c, u in zip(columns, units))
    lines = [f"# config_sha256={cfg.sha256} units: {unit_txt}", ",".join(columns)]
    lines += [",".join(_fmt(r[c]) for c in columns) for r in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def _meshes(cfg, need_list):
    if need_list:
        if not cfg.meshes:
            raise ConfigError("missing required key 'meshes'")
        return cfg.meshes
    if cfg.mesh is None:
        raise ConfigError("missing required key 'mesh'")
    return cfg.mesh


# -- commands ---------------------------------------------------------------

def cmd_run(cfg: Config, out: Path):
    gd = build(cfg.scheme, _meshes(cfg, False))
    dt = gd.h**2 if cfg.dt == "h2" else cfg.dt
    grid = TimeGrid.from_step(cfg.T, dt)
    pre = preset(cfg.m)
    t0 = pre["t0"] if cfg.t0 is None else cfg.t0
    if cfg.initial == "barenblatt":
        prob, _, t0, exact = barenblatt_problem(cfg.m, grid, C_B=cfg.C_B, t0=t0, diffusivity=cfg.diffusivity)
    else:
        lam = None if cfg.diffusivity == 1.0 else scalar_tensor(cfg.diffusivity)
        prob = ProblemSpec(m=cfg.m, u0=lambda x: np.zeros(len(x)), grid=grid, lam=lam,
                           lam_bounds=(cfg.diffusivity,) * 2, lam_depends_on_state=False)
        exact = None

    times_abs = t0 + grid.times
    wanted = {}
    for ts in cfg.snapshots:
        k = int(np.argmin(np.abs(times_abs - ts)))
        if abs(times_abs[k] - ts) > 0.5 * grid.dt_max + 1e-12:
            raise ConfigError(f"snapshots: time {ts:g} outside [{times_abs[0]:g}, {times_abs[-1]:g}]")
        wanted.setdefault(k, []).append(ts)
    idx = gd.massed

    def write_field(k, u, tag):
        rows = [{"x": gd.points[i, 0], "y": gd.points[i, 1], "value": u[i]} for i in idx]
        write_table(out / f"field_{tag}.csv", cfg, ["x", "y", "value"], ["length", "length", "u"], rows)

    def callback(n, t, u):
        for ts in wanted.get(n, []):
            write_field(n, u, f"t{ts:.6g}")

    u_init = np.asarray(prob.u0(gd.points), dtype=float)
    for ts in wanted.get(0, []):
        write_field(0, u_init, f"t{ts:.6g}")
    traj = run(prob, gd, keep=(), tol=cfg.tol, callback=callback)
    write_field(grid.n_steps, traj.final, "final")

    summary = [{"step": n + 1, "t": times_abs[n + 1], "dt": grid.steps[n], "newton_iterations": it, "residual": r}
               for n, (it, r) in enumerate(zip(traj.newton_iterations, traj.residuals))]
    write_table(out / "summary.csv", cfg, ["step", "t", "dt", "newton_iterations", "residual"],
                ["-", "time", "time", "-", "sup norm"], summary)

    ledger = energy_ledger(traj, gd, tol=cfg.tol, check=False)
    eps = 10.0 * cfg.tol * gd.ndof
    rows = [{"step": r.step, "t": times_abs[r.step], "zeta_integral": r.zeta_integral, "diffusion": r.diffusion,
             "source": r.source, "slack": r.slack, "holds": int(r.slack >= -eps)} for r in ledger]
    write_table(out / "energy.csv", cfg, ["step", "t", "zeta_integral", "diffusion", "source", "slack", "holds"],
                ["-", "time", "energy", "energy", "energy", "energy", "bool"], rows)

    if exact is not None:
        ex = lambda x: exact(cfg.T, x)  # noqa: E731
        err = [{"t": times_abs[-1], "h": gd.h, "dt": grid.dt_max,
                "err_u": error_u(gd, traj.final, ex, cfg.m), "err_beta": error_beta(gd, traj.final, ex, cfg.m)}]
        write_table(out / "errors.csv", cfg, ["t", "h", "dt", "err_u", "err_beta"],
                    ["time", "length", "time", "relative", "relative"], err)
    return traj


def cmd_convergence(cfg: Config, out: Path):
    kw = dict(T=cfg.T, C_B=cfg.C_B, t0=cfg.t0, diffusivity=cfg.diffusivity, tol=cfg.tol)
    if cfg.sweep == "spatial":
        rows = spatial_sweep(cfg.scheme, _meshes(cfg, True), cfg.m, **kw)
        step_col, step_unit = "h", "length"
    else:
        if not cfg.dts:
            raise ConfigError("missing required key 'dts'")
        rows = temporal_sweep(cfg.scheme, _meshes(cfg, False), cfg.m, cfg.dts, **kw)
        step_col, step_unit = "dt", "time"
    cols = [step_col, "err_u", "rate_u", "err_beta", "rate_beta", "newton_avg", "newton_max"]
    units = [step_unit, "relative", "-", "relative", "-", "-", "-"]
    if cfg.timing:
        cols.append("wall")
        units.append("s")
    return write_table(out / f"convergence_{cfg.sweep}.csv", cfg, cols, units, rows), rows


def cmd_front(cfg: Config, out: Path):
    ms = cfg.ms or [cfg.m]
    if any(m <= 1 for m in ms):
        raise ConfigError("front distances need every m > 1")
    rows = front_study(cfg.scheme, _meshes(cfg, False), ms, cfg.dt, T=cfg.T, C_B=cfg.C_B, t0=cfg.t0,
                       threshold_rel=cfg.threshold, diffusivity=cfg.diffusivity, tol=cfg.tol)
    cols = ["m", "d_u", "d_uB", "rel_err"]
    return write_table(out / "front.csv", cfg, cols, ["-", "length", "length", "relative"], rows), rows


def cmd_diagnose(cfg: Config, out: Path):
    rows = []
    for spec in _meshes(cfg, True):
        gd = build(cfg.scheme, spec)
        row = {"h": gd.h}
        for name in cfg.scalar_probes:
            row[f"S_{name}"] = diagnostics.consistency_defect(gd, *diagnostics.SCALAR_PROBES[name], m=cfg.m)
        for name in cfg.vector_probes:
            row[f"W_{name}"] = diagnostics.limit_conformity_defect(gd, *diagnostics.VECTOR_PROBES[name])
        row["C_D"] = diagnostics.coercivity_constant(gd)
        rows.append(row)
    cols = ["h"] + [f"S_{n}" for n in cfg.scalar_probes] + [f"W_{n}" for n in cfg.vector_probes] + ["C_D"]
    units = ["length"] + ["-"] * (len(cols) - 1)
    return write_table(out / "diagnose.csv", cfg, cols, units, rows), rows


COMMANDS = {"run": cmd_run, "convergence": cmd_convergence, "front": cmd_front, "diagnose": cmd_diagnose}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="pme", description="Gradient schemes for the porous medium equation")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True)
    ap.add_argument("--out", default=None, help="output directory (overrides the config)")
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args.config)
        out = Path(args.out if args.out is not None else cfg.out)
        COMMANDS[args.command](cfg, out)
    except (ConfigError, MeshError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NewtonError, LinearSolverError, EnergyInequalityError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
