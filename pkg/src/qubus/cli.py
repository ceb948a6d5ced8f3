"""Config-driven experiment runner.

Usage: ``qubus <subcommand> --config <file> [--out <dir>] [--threads k]
[--seed s] [--truncation N]`` with subcommands ``spectrum``, ``steady``,
``entangle``, ``fidelity-grid``, ``damping-grid``, ``risetime-scan``,
``bell`` and ``validate``.  Exit codes: 0 success, 2 config error,
3 numerical failure.

Configs are flat ``key = value`` text with dotted keys and ``#`` comments.
All frequencies and rates are in oscillator-frequency units.  Recognized
keys:

    kind = spectrum | steady | entangle | fidelity-grid | damping-grid
           | risetime-scan | bell          # optional, must match subcommand
    params.<field>                          # any SystemParams field:
        omega_h omega_q g gamma_q gamma_h Omega_R Delta_R omega_d Delta
        T n_th_q n_th_h Omega_R_2 g_2 Delta_2
    grid.<field>.start / .stop / .points / .scale   # scale: linear | log
    spectrum.model = dressed | bare
    spectrum.init  = excited | ground | both
    entangle.points = <int>                 # record grid size
    entangle.span   = <float>               # record window, default 2 t_int
    bell.parity_split = true | false
    seed = <int>
    threads = <int>
    truncation = <int>                      # Fock truncation override

Every run writes ``summary.kv`` (key = value lines; always includes the
truncation used and the convergence-gate drift), a resolved-config echo,
and its data CSVs at 17 significant digits.  Outputs are byte-identical
across reruns of the same config and seed.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields as dc_fields
from pathlib import Path

import numpy as np

from . import dynamics as dy
from . import hilbert as hs
from . import metrics as mt
from . import models as md
from . import spectral as sp
from .errors import ConfigError, QubusError
from .models import SystemParams

_PARAM_FIELDS = {f.name for f in dc_fields(SystemParams)}
_KINDS = (
    "spectrum",
    "steady",
    "entangle",
    "fidelity-grid",
    "damping-grid",
    "risetime-scan",
    "bell",
)
_FMT = "{:.16e}"


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------

def _parse_scalar(text: str):
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def parse_kv_file(path) -> dict[str, object]:
    """Flat dotted-key config text -> {key: scalar}, with line-anchored errors."""
    out: dict[str, object] = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    for i, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw!r}", line=i)
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not key or not val:
            raise ConfigError(f"empty key or value in {raw!r}", line=i)
        if key in out:
            raise ConfigError(f"duplicate key {key!r}", line=i)
        out[key] = _parse_scalar(val)
    return out


@dataclass(frozen=True)
class AxisSpec:
    """Swept-parameter axis: start/stop/points with linear or log spacing."""

    start: float
    stop: float
    points: int
    scale: str = "linear"

    def __post_init__(self):
        if self.points < 2:
            raise ConfigError(f"grid axis needs >= 2 points, got {self.points}")
        if self.scale not in ("linear", "log"):
            raise ConfigError(f"unknown axis scale {self.scale!r}")
        if self.scale == "log" and (self.start <= 0 or self.stop <= 0):
            raise ConfigError("log axis needs positive endpoints")

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)


@dataclass
class ExperimentConfig:
    kind: str
    params: SystemParams
    grids: dict[str, AxisSpec] = field(default_factory=dict)
    seed: int = 0
    output_dir: Path = Path("qubus_out")
    truncation: int | None = None
    threads: int = 1
    options: dict[str, object] = field(default_factory=dict)


def build_config(
    flat: dict[str, object],
    kind: str,
    *,
    output_dir=None,
    threads=None,
    seed=None,
    truncation=None,
) -> ExperimentConfig:
    """Assemble and validate an ExperimentConfig from parsed keys + CLI flags."""
    flat = dict(flat)
    cfg_kind = flat.pop("kind", kind)
    if cfg_kind != kind:
        raise ConfigError(f"config kind {cfg_kind!r} does not match subcommand {kind!r}")
    if kind not in _KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}")

    params_kw: dict[str, float] = {}
    grids_raw: dict[str, dict[str, object]] = {}
    options: dict[str, object] = {}
    seed_v = flat.pop("seed", 0)
    threads_v = flat.pop("threads", 1)
    trunc_v = flat.pop("truncation", None)
    for key, val in flat.items():
        parts = key.split(".")
        if parts[0] == "params" and len(parts) == 2:
            if parts[1] not in _PARAM_FIELDS:
                raise ConfigError(f"unknown parameter {parts[1]!r}")
            params_kw[parts[1]] = val
        elif parts[0] == "grid" and len(parts) == 3:
            grids_raw.setdefault(parts[1], {})[parts[2]] = val
        elif parts[0] in ("spectrum", "entangle", "bell") and len(parts) == 2:
            options[key] = val
        else:
            raise ConfigError(f"unrecognized key {key!r}")

    try:
        params = SystemParams(**params_kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad params: {exc}") from exc

    grids: dict[str, AxisSpec] = {}
    for name, spec in grids_raw.items():
        if name != "t0" and name not in _PARAM_FIELDS:
            raise ConfigError(f"grid axis {name!r} is not a system parameter")
        missing = {"start", "stop", "points"} - set(spec)
        if missing:
            raise ConfigError(f"grid.{name} missing {sorted(missing)}")
        grids[name] = AxisSpec(
            start=float(spec["start"]),
            stop=float(spec["stop"]),
            points=int(spec["points"]),
            scale=str(spec.get("scale", "linear")),
        )

    return ExperimentConfig(
        kind=kind,
        params=params,
        grids=grids,
        seed=int(seed if seed is not None else seed_v),
        output_dir=Path(output_dir) if output_dir else Path("qubus_out"),
        truncation=int(truncation) if truncation is not None else (
            int(trunc_v) if trunc_v is not None else None
        ),
        threads=int(threads if threads is not None else threads_v),
        options=options,
    )


# ---------------------------------------------------------------------------
# Validation (static, no simulation)
# ---------------------------------------------------------------------------

def validate(cfg: ExperimentConfig) -> dict[str, object]:
    """Static checks plus the derived quantities a run would use."""
    p = cfg.params
    report: dict[str, object] = {"kind": cfg.kind}
    if cfg.kind == "spectrum" and p.Delta_R == 0 and cfg.options.get(
        "spectrum.model", "dressed"
    ) == "dressed":
        raise ConfigError("spectrum kind needs Delta_R != 0 (singular dispersive shift)")
    for name, axis in cfg.grids.items():
        report[f"grid.{name}.points"] = axis.points
    if p.g > 0 and p.Delta_R != 0:
        t_int = md.interaction_time(p)
        report["t_int"] = t_int
        report["t_cut"] = md.spectral_cutoff_time(p)
        report["dispersive_shift"] = md.dispersive_shift(p)
        report["frequency_bin"] = 2.0 * math.pi / report["t_cut"]
        cycles = (p.Delta_R + 4.0 * p.g ** 2 / p.Delta_R) * t_int / (2.0 * math.pi)
        report["phase_condition_cycles"] = cycles
        report["phase_condition_integer"] = bool(
            abs(cycles - round(cycles)) < 1e-9
        )
    if cfg.kind in ("spectrum",):
        report["truncation"] = (
            cfg.truncation
            if cfg.truncation is not None
            else sp.readout_truncation(p)
        )
    else:
        report["truncation"] = (
            cfg.truncation if cfg.truncation is not None else mt.gate_truncation(p)
        )
    return report


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def _write_kv(path: Path, data: dict[str, object]) -> None:
    with open(path, "w") as f:
        for key, val in data.items():
            if isinstance(val, float):
                f.write(f"{key} = {_FMT.format(val)}\n")
            else:
                f.write(f"{key} = {val}\n")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_FMT.format(v) if isinstance(v, float) else str(v) for v in row))
            f.write("\n")


def _echo_config(cfg: ExperimentConfig, out: Path) -> None:
    data: dict[str, object] = {"kind": cfg.kind, "seed": cfg.seed, "threads": cfg.threads}
    if cfg.truncation is not None:
        data["truncation"] = cfg.truncation
    p = cfg.params
    for f in dc_fields(SystemParams):
        val = getattr(p, f.name)
        if val is not None:
            data[f"params.{f.name}"] = val
    for name, axis in cfg.grids.items():
        data[f"grid.{name}.start"] = axis.start
        data[f"grid.{name}.stop"] = axis.stop
        data[f"grid.{name}.points"] = axis.points
        data[f"grid.{name}.scale"] = axis.scale
    data.update(cfg.options)
    _write_kv(out / "config_resolved.kv", data)


# ---------------------------------------------------------------------------
# Experiment runners
# ---------------------------------------------------------------------------

def _bare_params_at(p: SystemParams, n_th_h: float) -> SystemParams:
    """Bare-qubit runs take both bath occupations from the same temperature."""
    if n_th_h <= 0:
        return p.replace(n_th_h=0.0, n_th_q=0.0)
    temp = p.omega_h / math.log(1.0 / n_th_h + 1.0)
    return p.replace(n_th_h=n_th_h, n_th_q=md.bose_einstein(p.omega_q, temp))


def _spectrum_cell(args):
    p, model_kind, inits, n_levels = args
    model = md.readout_model(p, n_levels, model_kind)
    prop = (
        dy.eig_propagator(model)
        if model.layout.total_dim ** 2 <= dy.EIG_DIM_MAX
        else None
    )
    out = {}
    for init in inits:
        spec = sp.readout_experiment(
            p, init, model_kind, n_levels=n_levels, propagator=prop
        )
        out[init] = spec
    return out


def _gate_truncation_for_spectrum(n: int) -> int:
    n_up = math.ceil(1.5 * n)
    if (2 * n_up) ** 2 <= dy.EIG_DIM_MAX:
        return n_up
    return max(2, int(n / 1.5))


def _run_spectrum(cfg: ExperimentConfig, out: Path, summary: dict) -> None:
    model_kind = cfg.options.get("spectrum.model", "dressed")
    init_opt = cfg.options.get("spectrum.init", "both")
    inits = ("excited", "ground") if init_opt == "both" else (init_opt,)
    if model_kind not in ("dressed", "bare"):
        raise ConfigError(f"spectrum.model must be dressed or bare, got {model_kind!r}")
    axes = {k: v for k, v in cfg.grids.items()}
    if set(axes) - {"n_th_h"}:
        raise ConfigError("spectrum sweeps support only grid.n_th_h")
    n_th_values = axes["n_th_h"].values() if "n_th_h" in axes else [cfg.params.n_th_h]

    peak_rows = []
    cells = []
    for v in n_th_values:
        p = (
            _bare_params_at(cfg.params, float(v))
            if model_kind == "bare"
            else cfg.params.replace(n_th_h=float(v))
        )
        n = cfg.truncation if cfg.truncation is not None else sp.readout_truncation(p)
        cells.append((p, model_kind, inits, n))

    results = _map_cells(_spectrum_cell, cells, cfg.threads)
    drifts = []
    for (p, _, _, n), cell in zip(cells, results):
        for init, spec in cell.items():
            stem = f"spectrum_{model_kind}_nth{p.n_th_h:g}_{init}"
            spec.to_csv(out / f"{stem}.csv")
            _write_kv(
                out / f"{stem}.peak.kv",
                {**spec.peak, "predicted_peak": spec.meta["predicted_peak"],
                 "n_levels": spec.meta["n_levels"]},
            )
            peak_rows.append(
                (model_kind, float(p.n_th_h), init, spec.peak["omega_peak"],
                 spec.peak["height"], spec.peak["fwhm"], spec.meta["predicted_peak"])
            )
            summary[f"peak.nth{p.n_th_h:g}.{init}"] = spec.peak["omega_peak"]
        # Convergence gate on the peak positions.
        n_gate = _gate_truncation_for_spectrum(n)
        gate_cell = _spectrum_cell((p, model_kind, inits, n_gate))
        drift = max(
            abs(gate_cell[i].peak["omega_peak"] - cell[i].peak["omega_peak"])
            for i in cell
        )
        drifts.append(drift)
        summary[f"gate_truncation.nth{p.n_th_h:g}"] = n_gate
    _write_csv(
        out / "peaks.csv",
        ["model", "n_th_h", "init", "omega_peak", "height", "fwhm", "predicted"],
        peak_rows,
    )
    summary["truncation"] = cells[0][3]
    summary["convergence_drift"] = max(drifts)


def _run_steady(cfg: ExperimentConfig, out: Path, summary: dict) -> None:
    p = cfg.params
    n = cfg.truncation if cfg.truncation is not None else sp.readout_truncation(p)

    def solve(n_levels: int) -> tuple[float, hs.DensityMatrix]:
        model = md.readout_model(p, n_levels, "dressed")
        ss = dy.steady_state(model)
        sx = ss.expectation(hs.embed(hs.sigma_x(), 0, ss.layout))
        return sx, ss

    sx, ss = solve(n)
    sx_gate, _ = solve(math.ceil(1.5 * n))
    closed = dy.steady_state_closed_form(p)
    _write_csv(
        out / "steady_state.csv",
        ["row", "col", "re", "im"],
        [
            (i, j, float(ss.data[i, j].real), float(ss.data[i, j].imag))
            for i in range(ss.data.shape[0])
            for j in range(ss.data.shape[1])
        ],
    )
    summary.update(
        {
            "sigma_x_numerical": sx,
            "sigma_x_closed_form": closed["sigma_z_expectation"],
            "rho_13_closed_form": closed["rho_13"],
            "truncation": n,
            "convergence_drift": abs(sx_gate - sx),
        }
    )


_TRAJ_COLUMNS = [
    "sigma_x_1", "sigma_x_2", "sigma_x_1_sigma_x_2", "sigma_z_1", "sigma_z_2",
    "n_osc", "E_h_q12", "E_h_q1", "E_h_q2", "E_q1_q2",
    "trace", "herm_deviation", "min_eigenvalue",
]


def _run_entangle(cfg: ExperimentConfig, out: Path, summary: dict) -> None:
    p = cfg.params
    n = mt.gate_truncation(p, cfg.truncation)
    t_int = md.interaction_time(p)
    span = float(cfg.options.get("entangle.span", 2.0 * t_int))
    points = int(cfg.options.get("entangle.points", 1025))
    times = np.linspace(0.0, span, points)
    traj = mt.entanglement_experiment(p, n_levels=n, times=times)
    cols = [c for c in _TRAJ_COLUMNS if c in traj.records]
    _write_csv(
        out / "entanglement.csv",
        ["t"] + cols,
        [
            tuple([float(traj.times[i])] + [float(traj.records[c][i]) for c in cols])
            for i in range(traj.times.size)
        ],
    )
    idx_tint = int(np.argmin(np.abs(times - t_int)))
    e_at_tint = float(traj.records["E_q1_q2"][idx_tint])
    # Gate: recompute the qubit negativity at t_int with the finer ladder.
    n_gate = math.ceil(1.5 * n)
    short = mt.entanglement_experiment(
        p, n_levels=n_gate, times=np.linspace(0.0, t_int, 9)
    )
    summary.update(
        {
            "E_q1_q2_max": float(np.max(traj.records["E_q1_q2"])),
            "E_q1_q2_at_t_int": e_at_tint,
            "E_h_q12_max": float(np.max(traj.records["E_h_q12"])),
            "t_int": t_int,
            "truncation": n,
            "gate_truncation": n_gate,
            "convergence_drift": abs(float(short.records["E_q1_q2"][-1]) - e_at_tint),
        }
    )


def _fidelity_cell(args):
    p, n = args
    return mt.gate_fidelity(p, n_levels=n)


def _run_fidelity_grid(cfg: ExperimentConfig, out: Path, summary: dict, axes_names) -> None:
    for name in axes_names:
        if name not in cfg.grids:
            raise ConfigError(f"{cfg.kind} requires grid.{name}")
    extra = set(cfg.grids) - set(axes_names)
    if extra:
        raise ConfigError(f"unexpected grid axes {sorted(extra)} for {cfg.kind}")
    ax1, ax2 = axes_names
    v1, v2 = cfg.grids[ax1].values(), cfg.grids[ax2].values()
    n = mt.gate_truncation(cfg.params, cfg.truncation)
    cells = [
        (cfg.params.replace(**{ax1: float(a), ax2: float(b)}), n)
        for a in v1
        for b in v2
    ]
    f_vals = _map_cells(_fidelity_cell, cells, cfg.threads)
    rows = []
    k = 0
    for a in v1:
        for b in v2:
            rows.append((float(a), float(b), float(f_vals[k])))
            k += 1
    _write_csv(out / "fidelity.csv", [ax1, ax2, "F"], rows)
    best = int(np.argmax(f_vals))
    f_gate = _fidelity_cell((cells[best][0], math.ceil(1.5 * n)))
    summary.update(
        {
            "F_max": float(np.max(f_vals)),
            "F_min": float(np.min(f_vals)),
            f"best.{ax1}": rows[best][0],
            f"best.{ax2}": rows[best][1],
            "truncation": n,
            "convergence_drift": abs(float(f_gate) - float(f_vals[best])),
        }
    )


def _risetime_cell(args):
    p, t0, n, phase_tol = args
    vals = mt.risetime_scan(p, np.array([t0]), n_levels=n, phase_tol=phase_tol)
    return float(vals[0])


def _run_risetime(cfg: ExperimentConfig, out: Path, summary: dict) -> None:
    p = cfg.params
    t_int = md.interaction_time(p)
    axis = cfg.grids.get("t0", AxisSpec(start=0.0, stop=0.2 * t_int, points=41))
    t0_values = axis.values()
    n = mt.gate_truncation(p, cfg.truncation)
    cells = [(p, float(t0), n, mt.SCAN_PHASE_TOL) for t0 in t0_values]
    f_vals = np.array(_map_cells(_risetime_cell, cells, cfg.threads))
    _write_csv(
        out / "risetime.csv",
        ["t0", "F"],
        [(float(t0), float(fv)) for t0, fv in zip(t0_values, f_vals)],
    )
    interior_max = [
        i
        for i in range(1, len(f_vals) - 1)
        if f_vals[i] > f_vals[i - 1] and f_vals[i] > f_vals[i + 1]
    ]
    f0_gate = _risetime_cell((p, float(t0_values[0]), math.ceil(1.5 * n), mt.SCAN_PHASE_TOL))
    summary.update(
        {
            "t0_start": float(t0_values[0]),
            "t0_stop": float(t0_values[-1]),
            "t0_points": len(t0_values),
            "F_max": float(np.max(f_vals)),
            "F_min": float(np.min(f_vals)),
            "interior_local_maxima": len(interior_max),
            "truncation": n,
            "convergence_drift": abs(f0_gate - float(f_vals[0])),
        }
    )


def _run_bell(cfg: ExperimentConfig, out: Path, summary: dict) -> None:
    p = cfg.params
    n = mt.gate_truncation(p, cfg.truncation)
    split = bool(cfg.options.get("bell.parity_split", True))
    res = mt.bell_circuit(p, apply_parity_split=split, n_levels=n)
    res_gate = mt.bell_circuit(
        p, apply_parity_split=split, n_levels=math.ceil(1.5 * n)
    )
    rho = res["rho_qubits"]
    _write_csv(
        out / "bell_state.csv",
        ["row", "col", "re", "im"],
        [
            (i, j, float(rho[i, j].real), float(rho[i, j].imag))
            for i in range(4)
            for j in range(4)
        ],
    )
    summary.update(
        {
            "log_negativity": res["log_negativity"],
            "input": res["input"],
            "truncation": n,
            "convergence_drift": abs(
                res_gate["log_negativity"] - res["log_negativity"]
            ),
        }
    )


_WORKER_LIMITS = None


def _limit_worker_blas():
    # One BLAS thread per worker; the cell matrices are too small to gain
    # from intra-op threading and the workers already saturate the cores.
    global _WORKER_LIMITS
    try:
        from threadpoolctl import threadpool_limits

        _WORKER_LIMITS = threadpool_limits(limits=1)
    except Exception:
        pass


def _map_cells(fn, cells, threads: int) -> list:
    # Grid cells always run on one BLAS thread so results are bit-identical
    # whatever --threads is; the cell matrices are too small to benefit from
    # intra-op threading anyway.
    if threads <= 1 or len(cells) <= 1:
        try:
            from threadpoolctl import threadpool_limits

            with threadpool_limits(limits=1):
                return [fn(c) for c in cells]
        except ImportError:
            return [fn(c) for c in cells]
    with ProcessPoolExecutor(max_workers=threads, initializer=_limit_worker_blas) as pool:
        return list(pool.map(fn, cells))


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------

def run(cfg: ExperimentConfig) -> int:
    """Execute one experiment; returns the process exit code."""
    started = time.perf_counter()
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    summary: dict[str, object] = {"kind": cfg.kind, "seed": cfg.seed, "status": "ok"}
    try:
        report = validate(cfg)
        _echo_config(cfg, out)
        if cfg.kind == "spectrum":
            _run_spectrum(cfg, out, summary)
        elif cfg.kind == "steady":
            _run_steady(cfg, out, summary)
        elif cfg.kind == "entangle":
            _run_entangle(cfg, out, summary)
        elif cfg.kind == "fidelity-grid":
            _run_fidelity_grid(cfg, out, summary, ("Delta", "Delta_R"))
        elif cfg.kind == "damping-grid":
            _run_fidelity_grid(cfg, out, summary, ("gamma_q", "gamma_h"))
        elif cfg.kind == "risetime-scan":
            _run_risetime(cfg, out, summary)
        elif cfg.kind == "bell":
            _run_bell(cfg, out, summary)
        else:
            raise ConfigError(f"unknown kind {cfg.kind!r}")
        for key in ("t_int", "t_cut", "dispersive_shift", "phase_condition_cycles"):
            if key in report:
                summary.setdefault(key, report[key])
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (QubusError, np.linalg.LinAlgError) as exc:
        summary["status"] = "failed"
        summary["error"] = str(exc)
        summary["wall_time_s"] = time.perf_counter() - started
        _write_kv(out / "summary.kv", summary)
        print(f"simulation failure: {exc}", file=sys.stderr)
        return 3
    summary["wall_time_s"] = time.perf_counter() - started
    _write_kv(out / "summary.kv", summary)
    return 0


def _cmd_validate(path, out_dir=None) -> int:
    flat = parse_kv_file(path)
    kind = flat.get("kind")
    if kind not in _KINDS:
        raise ConfigError(f"config must declare a valid kind, got {kind!r}")
    cfg = build_config(flat, kind, output_dir=out_dir)
    report = validate(cfg)
    for key, val in report.items():
        print(f"{key} = {_FMT.format(val) if isinstance(val, float) else val}")
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_kv(out / "validate.kv", report)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qubus",
        description="Driven-qubit/oscillator-bus simulations: readout spectra, "
        "entanglement dynamics, and half-swap gate fidelity scans.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _KINDS + ("validate",):
        sp_ = sub.add_parser(name)
        sp_.add_argument("--config", required=True, help="key = value config file")
        sp_.add_argument("--out", default=None, help="output directory")
        sp_.add_argument("--threads", type=int, default=None)
        sp_.add_argument("--seed", type=int, default=None)
        sp_.add_argument("--truncation", type=int, default=None)
    args = parser.parse_args(argv)

    try:
        if args.command == "validate":
            return _cmd_validate(args.config, args.out)
        flat = parse_kv_file(args.config)
        cfg = build_config(
            flat,
            args.command,
            output_dir=args.out or "qubus_out",
            threads=args.threads,
            seed=args.seed,
            truncation=args.truncation,
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
