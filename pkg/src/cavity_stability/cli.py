"""Command-line front end: ``cavity-stability {solve,stability,evolve,sweep,probe}``.

A run is described by an optional JSON config file; command-line flags
override its keys. Exit codes: 0 ok, 1 configuration error, 2 solver
failure, 3 criticality gate, 4 stalled descent.
"""

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import io as cio
from .disk import disk_config, stability_window
from .elasticity import BoundaryData, LameParams, boundary_traces, solve_equilibrium
from .evolve import TRACE_COLUMNS, DescentConfig, descend, minimality_probe
from .exceptions import (
    CavityStabilityError,
    ConfigError,
    NotCriticalError,
    SolverFailure,
    StalledDescentError,
)
from .geometry import RadialProfile
from .variation import assemble, criticality, stability_spectrum

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_CRITICAL, EXIT_STALL = 0, 1, 2, 3, 4
DEFAULT_FORMAT = {"evolve": "csv", "sweep": "csv"}


@dataclass
class RunConfig:
    mu: float = 1.0
    lam: float = 0.0
    alpha: float = 1.0
    R0: float = 1.0
    r: float | None = None
    profile_file: str | None = None
    n_theta: int = 64
    n_rho: int = 48
    n_modes: int = 8
    lambda_penalty: float | None = None
    epsilon: float | None = None
    epsilon_weight: float = 0.0
    force: bool = False
    seed: int | None = None
    max_iter: int = 500
    tol: float = 1e-6
    step: float = 1.0
    max_halvings: int = 40
    perturb_mode: int = 2
    perturb_amplitude: float = 0.0
    r_min: float | None = None
    r_max: float | None = None
    steps: int = 10
    workers: int = 1
    n_samples: int = 50
    amplitude: float = 1e-2
    min_frequency: int = 1
    max_frequency: int = 8
    # None resolves per command: traces and sweeps default to CSV
    format: str | None = None

    def provenance(self):
        """Config as emitted; the key ``lambda`` is spelled out."""
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d


# external config key -> RunConfig field
_KEYS = {("lambda" if f.name == "lam" else f.name): f.name for f in fields(RunConfig)}
_TYPES = {
    "mu": float, "lam": float, "alpha": float, "R0": float, "r": float, "profile_file": str,
    "n_theta": int, "n_rho": int, "n_modes": int, "lambda_penalty": float, "epsilon": float,
    "epsilon_weight": float, "force": bool, "seed": int, "max_iter": int, "tol": float,
    "step": float, "max_halvings": int, "perturb_mode": int, "perturb_amplitude": float,
    "r_min": float, "r_max": float, "steps": int, "workers": int, "n_samples": int, "amplitude": float,
    "min_frequency": int, "max_frequency": int, "format": str,
}


def _coerce(key, value):
    name = _KEYS[key]
    kind = _TYPES[name]
    if value is None:
        return None
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"config key '{key}': expected true/false, got {value!r}")
        return value
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"config key '{key}': expected an integer, got {value!r}")
        return value
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"config key '{key}': expected a number, got {value!r}")
        if not math.isfinite(value):
            raise ConfigError(f"config key '{key}': must be finite")
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"config key '{key}': expected a string, got {value!r}")
    return value


def load_config(path):
    """Parse a JSON config file into a dict of validated overrides."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path}: top level must be an object")
    out = {}
    for key, value in raw.items():
        if key not in _KEYS:
            raise ConfigError(f"config key '{key}': unknown key")
        out[_KEYS[key]] = _coerce(key, value)
    return out


def build_config(args, command=None) -> RunConfig:
    values = load_config(args.config) if args.config else {}
    for key, name in _KEYS.items():
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = _coerce(key, flag)
    cfg = RunConfig(**values)
    if cfg.format is None:
        cfg.format = DEFAULT_FORMAT.get(command, "json")
    validate(cfg, command)
    return cfg


def validate(cfg: RunConfig, command=None):
    sweeping = command == "sweep" and cfg.r_min is not None
    if sweeping and cfg.profile_file is not None:
        raise ConfigError("config key 'profile_file': sweeps run over round cavities only")
    if not sweeping and (cfg.r is None) == (cfg.profile_file is None):
        raise ConfigError("config keys 'r' / 'profile_file': exactly one shape source is required")
    if not cfg.mu > 0:
        raise ConfigError("config key 'mu': must be positive")
    if not cfg.lam > -cfg.mu:
        raise ConfigError("config key 'lambda': must exceed -mu")
    if not cfg.R0 > 0:
        raise ConfigError("config key 'R0': must be positive")
    if cfg.r is not None and not 0 < cfg.r < cfg.R0:
        raise ConfigError("config key 'r': must lie in (0, R0)")
    if cfg.n_theta < 8 or cfg.n_theta % 2 or cfg.n_theta > 512:
        raise ConfigError("config key 'n_theta': must be even and in [8, 512]")
    if not 4 <= cfg.n_rho <= 128:
        raise ConfigError("config key 'n_rho': must lie in [4, 128]")
    if command in ("stability", "sweep", None) and not 1 <= cfg.n_modes <= cfg.n_theta // 3:
        raise ConfigError("config key 'n_modes': must lie in [1, n_theta // 3]")
    if cfg.lambda_penalty is not None and not cfg.lambda_penalty > 0:
        raise ConfigError("config key 'lambda_penalty': must be positive")
    if cfg.max_iter < 0:
        raise ConfigError("config key 'max_iter': must be nonnegative")
    if cfg.max_halvings < 0:
        raise ConfigError("config key 'max_halvings': must be nonnegative")
    if cfg.steps < 1:
        raise ConfigError("config key 'steps': must be at least 1")
    if cfg.workers < 1:
        raise ConfigError("config key 'workers': must be at least 1")
    if cfg.format not in ("json", "csv"):
        raise ConfigError("config key 'format': must be 'json' or 'csv'")


def make_profile(cfg: RunConfig) -> RadialProfile:
    if cfg.profile_file is not None:
        try:
            record = json.loads(Path(cfg.profile_file).read_text(encoding="utf-8"))
            h = RadialProfile.from_dict(record)
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"config key 'profile_file': cannot load profile ({exc})") from exc
        if h.R0 != cfg.R0:
            raise ConfigError(f"config key 'R0': {cfg.R0} disagrees with the profile file ({h.R0})")
        return h
    return RadialProfile.circle(cfg.r, cfg.n_theta, cfg.R0)


def _params(cfg):
    return LameParams(cfg.mu, cfg.lam)


def _header(cfg):
    return {"config": cfg.provenance(), "config_hash": cio.config_hash(cfg.provenance())}


def _emit(text, out):
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def _with_hash(cfg, header, rows):
    h = cio.config_hash(cfg.provenance())
    return cio.dumps_csv(list(header) + ["config_hash"], [list(r) + [h] for r in rows])


def cmd_solve(cfg, args):
    h = make_profile(cfg)
    p = _params(cfg)
    u = solve_equilibrium(h, BoundaryData(cfg.alpha, cfg.R0), p, cfg.n_rho)
    report = boundary_traces(u)
    if args.dump_field:
        Path(args.dump_field).write_text(cio.dumps_json(u.to_dict()), encoding="utf-8", newline="\n")
    if cfg.format == "csv":
        rows = zip(h.theta, h.values, report.boundary_Q, report.boundary_dQ_dnu)
        return _with_hash(cfg, ["theta", "h", "Q", "dQ_dnu"], rows)
    record = _header(cfg)
    record.update(report.to_dict())
    record["criticality"] = criticality(h, u).to_dict()
    if h.is_round:
        record["closed_form_energy"] = disk_config(float(h.values[0]), cfg.R0, cfg.alpha, p).energy()
    return cio.dumps_json(record)


def _stability_record(cfg, h):
    p = _params(cfg)
    u = solve_equilibrium(h, BoundaryData(cfg.alpha, cfg.R0), p, cfg.n_rho)
    Q = assemble(h, u, cfg.n_modes, force=cfg.force)
    spec = stability_spectrum(Q)
    record = cio.spectrum_record(Q, spec)
    record["criticality"] = criticality(h, u).to_dict()
    disk = {"r0": None, "G_alpha": None, "window": None, "condition_met": None}
    if h.is_round:
        disk = stability_window(cfg.alpha, p, cfg.R0, float(h.values[0])).to_dict()
        disk.pop("margin_details")
    record.update(disk)
    return Q, record


def cmd_stability(cfg, args):
    h = make_profile(cfg)
    Q, record = _stability_record(cfg, h)
    if cfg.format == "csv":
        return cio.matrix_csv(Q, cio.config_hash(cfg.provenance()))
    out = _header(cfg)
    out.update(record)
    return cio.dumps_json(out)


def _start_profile(cfg, h):
    if cfg.perturb_amplitude == 0:
        return h
    k = cfg.perturb_mode
    return h.with_values(h.values * (1 + cfg.perturb_amplitude * np.cos(k * h.theta)))


def _descent_config(cfg, h):
    return DescentConfig.around(
        h,
        _params(cfg),
        cfg.alpha,
        Lambda=cfg.lambda_penalty,
        epsilon=cfg.epsilon,
        epsilon_weight=cfg.epsilon_weight,
        n_rho=cfg.n_rho,
    )


def cmd_evolve(cfg, args):
    h = make_profile(cfg)
    dcfg = _descent_config(cfg, h)
    g0 = _start_profile(cfg, h)
    trace = descend(g0, dcfg, cfg.max_iter, cfg.tol, cfg.step, cfg.max_halvings)
    return _trace_output(cfg, trace.rows())


def _trace_output(cfg, rows):
    if cfg.format == "csv":
        return _with_hash(cfg, TRACE_COLUMNS, rows)
    out = _header(cfg)
    out["trace"] = [dict(zip(TRACE_COLUMNS, r)) for r in rows]
    return cio.dumps_json(out)


SWEEP_COLUMNS = ("r", "c0", "min_eig", "r0", "G_alpha", "condition_met")


def _sweep_row(cfg, r):
    _, rec = _stability_record(cfg, RadialProfile.circle(r, cfg.n_theta, cfg.R0))
    return [r] + [rec[k] for k in SWEEP_COLUMNS[1:]]


def cmd_sweep(cfg, args):
    lo = cfg.r_min if cfg.r_min is not None else cfg.r
    hi = cfg.r_max if cfg.r_max is not None else lo
    if lo is None or not 0 < lo <= hi < cfg.R0:
        raise ConfigError("config keys 'r_min' / 'r_max': need 0 < r_min <= r_max < R0")
    radii = [float(r) for r in np.linspace(lo, hi, cfg.steps)]
    if cfg.workers == 1:
        rows = [_sweep_row(cfg, r) for r in radii]
    else:
        # map keeps input order, so the output does not depend on scheduling
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_sweep_row, [cfg] * len(radii), radii))
    if cfg.format == "csv":
        return _with_hash(cfg, SWEEP_COLUMNS, rows)
    out = _header(cfg)
    out["rows"] = [dict(zip(SWEEP_COLUMNS, r)) for r in rows]
    return cio.dumps_json(out)


def cmd_probe(cfg, args):
    if cfg.seed is None:
        raise ConfigError("config key 'seed': required for probe runs")
    h = make_profile(cfg)
    dcfg = _descent_config(cfg, h)
    rep = minimality_probe(
        h, dcfg, cfg.n_samples, cfg.amplitude, cfg.seed, cfg.min_frequency, cfg.max_frequency
    )
    if cfg.format == "csv":
        rows = zip(range(rep.samples), rep.energy_gaps, rep.sym_diffs, rep.ratios)
        return _with_hash(cfg, ["sample", "energy_gap", "sym_diff", "ratio"], rows)
    out = _header(cfg)
    out.update(rep.to_dict())
    return cio.dumps_json(out)


COMMANDS = {
    "solve": cmd_solve,
    "stability": cmd_stability,
    "evolve": cmd_evolve,
    "sweep": cmd_sweep,
    "probe": cmd_probe,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="cavity-stability", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its keys")
    common.add_argument("--r", type=float, help="radius of a round cavity")
    common.add_argument("--profile", dest="profile_file", help="JSON profile {R0, n_theta, values}")
    common.add_argument("--alpha", type=float)
    common.add_argument("--mu", type=float)
    common.add_argument("--lambda", dest="lam", type=float)
    common.add_argument("--R0", type=float)
    common.add_argument("--n-theta", dest="n_theta", type=int)
    common.add_argument("--n-rho", dest="n_rho", type=int)
    common.add_argument("--n-modes", dest="n_modes", type=int)
    common.add_argument("--lambda-penalty", dest="lambda_penalty", type=float)
    common.add_argument("--force", action="store_const", const=True, default=None,
                        help="skip the criticality gate and include the non-critical terms")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", choices=["json", "csv"])
    common.add_argument("--dump-field", dest="dump_field", help="write the displacement field JSON here")
    for name in ("solve", "stability", "probe"):
        sp = sub.add_parser(name, parents=[common])
        if name == "probe":
            sp.add_argument("--n-samples", dest="n_samples", type=int)
            sp.add_argument("--amplitude", type=float)
            sp.add_argument("--min-frequency", dest="min_frequency", type=int)
            sp.add_argument("--max-frequency", dest="max_frequency", type=int)
    ev = sub.add_parser("evolve", parents=[common])
    ev.add_argument("--max-iter", dest="max_iter", type=int)
    ev.add_argument("--tol", type=float)
    ev.add_argument("--step", type=float)
    ev.add_argument("--max-halvings", dest="max_halvings", type=int)
    ev.add_argument("--perturb-mode", dest="perturb_mode", type=int)
    ev.add_argument("--perturb-amplitude", dest="perturb_amplitude", type=float)
    ev.add_argument("--epsilon", type=float)
    ev.add_argument("--epsilon-weight", dest="epsilon_weight", type=float)
    sw = sub.add_parser("sweep", parents=[common])
    sw.add_argument("--r-min", dest="r_min", type=float)
    sw.add_argument("--r-max", dest="r_max", type=float)
    sw.add_argument("--steps", type=int)
    sw.add_argument("--workers", type=int, help="worker processes for independent radii")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = build_config(args, args.command)
        text = COMMANDS[args.command](cfg, args)
    except NotCriticalError as exc:
        print(f"not critical: deviation {exc.deviation:.6e}", file=sys.stderr)
        return EXIT_CRITICAL
    except StalledDescentError as exc:
        print(f"descent stalled: {exc}", file=sys.stderr)
        rows = exc.trace.rows() if exc.trace is not None else []
        if exc.state is not None:
            rows.append(exc.state.row())
        _emit(_trace_output(cfg, rows), args.out)
        return EXIT_STALL
    except SolverFailure as exc:
        cond = f" (condition {exc.condition:.3e})" if exc.condition is not None else ""
        print(f"solver failure: {exc}{cond}", file=sys.stderr)
        return EXIT_SOLVER
    except CavityStabilityError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _emit(text, args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
