"""Command-line front end.

Config files are JSON; the README documents the schema. Every run
writes ``results.csv`` and ``manifest.json`` to the output directory.
Errors are reported as one JSON line on stderr with a nonzero exit code.
"""

from __future__ import annotations

import hashlib
import json
import os
import platform
import sys
from dataclasses import asdict, dataclass, field, fields

import click
import numpy as np

from . import __version__
from .fields import ScalarField
from .functionals import FunctionalSpec
from .geometry import domain_from_dict
from .levy import LevyDriverSpec
from .paths import LINEAR, STEP, CadlagPath
from .rng import stream
from .sde import SdeCoefficients, simulate_reflected
from .solver import (ALPHA, COEFFICIENTS, PENALIZATION, McConfig, McEstimate, NeumannProblem,
                     Perturbation, SweepTable, csv_row, format_number, estimate_u, estimate_u_penalized,
                     run_sweep)

OUTPUT_ENV = "LEVY_NEUMANN_OUTPUT"
DEFAULT_OUTPUT = "levy_neumann_out"
MODES = ("solve", "solve-penalized", "sweep-n", "sweep-alpha", "sweep-coeff",
         "skorokhod", "selftest", "list-oracles")
_SWEEP_KIND = {"sweep-n": PENALIZATION, "sweep-alpha": ALPHA, "sweep-coeff": COEFFICIENTS}
EXIT_CONFIG = 2
EXIT_RUN = 3


class ConfigError(ValueError):
    pass


def _reject_unknown(spec, allowed, where):
    extra = set(spec) - set(allowed)
    if extra:
        raise ConfigError(f"unknown keys in {where}: {sorted(extra)}")


@dataclass
class MonteCarlo:
    paths: int = 10_000
    steps: int = 4096
    horizon: float | None = None
    batch: int = 256
    backend: str | None = None


@dataclass
class RunConfig:
    """Everything needed to reproduce a run."""

    domain: dict
    lam: float = 1.0
    coefficients: dict = field(default_factory=dict)
    levy: dict = field(default_factory=dict)
    f: dict = field(default_factory=lambda: {"name": "constant", "c": 0.0})
    g: dict = field(default_factory=lambda: {"name": "constant", "c": 0.0})
    mode: str = "solve"
    points: list = field(default_factory=list)
    mc: MonteCarlo = field(default_factory=MonteCarlo)
    seed: int = 0
    penalty: float | None = None
    sweep: list = field(default_factory=list)
    path: dict | None = None
    dump_trajectories: int = 0
    output_dir: str | None = None

    @classmethod
    def from_dict(cls, spec: dict) -> "RunConfig":
        if not isinstance(spec, dict):
            raise ConfigError("config must be a JSON object")
        names = {f.name for f in fields(cls)}
        _reject_unknown(spec, names, "config")
        if "domain" not in spec:
            raise ConfigError("config needs a 'domain'")
        spec = dict(spec)
        mc = spec.pop("mc", {}) or {}
        _reject_unknown(mc, {f.name for f in fields(MonteCarlo)}, "mc")
        cfg = cls(**spec, mc=MonteCarlo(**mc))
        if cfg.mode not in MODES:
            raise ConfigError(f"unknown mode {cfg.mode!r}; choose from {list(MODES)}")
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        canon = {k: v for k, v in self.to_dict().items() if k != "output_dir"}
        return hashlib.sha256(json.dumps(canon, sort_keys=True).encode()).hexdigest()

    # -- builders --------------------------------------------------------------
    def problem(self) -> NeumannProblem:
        domain = domain_from_dict(self.domain)
        d = domain.dim
        coeffs = SdeCoefficients.from_dict(self.coefficients, d) if self.coefficients else SdeCoefficients.zero(d)
        levy = LevyDriverSpec.from_dict(self.levy, d)
        functional = FunctionalSpec(ScalarField.from_dict(self.f, d), ScalarField.from_dict(self.g, d), float(self.lam))
        return NeumannProblem(domain, coeffs, levy, functional)

    def mc_config(self) -> McConfig:
        m = self.mc
        return McConfig(n_paths=int(m.paths), horizon=m.horizon, steps=int(m.steps), seed=int(self.seed),
                        backend=m.backend, batch=int(m.batch))

    def point_list(self, dim):
        if not self.points:
            raise ConfigError("this mode needs at least one evaluation point in 'points'")
        pts = [np.atleast_1d(np.asarray(p, float)) for p in self.points]
        if any(p.shape != (dim,) for p in pts):
            raise ConfigError(f"evaluation points must have {dim} components")
        return pts


# --- modes ------------------------------------------------------------------------------

def _solve_rows(cfg, penalized):
    problem = cfg.problem()
    mc = cfg.mc_config()
    lines, ests = [SweepTable.CSV_HEADER], []
    for x in cfg.point_list(problem.dim):
        if penalized:
            if cfg.penalty is None:
                raise ConfigError("solve-penalized needs 'penalty'")
            est = estimate_u_penalized(problem, x, cfg.penalty, mc)
            param = format_number(cfg.penalty)
        else:
            est = estimate_u(problem, x, mc)
            param = "u"
        ests.append(est)
        lines.append(csv_row(param, x.tolist(), est))
    return lines, ests


def _sweep(cfg, out_dir):
    from .report import render_report

    if not cfg.sweep:
        raise ConfigError(f"{cfg.mode} needs a non-empty 'sweep' list")
    kind = _SWEEP_KIND[cfg.mode]
    values = cfg.sweep
    if kind == COEFFICIENTS:
        values = []
        for v in cfg.sweep:
            _reject_unknown(v, {"param", "sigma_shift", "b_shift", "f_shift"}, "sweep entry")
            values.append(Perturbation(**v))
    problem = cfg.problem()
    table = run_sweep(problem, kind, values, cfg.point_list(problem.dim), cfg.mc_config())
    written = render_report(table, out_dir, cfg.mode.replace("-", "_"))
    ests = [r.target for r in table.rows] + [r.estimate for r in table.rows]
    return table.csv_lines(), ests, written


def _skorokhod(cfg, out_dir):
    from .oracles import oracle_skorokhod
    from .skorokhod import solve_penalized, solve_reflection

    if not cfg.path:
        raise ConfigError("skorokhod mode needs 'path' with 'times' and 'values'")
    _reject_unknown(cfg.path, {"times", "values", "interpolation", "jumps"}, "path")
    domain = domain_from_dict(cfg.domain)
    interp = cfg.path.get("interpolation", STEP)
    if interp not in (STEP, LINEAR):
        raise ConfigError(f"unknown interpolation {interp!r}")
    vals = np.asarray(cfg.path["values"], float)
    vals = vals[:, None] if vals.ndim == 1 else vals
    mask = np.asarray(cfg.path["jumps"], bool) if "jumps" in cfg.path else None
    y = CadlagPath.from_values(cfg.path["times"], vals, interp, jump_mask=mask)
    if y.dim != domain.dim:
        raise ConfigError("path and domain dimensions differ")
    sol = solve_reflection(domain, y)
    ref = oracle_skorokhod(domain, y)
    gap = float(np.max(np.abs(sol.x.values - ref.x.values)))
    sol.x.to_csv(os.path.join(out_dir, "skorokhod_x.csv"))
    sol.k.base.to_csv(os.path.join(out_dir, "skorokhod_k.csv"))
    written = [os.path.join(out_dir, "skorokhod_x.csv"), os.path.join(out_dir, "skorokhod_k.csv")]
    if cfg.penalty is not None:
        pen = solve_penalized(domain, y, cfg.penalty)
        pen.x.to_csv(os.path.join(out_dir, "penalized_x.csv"))
        written.append(os.path.join(out_dir, "penalized_x.csv"))
    x0 = y.values[0].tolist()
    lines = [SweepTable.CSV_HEADER,
             csv_row("variation", x0, McEstimate(float(sol.k.norm_variation()[-1]), 0.0, 1, y.horizon, 0.0, len(y.times))),
             csv_row("oracle_gap", x0, McEstimate(gap, 0.0, 1, y.horizon, 0.0, len(y.times)))]
    return lines, [], written


def _dump(cfg, out_dir):
    problem = cfg.problem()
    mc = cfg.mc_config()
    T = mc.horizon if mc.horizon is not None else 1.0
    x = cfg.point_list(problem.dim)[0]
    out = []
    for i in range(cfg.dump_trajectories):
        tr = simulate_reflected(x, problem.coeffs, problem.levy, problem.domain, T, mc.steps,
                                stream(mc.seed, i), backend=mc.backend)
        path = os.path.join(out_dir, f"trajectory_{i:04d}.csv")
        tr.X.to_csv(path)
        out.append(path)
    return out


def selftest(echo=print) -> bool:
    """Oracle catalog, invariant smoke checks and degenerate solves."""
    from .oracles import catalog, oracle_skorokhod, oracle_u
    from .geometry import Ball, Interval
    from .skorokhod import solve_penalized

    ok = True

    def check(name, cond):
        nonlocal ok
        ok &= bool(cond)
        echo(f"{'PASS' if cond else 'FAIL'} {name}")

    cases = catalog()
    check(f"oracle catalog self-validates ({len(cases)} cases)", True)
    for name in ("interval_exterior_cosine", "ball_exterior_cosine"):
        c = cases[name]
        worst = max(abs(estimate_u(c.problem, x, McConfig(n_paths=1)).mean - oracle_u(c, x)) for x in c.points)
        check(f"{name}: still-process solve matches oracle ({worst:.1e})", worst < 1e-10)
    D = Ball([0.0, 0.0], 1.0)
    pts = np.random.default_rng(0).normal(size=(1000, 2)) * 2
    check("projection is idempotent", np.array_equal(D.project(D.project(pts)), D.project(pts)))
    y = CadlagPath.from_values([0.0, 0.25, 1.0], [[0.5], [-0.5], [-0.5]])
    I01 = Interval(0.0, 1.0)
    pen = solve_penalized(I01, y, 100.0)
    check("penalized jump exit decays as -z e^{-n(T-a)}",
          abs(pen.x.values[-1, 0] + 0.5 * np.exp(-75.0)) < 1e-10)
    ref = oracle_skorokhod(I01, y)
    check("fine-grid oracle reflects the jump exit", abs(ref.x.values[-1, 0]) < 1e-12)
    c = cases["constant_source"]
    est = estimate_u(c.problem, [0.5], McConfig(n_paths=1))
    check("constant source gives c / lam", abs(est.mean - oracle_u(c, [0.5])) <= est.truncation_bias_bound + 1e-12)
    return ok


# --- entry point --------------------------------------------------------------------------

def _fail(kind, message, code):
    click.echo(json.dumps({"error": kind, "message": " ".join(str(message).split())}), err=True)
    sys.exit(code)


def _versions():
    import numba
    import scipy
    return {"levy_neumann": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "numba": numba.__version__, "python": platform.python_version()}


def execute(cfg: RunConfig, out_dir: str) -> dict:
    """Run ``cfg`` and write its artifacts; returns the manifest."""
    os.makedirs(out_dir, exist_ok=True)
    if cfg.mode in ("solve", "solve-penalized"):
        lines, ests = _solve_rows(cfg, cfg.mode == "solve-penalized")
        written = []
    elif cfg.mode in _SWEEP_KIND:
        lines, ests, written = _sweep(cfg, out_dir)
    elif cfg.mode == "skorokhod":
        lines, ests, written = _skorokhod(cfg, out_dir)
    else:
        raise ConfigError(f"mode {cfg.mode} does not produce results")
    if cfg.dump_trajectories:
        written += _dump(cfg, out_dir)
    results = os.path.join(out_dir, "results.csv")
    with open(results, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    manifest = {
        "config": cfg.to_dict(),
        "config_hash": cfg.digest(),
        "seed": cfg.seed,
        "versions": _versions(),
        "grid": {"steps": cfg.mc.steps, "horizons": sorted({e.horizon for e in ests})},
        "bias_bounds": [e.truncation_bias_bound for e in ests],
        "outputs": [os.path.basename(p) for p in [results, *written]],
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def _list_oracles():
    from .oracles import catalog
    for name, case in catalog().items():
        click.echo(f"{name}\t{case.note}")


@click.command(context_settings={"help_option_names": ["-h", "--help"]})
@click.argument("config", required=False, type=click.Path(dir_okay=False))
@click.option("--mode", type=click.Choice(MODES), help="Override the config mode.")
@click.option("--seed", type=int, help="Override the master seed.")
@click.option("--paths", type=int, help="Override the number of Monte Carlo paths.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False),
              help=f"Output directory (default: ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT}).")
@click.version_option(__version__)
def main(config, mode, seed, paths, out_dir):
    """Solve Neumann problems for reflected Levy-driven diffusions by Monte Carlo."""
    try:
        cfg = None
        if config is not None:
            with open(config) as fh:
                cfg = RunConfig.from_dict(json.load(fh))
            if mode:
                cfg.mode = mode
            if seed is not None:
                cfg.seed = seed
            if paths is not None:
                cfg.mc.paths = paths
            mode = cfg.mode
        if mode == "selftest":
            sys.exit(0 if selftest(click.echo) else 1)
        if mode == "list-oracles":
            _list_oracles()
            return
        if cfg is None:
            raise ConfigError("give a CONFIG file, or --mode selftest / list-oracles")
        target = out_dir or cfg.output_dir or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT
        cfg.problem()  # assumption checks before any work
        manifest = execute(cfg, target)
    except (OSError, TypeError, ValueError) as exc:
        _fail(type(exc).__name__, exc, EXIT_CONFIG)
    except Exception as exc:  # pragma: no cover - unexpected runtime failure
        _fail(type(exc).__name__, exc, EXIT_RUN)
    click.echo(f"wrote {', '.join(manifest['outputs'])} to {target}")


if __name__ == "__main__":  # pragma: no cover
    main()
