"""Command-line pipeline: file-based stage handoff with NVF1 artifacts.

Stages read and write NVF1 fields plus key:value sidecars carrying scattering
metadata, diagnostics, and the config hash, so any stage can be re-run and
diffed in isolation.  Exit codes: 0 ok, 1 check failure, 2 usage/IO error,
3 solver non-convergence.  NVISM_LOG=debug|info|quiet controls verbosity.
"""

from __future__ import annotations

import logging
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import checks as checks_mod
from .config import SolverConfig
from .dbar import (
    DbarConvergenceError,
    dbar_sweep,
    reconstruct_q_conductivity,
    reconstruct_q_formula,
)
from .evolution import EvolutionParams, evolve
from .faddeev import CGOConvergenceError, SupportError, scattering_grid
from .grids import ComplexField, Potential, ScatteringData
from .nvf1 import read_field, read_sidecar, sidecar_path, write_csv, write_field, write_sidecar
from .nvpde import NVState, ism_nv_residual, nv_step
from .parallel import default_threads
from .potentials import gamma_to_potential, radial_bump_gamma
from .spectral import fd_derivative, lp_norm

log = logging.getLogger("nvism")

EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_SOLVER = 3


def _setup_logging():
    level = os.environ.get("NVISM_LOG", "info").lower()
    mapping = {"debug": logging.DEBUG, "info": logging.INFO, "quiet": logging.ERROR}
    logging.basicConfig(
        stream=sys.stderr,
        level=mapping.get(level, logging.INFO),
        format="nvism %(levelname)s: %(message)s",
    )


def _load_config(path: str | None) -> SolverConfig:
    if path is None:
        return SolverConfig()
    try:
        return SolverConfig.load(path)
    except FileNotFoundError:
        raise click.ClickException(f"config file not found: {path}")


def _field_meta(cfg: SolverConfig, extra: dict | None = None) -> dict:
    meta = {"config_hash": cfg.config_hash()}
    if extra:
        meta.update(extra)
    return meta


def _write(path: Path, field: ComplexField, kind: str, cfg: SolverConfig,
           extra: dict | None = None, csv: bool = False) -> None:
    write_field(path, field, kind=kind)
    write_sidecar(sidecar_path(path), _field_meta(cfg, extra))
    if csv:
        write_csv(path.with_suffix(".csv"), field)
    log.info("wrote %s", path)


def _read_potential(path: str) -> Potential:
    field, kind = read_field(path)
    if field.grid.plane != "z":
        raise click.ClickException(f"{path} is not a z-plane field")
    return Potential(field, is_real=(kind == "real"))


def _read_scattering(path: str, cfg: SolverConfig) -> ScatteringData:
    field, _ = read_field(path)
    meta = {}
    try:
        meta = read_sidecar(sidecar_path(path))
    except FileNotFoundError:
        log.warning("no sidecar for %s; assuming defaults", path)
    return ScatteringData(
        field,
        variant=meta.get("variant", "plus"),
        k_max=float(meta.get("k_max", min(cfg.k_max, field.grid.s))),
        tau=float(meta.get("tau", 0.0)),
        hierarchy_n=int(meta.get("hierarchy_n", cfg.hierarchy_n)),
    )


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Solver configuration file (key:value).")
@click.option("--threads", type=int, default=None, help="Worker process cap.")
@click.pass_context
def main(ctx, config_path, threads):
    """Inverse scattering pipeline for the zero-energy Novikov-Veselov equation."""
    _setup_logging()
    ctx.ensure_object(dict)
    ctx.obj["cfg"] = _load_config(config_path)
    ctx.obj["threads"] = threads if threads is not None else default_threads()


@main.command("make-potential")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--amplitude", "-c", "amplitude", type=float, default=1.0,
              help="Bump amplitude: gamma(0) = 1 + c.")
@click.option("--radius", "-R", "radius", type=float, default=3.0,
              help="Support radius of gamma - 1.")
@click.option("--csv/--no-csv", default=False, help="Also write CSV exports.")
@click.pass_context
def make_potential_cmd(ctx, out_dir, amplitude, radius, csv):
    """Build a radial conductivity bump and its conductivity-type potential."""
    cfg: SolverConfig = ctx.obj["cfg"]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    gamma = radial_bump_gamma(cfg.z_grid(), amplitude, radius)
    q = gamma_to_potential(gamma)
    params = {"amplitude": amplitude, "radius": radius}
    _write(out / "gamma.nvf1", gamma, "real", cfg, params, csv=csv)
    _write(out / "q0.nvf1", q.field, "real", cfg, params, csv=csv)
    cfg.save(out / "config.txt")


@main.command("forward")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--potential", type=click.Path(), default=None,
              help="Input q (default OUT/q0.nvf1).")
@click.option("--variant", type=click.Choice(["plus", "minus"]), default="plus")
@click.pass_context
def forward_cmd(ctx, out_dir, potential, variant):
    """Scattering transform: solve the CGO problem per k and sample t(k)."""
    cfg: SolverConfig = ctx.obj["cfg"]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    src = potential or str(out / "q0.nvf1")
    try:
        q = _read_potential(src)
    except FileNotFoundError:
        click.echo(f"missing input file: {src}", err=True)
        sys.exit(EXIT_USAGE)
    try:
        data, diag = scattering_grid(q, cfg.k_grid(), variant, cfg,
                                     threads=ctx.obj["threads"])
    except (CGOConvergenceError, SupportError) as exc:
        click.echo(f"forward solve failed: {exc}", err=True)
        sys.exit(EXIT_SOLVER)
    name = f"t_{variant}.nvf1"
    _write(out / name, data.field, "complex", cfg,
           {"variant": variant, "k_max": data.k_max, "tau": data.tau,
            "hierarchy_n": data.hierarchy_n})
    lines = [f"# per-k diagnostics ({variant})", "# k_re k_im iterations residual"]
    for k, it, res in zip(diag.k_values, diag.iterations, diag.residuals):
        lines.append(f"{k.real!r} {k.imag!r} {it} {res!r}")
    (out / f"forward_diag_{variant}.txt").write_text("\n".join(lines) + "\n")
    write_sidecar(out / f"forward_summary_{variant}.txt",
                  _field_meta(cfg, diag.summary()))


@main.command("evolve")
@click.option("--tau", type=float, required=True)
@click.option("--hierarchy-n", "-n", "hierarchy_n", type=int, default=None)
@click.option("--input", "input_path", type=click.Path(), required=True)
@click.option("--output", "output_path", type=click.Path(), default=None,
              help="Defaults to transforming the file in place.")
@click.pass_context
def evolve_cmd(ctx, tau, hierarchy_n, input_path, output_path):
    """Multiply scattering data by the unimodular evolution factor."""
    cfg: SolverConfig = ctx.obj["cfg"]
    try:
        t = _read_scattering(input_path, cfg)
    except FileNotFoundError:
        click.echo(f"missing input file: {input_path}", err=True)
        sys.exit(EXIT_USAGE)
    n = hierarchy_n if hierarchy_n is not None else t.hierarchy_n
    if n != t.hierarchy_n:
        t = ScatteringData(t.field, variant=t.variant, k_max=t.k_max,
                           tau=t.tau, hierarchy_n=n)
    try:
        evolved = evolve(t, EvolutionParams(tau=tau, n=n))
    except ValueError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_USAGE)
    dest = Path(output_path or input_path)
    write_field(dest, evolved.field, kind="complex")
    write_sidecar(sidecar_path(dest), _field_meta(cfg, {
        "variant": evolved.variant, "k_max": evolved.k_max,
        "tau": evolved.tau, "hierarchy_n": evolved.hierarchy_n}))
    log.info("evolved %s -> %s (tau now %r)", input_path, dest, evolved.tau)


@main.command("invert")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--scattering", type=click.Path(), default=None,
              help="Input t (default OUT/t_plus.nvf1).")
@click.pass_context
def invert_cmd(ctx, out_dir, scattering):
    """D-bar inversion: reconstruct q and mu(.,0) from scattering data."""
    cfg: SolverConfig = ctx.obj["cfg"]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    src = scattering or str(out / "t_plus.nvf1")
    try:
        t = _read_scattering(src, cfg)
    except FileNotFoundError:
        click.echo(f"missing input file: {src}", err=True)
        sys.exit(EXIT_USAGE)
    try:
        sweep = dbar_sweep(t, cfg.z_grid(), cfg, threads=ctx.obj["threads"])
        q_rec = reconstruct_q_formula(sweep)
    except DbarConvergenceError as exc:
        click.echo(f"inversion failed: {exc}", err=True)
        sys.exit(EXIT_SOLVER)
    _write(out / "q_rec.nvf1", q_rec.field, "complex", cfg, {"tau": t.tau})
    _write(out / "mu0.nvf1", sweep.mu0, "complex", cfg, {"tau": t.tau})
    lines = ["# per-z diagnostics (row-major over the padded solve lattice)",
             "# flat_index iterations residual"]
    for idx, (it, res) in enumerate(zip(sweep.iterations, sweep.residuals)):
        lines.append(f"{idx} {it} {res!r}")
    (out / "invert_perz.txt").write_text("\n".join(lines) + "\n")
    diag = dict(sweep.summary())
    mu0_minus_1 = ComplexField(sweep.zgrid, sweep.mu0.values - 1.0)
    grad = fd_derivative(sweep.mu0, "dx").values + 1j * fd_derivative(sweep.mu0, "dy").values
    diag["decay_slope_mu0"] = checks_mod.decay_fit(mu0_minus_1, 1).max_abs_violation
    diag["decay_slope_grad_mu0"] = checks_mod.decay_fit(
        ComplexField(sweep.zgrid, grad), 2).max_abs_violation
    diag["decay_slope_q"] = checks_mod.decay_fit(q_rec.field, 2).max_abs_violation
    write_sidecar(out / "invert_diag.txt", _field_meta(cfg, diag))


@main.command("check")
@click.option("--names", required=True,
              help="Comma list: conj-pair,plus-minus,radial-real,threefold,"
                   "q-symmetries,decay-q,decay-mu0")
@click.option("--tplus", type=click.Path(), default=None)
@click.option("--tminus", type=click.Path(), default=None)
@click.option("--q", "q_path", type=click.Path(), default=None)
@click.option("--mu0", "mu0_path", type=click.Path(), default=None)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.pass_context
def check_cmd(ctx, names, tplus, tminus, q_path, mu0_path, out_dir):
    """Run named identity/symmetry/decay checks and write a report."""
    cfg: SolverConfig = ctx.obj["cfg"]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    wanted = [w.strip() for w in names.split(",") if w.strip()]
    reports = []
    try:
        tp = _read_scattering(tplus, cfg) if tplus else None
        tm = _read_scattering(tminus, cfg) if tminus else None
        qf = read_field(q_path)[0] if q_path else None
        m0 = read_field(mu0_path)[0] if mu0_path else None
    except FileNotFoundError as exc:
        click.echo(f"missing input file: {exc.filename}", err=True)
        sys.exit(EXIT_USAGE)
    for name in wanted:
        try:
            if name == "conj-pair":
                reports.append(checks_mod.check_conj_pair(tp, tm, cfg.tol_conj_pair))
            elif name == "plus-minus":
                reports.append(checks_mod.check_plus_minus_equal(tp, tm, cfg.tol_plus_minus))
            elif name == "radial-real":
                reports.append(checks_mod.check_radial_real(tp, cfg.tol_radial_real))
            elif name == "threefold":
                reports.append(checks_mod.check_threefold(tp, cfg.tol_threefold))
            elif name == "q-symmetries":
                reports.append(checks_mod.check_q_symmetries(
                    Potential(qf, is_real=False), cfg.tol_q_symmetry))
            elif name == "decay-q":
                reports.append(checks_mod.decay_fit(qf, 2, cfg.decay_slope_max, "decay-q"))
            elif name == "decay-mu0":
                shifted = ComplexField(m0.grid, m0.values - 1.0)
                reports.append(checks_mod.decay_fit(shifted, 1, cfg.decay_slope_max,
                                                    "decay-mu0"))
            else:
                click.echo(f"unknown check name: {name}", err=True)
                sys.exit(EXIT_USAGE)
        except (TypeError, AttributeError):
            click.echo(f"check {name} is missing its input files", err=True)
            sys.exit(EXIT_USAGE)
    text, kv = [], {"config_hash": cfg.config_hash()}
    for rep in reports:
        text.append(str(rep))
        for key, value in rep.as_dict().items():
            kv[f"{rep.name}.{key}"] = value
    (out / "check_report.txt").write_text("\n".join(text) + "\n")
    write_sidecar(out / "check_report.kv", kv)
    click.echo("\n".join(text))
    if any(not rep.passed for rep in reports):
        sys.exit(EXIT_CHECK_FAILED)


def _band_relative_error(a: ScatteringData, b: ScatteringData,
                         lo: float, hi: float) -> float:
    rho = a.grid.rho()
    band = (rho >= lo) & (rho <= hi)
    num = np.sqrt(np.sum(np.abs(a.field.values - b.field.values)[band] ** 2))
    den = np.sqrt(np.sum(np.abs(b.field.values)[band] ** 2))
    return float(num / max(den, 1e-300))


@main.command("roundtrip")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--tau", type=float, default=0.0)
@click.option("--amplitude", "-c", type=float, default=1.0)
@click.option("--radius", "-R", type=float, default=3.0)
@click.option("--tol", type=float, default=5e-2)
@click.pass_context
def roundtrip_cmd(ctx, out_dir, tau, amplitude, radius, tol):
    """Forward -> evolve -> invert -> forward again; report closure errors."""
    cfg: SolverConfig = ctx.obj["cfg"]
    threads = ctx.obj["threads"]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    gamma = radial_bump_gamma(cfg.z_grid(), amplitude, radius)
    q0 = gamma_to_potential(gamma)
    _write(out / "gamma.nvf1", gamma, "real", cfg)
    _write(out / "q0.nvf1", q0.field, "real", cfg)
    try:
        t0, _ = scattering_grid(q0, cfg.k_grid(), "plus", cfg, threads=threads)
        t_tau = evolve(t0, EvolutionParams(tau=tau, n=cfg.hierarchy_n)) if tau else t0
        sweep = dbar_sweep(t_tau, cfg.z_grid(), cfg, threads=threads)
        q_rec = reconstruct_q_formula(sweep)
        q_fwd = q_rec.realified(rel_tol=0.2)
        t_back, _ = scattering_grid(q_fwd, cfg.k_grid(), "plus", cfg, threads=threads)
    except (CGOConvergenceError, SupportError, DbarConvergenceError) as exc:
        click.echo(f"roundtrip failed to converge: {exc}", err=True)
        sys.exit(EXIT_SOLVER)
    _write(out / "t0.nvf1", t0.field, "complex", cfg,
           {"variant": "plus", "k_max": t0.k_max, "tau": 0.0,
            "hierarchy_n": t0.hierarchy_n})
    _write(out / "q_rec.nvf1", q_rec.field, "complex", cfg, {"tau": tau})
    _write(out / "t_back.nvf1", t_back.field, "complex", cfg,
           {"variant": "plus", "k_max": t_back.k_max, "tau": 0.0,
            "hierarchy_n": t_back.hierarchy_n})
    t_err = _band_relative_error(t_back, t_tau, 0.5, 4.0)
    report = {"t_roundtrip_rel": t_err, "tau": tau}
    if tau == 0.0:
        dq = ComplexField(q0.grid, q_rec.field.values - q0.field.values)
        report["q_roundtrip_rel"] = lp_norm(dq, 2.0) / lp_norm(q0.field, 2.0)
    write_sidecar(out / "roundtrip_report.txt", _field_meta(cfg, report))
    for key, value in report.items():
        click.echo(f"{key}: {value}")
    worst = max(v for k, v in report.items() if k.endswith("_rel"))
    if worst > tol:
        sys.exit(EXIT_CHECK_FAILED)


@main.command("nv-residual")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--tau", type=float, default=1e-4)
@click.option("--dtau", type=float, default=1e-5)
@click.option("--amplitude", "-c", type=float, default=1.0)
@click.option("--radius", "-R", type=float, default=3.0)
@click.pass_context
def nv_residual_cmd(ctx, out_dir, tau, dtau, amplitude, radius):
    """Exploratory: compare the inverse-scattering flow with the evolution
    equation's right-hand side (reported, never gated)."""
    cfg: SolverConfig = ctx.obj["cfg"]
    threads = ctx.obj["threads"]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    gamma = radial_bump_gamma(cfg.z_grid(), amplitude, radius)
    q0 = gamma_to_potential(gamma)
    try:
        t0, _ = scattering_grid(q0, cfg.k_grid(), "plus", cfg, threads=threads)

        def q_at(tt: float) -> Potential:
            t_tt = evolve(t0, EvolutionParams(tau=tt, n=cfg.hierarchy_n))
            sweep = dbar_sweep(t_tt, cfg.z_grid(), cfg, threads=threads)
            return reconstruct_q_formula(sweep)

        report = {}
        q_center = q_at(tau)
        for label, d in (("dtau", dtau), ("dtau_half", dtau / 2.0)):
            rep = ism_nv_residual(q_at(tau - d), q_center, q_at(tau + d), d)
            report[f"residual_{label}"] = rep.relative_violation
            report[f"residual_reversed_{label}"] = rep.metadata["reversed_rel"]
        report["richardson_ratio"] = (
            report["residual_dtau"] / max(report["residual_dtau_half"], 1e-300)
        )
        report["tau"] = tau
    except (CGOConvergenceError, SupportError, DbarConvergenceError) as exc:
        click.echo(f"nv-residual failed to converge: {exc}", err=True)
        sys.exit(EXIT_SOLVER)
    write_sidecar(out / "nv_residual.txt", _field_meta(cfg, report))
    for key, value in report.items():
        click.echo(f"{key}: {value}")


@main.command("nv-run")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--potential", type=click.Path(), required=True)
@click.option("--dt", type=float, required=True)
@click.option("--steps", type=int, required=True)
@click.option("--save-every", type=int, default=10)
@click.pass_context
def nv_run_cmd(ctx, out_dir, potential, dt, steps, save_every):
    """Explicit pseudo-spectral evolution for side-by-side comparison."""
    cfg: SolverConfig = ctx.obj["cfg"]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        q = _read_potential(potential)
    except FileNotFoundError:
        click.echo(f"missing input file: {potential}", err=True)
        sys.exit(EXIT_USAGE)
    state = NVState.from_potential(q)
    index = []

    def save(step: int):
        name = f"frame_{step:06d}.nvf1"
        kind = "real" if state.q.is_real else "complex"
        _write(out / name, state.q.field, kind, cfg, {"tau": state.tau})
        index.append(f"{name}: {state.tau!r}")

    save(0)
    try:
        for step in range(1, steps + 1):
            state = nv_step(state, dt, cfg)
            if step % save_every == 0 or step == steps:
                save(step)
    except (RuntimeError, ValueError) as exc:
        click.echo(f"time stepping aborted: {exc}", err=True)
        sys.exit(EXIT_SOLVER)
    (out / "index.txt").write_text("\n".join(index) + "\n")


def run_pipeline(stages, out_dir, config_path=None, threads: int | None = None,
                 tau: float = 0.0, amplitude: float = 1.0, radius: float = 3.0) -> int:
    """Run a subset of stages in order with file-based handoff in out_dir.

    Stages: make-potential, forward, evolve, invert, check, roundtrip,
    nv-residual.  Returns the first nonzero stage exit status (0 when all
    stages pass); artifacts land in out_dir exactly as with the CLI.
    """
    from click.testing import CliRunner

    runner = CliRunner()
    base = []
    if config_path is not None:
        base += ["--config", str(config_path)]
    if threads is not None:
        base += ["--threads", str(threads)]
    out = str(out_dir)
    known = {
        "make-potential": ["make-potential", "--out", out,
                           "-c", str(amplitude), "-R", str(radius)],
        "forward": ["forward", "--out", out],
        "evolve": ["evolve", "--tau", str(tau),
                   "--input", str(Path(out) / "t_plus.nvf1")],
        "invert": ["invert", "--out", out],
        "check": ["check", "--out", out, "--names", "radial-real,decay-q",
                  "--tplus", str(Path(out) / "t_plus.nvf1"),
                  "--q", str(Path(out) / "q_rec.nvf1")],
        "roundtrip": ["roundtrip", "--out", out, "--tau", str(tau),
                      "-c", str(amplitude), "-R", str(radius)],
        "nv-residual": ["nv-residual", "--out", out, "--tau", str(tau or 1e-4)],
    }
    for stage in stages:
        if stage not in known:
            raise ValueError(f"unknown stage {stage!r}")
        result = runner.invoke(main, base + known[stage], catch_exceptions=False)
        if result.output:
            sys.stderr.write(result.output)
        if result.exit_code != 0:
            return result.exit_code
    return 0


if __name__ == "__main__":
    main()
