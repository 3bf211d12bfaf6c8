"""Command-line entry point.

Every subcommand is a pure function of the configuration (and seed): it
returns a :class:`RunResult` holding the result document plus the tables to
persist, and a single writer stores them at the end of the run.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .classical import PhasePoint, integrate_trajectory, poisson_bracket, radial_bracket_on_shell
from .config import AUTO, RunConfig, load_config
from .distortion import DistortionParams, distortion_jet, invert_r_theta, phi_from_jet, r_theta_eval
from .errors import ArgumentError, ConfigError, ContractionError, DomainError, NumericalError
from .operator import RadialGrid, assemble_h_theta
from .potential import PotentialModel
from .spectral import Rectangle, coercivity_scan, ess_line
from .virial import VirialWindow, WindowRejected, free_case_window, validate_window, virial_margin
from .weyl import WeylSpec, weyl_residual, weyl_residual_exact

EXIT_PASS = 0
EXIT_CERTIFICATE = 2
EXIT_VALIDATION = 3
EXIT_NUMERICAL = 4

THREADS_ENV = "RESCERT_THREADS"
COMMANDS = ("certify", "scan", "weyl", "classical", "distort", "virial")


@dataclass
class RunResult:
    command: str
    config: dict
    passed: bool = True
    exit_code: int = EXIT_PASS
    certificate: dict | None = None
    scans: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict, repr=False)
    version: str = __version__

    def fail(self, code, message=None):
        self.passed = False
        self.exit_code = max(self.exit_code, code)
        if message:
            self.diagnostics.append(message)

    def to_dict(self):
        """Result document; timings are kept out so the file is reproducible."""
        return _clean(
            {
                "command": self.command,
                "tool_version": self.version,
                "config": self.config,
                "pass": self.passed,
                "exit_code": self.exit_code,
                "certificate": self.certificate,
                "scans": self.scans,
                "residuals": self.residuals,
                "summary": self.summary,
                "diagnostics": self.diagnostics,
                "files": sorted(self.tables),
            }
        )


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _clean(obj.real), "im": _clean(obj.imag)}
    return obj


def dumps_json(obj):
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def format_csv(header, rows):
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(f"{float(v):.17g}" for v in row) + "\n")
    return buf.getvalue()


# shared builders


def build_model(cfg: RunConfig) -> PotentialModel:
    m = cfg.model
    return PotentialModel(family=m.family, kappa=m.kappa, rho=m.rho, s=m.s, beta0=m.beta0)


def _partition_R(s, r_inner):
    if s < 1:
        return r_inner / 2 ** (1 / (2 * s))
    return max(1.0, r_inner / math.sqrt(2))


def build_window(cfg: RunConfig) -> VirialWindow:
    """Window from the config; raises WindowRejected for the automatic recipe."""
    v, s = cfg.virial, cfg.model.s
    if v.auto:
        w = free_case_window(s, v.E)
    else:
        R = _partition_R(s, v.r_inner)
        w = VirialWindow(v.E, v.mu, v.alpha, v.gamma, v.r_inner, v.r_outer, R, s)
    if cfg.distortion.R != AUTO:
        w = replace(w, R=cfg.distortion.R)
    return w


def _distortion_R(cfg, window):
    if cfg.distortion.R != AUTO:
        return cfg.distortion.R
    if window is not None:
        return window.R
    return 1.0


def build_distortion(cfg: RunConfig, window=None, theta=None) -> DistortionParams:
    th = 1j * cfg.distortion.beta if theta is None else theta
    return DistortionParams.create(theta=th, s=cfg.model.s, d=cfg.model.d, R=_distortion_R(cfg, window))


def build_grid(cfg: RunConfig, window=None) -> RadialGrid:
    g = cfg.grid
    r_min = g.r_min
    if r_min == AUTO:
        r_min = window.r_inner if window is not None else 0.5
    if not r_min < g.r_max:
        raise ConfigError(f"automatic r_min={r_min} is not below r_max", "grid.r_min")
    return RadialGrid(r_min, g.r_max, g.n, cfg.model.d)


def build_rectangle(cfg: RunConfig, window=None) -> Rectangle:
    sc, beta = cfg.scan, cfg.distortion.beta
    need = [sc.center_re, sc.center_im, sc.half_re, sc.half_im]
    if AUTO in need and window is None:
        raise ConfigError("automatic rectangle needs a virial window", "scan")
    c_re = window.E if sc.center_re == AUTO else sc.center_re
    c_im = -beta * window.mu if sc.center_im == AUTO else sc.center_im
    h_re = beta * window.gamma if sc.half_re == AUTO else sc.half_re
    h_im = beta * window.mu / 2 if sc.half_im == AUTO else sc.half_im
    return Rectangle.around(complex(c_re, c_im), h_re, h_im, sc.n_re, sc.n_im)


def _maybe_window(cfg):
    try:
        return build_window(cfg)
    except WindowRejected:
        return None


def _scan_sectors(cfg, res, window, threads, label):
    """Assemble and scan every sector; records tables, returns the scans."""
    m = build_model(cfg)
    p = build_distortion(cfg, window)
    grid = build_grid(cfg, window)
    rect = build_rectangle(cfg, window)
    line = ess_line(cfg.model.s, cfg.distortion.beta)
    scans = []
    for ell in cfg.sectors:
        t0 = time.perf_counter()
        op = assemble_h_theta(grid, ell, p, m, cfg.model.hbar)
        sc = coercivity_scan(op, rect, method=cfg.scan.method, threads=threads)
        res.timings[f"{label}_l{ell}"] = time.perf_counter() - t0
        inside = sc.eigen.in_box((rect.re_min, rect.re_max), (rect.im_min, rect.im_max))
        entry = {
            "ell": ell,
            "rectangle": rect.to_dict(),
            "essential_line_im": line,
            "crosses_essential_line": sc.crosses(line),
            "line_dip_ratio": sc.line_dip(line),
            "interior_eigenvalues_in_rectangle": [complex(z) for z in inside],
            **sc.summary(),
            "grid": grid.to_dict(),
            "operator": op.params.to_dict(),
        }
        res.scans.append(entry)
        res.tables[f"scan_l{ell}.csv"] = format_csv(("re_z", "im_z", "sigma_min"), sc.rows())
        res.tables[f"eigen_l{ell}.json"] = dumps_json(sc.eigen.to_records())
        scans.append((entry, sc))
    return scans


# subcommands


def cmd_virial(cfg: RunConfig, threads=1) -> RunResult:
    """Build and validate the virial window."""
    res = RunResult("virial", cfg.to_dict())
    try:
        window = build_window(cfg)
    except WindowRejected as exc:
        res.certificate = {"passed": False, "rejected": str(exc)}
        res.fail(EXIT_CERTIFICATE, f"virial window rejected: {exc}")
        return res
    t0 = time.perf_counter()
    cert = validate_window(build_model(cfg), window)
    res.timings["virial"] = time.perf_counter() - t0
    res.certificate = cert.to_dict()
    if not cert.passed:
        res.fail(EXIT_CERTIFICATE, "virial checks failed: " + ", ".join(cert.failed()))
    return res


def cmd_certify(cfg: RunConfig, threads=1) -> RunResult:
    """Validate the window and certify the rectangle by a sigma_min scan."""
    res = cmd_virial(cfg)
    res.command = "certify"
    if res.certificate.get("rejected"):
        return res
    window = build_window(cfg)
    beta = cfg.distortion.beta
    p = build_distortion(cfg, window)
    admissible = beta < min(p.L_s, cfg.model.beta0)
    res.certificate["checks"]["beta_admissible"] = admissible
    res.certificate["margins"]["theta_radius"] = p.L_s
    res.certificate["passed"] = res.certificate["passed"] and admissible
    if not admissible:
        res.fail(EXIT_CERTIFICATE, f"beta={beta} is not below min(L_s={p.L_s}, beta0={cfg.model.beta0})")

    scans = _scan_sectors(cfg, res, window, threads, "scan")
    bound = window.leading_constant(beta)
    smin = min(e["min_sigma"] for e, _ in scans)
    res.summary = {
        "min_sigma": smin,
        "leading_constant": bound,
        "sigma_over_leading_constant": smin / bound,
        "target": window.target(beta),
    }
    if not smin > 0:
        res.fail(EXIT_CERTIFICATE, "sigma_min vanishes on the rectangle")
    for entry, _ in scans:
        if entry["crosses_essential_line"]:
            res.fail(
                EXIT_CERTIFICATE,
                f"essential-line proximity: rectangle meets Im z = {entry['essential_line_im']!r}"
                f" (ell={entry['ell']}, dip ratio {entry['line_dip_ratio']:.3g})",
            )
        if entry["interior_eigenvalues_in_rectangle"]:
            res.fail(EXIT_CERTIFICATE, f"eigenvalue of H_theta inside the rectangle (ell={entry['ell']})")
    return res


def cmd_scan(cfg: RunConfig, threads=1) -> RunResult:
    """Scan sigma_min over a rectangle for every sector."""
    res = RunResult("scan", cfg.to_dict())
    window = _maybe_window(cfg)
    scans = _scan_sectors(cfg, res, window, threads, "scan")
    res.summary = {"min_sigma": min(e["min_sigma"] for e, _ in scans)}
    for entry, _ in scans:
        if entry["crosses_essential_line"]:
            res.diagnostics.append(f"essential-line proximity (ell={entry['ell']})")
    return res


def cmd_weyl(cfg: RunConfig, threads=1) -> RunResult:
    """Weyl-sequence residuals along the essential-spectrum line."""
    res = RunResult("weyl", cfg.to_dict())
    w = cfg.weyl
    m = build_model(cfg)
    window = _maybe_window(cfg)
    p = build_distortion(cfg, window)
    offset = 1j * w.offset_im
    op = None
    if w.route == "grid":
        op = assemble_h_theta(build_grid(cfg, window), w.ell, p, m, cfg.model.hbar)
    t0 = time.perf_counter()
    rows = []
    for lam in w.lam:
        column = []
        for n in w.n:
            spec = WeylSpec(cfg.model.s, lam, n, cfg.model.hbar, m, w.phase, w.variable)
            if op is None:
                r0 = weyl_residual_exact(spec, p, w.ell)
                r1 = weyl_residual_exact(spec, p, w.ell, offset=offset)
            else:
                r0 = weyl_residual(spec, op)
                r1 = weyl_residual(spec, op, offset=offset)
            rows.append((lam, n, r0, r1))
            column.append(r0)
        decreasing = all(b < a for a, b in zip(column, column[1:]))
        res.residuals.append({"lam": lam, "n": list(w.n), "residual": column, "strictly_decreasing": decreasing})
        if not decreasing:
            res.fail(EXIT_CERTIFICATE, f"Weyl residuals not strictly decreasing at lam={lam!r}")
    res.timings["weyl"] = time.perf_counter() - t0
    res.summary = {
        "route": w.route,
        "essential_line_im": ess_line(cfg.model.s, cfg.distortion.beta),
        "min_offset_residual": min(r[3] for r in rows),
    }
    res.tables["weyl.csv"] = format_csv(("lam", "n", "residual", "offset_residual"), rows)
    return res


def cmd_classical(cfg: RunConfig, threads=1) -> RunResult:
    """Integrate one classical trajectory and report the escape data."""
    res = RunResult("classical", cfg.to_dict())
    c, s = cfg.classical, cfg.model.s
    m = build_model(cfg)
    point = PhasePoint.radial(c.r0, c.xi0, cfg.model.d)
    t0 = time.perf_counter()
    traj = integrate_trajectory(m, s, point, c.t_max, c.dt, c.every)
    res.timings["integrate"] = time.perf_counter() - t0
    h0 = float(traj.h[0])
    bracket = poisson_bracket(m, s, point)
    shell = float(radial_bracket_on_shell(m, s, h0, c.r0))
    virial = float(virial_margin(m, h0, 0.0, c.r0))
    res.summary = {
        "energy": h0,
        "energy_drift_abs": float(np.max(np.abs(traj.h - h0))),
        "truncated": traj.truncated,
        "r_final": float(traj.r[-1]),
        "g_final": float(traj.g[-1]),
        "bracket_initial": bracket,
        "radial_bracket_on_shell": shell,
        "virial_left_side": virial,
        "steps_recorded": len(traj.t),
    }
    res.tables["trajectory.csv"] = format_csv(("t", "r", "g", "h"), traj.rows())
    return res


def cmd_distort(cfg: RunConfig, threads=1) -> RunResult:
    """Tabulate the distortion map, its Jacobian and phi."""
    res = RunResult("distort", cfg.to_dict())
    dc = cfg.distort
    window = _maybe_window(cfg)
    th_im = cfg.distortion.beta if dc.theta_im == AUTO else dc.theta_im
    theta = complex(dc.theta_re, th_im)
    p = build_distortion(cfg, window, theta=theta)
    r = np.linspace(dc.r_min, dc.r_max, dc.n)
    jet = distortion_jet(p, r)
    phi = phi_from_jet(jet, p.d)
    rows = zip(r, jet.rt.real, jet.rt.imag, jet.J.real, jet.J.imag, np.real(phi), np.imag(phi))
    header = ("r", "r_theta_re", "r_theta_im", "J_re", "J_im", "phi_re", "phi_im")
    res.tables["distort.csv"] = format_csv(header, rows)
    res.summary = {"theta": theta, "theta_radius": p.L_s, "R": p.R, "identity": bool(np.all(jet.rt == r))}

    if theta.imag == 0 and abs(theta.real) < p.L_s:
        rng = np.random.default_rng(cfg.seed)
        targets = rng.uniform(dc.r_min, dc.r_max, dc.samples)
        worst, iters = 0.0, 0
        for rt in targets:
            x, k = invert_r_theta(p, rt)
            back = float(np.real(r_theta_eval(p, x)[0]))
            worst = max(worst, abs(back - rt) / rt)
            iters = max(iters, k)
        res.summary["roundtrip"] = {"samples": dc.samples, "max_rel_error": worst, "max_iterations": iters}
    else:
        res.diagnostics.append("roundtrip skipped: inversion needs real theta below the admissible radius")
    return res


HANDLERS = {
    "certify": cmd_certify,
    "scan": cmd_scan,
    "weyl": cmd_weyl,
    "classical": cmd_classical,
    "distort": cmd_distort,
    "virial": cmd_virial,
}


def write_outputs(res: RunResult, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    for name, text in sorted(res.tables.items()):
        (out / name).write_text(text)
    (out / "result.json").write_text(dumps_json(res.to_dict()))
    (out / "timings.json").write_text(dumps_json(res.timings))


def resolve_threads(flag):
    if flag is not None:
        n = flag
    else:
        env = os.environ.get(THREADS_ENV)
        if env is None:
            return 1
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"not an integer: {env!r}", THREADS_ENV) from None
    if n < 1:
        raise ConfigError("thread count must be >= 1", "threads")
    return n


def run(command, cfg: RunConfig, threads=1) -> RunResult:
    if command not in HANDLERS:
        raise ArgumentError(f"unknown command {command!r}")
    return HANDLERS[command](cfg, threads)


def build_parser():
    ap = argparse.ArgumentParser(prog="rescert", description="Resonance-free region certification toolkit.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=HANDLERS[name].__doc__)
        sp.add_argument("--config", type=Path, help="TOML run configuration (defaults if omitted)")
        sp.add_argument("--out", type=Path, default=Path("rescert-out"), help="output directory")
        sp.add_argument("--threads", type=int, default=None, help=f"worker threads (else ${THREADS_ENV}, else 1)")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("must be >= 0", "seed")
            cfg = replace(cfg, seed=args.seed)
        threads = resolve_threads(args.threads)
        res = run(args.command, cfg, threads)
        write_outputs(res, args.out)
    except (ConfigError, ArgumentError, ContractionError) as exc:
        print(f"rescert: validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, DomainError, np.linalg.LinAlgError) as exc:
        print(f"rescert: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"rescert: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    status = "PASS" if res.passed else "FAIL"
    print(f"{args.command}: {status} -> {args.out}")
    for msg in res.diagnostics:
        print(f"  {msg}")
    return res.exit_code


if __name__ == "__main__":
    sys.exit(main())
