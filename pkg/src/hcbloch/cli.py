"""Command line front end: ``bloch <subcommand> --config FILE --out DIR``.

Exit codes: 0 on success, 2 for invalid input, 3 for numerical failures.
"""
import argparse
import sys
from pathlib import Path

import numpy as np

from .config import parse_config
from .direct import convergence_study
from .exceptions import BlochError, ConfigError
from .geometry import build_mesh
from .spectrum import compute_spectrum
from .svg import emit_band_svg
from .workflow import bounds_report, prepare, series_run

COMMANDS = ("mesh", "spectrum", "dispersion", "series", "bounds", "validate")
POLE_GAP = 1e-3


def _g(x):
    return "%.17g" % x


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else _g(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _setup(cfg):
    return prepare(cfg.inclusion(), cfg.h, cfg.direction, cfg.sign_value, cfg.n_modes, cfg.backend, cfg.theta)


def cmd_mesh(cfg, out):
    geom = build_mesh(cfg.inclusion(), cfg.h)
    (out / "mesh.txt").write_text(geom.to_text())
    return f"mesh: {len(geom.nodes)} nodes, {len(geom.triangles)} triangles"


def cmd_spectrum(cfg, out):
    geom = build_mesh(cfg.inclusion(), cfg.h)
    spec = compute_spectrum(geom, cfg.n_modes, cfg.backend, cfg.theta)
    rows = [(str(j + 1), spec.values[j], spec.means[j], "nonzero_mean" if spec.nonzero_mean[j] else "zero_mean")
            for j in range(spec.n_modes)]
    _write_csv(out / "spectrum.csv", ("j", "nu_j", "mean_j", "class"), rows)
    return f"spectrum: {spec.n_modes} modes, {int(spec.nonzero_mean.sum())} with nonzero mean"


def dispersion_samples(setup, zeta_max=None, n_samples=400):
    """Uniform ``zeta0`` grid with points near asymptotes removed.

    Returns
    -------
    zeta, tau_sq, band : ndarray
        ``band`` is the branch index inside a pass band and -1 in stop bands.
    """
    rel = setup.relation
    mu = rel.poles
    if zeta_max is None:
        zeta_max = 1.1 * mu[min(3, len(mu) - 1)] if len(mu) else setup.spectrum.values[0]
    zs = np.linspace(0.0, zeta_max, n_samples)
    for p in mu:
        zs = zs[np.abs(zs - p) > POLE_GAP * p]
    t2 = np.array([rel.tau_squared(z) for z in zs])
    band = np.full(len(zs), -1, dtype=int)
    if rel.sign < 0:
        band[:] = 0
    else:
        n = int(np.searchsorted(mu, zeta_max)) + 1
        edges = rel.band_edges(min(n, len(mu)))
        for m, lo in enumerate(edges):
            band[(zs >= lo) & (zs < mu[m]) & (t2 >= 0)] = m
    return zs, t2, band


def cmd_dispersion(cfg, out):
    setup = _setup(cfg)
    zs, t2, band = dispersion_samples(setup, cfg.zeta_max, cfg.n_samples)
    _write_csv(out / "dispersion.csv", ("zeta0", "tau_sq", "band_index"),
               [(z, t, str(b)) for z, t, b in zip(zs, t2, band)])
    if cfg.svg:
        sign_name = "positive" if setup.sign > 0 else "negative"
        svg = emit_band_svg(zs, t2, band, setup.relation.poles, setup.spectrum.mu_prime,
                            title=f"dispersion, {sign_name} inclusion coefficient")
        (out / "dispersion.svg").write_text(svg)
    return f"dispersion: {len(zs)} samples, effective constant {setup.relation.E:.10g}"


def cmd_series(cfg, out):
    setup = _setup(cfg)
    sol = series_run(setup, cfg.branch, cfg.tau_value, cfg.order, cfg.epsilon)
    nr = sol.norms()
    rows = [(str(m), sol.zeta[m], nr["p_bar"][m], nr["p"][m], nr["p_tilde"][m]) for m in range(sol.order + 1)]
    _write_csv(out / "series.csv", ("m", "zeta_m", "norm_Pc", "norm_P", "norm_tilde"), rows)
    return f"series: zeta0={sol.zeta0:.15g}, max defect {sol.max_defect:.3e}"


def cmd_bounds(cfg, out):
    setup = _setup(cfg)
    sol = series_run(setup, cfg.branch, cfg.tau_value, cfg.order, cfg.epsilon)
    rep = bounds_report(setup, sol, cfg.epsilon)
    mj, nr = rep.majorants, rep.norms
    rows = [(str(m), mj["a_hat"][m], mj["b_hat"][m], mj["c_hat"][m], mj["d_hat"][m], nr["p_bar"][m], nr["p"][m],
             nr["s"][m], "true" if rep.flags[m] else "false") for m in range(sol.order + 1)]
    _write_csv(out / "bounds.csv", ("m", "a_hat", "b_hat", "c_hat", "d_hat", "p_bar", "p", "s", "domination_ok"),
               rows)
    st = rep.state
    summary = (f"K={_g(st.K)} K_tau={_g(st.K_tau)} B_tau={_g(st.B_tau)} A={_g(st.A)} omega={_g(st.omega)} "
               f"determinant={_g(rep.determinant)} R_hat_majorant={_g(rep.radius_majorant.radius_eta)} "
               f"R_hat_norm={_g(rep.radius_norm.radius_eta)} dominated={str(rep.dominated).lower()}")
    (out / "bounds_summary.txt").write_text(summary + "\n")
    return summary


def cmd_validate(cfg, out):
    setup = _setup(cfg)
    sol = series_run(setup, cfg.branch, cfg.tau_value, cfg.order, cfg.epsilon)
    table = convergence_study(sol, cfg.etas, cfg.validate_order)
    (out / "validate.csv").write_text(table.to_csv())
    if len(table.rows) >= 2:
        return f"validate: frequency slope {table.zeta_slope:.3f}, residual slope {table.residual_slope:.3f}"
    return "validate: single eta, no slope"


HANDLERS = {"mesh": cmd_mesh, "spectrum": cmd_spectrum, "dispersion": cmd_dispersion,
            "series": cmd_series, "bounds": cmd_bounds, "validate": cmd_validate}


def build_parser():
    parser = argparse.ArgumentParser(prog="bloch", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, type=Path, help="JSON configuration file")
    parser.add_argument("--out", type=Path, default=None, help="output directory (overrides 'output')")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"config: cannot read {args.config} ({exc.strerror})") from None
        cfg = parse_config(text)
        out = args.out if args.out is not None else Path(cfg.output or ".")
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.json").write_text(cfg.to_json())
        message = HANDLERS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"bloch: invalid input: {exc}", file=sys.stderr)
        return 2
    except BlochError as exc:
        print(f"bloch: numerical failure: {exc}", file=sys.stderr)
        return 3
    print(message)
    return 0


if __name__ == "__main__":
    sys.exit(main())
