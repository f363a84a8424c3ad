"""Command-line front end.

Every subcommand writes its reports (JSON), tables (CSV) and figures (SVG)
into ``--out``. A YAML ``--config`` file overrides the flags, and the flags
override the defaults.

Exit codes: 0 decided, 1 usage or configuration error, 2 inconclusive verdict
or an aborted experiment / numerical range problem.
"""

from __future__ import annotations

import functools
import logging
import math
import sys
from pathlib import Path

import click
import numpy as np
import yaml

from . import plotting, report
from .assoc_fn import AssociatedFunction
from .errors import DomainError, ExperimentAborted, ParameterError, ProxAsymError, RangeError
from .gevrey_type import SectorSpec, type_profile
from .indices import index_report, omega
from .maergoiz import (
    MaergoizFunction,
    mv_bounds,
    property_I_check,
    property_II_check,
    property_III_to_V_check,
    rho_V,
)
from .propagation import (
    TestFunction,
    default_radii,
    extension_experiment,
    propagation_experiment,
    trace_ray,
    wasow_demo,
)
from .quasi import CLASSIFIERS, INCONCLUSIVE, classify_watson_regions
from .sequences import build_sequence, condition_report, load_sequence

EXIT_OK, EXIT_USAGE, EXIT_INCONCLUSIVE = 0, 1, 2

log = logging.getLogger("proxasym")


class ConfigError(click.UsageError):
    pass


def _load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a key-value mapping")
    flat = {}
    for key, value in data.items():
        # one level of grouping (e.g. ``sequence: {family: gevrey}``) is allowed
        if isinstance(value, dict):
            flat.update(value)
        else:
            flat[key] = value
    return {str(k).replace("-", "_").lower(): v for k, v in flat.items()}


def with_config(fn):
    """Let ``--config`` override the flags of the wrapped command."""

    @click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
                  help="YAML file; its keys override the flags.")
    @click.pass_context
    @functools.wraps(fn)
    def wrapper(ctx, config_path, **kwargs):
        if config_path is not None:
            cfg = _load_config(config_path)
            # keys may be parameter names or option names (``class`` for ``klass``)
            by_key = {}
            for p in ctx.command.params:
                if p.name in kwargs:
                    by_key[p.name] = p
                    for opt in p.opts:
                        by_key[opt.lstrip("-").replace("-", "_")] = p
            unknown = sorted(set(cfg) - set(by_key))
            if unknown:
                raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
            for key, value in cfg.items():
                p = by_key[key]
                kwargs[p.name] = p.type_cast_value(ctx, value)
        return fn(**kwargs)

    return wrapper


def sequence_options(fn):
    opts = [
        click.option("--family", default="gevrey", show_default=True,
                     type=click.Choice(["gevrey", "alpha-beta", "zero-beta", "q-square", "custom"])),
        click.option("--alpha", type=float, default=None, help="Gevrey order alpha."),
        click.option("--beta", type=float, default=None, help="Exponent of the log log factor."),
        click.option("--q", type=float, default=None, help="Base of q_square."),
        click.option("--horizon", type=int, default=10**5, show_default=True),
        click.option("--sequence-file", type=click.Path(exists=True, dir_okay=False), default=None,
                     help="One log M_p per line (family custom)."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def out_option(fn):
    return click.option("--out", type=click.Path(file_okay=False), default="proxasym_out",
                        show_default=True, help="Output directory.")(fn)


def _sequence(family, alpha, beta, q, horizon, sequence_file):
    family = family.replace("-", "_")
    if family == "custom":
        if sequence_file is None:
            raise ParameterError("family custom needs --sequence-file")
        return load_sequence(sequence_file)
    params = {k: v for k, v in {"alpha": alpha, "beta": beta, "q": q}.items() if v is not None}
    return build_sequence(family, params, horizon)


def _maergoiz(family, rho, b, gamma):
    if family == "power":
        return MaergoizFunction.power(rho, gamma)
    return MaergoizFunction.power_log(rho, b, gamma)


def _require(**values):
    missing = [k for k, v in values.items() if v is None]
    if missing:
        raise click.UsageError("missing " + ", ".join(f"--{m.replace('_', '-')}" for m in missing))


def _announce(*paths):
    for p in paths:
        click.echo(f"wrote {p}")


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("-v", "--verbose", count=True, help="Log debug output (proof internals).")
def cli(verbose):
    """Weight sequences, associated functions, quasianalyticity and flatness propagation."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


@cli.command()
@sequence_options
@click.option("--tol", type=float, default=1e-3, show_default=True)
@click.option("--window", type=int, default=None, help="Tail window (default horizon/10).")
@click.option("--plots/--no-plots", default=True)
@out_option
@with_config
def diagnose(family, alpha, beta, q, horizon, sequence_file, tol, window, plots, out):
    """Structural conditions and growth indices of a weight sequence."""
    if not tol > 0:
        raise ParameterError("tol must be > 0")
    W = _sequence(family, alpha, beta, q, horizon, sequence_file)
    cond = condition_report(W, tol)
    idx = index_report(W, window, tol)
    out = Path(out)
    files = [
        report.write_json(out / "conditions.json", {"sequence": W.label, **cond.to_dict()}),
        report.write_json(out / "indices.json", {"sequence": W.label, **idx.to_dict()}),
        report.write_csv(out / "regvar.csv", ["ell", "p", "ratio", "target", "pass"], idx.regvar_table),
        report.write_csv(out / "omega_series.csv", ["p", "omega"], idx.omega_window_series),
    ]
    if plots:
        files.append(plotting.plot_series(
            [r[0] for r in idx.omega_window_series], [r[1] for r in idx.omega_window_series],
            out / "omega_series.svg", xlabel="p", ylabel="window min of log m_p / log p"))
    _announce(*files)
    click.echo(
        f"{W.label}: strongly_regular={cond.strongly_regular} "
        f"omega={idx.omega_estimate:.6g} stable={idx.omega_stable}"
    )
    return EXIT_OK if idx.omega_stable else EXIT_INCONCLUSIVE


@cli.command()
@sequence_options
@click.option("--gamma", type=float, default=None, help="Opening of the sector, pi * gamma.")
@click.option("--class", "klass", default="all", show_default=True,
              type=click.Choice(["salinas", "uniform", "regions", "all"]))
@click.option("--admissible", default="auto", show_default=True, type=click.Choice(["auto", "yes", "no"]),
              help="Proximate order for the regions class: test it, or assert it.")
@click.option("--bounded-sector", is_flag=True, help="Salinas class on a bounded sector.")
@click.option("--tol", type=float, default=1e-3, show_default=True)
@out_option
@with_config
def quasi(family, alpha, beta, q, horizon, sequence_file, gamma, klass, admissible, bounded_sector, tol, out):
    """Quasianalyticity verdicts for the classes on S_gamma / G_gamma."""
    _require(gamma=gamma)
    if not gamma > 0:
        raise ParameterError("gamma must be > 0")
    W = _sequence(family, alpha, beta, q, horizon, sequence_file)
    names = list(CLASSIFIERS) if klass == "all" else [klass]
    verdicts = {}
    for name in names:
        if name == "regions":
            adm = {"auto": None, "yes": True, "no": False}[admissible]
            verdicts[name] = classify_watson_regions(W, gamma, tol, admissible=adm)
        elif name == "salinas":
            verdicts[name] = CLASSIFIERS[name](W, gamma, tol, bounded_sector=bounded_sector)
        else:
            verdicts[name] = CLASSIFIERS[name](W, gamma, tol)
    out = Path(out)
    files = [report.write_json(out / "quasi.json", {"sequence": W.label, "verdicts": verdicts})]
    rows = []
    for name, v in verdicts.items():
        if v.series is not None:
            rows += [[name, n, s] for n, s in v.series.partial_sums]
    if rows:
        files.append(report.write_csv(out / "partial_sums.csv", ["class", "n", "partial_sum"], rows))
    _announce(*files)
    for name, v in verdicts.items():
        click.echo(f"{name}: {v.verdict} ({v.reason})")
    undecided = any(v.verdict == INCONCLUSIVE for v in verdicts.values())
    return EXIT_INCONCLUSIVE if undecided else EXIT_OK


@cli.command("type-profile")
@click.option("--k", type=float, default=None, help="Gevrey order is 1/k.")
@click.option("--gamma", type=float, default=None, help="Sector opening pi * gamma.")
@click.option("--d", type=float, default=0.0, show_default=True, help="Bisecting direction.")
@click.option("--theta0", type=float, default=0.0, show_default=True)
@click.option("--r0", type=float, default=1.0, show_default=True, help="Type in direction theta0.")
@click.option("--n", type=int, default=181, show_default=True, help="Grid points strictly inside the sector.")
@click.option("--plots/--no-plots", default=True)
@out_option
@with_config
def type_profile_cmd(k, gamma, d, theta0, r0, n, plots, out):
    """Least Gevrey type R(theta) in every direction of the sector.

    Order 1/k and type R mean a bound exp(-R/|z|^k). Conventions for "type"
    differ across the literature; this one is used verbatim.
    """
    _require(k=k, gamma=gamma)
    if n < 1:
        raise ParameterError("n must be >= 1")
    S = SectorSpec(d, gamma)
    grid = np.linspace(S.alpha, S.beta, n + 2)[1:-1]
    P = type_profile(k, S, theta0, r0, grid)
    out = Path(out)
    files = [
        report.write_csv(out / "profile.csv", ["theta", "R", "branch"], zip(P.theta, P.R, P.branch)),
        report.write_json(out / "profile.json", P.to_dict()),
    ]
    if plots:
        files.append(plotting.plot_type_profile(P, out / "profile.svg"))
    _announce(*files)
    return EXIT_OK


@cli.command()
@click.option("--family", default="power", show_default=True, type=click.Choice(["power", "power-log"]))
@click.option("--rho", type=float, default=1.0, show_default=True)
@click.option("--b", type=float, default=0.0, show_default=True)
@click.option("--gamma", type=float, default=2.0, show_default=True)
@click.option("--r-min", type=float, default=1e-3, show_default=True)
@click.option("--r-max", type=float, default=1e6, show_default=True)
@click.option("--n", type=int, default=400, show_default=True)
@click.option("--mv-alpha", type=float, default=None,
              help="Also band M/V against gevrey(mv_alpha); default 1/rho.")
@click.option("--plots/--no-plots", default=True)
@out_option
@with_config
def maergoiz(family, rho, b, gamma, r_min, r_max, n, mv_alpha, plots, out):
    """Validate a Maergoiz function against its defining properties."""
    V = _maergoiz(family.replace("-", "_"), rho, b, gamma)
    r = np.geomspace(r_min, r_max, n)
    p1 = property_I_check(V)
    shape = property_III_to_V_check(V, r)
    W = build_sequence("gevrey", {"alpha": mv_alpha or 1.0 / rho}, 10**5)
    A = AssociatedFunction(W)
    t_hi = min(1e4, 0.5 * A.t_max)
    band = mv_bounds(A, V, np.geomspace(10.0, t_hi, 200))
    res = {
        "function": V.label,
        "I": p1.to_dict(),
        "II_max_deviation": property_II_check(V),
        "III_to_V": shape.to_dict(),
        "rho_V_at_r_max": rho_V(V, r_max) if r_max > 1 else None,
        "mv_band": {"sequence": W.label, **band.to_dict()},
    }
    out = Path(out)
    files = [
        report.write_json(out / "maergoiz.json", res),
        report.write_csv(out / "property_I.csv", ["r", "deviation"], p1.decay),
        report.write_csv(out / "mv_ratio.csv", ["t", "M_over_V"], zip(band.t, band.ratio)),
    ]
    if plots:
        files.append(plotting.plot_decay(p1.decay, out / "property_I.svg"))
        files.append(plotting.plot_band(band.t, band.ratio, band.A_est, band.B_est,
                                        out / "mv_ratio.svg", ylabel="M(t)/V(t)"))
    _announce(*files)
    click.echo(f"{V.label}: I deviation {p1.deviation:.6g}, III-V passed={shape.passed}")
    return EXIT_OK


def _test_function(kind, V):
    kind = kind.replace("-", "_")
    if kind == "exp_flat":
        return TestFunction.exp_flat(V)
    if kind == "wasow":
        return TestFunction.wasow(V)
    if kind == "geometric":
        return TestFunction.geometric()
    raise ParameterError(f"unknown function kind {kind!r}")


def flat_options(fn):
    opts = [
        click.option("--function", "function", default="exp-flat", show_default=True,
                     type=click.Choice(["exp-flat", "wasow"])),
        click.option("--v-family", default="power", show_default=True,
                     type=click.Choice(["power", "power-log"])),
        click.option("--rho", type=float, default=1.0, show_default=True),
        click.option("--b", type=float, default=0.0, show_default=True),
        click.option("--r0", "ray_r0", type=float, default=0.5, show_default=True, help="Largest ray radius."),
        click.option("--ratio", "ray_q", type=float, default=0.9, show_default=True),
        click.option("--n-radii", type=int, default=64, show_default=True),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


@cli.command()
@flat_options
@sequence_options
@click.option("--gamma", type=float, default=None, help="Opening of S_gamma.")
@click.option("--n-delta", type=int, default=10, show_default=True)
@click.option("--plots/--no-plots", default=True)
@out_option
@with_config
def propagate(function, v_family, rho, b, ray_r0, ray_q, n_radii,
              family, alpha, beta, q, horizon, sequence_file, gamma, n_delta, plots, out):
    """Fit k2 across the sector and compare with the predicted bound."""
    _require(gamma=gamma)
    V = _maergoiz(v_family.replace("-", "_"), rho, b, 2.0)
    if family == "gevrey" and alpha is None:
        alpha = 1.0 / rho
    W = _sequence(family, alpha, beta, q, horizon, sequence_file)
    A = AssociatedFunction(W)
    om = omega(W)
    band = mv_bounds(A, V, np.geomspace(10.0, min(1e4, 0.5 * A.t_max), 200))
    mv = {"A_est": band.A_est, "B_est": band.B_est, "omega": om}
    radii = default_radii(ray_r0, ray_q, n_radii)
    f = _test_function(function, V)
    half = math.pi * gamma / 2
    deltas = np.linspace(2 * half / n_delta, 2 * half, n_delta)
    res = propagation_experiment(f, A, gamma, mv, delta_grid=deltas, radii=radii)
    out = Path(out)
    header = ["delta", "theta", "k2_fitted", "k2_predicted_bound", "satisfied"]
    files = [
        report.write_json(out / "propagation.json",
                          {"function": f.name, "sequence": W.label, "mv": mv, **res.to_dict()}),
        report.write_csv(out / "propagation.csv", header, res.rows),
    ]
    traces = [trace_ray(f, row["theta"], radii) for row in res.rows]
    files.append(report.write_csv(
        out / "rays.csv", ["theta", "r", "log_abs"],
        [(tr.theta, r, v) for tr in traces for r, v in zip(tr.radii, tr.log_abs)]))
    if plots:
        files.append(plotting.plot_propagation(res.rows, out / "k2_vs_delta.svg"))
        files.append(plotting.plot_ray_traces(traces, out / "rays.svg"))
    _announce(*files)
    click.echo(f"{f.name}: all rows satisfied = {res.all_satisfied}")
    return EXIT_OK


@cli.command()
@click.option("--v-family", default="power", show_default=True, type=click.Choice(["power", "power-log"]))
@click.option("--rho", type=float, default=1.0, show_default=True)
@click.option("--b", type=float, default=0.0, show_default=True)
@click.option("--plots/--no-plots", default=True)
@out_option
@with_config
def wasow(v_family, rho, b, plots, out):
    """Flat on the axis, yet the derivative has no limit at 0."""
    V = _maergoiz(v_family.replace("-", "_"), rho, b, 2.0)
    res = wasow_demo(V)
    out = Path(out)
    files = [
        report.write_json(out / "wasow.json", {"function": f"wasow({V.label})", **res.to_dict()}),
        report.write_csv(out / "derivative.csv", ["r", "derivative"], res.derivative_samples),
    ]
    sub_rows = [
        {"subsequence": name, **row} for name, rows in res.subsequences.items() for row in rows
    ]
    files.append(report.write_csv(
        out / "subsequences.csv",
        ["subsequence", "n", "r", "derivative", "envelope", "ratio_to_envelope"], sub_rows))
    if plots:
        rr = [s["r"] for s in res.derivative_samples]
        files.append(plotting.plot_series(
            [1 / x for x in rr], [s["derivative"] for s in res.derivative_samples],
            out / "derivative.svg", xlabel="1/r", ylabel="f'(r)", logx=True))
    _announce(*files)
    click.echo(f"oscillation_detected={res.oscillation_detected}")
    return EXIT_OK


@cli.command()
@click.option("--function", "function", default="exp-flat", show_default=True,
              type=click.Choice(["exp-flat", "wasow", "geometric"]))
@click.option("--v-family", default="power", show_default=True, type=click.Choice(["power", "power-log"]))
@click.option("--rho", type=float, default=1.0, show_default=True)
@click.option("--b", type=float, default=0.0, show_default=True)
@sequence_options
@click.option("--gamma", type=float, default=0.9, show_default=True)
@click.option("--theta0", type=float, default=0.0, show_default=True)
@click.option("--n-dirs", type=int, default=9, show_default=True)
@click.option("--n-coeffs", type=int, default=20, show_default=True,
              help="Taylor coefficients used for the geometric function.")
@out_option
@with_config
def extend(function, v_family, rho, b, family, alpha, beta, q, horizon, sequence_file,
           gamma, theta0, n_dirs, n_coeffs, out):
    """Directional expansion fits over a fan of directions."""
    V = _maergoiz(v_family.replace("-", "_"), rho, b, 2.0)
    if family == "gevrey" and alpha is None:
        alpha = 1.0 / rho
    W = _sequence(family, alpha, beta, q, horizon, sequence_file)
    f = _test_function(function, V)
    coeffs = np.ones(n_coeffs) if function == "geometric" else np.zeros(1)
    G = SectorSpec(0.0, gamma)
    half = math.pi * gamma / 2
    fan = np.linspace(-0.9 * half, 0.9 * half, n_dirs) if n_dirs > 1 else np.array([0.0])
    res = extension_experiment(f, coeffs, W, G, theta0, fan)
    out = Path(out)
    files = [
        report.write_json(out / "extension.json", {"function": f.name, "sequence": W.label, **res}),
        report.write_csv(out / "extension.csv", ["theta", "C", "A", "fitted"], res["rows"]),
    ]
    _announce(*files)
    click.echo(f"{f.name}: every direction fits = {res['success']}")
    return EXIT_OK


def main(argv=None) -> int:
    """Entry point; returns the exit code instead of raising ``SystemExit``."""
    try:
        code = cli.main(args=argv, prog_name="proxasym", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except (ExperimentAborted, RangeError) as exc:
        diag = getattr(exc, "diagnostic", None)
        click.echo(f"error: {exc}" + (f" {report.dumps(diag).strip()}" if diag else ""), err=True)
        return EXIT_INCONCLUSIVE
    except (ParameterError, DomainError, ProxAsymError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_USAGE
    return EXIT_OK if code is None else int(code)


if __name__ == "__main__":
    sys.exit(main())
