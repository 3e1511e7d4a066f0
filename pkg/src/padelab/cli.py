"""Command-line front end.

    padelab series FAMILY N [--param k=v] [--epsilon E --seed S]
    padelab pade SOURCE --order L M [--scale none|auto|VALUE]
    padelab roots SOURCE --order L M
    padelab residues SOURCE --order L M
    padelab classify SOURCE --order L M [--delta-pair ...]
    padelab denoise SAMPLES --order L M [--duration T]
    padelab experiment [ID ...] [--orders ...] [--seeds ...] [--epsilons ...]

SOURCE is a family name (coefficients generated on the fly, ``--terms``
defaults to L+M) or a coefficient CSV written by ``series``.  ``roots``,
``residues`` and ``classify`` also accept an approximant JSON written by
``pade``.  Every command writes into ``--out`` (default ``.``) and prints a
JSON summary on stdout.

Exit codes: 0 success, 2 configuration error, 3 numerical failure (for
``experiment``: every run failed), 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._numeric import dumps_json, fmt_real, num
from .experiments import ConfigError, ExperimentConfig, ExperimentId, Plot, render_svg, run_experiments
from .pade_engine import (
    DegeneratePolicy,
    PoleProximityError,
    RationalApproximant,
    SolveError,
    SolveOptions,
    approximant_to_dict,
    read_approximant,
    solve_pade,
    write_approximant,
)
from .polyroots import write_rootset
from .series_corpus import (
    ConfigurationError,
    Family,
    NoiseDistribution,
    NoiseSpec,
    SeriesSpec,
    read_coefficients,
    taylor_coefficients,
    write_coefficients,
)
from .singularity_lab import (
    DoubletThresholds,
    EmptyModelError,
    StatisticsError,
    classify_doublets,
    denoise_signal,
    poles_zeros,
    report_to_dict,
    residues,
    spectrum_to_dict,
    write_json,
    write_report_csv,
    write_spectrum_csv,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


def _parse_param(text: str):
    if "=" not in text:
        raise ConfigError(f"--param expects key=value, got {text!r}")
    k, v = text.split("=", 1)
    try:
        return k, json.loads(v)
    except json.JSONDecodeError:
        return k, v


def _options(args) -> SolveOptions:
    scale = str(args.scale).lower()
    kw = {"degenerate": DegeneratePolicy(args.degenerate.upper()), "residual_tol": args.residual_tol}
    if scale == "none":
        return SolveOptions(**kw)
    if scale == "auto":
        return SolveOptions(scaling="AUTO", **kw)
    try:
        rho = float(scale)
    except ValueError:
        raise ConfigError(f"--scale must be none, auto or a positive number, got {args.scale!r}") from None
    if not rho > 0:
        raise ConfigError("--scale must be > 0")
    return SolveOptions.explicit(rho, **kw)


def _noise(args):
    if args.epsilon is None or args.epsilon == 0:
        return None
    return NoiseSpec(args.epsilon, args.seed, NoiseDistribution(args.distribution))


def _family(name: str):
    try:
        return Family(name.upper())
    except ValueError:
        return None


def _load_series(args, terms: int):
    fam = _family(args.source)
    if fam is not None:
        spec = SeriesSpec(fam, dict(_parse_param(p) for p in args.param), _noise(args))
        return taylor_coefficients(spec, terms, args.precision)
    path = Path(args.source)
    if not path.with_suffix(".csv").exists() and not path.exists():
        raise ConfigError(f"{args.source!r} is neither a series family nor a readable file")
    return read_coefficients(path)


def _load_approximant(args) -> RationalApproximant:
    path = Path(args.source)
    if path.suffix == ".json" and path.exists():
        text = path.read_text()
        if '"denominator"' in text:
            return read_approximant(path)
    if args.order is None:
        raise ConfigError("--order L M is required unless SOURCE is an approximant file")
    L, M = args.order
    cv = _load_series(args, args.terms if args.terms is not None else L + M)
    return solve_pade(cv, L, M, _options(args))


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _svg_from_csv(csv_path: Path, plot: Plot) -> Path:
    svg = csv_path.with_suffix(".svg")
    svg.write_text(render_svg(plot, csv_path.read_text()))
    return svg


def _print(summary: dict) -> None:
    sys.stdout.write(dumps_json(summary))


# ---------------------------------------------------------------------------
# subcommands


def cmd_series(args) -> int:
    fam = _family(args.family)
    if fam is None:
        raise ConfigError(f"unknown family {args.family!r}; choose from {', '.join(f.value for f in Family)}")
    spec = SeriesSpec(fam, dict(_parse_param(p) for p in args.param), _noise(args))
    cv = taylor_coefficients(spec, args.N, args.precision)
    out = _out(args)
    csv_path, json_path = write_coefficients(cv, out / args.name)
    files = [csv_path, json_path]
    if args.format == "svg":
        files.append(_svg_from_csv(csv_path, Plot("c", "c", "line", (("Re c_n", "n", "re", None, None),), title=fam.value)))
    _print({"family": fam.value, "order": cv.order, "files": [str(p) for p in files]})
    return EXIT_OK


def cmd_pade(args) -> int:
    L, M = args.order
    cv = _load_series(args, args.terms if args.terms is not None else L + M)
    approx = solve_pade(cv, L, M, _options(args))
    out = _out(args)
    path = write_approximant(approx, out / f"{args.name}.json")
    files = [path]
    if args.format in ("csv", "svg"):
        n = max(approx.numerator.size, approx.denominator.size)
        lines = ["k,num_re,num_im,den_re,den_im"]
        for k in range(n):
            a = approx.numerator[k] if k < approx.numerator.size else 0
            b = approx.denominator[k] if k < approx.denominator.size else 0
            lines.append(f"{k},{fmt_real(np.real(a))},{fmt_real(np.imag(a))},{fmt_real(np.real(b))},{fmt_real(np.imag(b))}")
        csv_path = out / f"{args.name}.csv"
        csv_path.write_text("\n".join(lines) + "\n")
        files.append(csv_path)
    d = approximant_to_dict(approx)
    _print({"L": approx.L, "M": approx.M, "condition_report": d["condition_report"], "files": [str(p) for p in files]})
    return EXIT_OK


def _pz_plot(title):
    return Plot("pz", "pz", "scatter", (("roots", "re", "im", None, None),), unit_circle=True, title=title)


def cmd_roots(args) -> int:
    approx = _load_approximant(args)
    pzs = poles_zeros(approx)
    out = _out(args)
    files = []
    for kind, rs in (("poles", pzs.poles), ("zeros", pzs.zeros)):
        p = write_rootset(rs, out / f"{args.name}_{kind}.csv")
        files.append(p)
        if args.format == "svg":
            files.append(_svg_from_csv(p, _pz_plot(f"{kind} [{approx.L}|{approx.M}]")))
    if args.format == "json":
        body = {
            kind: [
                {"re": num(z.real), "im": num(z.imag), "backward_error": num(be), "flags": list(f)}
                for z, be, f in zip(rs.all_roots, rs.all_backward_errors, rs.all_flags)
            ]
            for kind, rs in (("poles", pzs.poles), ("zeros", pzs.zeros))
        }
        files.append(write_json(body, out / f"{args.name}.json"))
    _print(
        {
            "poles": int(pzs.pole_locations.size),
            "zeros": int(pzs.zero_locations.size),
            "infinite_poles": pzs.poles.infinite_count,
            "files": [str(p) for p in files],
        }
    )
    return EXIT_OK


def cmd_residues(args) -> int:
    approx = _load_approximant(args)
    spec = residues(approx)
    out = _out(args)
    if args.format == "json":
        files = [write_json(spectrum_to_dict(spec), out / f"{args.name}.json")]
    else:
        p = write_spectrum_csv(spec, out / f"{args.name}.csv")
        files = [p]
        if args.format == "svg":
            plot = Plot("r", "r", "line", (("|A_k|", "rank", "residue_abs", None, None),), log_y=True, title="residues")
            files.append(_svg_from_csv(p, plot))
    beta = spec.beta if np.isfinite(spec.beta) else None
    _print({"poles": int(spec.poles.size), "beta": num(beta) if beta is not None else None, "fit_quality": num(spec.fit_quality), "files": [str(p) for p in files]})
    return EXIT_OK


def _thresholds(args) -> DoubletThresholds:
    return DoubletThresholds(args.delta_pair, args.tau_rel, args.delta_shell)


def cmd_classify(args) -> int:
    approx = _load_approximant(args)
    pzs = poles_zeros(approx)
    rep = classify_doublets(pzs, residues(approx, pzs), _thresholds(args))
    out = _out(args)
    if args.format == "json":
        files = [write_json(report_to_dict(rep), out / f"{args.name}.json")]
    else:
        p = write_report_csv(rep, out / f"{args.name}.csv")
        files = [p]
        if args.format == "svg":
            plot = Plot("c", "c", "scatter", (("poles", "pole_re", "pole_im", None, None),), unit_circle=True, title="poles")
            files.append(_svg_from_csv(p, plot))
    _print({"counts": rep.counts, "files": [str(p) for p in files]})
    return EXIT_OK


def _read_samples(path: Path) -> np.ndarray:
    rows = path.read_text().strip().splitlines()
    head = rows[0].split(",")
    if head[-2:] != ["re", "im"]:
        raise ConfigError(f"{path}: expected a CSV whose last two columns are re,im")
    return np.array([complex(float(r.split(",")[-2]), float(r.split(",")[-1])) for r in rows[1:]])


def cmd_denoise(args) -> int:
    L, M = args.order
    path = Path(args.samples)
    if not path.exists():
        raise FileNotFoundError(f"{path}: no such file")
    s = _read_samples(path)
    model = denoise_signal(s, L, M, _thresholds(args), duration=args.duration, opts=_options(args))
    out = _out(args)
    modes = [
        {"amplitude": {"re": num(m.amplitude.real), "im": num(m.amplitude.imag)}, "frequency": num(m.frequency), "damping": num(m.damping)}
        for m in model.modes
    ]
    if args.format == "json":
        files = [write_json({"modes": modes, "reconstruction_rms": num(model.reconstruction_rms)}, out / f"{args.name}.json")]
    else:
        p = out / f"{args.name}.csv"
        lines = ["amp_re,amp_im,frequency,damping"]
        for m in model.modes:
            lines.append(",".join(fmt_real(x) for x in (m.amplitude.real, m.amplitude.imag, m.frequency, m.damping)))
        p.write_text("\n".join(lines) + "\n")
        files = [p]
        if args.format == "svg":
            plot = Plot("m", "m", "scatter", (("modes", "frequency", "damping", None, None),), title="frequency vs damping")
            files.append(_svg_from_csv(p, plot))
    _print({"modes": modes, "reconstruction_rms": num(model.reconstruction_rms), "files": [str(p) for p in files]})
    return EXIT_OK


def cmd_experiment(args) -> int:
    try:
        ids = [ExperimentId(i.upper()) for i in args.ids]
    except ValueError as exc:
        raise ConfigError(f"{exc}; choose from {', '.join(e.value for e in ExperimentId)}") from None
    out = Path(args.out)
    th = _thresholds(args)
    configs = [
        ExperimentConfig(i, out, tuple(args.orders), tuple(args.seeds), tuple(args.epsilons), args.scale, th) for i in ids
    ]
    formats = args.format_list or ["csv", "json", "svg"]
    bundle = run_experiments(configs, out, formats)
    failed = [r for r in bundle.runs if r.status != "ok"]
    _print(
        {
            "manifest": str(bundle.manifest_path),
            "runs": len(bundle.runs),
            "failed": [{"run": r.label, "error": r.error} for r in failed],
        }
    )
    return EXIT_NUMERIC if bundle.all_failed else EXIT_OK


# ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, *, order: bool = True, order_required: bool = False) -> None:
    if order:
        p.add_argument("--order", nargs=2, type=int, metavar=("L", "M"), required=order_required)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--name", default=p.prog.split()[-1], help="file stem for outputs")
    p.add_argument("--scale", default="none", help="none, auto or a positive radius")
    p.add_argument("--degenerate", default="reduce", choices=["reduce", "min_norm", "error"])
    p.add_argument("--residual-tol", type=float, default=1e-10)


def _series_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--distribution", default="UNIFORM_SYM", choices=[d.value for d in NoiseDistribution])
    p.add_argument("--precision", default="double", choices=["double", "extended"])


def _threshold_args(p: argparse.ArgumentParser) -> None:
    d = DoubletThresholds()
    p.add_argument("--delta-pair", type=float, default=d.delta_pair)
    p.add_argument("--tau-rel", type=float, default=d.tau_rel)
    p.add_argument("--delta-shell", type=float, default=d.delta_shell)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="padelab", description="Padé approximants of power series and their singularities.")
    parser.add_argument("--version", action="version", version=f"padelab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("series", help="generate Taylor coefficients")
    p.add_argument("family")
    p.add_argument("N", type=int, help="highest coefficient index")
    _common(p, order=False)
    _series_args(p)
    p.add_argument("--format", default="csv", choices=["csv", "json", "svg"])
    p.set_defaults(func=cmd_series)

    for name, func, fmt_default in (
        ("pade", cmd_pade, "json"),
        ("roots", cmd_roots, "csv"),
        ("residues", cmd_residues, "csv"),
        ("classify", cmd_classify, "csv"),
    ):
        p = sub.add_parser(name)
        p.add_argument("source", help="family name, coefficient CSV or approximant JSON")
        _common(p, order_required=(name == "pade"))
        _series_args(p)
        p.add_argument("--terms", type=int, default=None, help="coefficients to generate (default L+M)")
        p.add_argument("--format", default=fmt_default, choices=["csv", "json", "svg"])
        if name == "classify":
            _threshold_args(p)
        p.set_defaults(func=func)

    p = sub.add_parser("denoise", help="recover damped modes from samples (CSV with re,im columns)")
    p.add_argument("samples")
    _common(p, order_required=True)
    _threshold_args(p)
    p.add_argument("--duration", type=float, default=None)
    p.add_argument("--format", default="csv", choices=["csv", "json", "svg"])
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("experiment", help="run named experiment pipelines")
    p.add_argument("ids", nargs="*", metavar="ID")
    p.add_argument("--orders", nargs="+", type=int, default=[])
    p.add_argument("--seeds", nargs="+", type=int, default=[])
    p.add_argument("--epsilons", nargs="+", type=float, default=[])
    p.add_argument("--out", default="padelab_out")
    p.add_argument("--scale", default="none")
    p.add_argument("--format", dest="format_list", action="append", choices=["csv", "json", "svg"])
    _threshold_args(p)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SolveError, PoleProximityError, EmptyModelError, StatisticsError, ArithmeticError) as exc:
        print(f"padelab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ConfigurationError, ValueError, KeyError) as exc:
        print(f"padelab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"padelab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
