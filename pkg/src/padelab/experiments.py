"""Reproducible experiment pipelines and their report bundles.

Each experiment expands into independent runs (one per order / seed / noise
level).  Runs execute in a thread pool capped by ``PADE_LAB_THREADS``; their
tables are written after all runs join, in a fixed order, so repeated
invocations produce byte-identical CSV and JSON.  SVG plots are rendered
from the CSV text itself.
"""

from __future__ import annotations

import enum
import hashlib
import math
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

from . import __version__
from ._numeric import dumps_json, fmt_real, num
from .pade_engine import (
    PoleProximityError,
    Scaling,
    SolveOptions,
    evaluate,
    exact_pade_oracle,
    solve_pade,
)
from .series_corpus import (
    Family,
    NoiseSpec,
    SeriesSpec,
    _fib,
    closed_form,
    evaluate_polar,
    taylor_coefficients,
)
from .singularity_lab import (
    DoubletThresholds,
    Mode,
    beta_stability_test,
    boundary_statistics,
    classify_doublets,
    denoise_signal,
    poles_zeros,
    residues,
    synthesize_signal,
)

__all__ = [
    "ExperimentId",
    "ExperimentConfig",
    "Table",
    "Plot",
    "RunRecord",
    "ReportBundle",
    "ConfigError",
    "run_experiment",
    "run_experiments",
    "export",
    "write_manifest",
    "thread_count",
]


class ConfigError(ValueError):
    pass


class ExperimentId(str, enum.Enum):
    FIG1_F1_COMPARE = "FIG1_F1_COMPARE"
    FIG2_TESTFUNCS = "FIG2_TESTFUNCS"
    FIG3_TAN = "FIG3_TAN"
    FIG4_JACOBI = "FIG4_JACOBI"
    FIG5_FIBLAC = "FIG5_FIBLAC"
    FIG6_RANDOM = "FIG6_RANDOM"
    FIG7_COEFFS = "FIG7_COEFFS"
    FIG8_POLE_NOISE = "FIG8_POLE_NOISE"
    FIG9_10_BRANCH_NOISE = "FIG9_10_BRANCH_NOISE"
    FIG11_JAC_NOISE = "FIG11_JAC_NOISE"
    FIG12_13_RESIDUES = "FIG12_13_RESIDUES"
    FIG14_15_BETA = "FIG14_15_BETA"
    APPE_CARLEMAN = "APPE_CARLEMAN"
    DENOISE_DEMO = "DENOISE_DEMO"


_DEFAULTS = {
    ExperimentId.FIG1_F1_COMPARE: ([2], [0], [0.0]),
    ExperimentId.FIG2_TESTFUNCS: ([10], [0], [0.0]),
    ExperimentId.FIG3_TAN: ([50], [0], [0.0]),
    ExperimentId.FIG4_JACOBI: ([32, 64], [0], [0.0]),
    ExperimentId.FIG5_FIBLAC: ([9, 12], [0], [0.0]),
    ExperimentId.FIG6_RANDOM: ([50], [0], [1.0]),
    ExperimentId.FIG7_COEFFS: ([50], [0], [0.1]),
    ExperimentId.FIG8_POLE_NOISE: ([10], [0], [0.0, 0.01]),
    ExperimentId.FIG9_10_BRANCH_NOISE: ([10], [0], [0.0, 0.01]),
    ExperimentId.FIG11_JAC_NOISE: ([50], [0], [0.0, 0.01, 0.1]),
    ExperimentId.FIG12_13_RESIDUES: ([50, 75], [0], [0.0, 0.01, 0.1]),
    ExperimentId.FIG14_15_BETA: ([15, 25, 45], [0, 1, 2], [1.0]),
    ExperimentId.APPE_CARLEMAN: ([15, 25, 45], [0], [0.0]),
    ExperimentId.DENOISE_DEMO: ([10], [0, 1, 2], [0.0, 0.01]),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """What to run and where to write it.

    ``orders`` are diagonal degrees M (for FIG5_FIBLAC: Fibonacci indices).
    Empty ``orders``/``seeds``/``epsilons`` fall back to per-experiment
    defaults.
    """

    experiment: ExperimentId
    output_dir: Path
    orders: tuple = ()
    seeds: tuple = ()
    epsilons: tuple = ()
    scale: str = "none"
    thresholds: DoubletThresholds = DoubletThresholds()

    def __post_init__(self):
        try:
            object.__setattr__(self, "experiment", ExperimentId(self.experiment))
        except ValueError:
            raise ConfigError(f"unknown experiment {self.experiment!r}") from None
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        d_orders, d_seeds, d_eps = _DEFAULTS[self.experiment]
        orders = tuple(int(x) for x in (self.orders or d_orders))
        seeds = tuple(int(x) for x in (self.seeds or d_seeds))
        eps = tuple(float(x) for x in (self.epsilons or d_eps))
        if not orders or any(m < 1 for m in orders):
            raise ConfigError("at least one order >= 1 is required")
        if any(not 0 <= s < 2**64 for s in seeds):
            raise ConfigError("seeds must be 64-bit unsigned integers")
        if any(not e >= 0 for e in eps):
            raise ConfigError("noise strengths must be >= 0")
        object.__setattr__(self, "orders", orders)
        object.__setattr__(self, "seeds", seeds)
        object.__setattr__(self, "epsilons", eps)
        _solve_options(self.scale)

    def to_dict(self) -> dict:
        t = self.thresholds
        return {
            "experiment": self.experiment.value,
            "orders": list(self.orders),
            "seeds": list(self.seeds),
            "epsilons": [num(e) for e in self.epsilons],
            "scale": self.scale,
            "thresholds": {"delta_pair": num(t.delta_pair), "tau_rel": num(t.tau_rel), "delta_shell": num(t.delta_shell)},
        }

    def config_hash(self) -> str:
        return hashlib.sha256(dumps_json(self.to_dict()).encode()).hexdigest()


def _solve_options(scale: str) -> SolveOptions:
    s = str(scale).lower()
    if s == "none":
        return SolveOptions()
    if s == "auto":
        return SolveOptions(scaling=Scaling.AUTO)
    try:
        rho = float(s)
    except ValueError:
        raise ConfigError(f"scale must be 'none', 'auto' or a positive number, got {scale!r}") from None
    if not rho > 0:
        raise ConfigError(f"scale must be > 0, got {rho}")
    return SolveOptions.explicit(rho)


# ---------------------------------------------------------------------------
# bundle types


@dataclass(frozen=True)
class Table:
    name: str
    columns: tuple
    rows: tuple

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(_cell(v) for v in row))
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "columns": list(self.columns),
            "rows": [[_json_cell(v) for v in row] for row in self.rows],
        }


@dataclass(frozen=True)
class Plot:
    """A scatter or line plot drawn from columns of one table.

    ``series`` entries are (label, x column, y column, filter column,
    filter value); the filter selects rows whose column equals the value.
    """

    name: str
    table: str
    kind: str
    series: tuple
    unit_circle: bool = False
    log_y: bool = False
    title: str = ""


@dataclass
class RunRecord:
    label: str
    params: dict
    status: str = "ok"
    error: Optional[str] = None
    summary: dict = field(default_factory=dict)
    tables: list = field(default_factory=list)
    plots: list = field(default_factory=list)
    files: list = field(default_factory=list)


@dataclass
class ReportBundle:
    output_dir: Path
    configs: list
    runs: list
    files: list = field(default_factory=list)
    manifest_path: Optional[Path] = None

    @property
    def all_failed(self) -> bool:
        return bool(self.runs) and all(r.status != "ok" for r in self.runs)


def _cell(v) -> str:
    if isinstance(v, str):
        return v
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    x = float(v)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return fmt_real(x)


def _json_cell(v):
    if isinstance(v, (str, type(None))):
        return v
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    x = float(v)
    return num(x) if math.isfinite(x) else None


# ---------------------------------------------------------------------------
# reusable table builders


def _pz_table(name: str, approx, thresholds: DoubletThresholds) -> tuple[Table, dict]:
    pzs = poles_zeros(approx)
    spec = residues(approx, pzs)
    rep = classify_doublets(pzs, spec, thresholds)
    rows = []
    for e in rep.entries:
        rows.append(("pole", e.pole.real, e.pole.imag, e.classification.value, e.residue_magnitude, e.pairing_distance))
    for z in pzs.zero_locations:
        rows.append(("zero", z.real, z.imag, "", math.nan, math.nan))
    summary = {"counts": rep.counts, "infinite_poles": pzs.poles.infinite_count}
    if pzs.pole_locations.size >= 2:
        bs = boundary_statistics(pzs)
        summary["shell_fraction"] = num(bs.shell_fraction)
        summary["angular_discrepancy"] = num(bs.angular_discrepancy)
        summary["size_functional"] = num(bs.size_functional)
    table = Table(name, ("kind", "re", "im", "class", "residue_abs", "pairing_distance"), tuple(rows))
    return table, summary


def _pz_plot(table: str, title: str) -> Plot:
    return Plot(
        table,
        table,
        "scatter",
        (("poles", "re", "im", "kind", "pole"), ("zeros", "re", "im", "kind", "zero")),
        unit_circle=True,
        title=title,
    )


def _residue_table(name: str, approx) -> tuple[Table, dict]:
    spec = residues(approx)
    rows = tuple(
        (k + 1, p.real, p.imag, abs(a), int(r)) for k, (p, a, r) in enumerate(zip(spec.poles, spec.residues, spec.reliable))
    )
    summary = {"beta": num(spec.beta) if math.isfinite(spec.beta) else None, "fit_quality": num(spec.fit_quality)}
    return Table(name, ("rank", "pole_re", "pole_im", "residue_abs", "reliable"), rows), summary


def _series(family, N, params=None, eps=0.0, seed=0, dist="UNIFORM_SYM"):
    noise = NoiseSpec(eps, seed, dist) if eps > 0 else None
    return taylor_coefficients(SeriesSpec(family, params or {}, noise), N)


def _safe_eval(approx, z):
    try:
        return complex(evaluate(approx, z))
    except PoleProximityError:
        return complex(math.nan, math.nan)


# ---------------------------------------------------------------------------
# pipelines: each returns a list of (label, params, job) with job() -> (tables, plots, summary)

Job = Callable[[], tuple]


def _fig1(cfg, opts):
    def job(M):
        cv = _series(Family.F1_LOG, 2 * M)
        approx = solve_pade(cv, M, M, opts)
        xs = np.linspace(0.0, 15.0, 151)
        spec = SeriesSpec(Family.F1_LOG)
        rows = []
        for x in xs:
            rows.append((x, float(closed_form(spec, x).real), evaluate_polar(cv, x, 0.0).real, _safe_eval(approx, x).real))
        t = Table(f"f1_M{M}", ("x", "exact", "taylor", "pade"), tuple(rows))
        plot = Plot(
            t.name,
            t.name,
            "line",
            (("exact", "x", "exact", None, None), ("taylor", "x", "taylor", None, None), ("pade", "x", "pade", None, None)),
            title=f"f1 [{M}|{M}] vs Taylor order {2 * M}",
        )
        summary = {"numerator": [num(x.real) for x in approx.numerator], "denominator": [num(x.real) for x in approx.denominator]}
        return [t], [plot], summary

    return [(f"M{M}", {"M": M}, lambda M=M: job(M)) for M in cfg.orders]


def _pz_runs(cfg, opts, families, label_prefix=""):
    runs = []
    for fam in families:
        for M in cfg.orders:
            def job(fam=fam, M=M):
                approx = solve_pade(_series(fam, 2 * M), M, M, opts)
                t, s = _pz_table(f"{fam.value.lower()}_M{M}", approx, cfg.thresholds)
                return [t], [_pz_plot(t.name, f"{fam.value} [{M}|{M}]")], s

            runs.append((f"{label_prefix}{fam.value}_M{M}", {"family": fam.value, "M": M}, job))
    return runs


def _fig4(cfg, opts):
    def job(M):
        cv = _series(Family.JACOBI_LACUNARY, 2 * M)
        approx = solve_pade(cv, M, M, opts)
        t, s = _pz_table(f"jacobi_M{M}", approx, cfg.thresholds)
        theta = np.linspace(0, 2 * np.pi, 361)
        rows = []
        for th in theta:
            v = _safe_eval(approx, np.exp(1j * th))
            w = evaluate_polar(cv, 1.0, th)
            rows.append((th, v.real, v.imag, w.real, w.imag))
        polar = Table(f"jacobi_M{M}_polar_r1", ("theta", "pade_re", "pade_im", "taylor_re", "taylor_im"), tuple(rows))
        plots = [
            _pz_plot(t.name, f"Jacobi lacunary [{M}|{M}]"),
            Plot(
                polar.name,
                polar.name,
                "line",
                (("pade Re", "theta", "pade_re", None, None), ("taylor Re", "theta", "taylor_re", None, None)),
                title=f"polar form r=1.0, [{M}|{M}]",
            ),
        ]
        return [t, polar], plots, s

    return [(f"M{M}", {"M": M}, lambda M=M: job(M)) for M in cfg.orders]


def _fig5(cfg, opts):
    def job(N):
        FN = _fib(N)
        if FN % 2:
            raise ConfigError(f"F_{N} = {FN} is odd; use an index divisible by 3")
        H = FN // 2
        cv = _series(Family.FIB_LACUNARY, FN)
        approx = solve_pade(cv, H, H, opts)
        t, s = _pz_table(f"fiblac_N{N}", approx, cfg.thresholds)
        oracle = exact_pade_oracle("FIB_LACUNARY", N=N)
        s["oracle_denominator_max_error"] = num(float(np.abs(approx.denominator - oracle.denominator).max()))
        s["transcribed_numerator_matches"] = bool(oracle.condition_report["oracle"]["transcribed_numerator_matches"])
        return [t], [_pz_plot(t.name, f"Fibonacci lacunary [{H}|{H}]")], s

    return [(f"N{N}", {"fib_index": N}, lambda N=N: job(N)) for N in cfg.orders]


def _noise_runs(cfg, opts, family, *, N_of=lambda M: 2 * M, dist="UNIFORM_SYM", params=None, extra=None):
    runs = []
    for M in cfg.orders:
        for eps in cfg.epsilons:
            seeds = cfg.seeds if eps > 0 else cfg.seeds[:1]
            for seed in seeds:
                def job(M=M, eps=eps, seed=seed):
                    cv = _series(family, N_of(M), params, eps, seed, dist)
                    approx = solve_pade(cv, M, M, opts)
                    name = f"{family.value.lower()}_M{M}_eps{eps:g}_s{seed}"
                    t, s = _pz_table(name, approx, cfg.thresholds)
                    tables, plots = [t], [_pz_plot(name, f"{family.value} [{M}|{M}] eps={eps:g}")]
                    if extra is not None:
                        more_t, more_p, more_s = extra(name, cv, approx)
                        tables += more_t
                        plots += more_p
                        s.update(more_s)
                    return tables, plots, s

                runs.append(
                    (f"{family.value}_M{M}_eps{eps:g}_s{seed}", {"family": family.value, "M": M, "epsilon": eps, "seed": seed}, job)
                )
    return runs


def _coeff_extra(name, cv, approx):
    rows = tuple((n, c.real, c.imag) for n, c in enumerate(cv.coeffs))
    t = Table(f"{name}_coeffs", ("n", "re", "im"), rows)
    p = Plot(t.name, t.name, "line", (("c_n", "n", "re", None, None),), title="coefficients")
    return [t], [p], {}


def _polar_extra(name, cv, approx):
    rows = []
    for th in np.linspace(0, 2 * np.pi, 181):
        v = _safe_eval(approx, 0.9 * np.exp(1j * th))
        w = evaluate_polar(cv, 0.9, th)
        rows.append((th, v.real, w.real))
    t = Table(f"{name}_polar_r0.9", ("theta", "pade_re", "taylor_re"), tuple(rows))
    p = Plot(t.name, t.name, "line", (("pade", "theta", "pade_re", None, None), ("taylor", "theta", "taylor_re", None, None)), title="polar form r=0.9")
    return [t], [p], {}


def _fig12_13(cfg, opts):
    runs = []
    for M in cfg.orders:
        def f5(M=M):
            approx = solve_pade(_series(Family.F5_TAN4, 2 * M), M, M, opts)
            t, s = _residue_table(f"f5_M{M}_residues", approx)
            return [t], [_residue_plot(t.name, f"f5 [{M}|{M}] residues")], s

        runs.append((f"F5_M{M}", {"family": "F5_TAN4", "M": M}, f5))

    def branch2():
        approx = solve_pade(_series(Family.BRANCH2, 40), 20, 20, opts)
        t1, s1 = _pz_table("branch2_M20", approx, cfg.thresholds)
        t2, s2 = _residue_table("branch2_M20_residues", approx)
        s1.update(s2)
        return [t1, t2], [_pz_plot(t1.name, "BRANCH2 [20|20]"), _residue_plot(t2.name, "BRANCH2 [20|20] residues")], s1

    runs.append(("BRANCH2_M20", {"family": "BRANCH2", "M": 20}, branch2))
    for eps in cfg.epsilons:
        def jac(eps=eps):
            approx = solve_pade(_series(Family.JACOBI_LACUNARY, 100, None, eps, cfg.seeds[0]), 50, 50, opts)
            t, s = _residue_table(f"jacobi_M50_eps{eps:g}_residues", approx)
            return [t], [_residue_plot(t.name, f"Jacobi+noise eps={eps:g} residues")], s

        runs.append((f"JACOBI_M50_eps{eps:g}", {"family": "JACOBI_LACUNARY", "M": 50, "epsilon": eps, "seed": cfg.seeds[0]}, jac))
    return runs


def _residue_plot(table: str, title: str) -> Plot:
    return Plot(table, table, "line", (("|A_k|", "rank", "residue_abs", None, None),), log_y=True, title=title)


def _beta_runs(cfg, opts, families):
    runs = []
    for fam in families:
        for seed in cfg.seeds:
            def job(fam=fam, seed=seed):
                N = 2 * max(cfg.orders)
                params = {"seed": seed}
                if fam is Family.RANDOM_UNIFORM:
                    params["epsilon"] = cfg.epsilons[0] if cfg.epsilons else 1.0
                cv = taylor_coefficients(SeriesSpec(fam, params), N)
                v = beta_stability_test(cv, cfg.orders, opts, thresholds=cfg.thresholds)
                rows = tuple((M, b, q) for M, b, q in zip(v.orders, v.betas, v.fit_qualities))
                name = f"{fam.value.lower()}_s{seed}"
                t = Table(f"{name}_beta", ("M", "beta", "fit_quality"), rows)
                tables, plots = [t], []
                for M in cfg.orders:
                    rt, _ = _residue_table(f"{name}_M{M}_residues", solve_pade(cv, M, M, opts))
                    tables.append(rt)
                    plots.append(_residue_plot(rt.name, f"{fam.value} seed {seed} [{M}|{M}]"))
                s = {"verdict": v.verdict.value, "spread": num(v.spread) if math.isfinite(v.spread) else None, "monotone_decreasing": v.monotone_decreasing}
                return tables, plots, s

            runs.append((f"{fam.value}_s{seed}", {"family": fam.value, "seed": seed, "orders": list(cfg.orders)}, job))
    return runs


DENOISE_MODES = (Mode(1.0, 0.1, 0.2), Mode(0.5 - 0.3j, -0.23, 0.05), Mode(0.8j, 0.31, 0.1))


def _denoise(cfg, opts):
    runs = []
    for M in cfg.orders:
        for eps in cfg.epsilons:
            for seed in cfg.seeds if eps > 0 else cfg.seeds[:1]:
                def job(M=M, eps=eps, seed=seed):
                    n = 128
                    s = synthesize_signal(DENOISE_MODES, n)
                    if eps > 0:
                        u = np.random.Generator(np.random.PCG64(seed)).random(n)
                        s = s + eps * (2 * u - 1)
                    model = denoise_signal(s, M, M, cfg.thresholds, opts=opts)
                    rows = tuple((m.amplitude.real, m.amplitude.imag, m.frequency, m.damping) for m in model.modes)
                    name = f"denoise_M{M}_eps{eps:g}_s{seed}"
                    t = Table(f"{name}_modes", ("amp_re", "amp_im", "frequency", "damping"), rows)
                    rec = model.samples()
                    sig = Table(
                        f"{name}_signal",
                        ("k", "input_re", "model_re"),
                        tuple((k, s[k].real, rec[k].real) for k in range(n)),
                    )
                    pz, ps = _pz_table(f"{name}_pz", model.approximant, cfg.thresholds)
                    plots = [
                        Plot(sig.name, sig.name, "line", (("input", "k", "input_re", None, None), ("model", "k", "model_re", None, None)), title="signal"),
                        _pz_plot(pz.name, f"Z-transform [{M}|{M}]"),
                    ]
                    return [t, sig, pz], plots, {"modes": len(model.modes), "rms": num(model.reconstruction_rms), **ps}

                runs.append((f"M{M}_eps{eps:g}_s{seed}", {"M": M, "epsilon": eps, "seed": seed}, job))
    return runs


def _plan(cfg: ExperimentConfig):
    opts = _solve_options(cfg.scale)
    e = cfg.experiment
    if e is ExperimentId.FIG1_F1_COMPARE:
        return _fig1(cfg, opts)
    if e is ExperimentId.FIG2_TESTFUNCS:
        return _pz_runs(cfg, opts, (Family.F2_EXP, Family.F3_SQRT_BRANCH, Family.F4_ESSENTIAL))
    if e is ExperimentId.FIG3_TAN:
        return _pz_runs(cfg, opts, (Family.F5_TAN4,))
    if e is ExperimentId.FIG4_JACOBI:
        return _fig4(cfg, opts)
    if e is ExperimentId.FIG5_FIBLAC:
        return _fig5(cfg, opts)
    if e is ExperimentId.FIG6_RANDOM:
        return _random_runs(cfg, opts, _polar_extra)
    if e is ExperimentId.FIG7_COEFFS:
        return _random_runs(cfg, opts, _coeff_extra, N=100)
    if e is ExperimentId.FIG8_POLE_NOISE:
        return _noise_runs(cfg, opts, Family.POLE2)
    if e is ExperimentId.FIG9_10_BRANCH_NOISE:
        return _noise_runs(cfg, opts, Family.BRANCH1) + _noise_runs(cfg, opts, Family.BRANCH2)
    if e is ExperimentId.FIG11_JAC_NOISE:
        return _noise_runs(cfg, opts, Family.JACOBI_LACUNARY)
    if e is ExperimentId.FIG12_13_RESIDUES:
        return _fig12_13(cfg, opts)
    if e is ExperimentId.FIG14_15_BETA:
        return _beta_runs(cfg, opts, (Family.RANDOM_UNIFORM, Family.CARLEMAN))
    if e is ExperimentId.APPE_CARLEMAN:
        return _beta_runs(cfg, opts, (Family.CARLEMAN,))
    if e is ExperimentId.DENOISE_DEMO:
        return _denoise(cfg, opts)
    raise ConfigError(f"no pipeline for {e}")


def _random_runs(cfg, opts, extra, N=None):
    runs = []
    for M in cfg.orders:
        for eps in cfg.epsilons:
            for seed in cfg.seeds:
                def job(M=M, eps=eps, seed=seed):
                    n = N if N is not None else 2 * M
                    if n < 2 * M:
                        raise ConfigError(f"[{M}|{M}] needs {2 * M + 1} coefficients")
                    cv = taylor_coefficients(
                        SeriesSpec(Family.RANDOM_UNIFORM, {"epsilon": eps, "seed": seed, "distribution": "UNIFORM_0_1"}), n
                    )
                    approx = solve_pade(cv, M, M, opts)
                    name = f"random_M{M}_eps{eps:g}_s{seed}"
                    t, s = _pz_table(name, approx, cfg.thresholds)
                    more_t, more_p, _ = extra(name, cv, approx)
                    return [t] + more_t, [_pz_plot(name, f"random series [{M}|{M}] eps={eps:g}")] + more_p, s

                runs.append((f"M{M}_eps{eps:g}_s{seed}", {"M": M, "epsilon": eps, "seed": seed}, job))
    return runs


# ---------------------------------------------------------------------------
# execution


def thread_count() -> int:
    raw = os.environ.get("PADE_LAB_THREADS")
    if raw is None or raw.strip() == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"PADE_LAB_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"PADE_LAB_THREADS must be a positive integer, got {raw!r}")
    return n


def _execute(label, params, job) -> RunRecord:
    rec = RunRecord(label, params)
    try:
        tables, plots, summary = job()
        rec.tables, rec.plots, rec.summary = tables, plots, summary
    except Exception as exc:  # recorded per run; the sweep goes on
        rec.status = "error"
        rec.error = f"{type(exc).__name__}: {exc}"
    return rec


def run_experiments(
    configs: Sequence[ExperimentConfig],
    output_dir,
    formats: Sequence[str] = ("csv", "json", "svg"),
) -> ReportBundle:
    out = Path(output_dir)
    jobs = []
    for cfg in configs:
        for label, params, job in _plan(cfg):
            jobs.append((cfg.experiment.value, label, params, job))
    workers = min(thread_count(), max(1, len(jobs)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_execute, f"{exp}/{label}", params, job) for exp, label, params, job in jobs]
        runs = [f.result() for f in futures]
    bundle = ReportBundle(out, list(configs), runs)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    for fmt in formats:
        export(bundle, fmt)
    write_manifest(bundle)
    return bundle


def run_experiment(config: ExperimentConfig, formats: Sequence[str] = ("csv", "json", "svg")) -> ReportBundle:
    """Run one experiment and write its artifacts under ``config.output_dir``."""
    return run_experiments([config], config.output_dir, formats)


def _safe_name(s: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", s)


def _run_dir(bundle: ReportBundle, rec: RunRecord) -> Path:
    exp, label = rec.label.split("/", 1)
    return bundle.output_dir / exp / _safe_name(label)


def _write(bundle: ReportBundle, path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    if path not in bundle.files:
        bundle.files.append(path)


def export(bundle: ReportBundle, format: str) -> list:
    """Write every run's data in one format; returns the paths written."""
    fmt = str(format).lower()
    if fmt not in ("csv", "json", "svg"):
        raise ConfigError(f"unknown export format {format!r}")
    written = []
    for rec in bundle.runs:
        if rec.status != "ok":
            continue
        d = _run_dir(bundle, rec)
        if fmt == "csv":
            for t in rec.tables:
                p = d / f"{_safe_name(t.name)}.csv"
                _write(bundle, p, t.to_csv())
                written.append(p)
        elif fmt == "json":
            p = d / "run.json"
            body = {
                "run": rec.label,
                "params": {k: (num(v) if isinstance(v, float) else v) for k, v in rec.params.items()},
                "summary": rec.summary,
                "tables": [t.to_json() for t in rec.tables],
            }
            _write(bundle, p, dumps_json(body))
            written.append(p)
        else:
            by_name = {t.name: t for t in rec.tables}
            for pl in rec.plots:
                p = d / f"{_safe_name(pl.name)}.svg"
                _write(bundle, p, render_svg(pl, by_name[pl.table].to_csv()))
                written.append(p)
    return written


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(bundle: ReportBundle) -> Path:
    """manifest.json listing every run, every emitted file and its checksum."""
    out = bundle.output_dir
    out.mkdir(parents=True, exist_ok=True)
    manifest_path = out / "manifest.json"
    # every file on disk, not only this invocation's, so the listing is complete
    files = sorted(
        (p for p in out.rglob("*") if p.is_file() and p != manifest_path),
        key=lambda p: p.relative_to(out).as_posix(),
    )
    for rec in bundle.runs:
        d = _run_dir(bundle, rec)
        rec.files = sorted(p.relative_to(out).as_posix() for p in files if d in p.parents)
    body = {
        "library": "padelab",
        "version": __version__,
        "experiments": [
            {"config": cfg.to_dict(), "config_hash": cfg.config_hash()} for cfg in bundle.configs
        ],
        "runs": [
            {
                "run": r.label,
                "params": {k: (num(v) if isinstance(v, float) else v) for k, v in r.params.items()},
                "status": r.status,
                "error": r.error,
                "summary": r.summary,
                "files": r.files,
            }
            for r in bundle.runs
        ],
        "files": [
            {"path": p.relative_to(out).as_posix(), "sha256": _sha256(p), "bytes": p.stat().st_size} for p in files
        ],
    }
    manifest_path.write_text(dumps_json(body))
    bundle.manifest_path = manifest_path
    return manifest_path


# ---------------------------------------------------------------------------
# SVG


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _parse_csv(text: str):
    lines = text.strip().splitlines()
    cols = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return cols, rows


def _to_float(s: str) -> float:
    try:
        return float(s)
    except ValueError:
        return math.nan


def render_svg(plot: Plot, csv_text: str, size: int = 480) -> str:
    """Deterministic SVG for ``plot`` drawn from the table's CSV text."""
    cols, rows = _parse_csv(csv_text)
    idx = {c: i for i, c in enumerate(cols)}
    series = []
    for label, xc, yc, fc, fv in plot.series:
        pts = []
        for r in rows:
            if fc is not None and r[idx[fc]] != fv:
                continue
            x, y = _to_float(r[idx[xc]]), _to_float(r[idx[yc]])
            if plot.log_y:
                y = math.log10(y) if y > 0 else math.nan
            if math.isfinite(x) and math.isfinite(y):
                pts.append((x, y))
        series.append((label, pts))
    xs = [p[0] for _, pts in series for p in pts]
    ys = [p[1] for _, pts in series for p in pts]
    if plot.unit_circle:
        xs += [-1.0, 1.0]
        ys += [-1.0, 1.0]
    if not xs:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    if plot.kind == "scatter":
        # equal aspect so the unit circle stays round
        half = max(x1 - x0, y1 - y0) / 2 or 1.0
        cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
        x0, x1, y0, y1 = cx - half * 1.05, cx + half * 1.05, cy - half * 1.05, cy + half * 1.05
    else:
        dx, dy = (x1 - x0) or 1.0, (y1 - y0) or 1.0
        x0, x1, y0, y1 = x0 - 0.02 * dx, x1 + 0.02 * dx, y0 - 0.05 * dy, y1 + 0.05 * dy
    m = 40
    w = size - 2 * m

    def X(x):
        return m + (x - x0) / (x1 - x0) * w

    def Y(y):
        return m + (y1 - y) / (y1 - y0) * w

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect x="{m}" y="{m}" width="{w}" height="{w}" fill="none" stroke="#888"/>',
        f'<text x="{size / 2:.1f}" y="20" text-anchor="middle" font-size="13">{escape(plot.title or plot.name)}</text>',
    ]
    if plot.unit_circle:
        r = (X(1) - X(0))
        out.append(f'<circle cx="{X(0):.3f}" cy="{Y(0):.3f}" r="{r:.3f}" fill="none" stroke="#999" stroke-dasharray="4 3"/>')
    for k, (label, pts) in enumerate(series):
        color = _COLORS[k % len(_COLORS)]
        if plot.kind == "scatter":
            for x, y in pts:
                if k % 2 == 0:
                    out.append(f'<circle cx="{X(x):.3f}" cy="{Y(y):.3f}" r="3" fill="none" stroke="{color}"/>')
                else:
                    a, b = X(x), Y(y)
                    out.append(
                        f'<path d="M{a - 3:.3f},{b - 3:.3f}L{a + 3:.3f},{b + 3:.3f}M{a - 3:.3f},{b + 3:.3f}L{a + 3:.3f},{b - 3:.3f}" stroke="{color}"/>'
                    )
        elif pts:
            d = " ".join(f"{X(x):.3f},{Y(y):.3f}" for x, y in pts)
            out.append(f'<polyline points="{d}" fill="none" stroke="{color}"/>')
        out.append(f'<text x="{m + 8}" y="{m + 16 + 14 * k}" font-size="11" fill="{color}">{escape(label)}</text>')
    axis = f"{x0:.3g} .. {x1:.3g}"
    yaxis = f"{y0:.3g} .. {y1:.3g}" + (" (log10)" if plot.log_y else "")
    out.append(f'<text x="{size / 2:.1f}" y="{size - 12}" text-anchor="middle" font-size="10">x: {axis}   y: {yaxis}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
