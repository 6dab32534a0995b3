"""Batch experiment driver.

Three experiments are available:

* ``single-qubit``: enumerate every HT/PHT sequence up to ``t_max`` and track
  the distances of the psi, chi and xi distributions from their Haar targets.
* ``multi-qubit``: sample ``r`` pseudo-random circuits on ``n`` qubits and
  track the matrix-element distribution D(l) and the moment deviations.
* ``validate-cue``: run the same statistics on Haar-random unitaries, which
  calibrates the statistical floor of D(l) and checks the CUE moments.

Output is CSV (``#``-prefixed metadata lines followed by blank-line separated
sections) or JSON with the same content.
"""
from __future__ import annotations

import argparse
import dataclasses
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import prcircuit, qcore, singleq
from .stats import (
    DistanceSeries,
    FitResult,
    Histogram,
    MomentAccumulator,
    MomentReport,
    distance,
    fit_convergence,
    target_cue_l_mass,
    target_uniform_mass,
)

EXPERIMENTS = ("single-qubit", "multi-qubit", "validate-cue")
MOMENT_ORDERS = (1, 2, 4, 8)
FITTED_MOMENTS = (2, 4, 8)
SINGLE_QUBIT_THRESHOLD = 1e-4
UNDERFLOW_NOTE = "values l < l_min, including exact zeros U_ij = 0 (l = -inf), are counted in the underflow bin"
FLOOR_BATCHES = 10
FLOOR_FACTOR = 2.0

# Desk-scale sample counts; the full-scale presets below use the published ones.
DESK_R = {6: 1000, 8: 200, 10: 20}

PRESETS = {
    "single": dict(experiment="single-qubit", t_max=22),
    "n6": dict(experiment="multi-qubit", n=6, r=1000, t_max=14),
    "n8": dict(experiment="multi-qubit", n=8, r=200, t_max=16),
    "n10": dict(experiment="multi-qubit", n=10, r=20, t_max=18),
    "paper-n6": dict(experiment="multi-qubit", n=6, r=10000, t_max=14),
    "paper-n8": dict(experiment="multi-qubit", n=8, r=10000, t_max=16),
    "paper-n10": dict(experiment="multi-qubit", n=10, r=1000, t_max=18),
    "paper-n12": dict(experiment="multi-qubit", n=12, r=50, t_max=20),
    "paper-n14": dict(experiment="multi-qubit", n=14, r=5, t_max=22),
    "validate-n4": dict(experiment="validate-cue", n=4, r=4000),
    "validate-n6": dict(experiment="validate-cue", n=6, r=250),
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "single-qubit"
    t_max: int | None = None
    n: int | None = None
    r: int | None = None
    seed: int = 2014
    bins_euler: int = 100
    bins_l: int = 60
    l_min: float = -15.0
    fit_window: tuple[int, int] | None = None
    fit_model: str = "exponential"
    moment_fit_window: tuple[int, int] = (2, 6)
    branch: str = "symmetrized"
    output_path: str | None = None
    output_format: str = "csv"

    def resolved(self) -> "ExperimentConfig":
        """Fill experiment-dependent defaults and validate."""
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        c = self
        if c.experiment == "single-qubit":
            c = dataclasses.replace(
                c,
                t_max=22 if c.t_max is None else c.t_max,
                fit_window=(4, 20) if c.fit_window is None else c.fit_window,
            )
        elif c.experiment == "multi-qubit":
            n = 6 if c.n is None else c.n
            c = dataclasses.replace(
                c,
                n=n,
                t_max=14 if c.t_max is None else c.t_max,
                r=DESK_R.get(n, 10) if c.r is None else c.r,
                fit_window=(2, 5) if c.fit_window is None else c.fit_window,
            )
        else:
            n = 6 if c.n is None else c.n
            c = dataclasses.replace(
                c,
                n=n,
                t_max=0,
                r=math.ceil(1e6 / 4**n) if c.r is None else c.r,
                fit_window=(0, 0) if c.fit_window is None else c.fit_window,
            )
        c = dataclasses.replace(c, fit_window=tuple(int(x) for x in c.fit_window),
                                moment_fit_window=tuple(int(x) for x in c.moment_fit_window))
        c._validate()
        return c

    def _validate(self) -> None:
        if self.experiment == "single-qubit" and not 1 <= self.t_max <= singleq.MAX_STEPS:
            raise ValueError(f"single-qubit t_max must be in [1, {singleq.MAX_STEPS}]")
        if self.experiment == "multi-qubit":
            if not 2 <= self.n <= prcircuit.HARD_MAX_QUBITS:
                raise ValueError(f"n must be in [2, {prcircuit.HARD_MAX_QUBITS}]")
            if self.t_max < 1:
                raise ValueError("t_max must be >= 1")
        if self.experiment == "validate-cue" and not 1 <= self.n <= 10:
            raise ValueError("validate-cue supports 1 <= n <= 10")
        if self.experiment != "single-qubit" and self.r is not None and self.r < 1:
            raise ValueError("r must be >= 1")
        if self.bins_euler < 2 or self.bins_l < 2:
            raise ValueError("bin counts must be >= 2")
        if self.fit_model not in ("exponential", "gaussian"):
            raise ValueError(f"unknown fit model {self.fit_model!r}")
        if self.branch not in ("symmetrized", "principal"):
            raise ValueError(f"unknown branch convention {self.branch!r}")
        if self.output_format not in ("csv", "json"):
            raise ValueError(f"unknown output format {self.output_format!r}")

    def to_metadata(self) -> dict:
        d = dataclasses.asdict(self)
        for key in ("fit_window", "moment_fit_window"):
            if d[key] is not None:
                d[key] = list(d[key])
        return d

    @classmethod
    def from_metadata(cls, meta: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        d = {k: v for k, v in meta.items() if k in names}
        for key in ("fit_window", "moment_fit_window"):
            if d.get(key) is not None:
                d[key] = tuple(d[key])
        return cls(**d)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    series: list[DistanceSeries] = field(default_factory=list)
    # (label, t, report) rows
    moments: list[tuple[str, int, MomentReport]] = field(default_factory=list)
    fits: list[tuple[str, FitResult]] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def get_series(self, label: str) -> DistanceSeries:
        for s in self.series:
            if s.label == label:
                return s
        raise KeyError(label)

    def get_fit(self, label: str, model: str = "exponential") -> FitResult:
        for name, fit in self.fits:
            if name == label and fit.model == model:
                return fit
        raise KeyError((label, model))


# --------------------------------------------------------------------------
# experiments


def run_single_qubit(cfg: ExperimentConfig) -> ExperimentResult:
    cfg = cfg.resolved()
    res = ExperimentResult(cfg)
    labels = ("D(psi)", "D(chi)", "D(xi)")
    series = {lab: DistanceSeries(lab) for lab in labels}
    target = target_uniform_mass(cfg.bins_euler)
    degenerate = 0
    threshold_step = None
    for t in range(1, cfg.t_max + 1):
        hists = {
            "D(psi)": Histogram(0.0, singleq.TWO_PI, cfg.bins_euler),
            "D(chi)": Histogram(0.0, singleq.TWO_PI, cfg.bins_euler),
            "D(xi)": Histogram(0.0, 1.0, cfg.bins_euler),
        }

        def sink(p: singleq.EulerParams) -> None:
            nonlocal degenerate
            degenerate += singleq.count_degenerate(p)
            hists["D(xi)"].add(p.xi)
            if cfg.branch == "symmetrized":
                q = singleq.branch_partner(p)
                hists["D(psi)"].add(p.psi, 0.5).add(q.psi, 0.5)
                hists["D(chi)"].add(p.chi, 0.5).add(q.chi, 0.5)
            else:
                hists["D(psi)"].add(p.psi)
                hists["D(chi)"].add(p.chi)

        singleq.enumerate_parameters(t, sink)
        values = {lab: distance(hists[lab], target) for lab in labels}
        for lab in labels:
            series[lab].append(t, values[lab])
        if threshold_step is None and all(v < SINGLE_QUBIT_THRESHOLD for v in values.values()):
            threshold_step = t
    res.series.extend(series.values())
    for lab in labels:
        _try_fit(res, series[lab], cfg.fit_model, cfg.fit_window)
    res.diagnostics.update(
        degenerate_triples=degenerate,
        threshold=SINGLE_QUBIT_THRESHOLD,
        threshold_step=threshold_step,
    )
    return res


def run_multi_qubit(cfg: ExperimentConfig) -> ExperimentResult:
    cfg = cfg.resolved()
    n = cfg.n
    N = 1 << n
    hi = math.log(N)
    target = target_cue_l_mass(N, cfg.l_min, hi, cfg.bins_l)
    hists = {t: Histogram(cfg.l_min, hi, cfg.bins_l) for t in range(1, cfg.t_max + 1)}
    accs = {t: MomentAccumulator(N, MOMENT_ORDERS) for t in range(1, cfg.t_max + 1)}

    def sink(t: int, l: np.ndarray) -> None:
        hists[t].add(l)
        accs[t].add(l)

    spec = prcircuit.EnsembleSpec(n=n, t_max=cfg.t_max, r=cfg.r, seed=cfg.seed)
    prcircuit.sample_ensemble(spec, sink)

    res = ExperimentResult(cfg)
    d_l = DistanceSeries("D(l)")
    d_mu = {k: DistanceSeries(f"D_mu{k}") for k in MOMENT_ORDERS}
    for t in range(1, cfg.t_max + 1):
        d_l.append(t, distance(hists[t], target))
        for k in MOMENT_ORDERS:
            rep = accs[t].report(k)
            res.moments.append((f"mu{k}", t, rep))
            d_mu[k].append(t, rep.deviation)
    res.series.append(d_l)
    res.series.extend(d_mu.values())

    _try_fit(res, d_l, cfg.fit_model, cfg.fit_window)
    for k in FITTED_MOMENTS:
        for model in ("exponential", "gaussian"):
            _try_fit(res, d_mu[k], model, cfg.moment_fit_window)

    rises = [t for t in d_l.t[1:] if d_l.value_at(t) > d_l.value_at(t - 1)]
    res.diagnostics.update(
        underflow_convention=UNDERFLOW_NOTE,
        underflow_target_mass=target.underflow,
        non_monotone_steps=rises,
        max_mu1_error=max(abs(rep.mu_empirical - 1.0) for lab, _, rep in res.moments if lab == "mu1"),
    )
    return res


def run_validate_cue(cfg: ExperimentConfig) -> ExperimentResult:
    cfg = cfg.resolved()
    N = 1 << cfg.n
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    hi = math.log(N)
    target = target_cue_l_mass(N, cfg.l_min, hi, cfg.bins_l)
    batch_hists = []
    acc = MomentAccumulator(N, MOMENT_ORDERS)
    bounds = np.linspace(0, cfg.r, min(FLOOR_BATCHES, cfg.r) + 1).astype(int)
    chunk = prcircuit.default_batch_size(cfg.n)
    for b0, b1 in zip(bounds[:-1], bounds[1:]):
        h = Histogram(cfg.l_min, hi, cfg.bins_l)
        for start in range(b0, b1, chunk):
            u = qcore.haar_cue_sample(N, rng, size=min(chunk, b1 - start))
            l = prcircuit.l_values(u).reshape(u.shape[0], N * N)
            h.add(l)
            acc.add(l)
        batch_hists.append(h)
    total = batch_hists[0]
    for h in batch_hists[1:]:
        total = total + h

    res = ExperimentResult(cfg)
    d_l = DistanceSeries("D(l)")
    d_l.append(0, distance(total, target))
    res.series.append(d_l)
    diag = {"underflow_convention": UNDERFLOW_NOTE, "elements": int(total.total_count), "D(l)": d_l.values[0]}
    if len(batch_hists) >= 2:
        # for multinomial-like noise E[D] scales as 1/sample size, so the
        # mean batch distance divided by the batch count estimates E[D]
        batch_d = [distance(h, target) for h in batch_hists]
        expected = float(np.mean(batch_d)) / len(batch_hists)
        diag["expected_D(l)"] = expected
        diag["D(l)_floor"] = FLOOR_FACTOR * expected
    for k in MOMENT_ORDERS:
        rep = acc.report(k)
        res.moments.append((f"mu{k}", 0, rep))
        if cfg.r >= 2:
            se = acc.standard_error(k, FLOOR_BATCHES)
            diag[f"mu{k}_standard_error"] = se
            diag[f"mu{k}_z"] = abs(rep.mu_empirical - rep.mu_cue) / se if se > 0 else 0.0
    res.diagnostics.update(diag)
    return res


def _try_fit(res: ExperimentResult, series: DistanceSeries, model: str, window) -> None:
    try:
        res.fits.append((series.label, fit_convergence(series, model, window)))
    except ValueError as exc:
        res.diagnostics.setdefault("skipped_fits", []).append(f"{series.label}/{model}: {exc}")


RUNNERS = {
    "single-qubit": run_single_qubit,
    "multi-qubit": run_multi_qubit,
    "validate-cue": run_validate_cue,
}


def run(cfg: ExperimentConfig) -> ExperimentResult:
    return RUNNERS[cfg.experiment](cfg)


# --------------------------------------------------------------------------
# serialization

SERIES_HEADER = "series,t,value"
MOMENT_HEADER = "moment,k,t,empirical,cue,deviation"
FIT_HEADER = "fit,model,a,rate,t_start,t_end,rss,points"


def _num(x) -> str:
    return repr(float(x))


def to_csv(res: ExperimentResult) -> str:
    out = io.StringIO()
    for key, value in res.config.to_metadata().items():
        out.write(f"# config.{key}: {json.dumps(value)}\n")
    for key, value in res.diagnostics.items():
        out.write(f"# diagnostic.{key}: {json.dumps(value)}\n")
    out.write("\n" + SERIES_HEADER + "\n")
    for s in res.series:
        for t, v in zip(s.t, s.values):
            out.write(f"{s.label},{t},{_num(v)}\n")
    if res.moments:
        out.write("\n" + MOMENT_HEADER + "\n")
        for label, t, m in res.moments:
            out.write(f"{label},{m.k},{t},{_num(m.mu_empirical)},{_num(m.mu_cue)},{_num(m.deviation)}\n")
    if res.fits:
        out.write("\n" + FIT_HEADER + "\n")
        for label, f in res.fits:
            out.write(
                f"{label},{f.model},{_num(f.a)},{_num(f.rate)},{f.window[0]},{f.window[1]},"
                f"{_num(f.residual_sum_squares)},{f.n_points}\n"
            )
    return out.getvalue()


def to_json(res: ExperimentResult) -> str:
    doc = {
        "config": res.config.to_metadata(),
        "diagnostics": res.diagnostics,
        "series": [{"series": s.label, "t": s.t, "value": s.values} for s in res.series],
        "moments": [
            {"moment": lab, "k": m.k, "t": t, "empirical": m.mu_empirical, "cue": m.mu_cue,
             "deviation": m.deviation}
            for lab, t, m in res.moments
        ],
        "fits": [
            {"fit": lab, "model": f.model, "a": f.a, "rate": f.rate, "t_start": f.window[0],
             "t_end": f.window[1], "rss": f.residual_sum_squares, "points": f.n_points}
            for lab, f in res.fits
        ],
    }
    return json.dumps(doc, indent=1) + "\n"


def parse_csv(text: str) -> ExperimentResult:
    meta, diag = {}, {}
    sections: dict[str, list[list[str]]] = {}
    current = None
    for line in text.splitlines():
        if line.startswith("# config."):
            key, _, value = line[len("# config."):].partition(": ")
            meta[key] = json.loads(value)
        elif line.startswith("# diagnostic."):
            key, _, value = line[len("# diagnostic."):].partition(": ")
            diag[key] = json.loads(value)
        elif not line.strip():
            current = None
        elif current is None:
            current = line
            sections[current] = []
        else:
            sections[current].append(line.split(","))
    res = ExperimentResult(ExperimentConfig.from_metadata(meta), diagnostics=diag)
    by_label: dict[str, DistanceSeries] = {}
    for label, t, value in sections.get(SERIES_HEADER, []):
        if label not in by_label:
            by_label[label] = DistanceSeries(label)
            res.series.append(by_label[label])
        by_label[label].append(int(t), float(value))
    for label, k, t, emp, cue, dev in sections.get(MOMENT_HEADER, []):
        res.moments.append((label, int(t), MomentReport(int(k), float(emp), float(cue), float(dev))))
    for label, model, a, rate, t0, t1, rss, pts in sections.get(FIT_HEADER, []):
        res.fits.append((label, FitResult(model, float(a), float(rate), (int(t0), int(t1)),
                                          float(rss), int(pts))))
    return res


def parse_json(text: str) -> ExperimentResult:
    doc = json.loads(text)
    res = ExperimentResult(ExperimentConfig.from_metadata(doc["config"]), diagnostics=doc["diagnostics"])
    for s in doc["series"]:
        ds = DistanceSeries(s["series"])
        for t, v in zip(s["t"], s["value"]):
            ds.append(t, v)
        res.series.append(ds)
    for m in doc["moments"]:
        res.moments.append((m["moment"], m["t"], MomentReport(m["k"], m["empirical"], m["cue"], m["deviation"])))
    for f in doc["fits"]:
        res.fits.append((f["fit"], FitResult(f["model"], f["a"], f["rate"], (f["t_start"], f["t_end"]),
                                             f["rss"], f["points"])))
    return res


def dumps(res: ExperimentResult) -> str:
    return to_json(res) if res.config.output_format == "json" else to_csv(res)


def load(path) -> ExperimentResult:
    text = Path(path).read_text(encoding="utf-8")
    return parse_json(text) if text.lstrip().startswith("{") else parse_csv(text)


# --------------------------------------------------------------------------
# command line


def _window(text: str) -> tuple[int, int]:
    a, sep, b = text.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected a:b, got {text!r}")
    return int(a), int(b)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cliffordt",
        description="Clifford+T pseudo-random circuit convergence experiments",
    )
    p.add_argument("--experiment", choices=EXPERIMENTS)
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--n", type=int, help="qubit count (multi-qubit, validate-cue)")
    p.add_argument("--t-max", type=int)
    p.add_argument("--r", type=int, help="ensemble size")
    p.add_argument("--seed", type=int)
    p.add_argument("--bins-euler", type=int)
    p.add_argument("--bins-l", type=int)
    p.add_argument("--l-min", type=float)
    p.add_argument("--fit-window", type=_window, metavar="A:B")
    p.add_argument("--fit-model", choices=("exponential", "gaussian"))
    p.add_argument("--moment-fit-window", type=_window, metavar="A:B")
    p.add_argument("--branch", choices=("symmetrized", "principal"),
                   help="SU(2) sign convention for psi/chi histograms")
    p.add_argument("--output", dest="output_path", help="output file (default: stdout)")
    p.add_argument("--format", dest="output_format", choices=("csv", "json"))
    return p


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    values = {}
    if args.preset:
        values.update(PRESETS[args.preset])
    for f in dataclasses.fields(ExperimentConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    return ExperimentConfig(**values).resolved()


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except (ValueError, TypeError) as exc:
        parser.error(str(exc))
    try:
        res = run(cfg)
    except (ValueError, MemoryError) as exc:
        print(f"cliffordt: error: {exc}", file=sys.stderr)
        return 1
    text = dumps(res)
    if cfg.output_path:
        with open(cfg.output_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
