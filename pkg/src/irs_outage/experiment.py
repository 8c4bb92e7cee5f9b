"""Seeded parameter sweeps over all schemes, CSV output and static plots.

Randomness: channels of realization ``r`` come from ``(seed, "realization", r)``
and do not depend on the sweep value, so every sweep point sees the same
propagation environment (nested in M and K).  The random phase vector shared
by the proposed start, Random-IRS and Random-MRT comes from
``(seed, "phases", r)``; Monte-Carlo validation uses
``(seed, "outage", r, scheme, sweep index)``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .ao import AoConfig, AoTrace, InfeasibleError, NoFeasibleCandidate, design_certified, run_ao
from .benchmarks import SCHEMES, no_irs_channels, no_irs_design, optimized_mrt, random_irs_design, random_mrt
from .channels import ConfigError, ScenarioConfig, generate_channels, paper_uncertainty, scenario_from_dict, substream
from .metrics import BeamformingDesign, bob_rate, empirical_outage

log = logging.getLogger(__name__)

SWEEP_PARAMS = ("none", "gamma", "beta", "m", "nt", "k", "delta")
CSV_VERSION = 1
OUTAGE_SLACK = 0.01
MONOTONE_SLACK = 1e-6
PAPER_SCALE = {"m": 15, "realizations": 20}


@dataclass(frozen=True)
class ExperimentSpec:
    scenario: ScenarioConfig
    sweep_param: str = "none"
    sweep_values: tuple = (None,)
    schemes: tuple = ("proposed",)
    realizations: int = 1
    outage_samples: int = 10000
    output_dir: str = "out"
    seed: int = 0
    ao: AoConfig = field(default_factory=AoConfig)
    workers: int = 1
    name: str = "experiment"

    def __post_init__(self):
        if self.sweep_param not in SWEEP_PARAMS:
            raise ConfigError(f"sweep parameter must be one of {SWEEP_PARAMS}")
        if not self.sweep_values:
            raise ConfigError("sweep value list is empty")
        if self.realizations < 1 or self.outage_samples < 1:
            raise ConfigError("realizations and outage_samples must be >= 1")
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad:
            raise ConfigError(f"unknown schemes {bad}; choose from {SCHEMES}")


def apply_sweep(cfg: ScenarioConfig, param: str, value) -> ScenarioConfig:
    """Scenario at one sweep point; rate targets are given in bit/s/Hz."""
    if param == "none":
        return cfg
    if param == "gamma":
        return cfg.with_(gamma=2.0 ** float(value))
    if param == "beta":
        return cfg.with_(beta=2.0 ** float(value))
    if param == "delta":
        return cfg.with_(delta_g=float(value), delta_h=float(value))
    return cfg.with_(**{param: int(value)})


@dataclass
class PointResult:
    rows: list
    traces: dict
    designs: dict
    violations: list


def _design_record(design: BeamformingDesign, cfg: ScenarioConfig, scheme: str) -> dict:
    return {"scheme": scheme, "w_re": design.w_mat.real.tolist(), "w_im": design.w_mat.imag.tolist(),
            "z_re": design.z_mat.real.tolist(), "z_im": design.z_mat.imag.tolist(),
            "phi_re": design.phi.real.tolist(), "phi_im": design.phi.imag.tolist(),
            "scenario": scenario_to_dict(cfg)}


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    fad = cfg.fading
    return {"nt": cfg.nt, "m": cfg.m, "k": cfg.k, "seed": cfg.seed,
            "rate_bob": float(np.log2(cfg.gamma)), "rate_eve": float(np.log2(cfg.beta)), "rho": list(cfg.rho),
            "noise_bob_dbm": float(10 * np.log10(cfg.sigma_b2) + 30), "noise_eve_dbm": float(10 * np.log10(cfg.sigma_e2) + 30),
            "csi": {"scenario": cfg.scenario, "delta_g": cfg.delta_g, "delta_h": cfg.delta_h},
            "geometry": {"alice": list(cfg.alice), "irs": list(cfg.irs), "bob": list(cfg.bob),
                         "eve_segment": [list(p) for p in cfg.eve_segment]},
            "fading": {"l0_db": float(10 * np.log10(fad.l0)), "alpha": dict(fad.alpha), "rician": dict(fad.rician)}}


def design_from_record(rec: dict) -> tuple[BeamformingDesign, ScenarioConfig]:
    c = lambda re, im: np.asarray(rec[re]) + 1j * np.asarray(rec[im])
    design = BeamformingDesign(c("w_re", "w_im"), c("z_re", "z_im"), c("phi_re", "phi_im"))
    return design, scenario_from_dict(rec["scenario"])


def run_point(spec: ExperimentSpec, idx: int, value, r: int) -> PointResult:
    """All requested schemes on one (sweep value, realization) pair; failures become status strings."""
    base = spec.scenario.with_(seed=int(substream(spec.seed, "realization", r).integers(2**31)))
    cfg = apply_sweep(base, spec.sweep_param, value)
    ch = generate_channels(cfg)
    unc = paper_uncertainty(ch, cfg.scenario, cfg.delta_g, cfg.delta_h)
    phi0 = np.exp(1j * substream(spec.seed, "phases", r).uniform(0.0, 2.0 * np.pi, max(cfg.m, 1))[: cfg.m])
    ao = replace(spec.ao, seed=int(substream(spec.seed, "ao", r).integers(2**31)))
    rows, traces, designs, violations = [], {}, {}, []
    proposed = None
    order = sorted(spec.schemes, key=lambda s: SCHEMES.index(s))
    if "optimized_mrt" in order and "proposed" not in order:
        order = ["proposed_hidden"] + order
    for scheme in order:
        status, design, iters, trace = "ok", None, 0, None
        t0 = time.perf_counter()
        try:
            if scheme in ("proposed", "proposed_hidden"):
                design, trace = run_ao(ch, unc, cfg, ao, phi0=phi0)
                iters = len(trace.rows) - 1
                proposed = design
                if trace.stopped_early:
                    status = "ok_stopped_early"
            elif scheme == "random_irs":
                design = random_irs_design(ch, unc, cfg, phi0, ao)
            elif scheme == "random_mrt":
                design = random_mrt(ch, unc, cfg, phi0)
            elif scheme == "optimized_mrt":
                if proposed is None:
                    raise InfeasibleError("proposed scheme failed; no optimized phases")
                design = optimized_mrt(ch, unc, cfg, proposed.phi)
            elif scheme == "no_irs":
                design = no_irs_design(ch, cfg, ao)
        except InfeasibleError as exc:
            status = "infeasible"
            log.info("%s infeasible at %s=%s r=%d: %s", scheme, spec.sweep_param, value, r, exc)
        except NoFeasibleCandidate:
            status = "randomization_failed"
        except Exception as exc:  # a failed point must never abort the sweep
            status = "error"
            log.warning("%s failed at %s=%s r=%d: %r", scheme, spec.sweep_param, value, r, exc)
        if scheme == "proposed_hidden":
            continue
        row = {"scheme": scheme, "sweep_param": spec.sweep_param, "sweep_value": "" if value is None else value,
               "realization": r, "seed": cfg.seed, "power_dbm": np.nan, "an_fraction": np.nan,
               "outer_iters": iters, "status": status, "seconds": time.perf_counter() - t0}
        outs = [np.nan] * cfg.k
        if design is not None:
            row["power_dbm"] = 10.0 * np.log10(max(design.power, 1e-300)) + 30.0
            row["an_fraction"] = design.an_fraction
            e_ch, e_unc = (no_irs_channels(ch, cfg) if scheme == "no_irs" else (ch, unc))
            for k in range(cfg.k):
                est = empirical_outage(design, e_ch, e_unc, k, cfg.beta, cfg.sigma_e2, spec.outage_samples,
                                       substream(spec.seed, "outage", r, scheme, idx, k))
                outs[k] = est.rate
                if est.wilson_hi > cfg.rho[k] + OUTAGE_SLACK:
                    violations.append(f"{scheme} {spec.sweep_param}={value} r={r}: Eve {k + 1} outage "
                                      f"upper bound {est.wilson_hi:.4f} > {cfg.rho[k] + OUTAGE_SLACK:.4f}")
            if bob_rate(design, e_ch, cfg.sigma_b2) < np.log2(cfg.gamma) - 1e-4:
                violations.append(f"{scheme} {spec.sweep_param}={value} r={r}: Bob rate below target")
            designs[scheme] = _design_record(design, cfg, scheme)
        for k in range(cfg.k):
            row[f"empirical_outage_k{k + 1}"] = outs[k]
        if trace is not None:
            traces[scheme] = trace
            obj = trace.objectives
            if np.any(np.diff(obj) > MONOTONE_SLACK * np.maximum(obj[:-1], 1e-300)):
                violations.append(f"proposed {spec.sweep_param}={value} r={r}: objective increased")
        rows.append(row)
    return PointResult(rows, traces, designs, violations)


@dataclass
class SweepResult:
    spec: ExperimentSpec
    rows: list
    violations: list
    summary: list

    def mean_power(self, scheme: str) -> dict:
        return {s["sweep_value"]: s["mean_power_dbm"] for s in self.summary if s["scheme"] == scheme}

    def mean_an_fraction(self, scheme: str) -> dict:
        return {s["sweep_value"]: s["mean_an_fraction"] for s in self.summary if s["scheme"] == scheme}


def summarize(rows: list, k_max: int) -> list:
    """Per (scheme, sweep value): mean and median power (averaged in watts), AN fraction, feasibility."""
    out = []
    keys = []
    for r in rows:
        key = (r["scheme"], r["sweep_value"])
        if key not in keys:
            keys.append(key)
    for scheme, value in keys:
        sel = [r for r in rows if r["scheme"] == scheme and r["sweep_value"] == value]
        ok = [r for r in sel if np.isfinite(r["power_dbm"])]
        pw = np.array([10 ** ((r["power_dbm"] - 30) / 10) for r in ok])
        outs = [r.get(f"empirical_outage_k{k + 1}", np.nan) for r in ok for k in range(k_max)]
        outs = [o for o in outs if np.isfinite(o)]
        out.append({
            "scheme": scheme, "sweep_value": value, "points": len(sel), "feasible": len(ok),
            "feasibility_rate": len(ok) / len(sel),
            "mean_power_dbm": float(10 * np.log10(pw.mean()) + 30) if ok else np.nan,
            "median_power_dbm": float(np.median([r["power_dbm"] for r in ok])) if ok else np.nan,
            "mean_an_fraction": float(np.mean([r["an_fraction"] for r in ok])) if ok else np.nan,
            "mean_outage": float(np.mean(outs)) if outs else np.nan,
            "mean_outer_iters": float(np.mean([r["outer_iters"] for r in ok])) if ok else np.nan,
        })
    return out


def atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v):
    if isinstance(v, float):
        return "nan" if not np.isfinite(v) else f"{v:.10g}"
    return v


def csv_text(rows: list, cols: list) -> str:
    buf = io.StringIO()
    wr = csv.DictWriter(buf, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
    wr.writeheader()
    for r in rows:
        wr.writerow({c: _fmt(r.get(c, "")) for c in cols})
    return buf.getvalue()


def sweep_columns(k_max: int) -> list:
    return (["scheme", "sweep_param", "sweep_value", "realization", "seed", "power_dbm", "an_fraction", "outer_iters"]
            + [f"empirical_outage_k{k + 1}" for k in range(k_max)] + ["status"])


def _tag(value) -> str:
    return "none" if value is None else str(value).replace("-", "m").replace(".", "p")


def run_experiment(spec: ExperimentSpec, write: bool = True) -> SweepResult:
    """Run every (sweep value, realization) point, aggregate, and write CSV, traces, designs and plots."""
    if not spec.schemes:
        log.warning("empty scheme subset; nothing to run and no files written")
        return SweepResult(spec, [], [], [])
    jobs = [(i, v, r) for i, v in enumerate(spec.sweep_values) for r in range(spec.realizations)]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(run_point, [spec] * len(jobs), *zip(*jobs)))
    else:
        results = [run_point(spec, i, v, r) for i, v, r in jobs]
    rows = [row for res in results for row in res.rows]
    violations = [v for res in results for v in res.violations]
    k_max = max((apply_sweep(spec.scenario, spec.sweep_param, v).k for v in spec.sweep_values), default=0)
    result = SweepResult(spec, rows, violations, summarize(rows, k_max))
    if write:
        out = Path(spec.output_dir)
        atomic_write(out / "results.csv", csv_text(rows, sweep_columns(k_max)))
        atomic_write(out / "summary.csv", csv_text(result.summary, list(result.summary[0]) if result.summary else []))
        for (i, v, r), res in zip(jobs, results):
            for scheme, trace in res.traces.items():
                buf = io.StringIO()
                _trace_csv(trace, buf)
                atomic_write(out / "traces" / f"{scheme}_{spec.sweep_param}_{_tag(v)}_r{r}.csv", buf.getvalue())
            for scheme, rec in res.designs.items():
                atomic_write(out / "designs" / f"{scheme}_{spec.sweep_param}_{_tag(v)}_r{r}.json",
                             json.dumps(rec, sort_keys=True))
        atomic_write(out / "violations.txt", "".join(f"{v}\n" for v in violations))
        emit_plots(result, out)
    return result


def _trace_csv(trace: AoTrace, fh):
    cols = ["iter", "obj_dbm", "status_wz", "status_phi", "sum_delta", "max_mod_violation", "seconds"]
    fh.write(csv_text(trace.rows, cols))


PLOT_LABELS = {
    "gamma": r"Bob rate target $\log_2\gamma$ (bit/s/Hz)",
    "beta": r"Eve rate threshold $\log_2\beta$ (bit/s/Hz)",
    "m": "IRS elements M",
    "nt": "transmit antennas Nt",
    "k": "eavesdroppers K",
    "delta": r"normalized CSI error $\delta$",
    "none": "point",
}


def emit_plots(result: SweepResult, out_dir) -> list:
    """Mean power (dBm) and AN fraction versus the swept value; byte-stable SVG files."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    schemes = sorted({s["scheme"] for s in result.summary}, key=SCHEMES.index)
    if not schemes:
        log.warning("no schemes in result; no plots written")
        return []
    out_dir = Path(out_dir)
    files = []
    param = result.spec.sweep_param
    for key, ylabel, fname in (("mean_power_dbm", "transmit power (dBm)", "power_dbm.svg"),
                               ("mean_an_fraction", "AN power fraction", "an_fraction.svg")):
        with matplotlib.rc_context({"svg.hashsalt": "irs-outage", "svg.fonttype": "path"}):
            fig, ax = plt.subplots(figsize=(5.0, 3.6))
            for scheme in schemes:
                pts = [(s["sweep_value"], s[key]) for s in result.summary if s["scheme"] == scheme]
                xs = np.array([0.0 if v in (None, "") else float(v) for v, _ in pts])
                ys = np.array([y for _, y in pts], dtype=float)
                if len(xs) == 1:
                    ax.scatter(xs, ys, label=scheme)
                else:
                    ax.plot(xs, ys, marker="o", label=scheme)
            ax.set_xlabel(PLOT_LABELS.get(param, param))
            ax.set_ylabel(ylabel)
            ax.grid(True, alpha=0.3)
            ax.legend(fontsize=8)
            fig.tight_layout()
            buf = io.StringIO()
            fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
            plt.close(fig)
        atomic_write(out_dir / fname, buf.getvalue())
        files.append(out_dir / fname)
    return files


def load_experiment(path, overrides: dict | None = None, paper_scale: bool = False) -> ExperimentSpec:
    """Scenario YAML plus an optional ``experiment`` section; ``overrides`` come from the command line."""
    import yaml

    try:
        raw = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    raw = dict(raw)
    exp = dict(raw.pop("experiment", None) or {})
    paper = dict(raw.pop("paper_scale", None) or PAPER_SCALE)
    ao_raw = dict(raw.get("ao") or {})
    name = str(raw.get("name", Path(path).stem))
    cfg = scenario_from_dict(raw)
    try:
        ao = AoConfig(**ao_raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad ao section: {exc}") from exc
    sweep = exp.pop("sweep", None)
    kw = {"realizations": int(exp.pop("realizations", 1)), "outage_samples": int(exp.pop("outage_samples", 10000)),
          "schemes": tuple(exp.pop("schemes", ["proposed"])), "seed": int(exp.pop("seed", cfg.seed)),
          "workers": int(exp.pop("workers", 1))}
    if exp:
        raise ConfigError(f"unknown experiment keys: {sorted(exp)}")
    if paper_scale:
        if "m" in paper:
            cfg = cfg.with_(m=int(paper["m"]))
        if "realizations" in paper:
            kw["realizations"] = int(paper["realizations"])
    overrides = dict(overrides or {})
    if "sweep" in overrides:
        sweep = overrides.pop("sweep")
    kw.update({k: v for k, v in overrides.items() if v is not None})
    param, values = parse_sweep(sweep)
    for v in values:
        try:
            apply_sweep(cfg, param, v)
        except (ConfigError, ValueError) as exc:
            raise ConfigError(f"sweep value {param}={v}: {exc}") from exc
    return ExperimentSpec(cfg, param, values, ao=ao, name=name, **kw)


def parse_sweep(sweep) -> tuple[str, tuple]:
    """``"gamma=1,2,3"`` or ``{"param": ..., "values": [...]}`` or None."""
    if sweep in (None, "", "none"):
        return "none", (None,)
    if isinstance(sweep, dict):
        param, values = sweep.get("param"), sweep.get("values")
    else:
        if "=" not in str(sweep):
            raise ConfigError(f"sweep must look like param=v1,v2 (got {sweep!r})")
        param, vals = str(sweep).split("=", 1)
        values = [v for v in vals.split(",") if v.strip()]
    param = str(param).strip()
    if param not in SWEEP_PARAMS or param == "none":
        raise ConfigError(f"sweep parameter must be one of {SWEEP_PARAMS[1:]}")
    try:
        conv = int if param in ("m", "nt", "k") else float
        values = tuple(conv(str(v).strip()) for v in values)
    except ValueError as exc:
        raise ConfigError(f"bad sweep value: {exc}") from exc
    if not values:
        raise ConfigError("sweep value list is empty")
    return param, values


def validate_design_file(path, samples: int = 10000, seed: int = 0) -> dict:
    """Re-check a stored design: certificates, Bob rate and empirical outage per Eve."""
    try:
        rec = json.loads(Path(path).read_text())
        design, cfg = design_from_record(rec)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read design {path}: {exc}") from exc
    ch = generate_channels(cfg)
    unc = paper_uncertainty(ch, cfg.scenario, cfg.delta_g, cfg.delta_h)
    if rec.get("scheme") == "no_irs":
        ch, unc = no_irs_channels(ch, cfg)
    report = {"certified": design_certified(design, ch, unc, cfg),
              "bob_rate": bob_rate(design, ch, cfg.sigma_b2), "bob_target": float(np.log2(cfg.gamma)),
              "power_dbm": float(10 * np.log10(max(design.power, 1e-300)) + 30), "outage": []}
    ok = report["certified"] and report["bob_rate"] >= report["bob_target"] - 1e-4
    for k in range(cfg.k):
        est = empirical_outage(design, ch, unc, k, cfg.beta, cfg.sigma_e2, samples, substream(seed, "validate", k))
        report["outage"].append(asdict(est))
        ok &= est.wilson_hi <= cfg.rho[k] + OUTAGE_SLACK
    report["ok"] = bool(ok)
    return report
