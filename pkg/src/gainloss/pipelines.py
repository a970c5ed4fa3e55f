"""Analysis pipelines behind the command line.

Each ``run_*`` function takes a :class:`RunConfig`, writes its report files
into ``out_dir`` and returns their paths.  Every file embeds the config and
the toolkit version, and :func:`rerun` re-executes an embedded config.
Output bytes depend only on the config and the input files.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .csvio import InputError, read_panel, read_series, render_csv, write_text
from .dependence import DEFAULT_WINDOWS, BinningSpec, dependence_sweep
from .index_builder import build_index, leave_one_out_index
from .inverse_stats import (
    InsufficientCrossings,
    average_pmfs,
    empirical_mode,
    empirical_pmf,
    first_passage_times,
    fit_gen_gamma,
)
from .series_core import PriceSeries, ScrambleSpec, log_returns, scramble, scramble_returns
from .synthetic import GbmSpec, RegimeSpec, generate_gbm, generate_regime_panel

TOOL = "gainloss"
COMMANDS = ("fpt", "scramble", "index", "dependence", "simulate")
GENERATORS = {"gbm": GbmSpec, "regime": RegimeSpec}


class NumericalFailure(RuntimeError):
    pass


@dataclass
class RunConfig:
    command: str
    inputs: list[str] = field(default_factory=list)
    column: str | None = None
    rho: list[float] = field(default_factory=lambda: [0.05, -0.05])
    window_lengths: list[int] = field(default_factory=lambda: list(DEFAULT_WINDOWS))
    bins: int = 8
    seed: int | None = None
    replicates: int = 1
    format: str = "json"
    min_waits: int = 30
    equalize: bool = False
    leave_one_out: bool = False
    strict_dates: bool = False
    write_series: bool = False
    generator: str | None = None
    generator_params: dict = field(default_factory=dict)

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        if self.format not in ("json", "csv"):
            raise InputError("--format must be json or csv")
        for r in self.rho:
            if not (math.isfinite(r) and r != 0):
                raise InputError(f"barrier level must be finite and nonzero, got {r}")
        if any(int(L) < 1 for L in self.window_lengths):
            raise InputError("window lengths must be positive integers")
        if self.bins < 2:
            raise InputError("--bins must be >= 2")
        if self.replicates < 1:
            raise InputError("--replicates must be >= 1")
        if self.seed is not None and not 0 <= self.seed < 2**64:
            raise InputError("--seed must be an unsigned 64-bit integer")
        if self.command in ("scramble", "simulate") and self.seed is None:
            raise InputError(f"{self.command} needs an explicit seed")
        if self.command != "simulate" and not self.inputs:
            raise InputError(f"{self.command} needs at least one input file")
        if self.command in ("fpt", "scramble") and len(self.inputs) != 1:
            raise InputError(f"{self.command} takes exactly one input series")
        if self.command == "simulate":
            if self.generator not in GENERATORS:
                raise InputError(f"generator must be one of {sorted(GENERATORS)}")
            names = {f.name for f in fields(GENERATORS[self.generator])}
            unknown = set(self.generator_params) - names
            if unknown:
                raise InputError(f"unknown {self.generator} parameters: {sorted(unknown)}")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        extra = set(d) - names
        if extra:
            raise InputError(f"unknown config keys: {sorted(extra)}")
        return cls(**d).validate()


def _header(cfg: RunConfig) -> dict:
    return {"tool": TOOL, "version": __version__, "config": cfg.to_dict()}


def _comment(cfg: RunConfig) -> str:
    return json.dumps(_header(cfg), sort_keys=True, separators=(",", ":"))


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _rho_tag(rho: float) -> str:
    return f"{rho:+g}"


def _series_info(s: PriceSeries) -> dict:
    info = {"label": s.label, "T": s.T}
    if s.dates:
        info["first_date"], info["last_date"] = s.dates[0], s.dates[-1]
    return info


def _analyze_barrier(pmf, rho, extra: dict) -> tuple[dict, str]:
    try:
        fit = fit_gen_gamma(pmf)
        fit_info = {k: _num(v) if isinstance(v, float) else v for k, v in fit.as_dict().items()}
        density = fit.pdf(pmf.support.astype(float))
        fitted_mode = _num(fit.mode()) if fit.converged else None
    except InsufficientCrossings as exc:
        fit, fit_info, density, fitted_mode = None, {"error": str(exc)}, None, None
    record = {
        "rho": rho,
        **extra,
        "t_max": int(pmf.support[-1]),
        "empirical_mode": empirical_mode(pmf),
        "fitted_mode": fitted_mode,
        "gen_gamma_fit": fit_info,
        "pmf_file": f"pmf_rho{_rho_tag(rho)}.csv",
    }
    return record, _pmf_csv(pmf, density)


def _pmf_csv(pmf, density) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "mass", "fitted_density"])
    for i, t in enumerate(pmf.support):
        dens = "" if density is None else repr(float(density[i]))
        w.writerow([int(t), repr(float(pmf.mass[i])), dens])
    return buf.getvalue()


def _asymmetry(records: list[dict], min_waits: int) -> list[dict]:
    by_rho = {r["rho"]: r for r in records}
    out = []
    for rho in sorted({abs(r) for r in by_rho}):
        if rho not in by_rho or -rho not in by_rho:
            continue
        up, down = by_rho[rho], by_rho[-rho]
        entry = {
            "rho_abs": rho,
            "definition": "empirical_mode(+rho) - empirical_mode(-rho) in days; "
                          "a summary statistic of this toolkit, positive = losses reached sooner",
            "statistic": None,
            "fitted_mode_gap": None,
        }
        short = [r["rho"] for r in (up, down) if r["n_waits"] < min_waits]
        if short:
            entry["error"] = f"fewer than {min_waits} crossings for rho={short}"
        else:
            entry["statistic"] = up["empirical_mode"] - down["empirical_mode"]
            if up["fitted_mode"] is not None and down["fitted_mode"] is not None:
                entry["fitted_mode_gap"] = up["fitted_mode"] - down["fitted_mode"]
        out.append(entry)
    return out


def _write_summary(out_dir: Path, cfg: RunConfig, name: str, report: dict,
                   flat_rows: list[dict]) -> Path:
    if cfg.format == "json":
        return write_text(out_dir / f"{name}.json", _dump_json({**_header(cfg), **report}))
    buf = io.StringIO()
    buf.write(f"# {_comment(cfg)}\n")
    cols = list(flat_rows[0]) if flat_rows else []
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in flat_rows:
        w.writerow(["" if row[c] is None else row[c] for c in cols])
    return write_text(out_dir / f"{name}.csv", buf.getvalue())


def _flat_barriers(records):
    return [{"rho": r["rho"], "n_waits": r["n_waits"], "starts_total": r.get("starts_total"),
             "starts_censored": r.get("starts_censored"), "empirical_mode": r["empirical_mode"],
             "fitted_mode": r["fitted_mode"]} for r in records]


def _fpt_records(series_list: list[PriceSeries], rhos) -> tuple[list[dict], list[str]]:
    records, pmf_texts = [], []
    for rho in rhos:
        pmfs, total, censored = [], 0, 0
        for s in series_list:
            samples = first_passage_times(s, rho)
            if len(samples) == 0:
                raise NumericalFailure(f"no crossings for barrier rho={rho:+g} in {s.label!r}")
            pmfs.append(empirical_pmf(samples))
            total += samples.starts_total
            censored += samples.starts_censored
        pmf = pmfs[0] if len(pmfs) == 1 else average_pmfs(pmfs)
        extra = {"starts_total": total, "starts_censored": censored,
                 "n_waits": total - censored, "replicates": len(series_list)}
        rec, text = _analyze_barrier(pmf, rho, extra)
        records.append(rec)
        pmf_texts.append(text)
    return records, pmf_texts


def run_fpt(cfg: RunConfig, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    series = read_series(cfg.inputs[0], cfg.column)
    records, texts = _fpt_records([series], cfg.rho)
    written = [write_text(out_dir / r["pmf_file"], f"# {_comment(cfg)}\n" + t)
               for r, t in zip(records, texts)]
    report = {"series": _series_info(series), "barriers": records,
              "asymmetry": _asymmetry(records, cfg.min_waits)}
    written.append(_write_summary(out_dir, cfg, "fpt_summary", report, _flat_barriers(records)))
    return written


def run_scramble(cfg: RunConfig, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    series = read_series(cfg.inputs[0], cfg.column)
    seeds = [cfg.seed + k for k in range(cfg.replicates)]
    original = log_returns(series)
    sorted_orig = np.sort(original.values)
    scrambled, checks = [], []
    for sd in seeds:
        spec = ScrambleSpec(sd)
        permuted = scramble_returns(series, spec)
        surrogate = scramble(series, spec)
        rederived = log_returns(surrogate).values
        checks.append({
            "seed": sd,
            "return_multiset_equal": bool(np.array_equal(np.sort(permuted.values), sorted_orig)),
            "max_abs_return_roundoff": float(np.max(np.abs(rederived - permuted.values))),
            "terminal_rel_error": float(abs(surrogate.values[-1] / series.values[-1] - 1.0)),
        })
        scrambled.append(surrogate)
        if cfg.write_series:
            write_text(out_dir / f"scrambled_seed{sd}.csv",
                       render_csv([surrogate.label], surrogate.values[:, None], series.dates,
                                  comment=_comment(cfg)))
    records, texts = _fpt_records(scrambled, cfg.rho)
    written = [write_text(out_dir / r["pmf_file"], f"# {_comment(cfg)}\n" + t)
               for r, t in zip(records, texts)]
    report = {
        "series": _series_info(series),
        "scramble": {"algorithm": ScrambleSpec(0).algorithm, "seeds": seeds,
                     "replicates": len(seeds), "checks": checks},
        "barriers": records,
        "asymmetry": _asymmetry(records, cfg.min_waits),
    }
    flat = [{**row, "seeds": " ".join(map(str, seeds))} for row in _flat_barriers(records)]
    written.append(_write_summary(out_dir, cfg, "scramble_summary", report, flat))
    return written


def run_index(cfg: RunConfig, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    load = read_panel(cfg.inputs, cfg.strict_dates)
    panel = load.panel
    index = build_index(panel)
    cols, data = ["index"], [index.values]
    identity_err = 0.0
    if cfg.leave_one_out:
        rel = panel.normalized()
        for n in range(panel.N):
            loo = leave_one_out_index(panel, n)
            cols.append(f"index_without_{panel.names[n]}")
            data.append(loo.values)
            resid = panel.N * index.values - (panel.N - 1) * loo.values - rel[n]
            identity_err = max(identity_err, float(np.max(np.abs(resid))))
    written = [write_text(out_dir / "index.csv",
                          render_csv(cols, np.column_stack(data), panel.dates, _comment(cfg)))]
    report = {
        "stocks": list(panel.names),
        "T": panel.T,
        "dropped_dates": load.dropped_dates,
        "index_day0": float(index.values[0]),
        "reconstitution_max_abs_error": identity_err if cfg.leave_one_out else None,
        "index_file": "index.csv",
    }
    written.append(write_text(out_dir / "index_meta.json", _dump_json({**_header(cfg), **report})))
    return written


DEPENDENCE_COLUMNS = ["L", "M_U", "M_D", "C_U", "C_D", "n_up", "n_down"]


def run_dependence(cfg: RunConfig, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    load = read_panel(cfg.inputs, cfg.strict_dates)
    eq_seed = cfg.seed if cfg.equalize else None
    if cfg.equalize and eq_seed is None:
        raise InputError("--equalize needs --seed")
    report = dependence_sweep(load.panel, [int(L) for L in cfg.window_lengths],
                              BinningSpec(cfg.bins), equalize_seed=eq_seed)
    buf = io.StringIO()
    buf.write(f"# {_comment(cfg)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DEPENDENCE_COLUMNS)
    rows_json = []
    for r in report.rows:
        if r.present:
            w.writerow([r.L, repr(r.M_U), repr(r.M_D), repr(r.C_U), repr(r.C_D), r.n_up, r.n_down])
        else:
            w.writerow([r.L, "", "", "", "", "", ""])
        rows_json.append({"L": r.L, "M_U": r.M_U, "M_D": r.M_D, "C_U": r.C_U, "C_D": r.C_D,
                          "n_up": r.n_up if r.present else None,
                          "n_down": r.n_down if r.present else None,
                          "flat_windows": r.flat_windows, "tail_days_dropped": r.tail_days_dropped,
                          "absent_reason": r.note or None})
    written = [write_text(out_dir / "dependence.csv", buf.getvalue())]
    meta = {**_header(cfg), "metadata": report.metadata(), "stocks": list(load.panel.names),
            "T": load.panel.T, "dropped_dates": load.dropped_dates, "rows": rows_json}
    written.append(write_text(out_dir / "dependence.json", _dump_json(meta)))
    return written


def run_simulate(cfg: RunConfig, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    params = {**cfg.generator_params, "seed": cfg.seed}
    try:
        spec = GENERATORS[cfg.generator](**params)
    except (TypeError, ValueError) as exc:
        raise InputError(f"invalid {cfg.generator} spec: {exc}") from None
    if cfg.generator == "gbm":
        s = generate_gbm(spec)
        text = render_csv([s.label], s.values[:, None], comment=_comment(cfg))
    else:
        panel = generate_regime_panel(spec)
        text = render_csv(panel.names, panel.matrix.T, comment=_comment(cfg))
    return [write_text(out_dir / f"{cfg.generator}.csv", text)]


RUNNERS = {
    "fpt": run_fpt,
    "scramble": run_scramble,
    "index": run_index,
    "dependence": run_dependence,
    "simulate": run_simulate,
}


def run(cfg: RunConfig, out_dir) -> list[Path]:
    cfg.validate()
    return RUNNERS[cfg.command](cfg, out_dir)


def embedded_config(path) -> RunConfig:
    """The RunConfig carried by a report file written by this toolkit."""
    path = Path(path)
    if path.suffix == ".json":
        try:
            data = json.loads(path.read_text())
        except (OSError, ValueError) as exc:
            raise InputError(f"{path}: not a readable JSON report ({exc})") from None
    else:
        data = None
        try:
            with open(path) as fh:
                for line in fh:
                    if not line.startswith("#"):
                        break
                    try:
                        data = json.loads(line[1:])
                        break
                    except ValueError:
                        continue
        except OSError as exc:
            raise InputError(f"{path}: cannot read ({exc.strerror})") from None
        if data is None:
            raise InputError(f"{path}: no embedded run config")
    if data.get("tool") != TOOL or "config" not in data:
        raise InputError(f"{path}: no embedded run config")
    return RunConfig.from_dict(data["config"])


def rerun(path, out_dir) -> list[Path]:
    return run(embedded_config(path), out_dir)
