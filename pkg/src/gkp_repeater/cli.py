"""Command-line front end: sweep runner, threshold tables, data emitters.

Every command emits one flat record per grid point (inputs first, then
outputs) as CSV or JSON, so external plotting tools can consume the files
directly.  Stochastic commands are bit-reproducible for a fixed --seed
regardless of --workers.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

from . import montecarlo, rates
from .amplify import SeriesDivergenceError, cc_threshold_L0
from .gkpcode import gamma_threshold
from .model import AmplificationStrategy, ConfigError, RepeaterConfig

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

_STRATEGIES = {s.value: s for s in AmplificationStrategy}

TABLE1_TCOH = (0.001, 0.1, 10.0)
TABLE1_PLINK = (0.05, 0.7, 1.0)
TABLE2_DELTA = (0.05, 0.03, 0.02, 0.01)
TABLE2_N = (2, 4, 8, 16, 32, 64, 128, 256)


def parse_grid(text: str, integer: bool = False) -> list:
    """Parse a scalar, comma list, ``start:stop:count`` or ``log:start:stop:count``."""
    text = text.strip()
    if not text:
        return []
    cast = (lambda v: int(round(float(v)))) if integer else float
    if "," in text:
        return [cast(tok) for tok in text.split(",") if tok.strip()]
    if ":" in text:
        parts = text.split(":")
        log = False
        if parts[0].lower() == "log":
            log = True
            parts = parts[1:]
        if len(parts) != 3:
            raise ConfigError("grid", f"expected start:stop:count, got {text!r}")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ConfigError("grid", "count must be >= 1")
        if count == 1:
            vals = [start]
        elif log:
            if start <= 0 or stop <= 0:
                raise ConfigError("grid", "log grids require positive endpoints")
            ratio = (stop / start) ** (1.0 / (count - 1))
            vals = [start * ratio**i for i in range(count)]
        else:
            step = (stop - start) / (count - 1)
            vals = [start + step * i for i in range(count)]
        return [cast(v) for v in vals]
    return [cast(text)]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with chain parameters")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json", "text"), default="csv")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)


def _add_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--L", help="total distance in km (scalar or grid)")
    p.add_argument("--n", help="segment count (scalar or grid)")
    p.add_argument("--p-link", dest="p_link", help="link efficiency in [0,1]")
    p.add_argument("--delta-sq", dest="delta_sq", help="single-peak variance")
    p.add_argument("--t-coh", dest="t_coh", help="memory coherence time in s")
    p.add_argument("--gamma-sq", dest="gamma_sq", help="per-swap operation noise")
    p.add_argument("--strategy", choices=sorted(_STRATEGIES), default=None)


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="gkp-repeater",
                                  description=__doc__.splitlines()[0])
    sub = top.add_subparsers(dest="command", required=True)

    cmd = sub.add_parser("rate", help="analytic secret-key-rate sweep")
    _add_common(cmd)
    _add_params(cmd)

    cmd = sub.add_parser("plob", help="repeaterless bound over a distance grid")
    _add_common(cmd)
    cmd.add_argument("--L", required=True)

    cmd = sub.add_parser("table1", help="CC vs preamp segment-length thresholds")
    _add_common(cmd)
    cmd.add_argument("--t-coh", dest="t_coh", default=None)
    cmd.add_argument("--p-link", dest="p_link", default=None)

    cmd = sub.add_parser("table2", help="operation-noise thresholds")
    _add_common(cmd)
    cmd.add_argument("--delta-sq", dest="delta_sq", default=None)
    cmd.add_argument("--n", default=None)

    cmd = sub.add_parser("compare", help="analytic vs averaged vs simulated rates")
    _add_common(cmd)
    _add_params(cmd)
    cmd.add_argument("--trials", type=int, default=5000)
    cmd.add_argument("--inner", type=int, default=1000)

    cmd = sub.add_parser("optimize", help="optimal segment count per distance")
    _add_common(cmd)
    _add_params(cmd)
    cmd.add_argument("--n-range", dest="n_range", default="2:512:511",
                     help="candidate segment counts (grid syntax)")
    cmd.add_argument("--metric", choices=("per_step", "per_second"),
                     default="per_step")

    cmd = sub.add_parser("baseline", help="correctionless baseline comparison")
    _add_common(cmd)
    _add_params(cmd)
    cmd.add_argument("--mu", default="1.0", help="depolarization parameter in (0,1]")

    cmd = sub.add_parser("simulate", help="discrete-time chain simulation")
    _add_common(cmd)
    _add_params(cmd)
    cmd.add_argument("--trials", type=int, default=5000)
    cmd.add_argument("--inner", type=int, default=1000)

    return top


_DEFAULTS = {"L": 100.0, "n": 4, "p_link": 1.0, "delta_sq": 0.05,
             "t_coh": 10.0, "gamma_sq": 0.0, "strategy": "auto"}
_INT_FIELDS = {"n"}


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    unknown = set(data) - set(_DEFAULTS)
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown configuration field")
    return data


def _param_grids(args, file_cfg: dict) -> dict[str, list]:
    """Merge defaults < config file < CLI flags into per-field value lists."""
    grids: dict[str, list] = {}
    for field, default in _DEFAULTS.items():
        if field == "strategy":
            continue
        flag = getattr(args, field, None)
        if flag is not None:
            grids[field] = parse_grid(str(flag), integer=field in _INT_FIELDS)
        elif field in file_cfg:
            grids[field] = [file_cfg[field]]
        else:
            grids[field] = [default]
        if not grids[field]:
            raise ConfigError(field, "empty parameter grid")
    strategy = getattr(args, "strategy", None) or file_cfg.get("strategy", "auto")
    if strategy not in _STRATEGIES:
        raise ConfigError("strategy", f"unknown strategy {strategy!r}")
    grids["strategy"] = [strategy]
    return grids


def _grid_points(grids: dict[str, list]) -> list[RepeaterConfig]:
    """Cartesian product of the parameter grids, in canonical field order."""
    order = ("L", "n", "p_link", "delta_sq", "t_coh", "gamma_sq")
    strategy = _STRATEGIES[grids["strategy"][0]]
    return [RepeaterConfig(strategy=strategy, **dict(zip(order, values)))
            for values in itertools.product(*(grids[f] for f in order))]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return repr(value)
    if isinstance(value, AmplificationStrategy):
        return value.value
    return str(value)


def emit(records: list[dict], fields: list[str], fmt: str, out: str | None) -> None:
    if fmt == "json":
        payload = json.dumps(records, indent=2, default=_fmt) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(fields)
        for rec in records:
            writer.writerow([_fmt(rec.get(f)) for f in fields])
        payload = buf.getvalue()
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)


_INPUT_FIELDS = ["L", "n", "p_link", "delta_sq", "t_coh", "gamma_sq"]


def _input_record(cfg: RepeaterConfig) -> dict:
    return {"L": cfg.L, "n": cfg.n, "p_link": cfg.p_link, "delta_sq": cfg.delta_sq,
            "t_coh": cfg.t_coh, "gamma_sq": cfg.gamma_sq}


def _rate_record(cfg: RepeaterConfig) -> dict:
    res = rates.analytic_rate(cfg)
    rec = _input_record(cfg)
    rec.update(strategy=res.strategy, p=res.p, sigma_tot_sq=res.sigma_tot_sq,
               p_pauli=res.p_pauli, qber=res.qber, r=res.r, R=res.R, S=res.S,
               S_hz=res.S_hz)
    return rec


_RATE_FIELDS = _INPUT_FIELDS + ["strategy", "p", "sigma_tot_sq", "p_pauli",
                                "qber", "r", "R", "S", "S_hz"]


def _map_points(fn, points, workers: int) -> list:
    if workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, points))
    return [fn(p) for p in points]


def cmd_rate(args) -> int:
    grids = _param_grids(args, _load_config_file(args.config))
    points = _grid_points(grids)
    for cfg in points:
        cfg.validate()
    records = _map_points(_rate_record, points, args.workers)
    emit(records, _RATE_FIELDS, "csv" if args.format == "text" else args.format,
         args.out)
    return EXIT_OK


def cmd_plob(args) -> int:
    Ls = parse_grid(args.L)
    if not Ls:
        raise ConfigError("L", "empty parameter grid")
    records = [{"L": L, "plob": rates.plob_bound(L)} for L in Ls]
    emit(records, ["L", "plob"], "csv" if args.format == "text" else args.format,
         args.out)
    return EXIT_OK


def _table1_cell(cell: tuple[float, float]) -> dict:
    t_coh, p_link = cell
    thr = cc_threshold_L0(p_link, t_coh)
    return {"t_coh": t_coh, "p_link": p_link, "threshold_km": thr}


def cmd_table1(args) -> int:
    t_cohs = parse_grid(args.t_coh) if args.t_coh is not None else list(TABLE1_TCOH)
    p_links = parse_grid(args.p_link) if args.p_link is not None else list(TABLE1_PLINK)
    if not t_cohs or not p_links:
        raise ConfigError("t_coh" if not t_cohs else "p_link", "empty parameter grid")
    cells = [(t, pl) for t in t_cohs for pl in p_links]
    records = _map_points(_table1_cell, cells, args.workers)
    if args.format == "text":
        lines = ["segment-length thresholds (km) where CC amplification wins",
                 "t_coh \\ p_link  " + "  ".join(f"{pl:>8g}" for pl in p_links)]
        for t in t_cohs:
            row = [rec for rec in records if rec["t_coh"] == t]
            lines.append(f"{t:>14g}  " + "  ".join(
                f"{rec['threshold_km']:8.2f}" if rec["threshold_km"] is not None
                else "    none" for rec in row))
        _write_text("\n".join(lines) + "\n", args.out)
        return EXIT_OK
    emit(records, ["t_coh", "p_link", "threshold_km"], args.format, args.out)
    return EXIT_OK


def _table2_cell(cell: tuple[float, int]) -> dict:
    delta_sq, n = cell
    return {"delta_sq": delta_sq, "n": n, "gamma_sq_max": gamma_threshold(n, delta_sq)}


def cmd_table2(args) -> int:
    deltas = (parse_grid(args.delta_sq) if args.delta_sq is not None
              else list(TABLE2_DELTA))
    ns = parse_grid(args.n, integer=True) if args.n is not None else list(TABLE2_N)
    if not deltas or not ns:
        raise ConfigError("delta_sq" if not deltas else "n", "empty parameter grid")
    cells = [(d, n) for d in deltas for n in ns]
    records = _map_points(_table2_cell, cells, args.workers)
    if args.format == "text":
        lines = ["operation-noise thresholds for a non-zero key rate",
                 "delta_sq \\ n  " + "  ".join(f"{n:>7d}" for n in ns)]
        for d in deltas:
            row = [rec for rec in records if rec["delta_sq"] == d]
            cells_txt = []
            for rec in row:
                g = rec["gamma_sq_max"]
                cells_txt.append("≤0.0010" if g < 1e-3 else f"{g:7.4f}")
            lines.append(f"{d:>12g}  " + "  ".join(cells_txt))
        _write_text("\n".join(lines) + "\n", args.out)
        return EXIT_OK
    emit(records, ["delta_sq", "n", "gamma_sq_max"], args.format, args.out)
    return EXIT_OK


def cmd_compare(args) -> int:
    grids = _param_grids(args, _load_config_file(args.config))
    Ls = grids.pop("L")
    for field, values in grids.items():
        if field != "strategy" and len(values) > 1:
            raise ConfigError(field, "compare sweeps L only; give a scalar here")
    base = _grid_points({**grids, "L": [Ls[0]]})[0]
    rows = montecarlo.compare_methods(base, Ls, trials=args.trials,
                                      inner_iterations=args.inner,
                                      seed=args.seed, workers=args.workers)
    records = []
    for row in rows:
        rec = _input_record(replace(base, L=row.L))
        rec.update(S_analytic=row.S_analytic, S_numeric=row.S_numeric,
                   S_simulated=row.S_simulated, stderr=row.stderr, seed=args.seed)
        records.append(rec)
    emit(records, _INPUT_FIELDS + ["S_analytic", "S_numeric", "S_simulated",
                                   "stderr", "seed"],
         "csv" if args.format == "text" else args.format, args.out)
    return EXIT_OK


def cmd_optimize(args) -> int:
    grids = _param_grids(args, _load_config_file(args.config))
    n_range = parse_grid(args.n_range, integer=True)
    if not n_range:
        raise ConfigError("n_range", "empty parameter grid")
    grids.pop("n")
    points = _grid_points({**grids, "n": [n_range[0]]})
    records = []
    for cfg in points:
        opt = rates.optimize_n(cfg.L, cfg, n_range, metric=args.metric)
        rec = _input_record(cfg)
        del rec["n"]
        rec.update(n_star=opt.n_star, S=opt.best.S, S_hz=opt.best.S_hz,
                   qber=opt.best.qber, all_zero=opt.all_zero)
        records.append(rec)
    fields = [f for f in _INPUT_FIELDS if f != "n"] + ["n_star", "S", "S_hz",
                                                       "qber", "all_zero"]
    emit(records, fields, "csv" if args.format == "text" else args.format, args.out)
    return EXIT_OK


def cmd_baseline(args) -> int:
    grids = _param_grids(args, _load_config_file(args.config))
    mus = parse_grid(args.mu)
    if not mus:
        raise ConfigError("mu", "empty parameter grid")
    for mu in mus:
        if not (0.0 < mu <= 1.0):
            raise ConfigError("mu", f"must lie in (0, 1], got {mu}")
    points = _grid_points(grids)
    records = []
    for cfg in points:
        gkp = rates.analytic_rate(cfg)
        for mu in mus:
            corr = rates.correctionless_rate(cfg, mu=mu)
            rec = _input_record(cfg)
            rec.update(mu=mu, qber_baseline=corr.qber, S_baseline=corr.S,
                       S_hz_baseline=corr.S_hz, S_gkp=gkp.S, S_hz_gkp=gkp.S_hz)
            records.append(rec)
    emit(records, _INPUT_FIELDS + ["mu", "qber_baseline", "S_baseline",
                                   "S_hz_baseline", "S_gkp", "S_hz_gkp"],
         "csv" if args.format == "text" else args.format, args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    grids = _param_grids(args, _load_config_file(args.config))
    points = _grid_points(grids)
    records = []
    for i, cfg in enumerate(points):
        seed = args.seed + i
        sim = montecarlo.simulate_chain(cfg, trials=args.trials,
                                        inner_iterations=args.inner,
                                        seed=seed, workers=args.workers)
        S, err = montecarlo.simulated_rate(cfg, sim)
        rec = _input_record(cfg)
        rec.update(seed=seed, trials=sim.trials, inner=sim.inner_iterations,
                   qber_mean=sim.qber_mean, qber_stderr=sim.qber_stderr,
                   mean_completion_steps=sim.mean_completion_steps,
                   S_simulated=S, stderr=err)
        records.append(rec)
    emit(records, _INPUT_FIELDS + ["seed", "trials", "inner", "qber_mean",
                                   "qber_stderr", "mean_completion_steps",
                                   "S_simulated", "stderr"],
         "csv" if args.format == "text" else args.format, args.out)
    return EXIT_OK


def _write_text(payload: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)


_COMMANDS = {
    "rate": cmd_rate,
    "plob": cmd_plob,
    "table1": cmd_table1,
    "table2": cmd_table2,
    "compare": cmd_compare,
    "optimize": cmd_optimize,
    "baseline": cmd_baseline,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SeriesDivergenceError, ArithmeticError, ValueError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
