"""Seeded scenario sweeps over SNR, result rows, aggregates and file emission.

Seeds: every scenario ``i`` gets ``derive_seed(master_seed, i, 0)`` for its
channel draw (shared by all SNR points) and ``derive_seed(master_seed, i, 1 + j)``
for the algorithm randomness at SNR index ``j`` (shared by all methods, so a
zero-budget BCD run reproduces the FPA row exactly).
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .bcd import fpa_baseline, optimize
from .channel import scenario_sample
from .config import ExperimentConfig

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

CSV_COLUMNS = ["scenario_id", "method", "snr_db", "rate_bps_hz", "relaxed_rate_bps_hz",
               "min_sensing_slack", "wall_time_s", "seed", "status"]

AGGREGATION_PROTOCOL = (
    "per (method, snr_db): mean and max of rate_bps_hz over rows with status 'ok'; "
    "all methods share the scenario draws of a given scenario_id")


def splitmix64(x: int) -> int:
    x = (x + GOLDEN) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, scenario_id: int, stream: int = 0) -> int:
    """splitmix64(splitmix64(master) xor (scenario_id * GOLDEN + stream))."""
    base = splitmix64(master_seed & MASK64)
    return splitmix64(base ^ ((scenario_id * GOLDEN + stream) & MASK64))


@dataclass
class ResultRow:
    scenario_id: int
    method: str
    snr_db: float
    rate: float
    relaxed_rate: float
    sensing_slacks: list = field(default_factory=list)
    wall_time: float = 0.0
    seed: int = 0
    config_hash: str = ""
    status: str = "ok"

    @property
    def min_sensing_slack(self) -> float:
        return min(self.sensing_slacks) if self.sensing_slacks else math.inf


@dataclass
class ResultTable:
    config: dict
    rows: list
    config_hash: str = ""

    def aggregates(self) -> dict:
        return aggregate(self.rows)

    def failures(self) -> int:
        return sum(r.status != "ok" for r in self.rows)


def aggregate(rows) -> dict:
    out: dict = {}
    for r in rows:
        if r.status != "ok":
            continue
        out.setdefault(r.method, {}).setdefault(repr(float(r.snr_db)), []).append(r.rate)
    return {m: {snr: {"mean": float(np.mean(v)), "max": float(np.max(v)), "count": len(v)}
                for snr, v in per.items()}
            for m, per in out.items()}


def _scenario(exp: ExperimentConfig, scenario_id: int, snr_db: float, num_targets=None):
    seed = derive_seed(exp.sweep["master_seed"], scenario_id, 0)
    return scenario_sample(np.random.default_rng(seed), exp.scenario_config(snr_db, num_targets))


def run_one(exp: ExperimentConfig, scenario_id: int, snr_index: int, methods=None,
            num_targets=None) -> list[ResultRow]:
    snr_db = exp.sweep["snr_db"][snr_index]
    methods = methods or exp.sweep["methods"]
    alg_seed = derive_seed(exp.sweep["master_seed"], scenario_id, 1 + snr_index)
    bcfg = exp.bcd_config()
    rows = []
    for method in methods:
        t0 = time.perf_counter()
        try:
            sc = _scenario(exp, scenario_id, snr_db, num_targets)
            rng = np.random.default_rng(alg_seed)
            res = fpa_baseline(sc, bcfg, rng) if method == "fpa" else optimize(sc, bcfg, rng)
            status = "ok" if res.status == "optimal" else res.status
            rate = res.best_rate if status == "ok" else 0.0
            row = ResultRow(scenario_id, method, float(snr_db), float(rate),
                            float(res.relaxed_rate), [float(s) for s in res.sensing_slacks],
                            seed=alg_seed, config_hash=exp.hash, status=status)
        except Exception as exc:  # recorded, never aborts the sweep
            row = ResultRow(scenario_id, method, float(snr_db), 0.0, 0.0, seed=alg_seed,
                            config_hash=exp.hash, status=f"error: {type(exc).__name__}: {exc}")
        row.wall_time = time.perf_counter() - t0
        rows.append(row)
    return rows


def _job(args):
    data, sid, j, methods, k = args
    return run_one(ExperimentConfig(data), sid, j, methods, k)


def run_sweep(exp: ExperimentConfig, methods=None, workers: int | None = None,
              num_targets: int | None = None, progress=None) -> ResultTable:
    """Run every (scenario, SNR) pair; rows come back sorted by (scenario, SNR, method order)."""
    methods = list(methods or exp.sweep["methods"])
    jobs = [(exp.data, sid, j, methods, num_targets)
            for sid in range(exp.sweep["num_scenarios"]) for j in range(len(exp.sweep["snr_db"]))]
    workers = workers or exp.sweep["workers"]
    results = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for job, rows in zip(jobs, pool.map(_job, jobs)):
                results[(job[1], job[2])] = rows
                if progress:
                    progress(rows)
    else:
        for job in jobs:
            rows = _job(job)
            results[(job[1], job[2])] = rows
            if progress:
                progress(rows)
    ordered = [r for key in sorted(results) for r in results[key]]
    return ResultTable(exp.data, ordered, exp.hash)


# -- emission ---------------------------------------------------------------------------------

def _fmt(x) -> str:
    return repr(float(x))


def csv_text(rows, record_wall_time: bool = False) -> str:
    """Fixed-header CSV. Floats use shortest round-trip repr; wall time is written
    only when ``record_wall_time`` (otherwise empty, keeping output reproducible)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([r.scenario_id, r.method, _fmt(r.snr_db), _fmt(r.rate), _fmt(r.relaxed_rate),
                    _fmt(r.min_sensing_slack), _fmt(r.wall_time) if record_wall_time else "",
                    r.seed, r.status])
    return buf.getvalue()


def read_csv(path_or_text) -> list[ResultRow]:
    text = path_or_text
    if isinstance(path_or_text, Path) or (isinstance(path_or_text, str) and "\n" not in path_or_text):
        text = Path(path_or_text).read_text()
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {header}")
    rows = []
    for rec in reader:
        d = dict(zip(header, rec))
        slack = float(d["min_sensing_slack"])
        rows.append(ResultRow(
            scenario_id=int(d["scenario_id"]), method=d["method"], snr_db=float(d["snr_db"]),
            rate=float(d["rate_bps_hz"]), relaxed_rate=float(d["relaxed_rate_bps_hz"]),
            sensing_slacks=[] if math.isinf(slack) and slack > 0 else [slack],
            wall_time=float(d["wall_time_s"]) if d["wall_time_s"] else 0.0,
            seed=int(d["seed"]), status=d["status"]))
    return rows


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, list):
        return [_jsonable(v) for v in x]
    return x


def json_envelope(table: ResultTable) -> dict:
    return _jsonable({
        "config": table.config,
        "config_hash": table.config_hash,
        "rows": [asdict(r) for r in table.rows],
        "aggregates": table.aggregates(),
        "aggregation_protocol": AGGREGATION_PROTOCOL,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    })


def svg_plot(table: ResultTable, path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    agg = table.aggregates()
    with plt.rc_context({"svg.hashsalt": table.config_hash, "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        for method, per in sorted(agg.items()):
            snrs = sorted(per, key=float)
            xs = [float(s) for s in snrs]
            line, = ax.plot(xs, [per[s]["mean"] for s in snrs], marker="o", label=f"{method} (mean)")
            ax.plot(xs, [per[s]["max"] for s in snrs], ls="--", color=line.get_color(),
                    label=f"{method} (max)")
        ax.set_xlabel("SNR (dB)")
        ax.set_ylabel("Rate (bps/Hz)")
        ax.set_title(f"config {table.config_hash}")
        ax.grid(alpha=0.3)
        if agg:
            ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None, "Description": table.config_hash})
        plt.close(fig)


def emit_results(table: ResultTable, out_dir, formats=("csv", "json", "svg"),
                 record_wall_time: bool = False, stem: str = "results") -> dict:
    if not table.rows:
        raise ValueError("nothing to emit: result table is empty")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = {}
    if "csv" in formats:
        p = out_dir / f"{stem}.csv"
        p.write_text(csv_text(table.rows, record_wall_time))
        written["csv"] = p
    if "json" in formats:
        p = out_dir / f"{stem}.json"
        p.write_text(json.dumps(json_envelope(table), indent=2, sort_keys=True))
        written["json"] = p
    if "svg" in formats:
        p = out_dir / f"{stem}.svg"
        svg_plot(table, p)
        written["svg"] = p
    return written
