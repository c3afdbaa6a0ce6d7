"""Single runs and protocol comparisons over seed sweeps."""

from __future__ import annotations

import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

from .config import ScenarioConfig
from .metrics import CSV_HEADER, RunReport
from .network import Network


class ConfigMismatch(ValueError):
    def __init__(self, fields: list[str]):
        self.fields = fields
        super().__init__("configs differ in non-protocol fields: " + ", ".join(fields))


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def run_scenario(cfg: ScenarioConfig, out=None, trace=None) -> tuple[RunReport, Optional[Path]]:
    """Run one simulation; optionally write its CSV and stream its trace."""
    if trace is not None:
        trace = Path(trace)
        trace.parent.mkdir(parents=True, exist_ok=True)
        with open(trace, "w", encoding="utf-8", newline="\n") as fh:
            report = Network(cfg, fh).run()
    else:
        report = Network(cfg).run()
    path = None
    if out is not None:
        path = Path(out)
        _atomic_write(path, report.csv_text())
    return report, path


def check_comparable(configs: Sequence[ScenarioConfig]) -> None:
    """Every config must equal the first in all fields but ``protocol``."""
    if not configs:
        raise ValueError("no configs to compare")
    ref = configs[0].flat()
    bad: set[str] = set()
    for cfg in configs[1:]:
        for k, v in cfg.flat().items():
            if k != "protocol" and ref[k] != v:
                bad.add(k)
    if bad:
        raise ConfigMismatch(sorted(bad))


# metric name -> (row attribute or "lifetime", True if larger is better)
METRICS = {
    "mean_delay_s": ("mean_delay", False),
    "throughput_bps": ("throughput", True),
    "delivery_ratio": ("delivery_ratio", True),
    "blockage_prob": ("blockage_probability", False),
    "ctrl_overhead_per_node": ("control_overhead_per_node", False),
    "lifetime_s": ("lifetime", True),
}


def metric_value(report: RunReport, metric: str, period: Optional[int] = None) -> float:
    attr, higher = METRICS[metric]
    if attr == "lifetime":
        # no death within the run: censored, later than any observed death
        return math.inf if report.lifetime is None else report.lifetime
    row = report.summary if period is None else report.period(period)
    v = getattr(row, attr)
    if v is None:
        return -math.inf if higher else math.inf
    return v


@dataclass
class ComparisonReport:
    labels: list[str]
    seeds: list[int]
    runs: dict[tuple[str, int], RunReport]
    period: Optional[int] = None

    def report(self, label: str, seed: int) -> RunReport:
        return self.runs[(label, seed)]

    def winner(self, metric: str, seed: int) -> Optional[str]:
        """The unique best label for ``metric`` on ``seed``; None on a tie."""
        _, higher = METRICS[metric]
        vals = {lab: metric_value(self.runs[(lab, seed)], metric, self.period) for lab in self.labels}
        best = max(vals.values()) if higher else min(vals.values())
        top = [lab for lab, v in vals.items() if v == best]
        return top[0] if len(top) == 1 else None

    def wins(self) -> dict[str, dict[str, int]]:
        out = {m: {lab: 0 for lab in self.labels} for m in METRICS}
        for m in METRICS:
            for seed in self.seeds:
                w = self.winner(m, seed)
                if w is not None:
                    out[m][w] += 1
        return out

    def count(self, predicate) -> int:
        """Number of seeds for which ``predicate({label: report})`` holds."""
        return sum(bool(predicate({lab: self.runs[(lab, s)] for lab in self.labels}))
                   for s in self.seeds)

    def merged_csv_text(self) -> str:
        lines = [CSV_HEADER]
        for lab in self.labels:
            for seed in self.seeds:
                lines.extend(self.runs[(lab, seed)].csv_lines(header=False))
        return "".join(line + "\n" for line in lines)

    def summary_csv_text(self) -> str:
        period = "all" if self.period is None else str(self.period)
        lines = ["metric,period,protocol,wins,seeds"]
        for m, per in self.wins().items():
            for lab, n in per.items():
                lines.append(f"{m},{'all' if m == 'lifetime_s' else period},{lab},{n},{len(self.seeds)}")
        return "".join(line + "\n" for line in lines)

    def lifetimes_csv_text(self) -> str:
        lines = ["protocol,seed,lifetime_s"]
        for lab in self.labels:
            for seed in self.seeds:
                life = self.runs[(lab, seed)].lifetime
                lines.append(f"{lab},{seed},{'' if life is None else repr(float(life))}")
        return "".join(line + "\n" for line in lines)

    def write(self, out_dir) -> list[Path]:
        out_dir = Path(out_dir)
        files = {"runs.csv": self.merged_csv_text(), "summary.csv": self.summary_csv_text(),
                 "lifetimes.csv": self.lifetimes_csv_text()}
        paths = []
        for name, text in files.items():
            _atomic_write(out_dir / name, text)
            paths.append(out_dir / name)
        return paths


def _labels(configs: Sequence[ScenarioConfig]) -> list[str]:
    seen: dict[str, int] = {}
    out = []
    for cfg in configs:
        k = seen.get(cfg.protocol, 0) + 1
        seen[cfg.protocol] = k
        out.append(cfg.protocol if k == 1 else f"{cfg.protocol}#{k}")
    return out


def _run_one(cfg: ScenarioConfig) -> RunReport:
    return Network(cfg).run()


def compare(configs: Sequence[ScenarioConfig], seeds: Sequence[int], period: Optional[int] = None,
            jobs: int = 1) -> ComparisonReport:
    """Run every config on every seed; configs may differ only in protocol."""
    check_comparable(configs)
    labels = _labels(configs)
    seeds = list(seeds)
    tasks = [(lab, seed, replace(cfg, seed=seed)) for lab, cfg in zip(labels, configs) for seed in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_run_one, [t[2] for t in tasks]))
    else:
        reports = [_run_one(t[2]) for t in tasks]
    runs = {(lab, seed): rep for (lab, seed, _), rep in zip(tasks, reports)}
    return ComparisonReport(labels, seeds, runs, period)


def protocol_configs(base: ScenarioConfig, protocols: Sequence[str]) -> list[ScenarioConfig]:
    return [replace(base, protocol=p) for p in protocols]
