"""
Evaluation report: per-cell tallies, trial-weighted aggregates and the CSV,
JSON and terminal-table renderings.
"""

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Optional, Sequence

from rich.table import Table

from src.storage import BaseStorage, LocalStorage

Z_95 = 1.96

CSV_FIELDS = (
    "scene",
    "category_set",
    "baseline",
    "trials",
    "successes",
    "pushed",
    "errors",
    "aborted",
    "success_rate",
    "pregrasp_rate",
    "half_width",
)


def half_width(rate: float, trials: int) -> float:
    """95 % normal-approximation confidence half-width."""
    if trials <= 0:
        return 0.0
    return Z_95 * math.sqrt(rate * (1.0 - rate) / trials)


@dataclass
class EvalCell:
    """Tallies of one (scene, category set, baseline) triple."""

    scene: str
    category_set: str
    baseline: str
    trials: int = 0
    successes: int = 0
    pushed: int = 0
    errors: int = 0
    aborted: int = 0

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials if self.trials else 0.0

    @property
    def pregrasp_rate(self) -> float:
        return self.pushed / self.trials if self.trials else 0.0

    @property
    def half_width(self) -> float:
        return half_width(self.success_rate, self.trials)

    def row(self) -> dict[str, Any]:
        return {
            **asdict(self),
            "success_rate": self.success_rate,
            "pregrasp_rate": self.pregrasp_rate,
            "half_width": self.half_width,
        }


@dataclass
class EvalReport:
    cells: list[EvalCell] = field(default_factory=list)
    metadata: dict[str, Any] = field(default_factory=dict)

    def cell(self, scene: str, category_set: str, baseline: str) -> EvalCell:
        for c in self.cells:
            if (c.scene, c.category_set, c.baseline) == (scene, category_set, baseline):
                return c
        raise KeyError((scene, category_set, baseline))

    @property
    def baselines(self) -> list[str]:
        return list(dict.fromkeys(c.baseline for c in self.cells))

    def aggregate(self, baseline: str, category_sets: Optional[str | Sequence[str]] = None) -> EvalCell:
        """Trial-weighted totals of a baseline over all scenes (and sets, unless some are named)."""
        if isinstance(category_sets, str):
            category_sets = (category_sets,)
        label = "all" if category_sets is None else "+".join(category_sets)
        total = EvalCell(scene="all", category_set=label, baseline=baseline)
        for c in self.cells:
            if c.baseline != baseline or (category_sets is not None and c.category_set not in category_sets):
                continue
            total.trials += c.trials
            total.successes += c.successes
            total.pushed += c.pushed
            total.errors += c.errors
            total.aborted += c.aborted
        return total

    def improvement(self, baseline: str, reference: str = "no_pregrasp") -> Optional[float]:
        """Percentage-point success-rate gain over the reference, None if it was not run."""
        if reference not in self.baselines:
            return None
        return 100.0 * (self.aggregate(baseline).success_rate - self.aggregate(reference).success_rate)


def report_to_json(report: EvalReport) -> dict[str, Any]:
    return {
        **report.metadata,
        "cells": [c.row() for c in report.cells],
        "aggregates": {
            b: {**report.aggregate(b).row(), "improvement_pp": report.improvement(b)} for b in report.baselines
        },
    }


def report_to_csv(report: EvalReport) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for c in report.cells:
        writer.writerow(c.row())
    return buffer.getvalue()


def report_table(report: EvalReport, title: str = "Grasp success rate (%)") -> Table:
    """Rows are baselines, columns are scene / category-set pairs, plus the average."""
    pairs = list(dict.fromkeys((c.scene, c.category_set) for c in report.cells))
    table = Table(title=title)
    table.add_column("Baseline", style="bold")
    for scene, category_set in pairs:
        table.add_column(f"{scene}\n{category_set}", justify="right")
    table.add_column("Avg", justify="right", style="cyan")
    for baseline in report.baselines:
        cells = [report.cell(s, cs, baseline) for s, cs in pairs]
        values = [f"{100 * c.success_rate:.1f} ±{100 * c.half_width:.1f}" for c in cells]
        table.add_row(baseline, *values, f"{100 * report.aggregate(baseline).success_rate:.1f}")
    return table


def save_report(report: EvalReport, output_dir: str, name: str = "eval", storage: Optional[BaseStorage] = None) -> dict[str, str]:
    """Write <name>.csv and <name>.json; returns both paths."""
    storage = storage or LocalStorage()
    workspace = storage.create_workspace(output_dir)
    return {
        "csv": storage.save_text(workspace, f"{name}.csv", report_to_csv(report)),
        "json": storage.save_text(workspace, f"{name}.json", json.dumps(report_to_json(report), indent=2)),
    }


@dataclass
class SweepRow:
    """One threshold of the compatibility sweep, split by object set."""

    theta_g: float
    graspable: EvalCell
    ungraspable: EvalCell


def sweep_to_json(rows: list[SweepRow]) -> list[dict[str, Any]]:
    return [
        {"theta_g": r.theta_g, "graspable": r.graspable.row(), "ungraspable": r.ungraspable.row()} for r in rows
    ]


def sweep_table(rows: list[SweepRow]) -> Table:
    table = Table(title="Compatibility: pre-grasping rate / success rate (%)")
    table.add_column("theta_g", justify="right", style="bold")
    for label in ("graspable", "ungraspable"):
        table.add_column(f"{label}\npre-grasp", justify="right")
        table.add_column(f"{label}\nsuccess", justify="right")
    for r in rows:
        table.add_row(
            f"{r.theta_g:.2f}",
            f"{100 * r.graspable.pregrasp_rate:.1f}",
            f"{100 * r.graspable.success_rate:.1f}",
            f"{100 * r.ungraspable.pregrasp_rate:.1f}",
            f"{100 * r.ungraspable.success_rate:.1f}",
        )
    return table


def save_sweep(rows: list[SweepRow], output_dir: str, storage: Optional[BaseStorage] = None) -> str:
    storage = storage or LocalStorage()
    workspace = storage.create_workspace(output_dir)
    return storage.save_text(workspace, "compatibility.json", json.dumps(sweep_to_json(rows), indent=2))
