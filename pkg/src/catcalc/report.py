"""Check reports: a flat list of named slack-vs-tolerance checks, emitted as
JSON with a CSV mirror and, when an output directory is given, a rendered
slack chart.  Identical inputs produce byte-identical JSON and CSV."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path


@dataclass(frozen=True)
class Check:
    name: str
    slack: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.slack <= self.tol

    def to_json(self) -> dict:
        return {"name": self.name, "slack": self.slack, "tol": self.tol, "pass": self.passed}


@dataclass
class Report:
    suite: str
    checks: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add(self, name: str, slack: float, tol: float) -> Check:
        check = Check(name, float(slack), float(tol))
        self.checks.append(check)
        return check

    def extend(self, other: "Report"):
        self.checks.extend(other.checks)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> dict:
        return {
            "suite": self.suite,
            "checks": [c.to_json() for c in self.checks],
            "pass": self.passed,
            **({"meta": self.meta} if self.meta else {}),
        }

    def json_text(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    def csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["name", "slack", "tol", "pass"])
        for c in self.checks:
            writer.writerow([c.name, repr(c.slack), repr(c.tol), c.passed])
        return buf.getvalue()

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{self.suite}.json").write_text(self.json_text())
        (out / f"{self.suite}.csv").write_text(self.csv_text())
        if self.checks:
            _render_chart(self, out / f"{self.suite}.png")
        return out


def _render_chart(report: Report, path: Path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    names = [c.name for c in report.checks]
    slacks = [max(abs(c.slack), 1e-18) for c in report.checks]
    tols = [max(c.tol, 1e-18) for c in report.checks]
    colors = ["tab:green" if c.passed else "tab:red" for c in report.checks]
    fig, ax = plt.subplots(figsize=(max(6.0, 0.6 * len(names)), 4.0))
    pos = range(len(names))
    ax.bar(pos, slacks, color=colors, label="slack")
    ax.plot(pos, tols, "k_", markersize=18, label="tolerance")
    ax.set_yscale("log")
    ax.set_xticks(list(pos))
    ax.set_xticklabels(names, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("slack (log scale)")
    ax.set_title(report.suite)
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": "catcalc"})
    plt.close(fig)
