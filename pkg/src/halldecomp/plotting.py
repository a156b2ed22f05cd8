"""Backtrack plots for benchmark rows."""

from __future__ import annotations

import re
from collections import defaultdict
from pathlib import Path
from typing import Dict, Iterable, List

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .bench import BenchRow  # noqa: E402


def _family(name: str):
    m = re.match(r"^(.*?)-?(\d+)$", name)
    if m:
        return m.group(1) or name, int(m.group(2))
    return name, 0


def _method_key(label: str):
    if label == "BI":
        return (0, 0)
    if label == "HI":
        return (2, 0)
    return (1, int(label.split("_")[1]))


def plot_backtracks(rows: Iterable[BenchRow], csv_path) -> List[Path]:
    """One PNG per instance family, written next to ``csv_path``.

    Timed-out cells are drawn hollow at the backtrack count they reached.
    """
    csv_path = Path(csv_path)
    fams: Dict[str, List[BenchRow]] = defaultdict(list)
    for r in rows:
        fams[_family(r.instance)[0]].append(r)
    out = []
    for fam, frows in sorted(fams.items()):
        fig, ax = plt.subplots(figsize=(6, 4))
        by_method: Dict[str, List[BenchRow]] = defaultdict(list)
        for r in frows:
            by_method[r.method].append(r)
        for method in sorted(by_method, key=_method_key):
            pts = sorted(by_method[method], key=lambda r: _family(r.instance)[1])
            xs = [_family(r.instance)[1] for r in pts]
            ys = [r.backtracks for r in pts]
            line = ax.plot(xs, ys, marker="o", label=method)[0]
            to = [(x, y) for x, y, r in zip(xs, ys, pts) if r.verdict == "TIMEOUT"]
            if to:
                ax.scatter(*zip(*to), s=80, facecolors="none", edgecolors=line.get_color())
        ax.set_yscale("symlog", linthresh=1)
        ax.set_xlabel(f"{fam} size")
        ax.set_ylabel("backtracks")
        ax.set_title(f"{fam}: backtracks per method")
        ax.legend(fontsize="small", ncol=2)
        fig.tight_layout()
        path = csv_path.with_name(f"{csv_path.stem}-{fam}.png")
        fig.savefig(path, dpi=100)
        plt.close(fig)
        out.append(path)
    return out
