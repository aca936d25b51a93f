"""Run the four demo pipelines on the shipped sample data.

Each job writes its JSON results, an SVG chart and a run report to
out/demo/<job>/. KMeans defaults to k=3 so the scatter stays readable.
"""

import os
import sys
from pathlib import Path

from datar.cli import main as datar

ROOT = Path(__file__).resolve().parents[1]

DEMOS = [
    ("wordcount", "configs/reference.conf", []),
    ("sort", "configs/sort.conf", []),
    ("kmeans", "configs/kmeans.conf", ["--k", "3"]),
    ("pagerank", "configs/pagerank.conf", []),
]


def main():
    os.chdir(ROOT)  # configs name their inputs relative to the repo root
    status = 0
    for job, config, extra in DEMOS:
        print(f"== {job} ==")
        status |= datar(["run", job, "--config", config, "--out", f"out/demo/{job}", *extra])
        print()
    return status


if __name__ == "__main__":
    sys.exit(main())
