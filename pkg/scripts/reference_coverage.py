"""Compare a ``coverage.csv`` against the reference coverage and IQR values.

Usage::

    python3 scripts/reference_coverage.py results/exp1/coverage.csv --experiment exp1

Exits 0 when every coverage entry is within ``--coverage-tol`` and every IQR
within ``--iqr-tol`` of the reference, 1 otherwise.
"""

from __future__ import annotations

import argparse
import csv
import sys

LEVELS = (0.99, 0.95, 0.90, 0.85, 0.80, 0.75)

# n -> (coverage per level, iqr per level)
REFERENCE = {
    "exp1": {
        100: ((0.993, 0.968, 0.929, 0.893, 0.854, 0.809), (0.023, 0.061, 0.103, 0.145, 0.176, 0.204)),
        300: ((0.988, 0.952, 0.906, 0.851, 0.805, 0.762), (0.026, 0.085, 0.143, 0.184, 0.199, 0.216)),
        500: ((0.993, 0.955, 0.909, 0.865, 0.812, 0.771), (0.022, 0.072, 0.099, 0.108, 0.123, 0.126)),
        1000: ((0.990, 0.956, 0.908, 0.859, 0.817, 0.767), (0.014, 0.049, 0.066, 0.067, 0.091, 0.104)),
        2000: ((0.992, 0.952, 0.898, 0.847, 0.793, 0.747), (0.009, 0.030, 0.058, 0.064, 0.067, 0.065)),
        3000: ((0.992, 0.959, 0.908, 0.849, 0.802, 0.750), (0.005, 0.024, 0.036, 0.054, 0.046, 0.063)),
    },
    "exp2": {
        100: ((0.997, 0.979, 0.954, 0.927, 0.895, 0.870), (0.009, 0.044, 0.070, 0.085, 0.094, 0.099)),
        300: ((0.993, 0.964, 0.935, 0.903, 0.868, 0.836), (0.008, 0.047, 0.077, 0.108, 0.144, 0.176)),
        500: ((0.996, 0.972, 0.944, 0.917, 0.874, 0.832), (0.014, 0.053, 0.099, 0.139, 0.166, 0.194)),
        1000: ((0.990, 0.957, 0.920, 0.882, 0.841, 0.796), (0.011, 0.050, 0.098, 0.131, 0.171, 0.188)),
        2000: ((0.991, 0.951, 0.904, 0.850, 0.803, 0.755), (0.019, 0.048, 0.088, 0.113, 0.124, 0.146)),
        3000: ((0.994, 0.958, 0.913, 0.863, 0.813, 0.771), (0.007, 0.033, 0.054, 0.069, 0.079, 0.092)),
    },
}


def reference(experiment: str, n: int, level: float) -> tuple[float, float]:
    cov, iqr = REFERENCE[experiment][n]
    k = min(range(len(LEVELS)), key=lambda i: abs(LEVELS[i] - level))
    return cov[k], iqr[k]


def compare(path: str, experiment: str, coverage_tol: float = 0.02, iqr_tol: float = 0.03):
    """Rows of ``(n, level, coverage, ref, iqr, ref_iqr, ok)``."""
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            n, level = int(rec["n"]), float(rec["level"])
            cov, iqr = float(rec["coverage"]), float(rec["iqr"])
            ref_cov, ref_iqr = reference(experiment, n, level)
            ok = abs(cov - ref_cov) <= coverage_tol and abs(iqr - ref_iqr) <= iqr_tol
            rows.append((n, level, cov, ref_cov, iqr, ref_iqr, ok))
    return rows


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("coverage_csv")
    parser.add_argument("--experiment", choices=sorted(REFERENCE), default="exp1")
    parser.add_argument("--coverage-tol", type=float, default=0.02)
    parser.add_argument("--iqr-tol", type=float, default=0.03)
    args = parser.parse_args(argv)
    rows = compare(args.coverage_csv, args.experiment, args.coverage_tol, args.iqr_tol)
    print(f"{'n':>5} {'level':>5} {'coverage':>8} {'ref':>6} {'iqr':>6} {'ref':>6}")
    for n, level, cov, ref_cov, iqr, ref_iqr, ok in rows:
        print(f"{n:>5} {level:>5.2f} {cov:>8.3f} {ref_cov:>6.3f} {iqr:>6.3f} {ref_iqr:>6.3f} {'' if ok else 'OUT'}")
    bad = sum(not r[-1] for r in rows)
    print(f"{len(rows) - bad}/{len(rows)} entries within tolerance")
    return 0 if rows and not bad else 1


if __name__ == "__main__":
    sys.exit(main())
