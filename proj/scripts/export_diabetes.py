#!/usr/bin/env python3
"""Export scikit-learn's bundled diabetes regression dataset to data/diabetes.csv.

The file ships with scikit-learn, so this works offline. Columns: the ten
baseline features plus the disease-progression target.
"""
import csv
import pathlib

from sklearn.datasets import load_diabetes


def main() -> None:
    ds = load_diabetes()
    out = pathlib.Path(__file__).resolve().parent.parent / "data" / "diabetes.csv"
    out.parent.mkdir(exist_ok=True)
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(ds.feature_names) + ["target"])
        for row, target in zip(ds.data, ds.target):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(target))])
    print(f"wrote {out} ({ds.data.shape[0]} rows, {ds.data.shape[1]} features)")


if __name__ == "__main__":
    main()
