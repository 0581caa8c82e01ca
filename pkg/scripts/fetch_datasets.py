#!/usr/bin/env python3
"""Fetch public Wi-Fi fingerprinting benchmark datasets and lay them out in
the canonical CSV format the evaluation suite expects:

    <data-dir>/<NAME>_train.csv
    <data-dir>/<NAME>_test.csv

Canonical files carry AP columns (AP001.. or WAP001..), then LONGITUDE,
LATITUDE, optional FLOOR / BUILDINGID / HEIGHT; the non-detected marker is
100.  UJIIndoorLoc downloads automatically; the remaining corpora are
published as separate rss/coordinate matrices on the usual open-data
archives and are converted with the `rsscrd` subcommand once downloaded.

Usage:
    python3 scripts/fetch_datasets.py uji1 --data-dir data
    python3 scripts/fetch_datasets.py list
    python3 scripts/fetch_datasets.py rsscrd --name LIB1 \
        --train-rss trn01rss.csv --train-crd trn01crd.csv \
        --test-rss tst01rss.csv --test-crd tst01crd.csv --data-dir data
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
import zipfile
from pathlib import Path

UJI_URL = "https://archive.ics.uci.edu/static/public/310/ujiindoorloc.zip"

# Corpora shipped as headerless rss/crd matrix pairs.  They are published
# under open licenses on Zenodo by the groups that collected them; search
# the archive for the name below, download the trn/tst rss+crd files, and
# run the `rsscrd` subcommand on them.
RSSCRD_SOURCES = {
    "LIB1": "UJI library dataset, year 1 (search: UJI library Wi-Fi fingerprint long-term)",
    "LIB2": "UJI library dataset, year 2 (same bundle as LIB1)",
    "MAN1": "Mannheim/hybrid indoor positioning traces (search: Mannheim WLAN fingerprint)",
    "MAN2": "Mannheim traces, second configuration (same bundle as MAN1)",
    "TUT1": "Tampere University multi-building set 1 (search: TUT Wi-Fi fingerprint dataset)",
    "TUT2": "Tampere University set 2",
    "TUT3": "Tampere University set 3 (crowdsourced)",
    "TUT4": "Tampere University set 4 (crowdsourced)",
    "TUT5": "Tampere University set 5",
    "TUT6": "Tampere University set 6",
    "TUT7": "Tampere University set 7",
    "UTS1": "UTS indoor localisation benchmark (search: UTSIndoorLoc)",
    "UJI2": "UJIIndoorLoc extended collection (Zenodo mirror of the UJI corpora)",
}


def fetch_uji1(data_dir: Path) -> None:
    import requests

    print(f"downloading {UJI_URL} ...")
    response = requests.get(UJI_URL, timeout=300)
    response.raise_for_status()
    archive = zipfile.ZipFile(io.BytesIO(response.content))
    mapping = {"trainingData.csv": "UJI1_train.csv", "validationData.csv": "UJI1_test.csv"}
    for member in archive.namelist():
        base = Path(member).name
        if base in mapping:
            target = data_dir / mapping.pop(base)
            target.write_bytes(archive.read(member))
            print(f"wrote {target}")
    if mapping:
        raise SystemExit(f"archive did not contain: {', '.join(mapping)}")


def convert_rsscrd(rss_path: Path, crd_path: Path, out_path: Path,
                   crd_cols: str, sentinel: str) -> None:
    """Merge a headerless RSS matrix and its coordinate matrix into one
    canonical CSV.  crd_cols names the coordinate columns in file order,
    e.g. "x,y,z,floor,building" or "x,y,floor"."""
    roles = [c.strip() for c in crd_cols.split(",")]
    canonical = {"x": "LONGITUDE", "y": "LATITUDE", "z": "HEIGHT",
                 "floor": "FLOOR", "building": "BUILDINGID", "-": None}
    for role in roles:
        if role not in canonical:
            raise SystemExit(f"unknown coordinate role {role!r}")
    with open(rss_path, newline="") as handle:
        rss_rows = [row for row in csv.reader(handle) if row]
    with open(crd_path, newline="") as handle:
        crd_rows = [row for row in csv.reader(handle) if row]
    if len(rss_rows) != len(crd_rows):
        raise SystemExit(
            f"{rss_path} has {len(rss_rows)} rows but {crd_path} has {len(crd_rows)}"
        )
    n_aps = len(rss_rows[0])
    header = [f"AP{j + 1:03d}" for j in range(n_aps)]
    header += [canonical[r] for r in roles if canonical[r]]
    with open(out_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for rss_row, crd_row in zip(rss_rows, crd_rows):
            if len(rss_row) != n_aps:
                raise SystemExit(f"{rss_path}: ragged row with {len(rss_row)} fields")
            # rewrite the source's non-detected marker to the canonical 100
            cells = ["100" if cell.strip() == sentinel else cell for cell in rss_row]
            cells += [c for c, r in zip(crd_row, roles) if canonical[r]]
            writer.writerow(cells)
    print(f"wrote {out_path} ({len(rss_rows)} rows, {n_aps} APs)")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_list = sub.add_parser("list", help="show every dataset and how to obtain it")

    p_uji = sub.add_parser("uji1", help="download UJIIndoorLoc from the UCI archive")
    p_uji.add_argument("--data-dir", default="data")

    p_conv = sub.add_parser("rsscrd", help="convert downloaded rss/crd matrix pairs")
    p_conv.add_argument("--name", required=True, help="dataset name, e.g. LIB1")
    p_conv.add_argument("--train-rss", required=True)
    p_conv.add_argument("--train-crd", required=True)
    p_conv.add_argument("--test-rss", required=True)
    p_conv.add_argument("--test-crd", required=True)
    p_conv.add_argument("--crd-cols", default="x,y,z,floor,building",
                        help="roles of the coordinate columns in file order; "
                             "use '-' to skip a column (default x,y,z,floor,building)")
    p_conv.add_argument("--sentinel", default="100",
                        help="non-detected marker used in the source files; "
                             "rewritten to the canonical 100")
    p_conv.add_argument("--data-dir", default="data")

    args = parser.parse_args()
    if args.command == "list":
        print("UJI1: automatic, run `fetch_datasets.py uji1`")
        for name, hint in RSSCRD_SOURCES.items():
            print(f"{name}: manual download, then `fetch_datasets.py rsscrd --name {name} ...`")
            print(f"      {hint}")
        return 0

    data_dir = Path(args.data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    if args.command == "uji1":
        fetch_uji1(data_dir)
    elif args.command == "rsscrd":
        convert_rsscrd(Path(args.train_rss), Path(args.train_crd),
                       data_dir / f"{args.name}_train.csv", args.crd_cols, args.sentinel)
        convert_rsscrd(Path(args.test_rss), Path(args.test_crd),
                       data_dir / f"{args.name}_test.csv", args.crd_cols, args.sentinel)
    return 0


if __name__ == "__main__":
    sys.exit(main())
