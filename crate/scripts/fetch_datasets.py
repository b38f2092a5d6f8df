#!/usr/bin/env python3
"""Fetch the benchmark datasets and write them as plain CSV under data/uci/.

Seven of the eleven datasets are taken from the `common_datasets` wheel on
PyPI, which redistributes the UCI/KEEL files inside the package. The other
four are not redistributed there; download them from the UCI repository by
hand into data/raw/ (file names below) and re-run this script to convert them.

Usage:
    python3 scripts/fetch_datasets.py [--wheel path/to/common_datasets.whl]
"""

import argparse
import csv
import glob
import os
import subprocess
import sys
import tempfile
import zipfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
OUT = os.path.join(ROOT, "data", "uci")
RAW = os.path.join(ROOT, "data", "raw")

WHEEL_PIN = "common_datasets==0.3.10"
PREFIX = "common_datasets/data/classification/"

KEEL_FILES = {
    "segmentation": "segment/segment.dat",
    "pima": "pima/pima.dat",
    "page-blocks": "page-blocks/page-blocks.dat",
    "movement_libras": "movement_libras/movement_libras.dat",
    "mammographic": "mammographic/mammographic.dat",
    "ionosphere": "ionosphere/ionosphere.dat",
}

GLASS_COLUMNS = ["Id", "RI", "Na", "Mg", "Al", "Si", "K", "Ca", "Ba", "Fe", "Type"]

MANUAL = {
    "seeds": ("seeds_dataset.txt",
              "https://archive.ics.uci.edu/ml/machine-learning-databases/00236/seeds_dataset.txt"),
    "parkinsons": ("parkinsons.data",
                   "https://archive.ics.uci.edu/ml/machine-learning-databases/parkinsons/parkinsons.data"),
    "knowledge": ("knowledge.csv",
                  "https://archive.ics.uci.edu/dataset/257/user+knowledge+modeling "
                  "(export the 'Training_Data' and 'Test_Data' sheets, concatenated, as CSV)"),
    "cnae9": ("CNAE-9.data",
              "https://archive.ics.uci.edu/ml/machine-learning-databases/00233/CNAE-9.data"),
}


def write_csv(name, header, rows):
    os.makedirs(OUT, exist_ok=True)
    path = os.path.join(OUT, name + ".csv")
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        if header:
            w.writerow(header)
        w.writerows(rows)
    print(f"wrote {os.path.relpath(path, ROOT)} ({len(rows)} rows)")


def parse_keel(text):
    header, rows, in_data = [], [], False
    for line in text.splitlines():
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        low = s.lower()
        if low.startswith("@attribute"):
            # "@attribute name type [range]" or "@attribute name{a,b}"
            body = s[len("@attribute"):].strip()
            name = body.replace("{", " ").replace("[", " ").split()[0]
            header.append(name)
        elif low.startswith("@data"):
            in_data = True
        elif s.startswith("@"):
            continue
        elif in_data:
            rows.append([c.strip() for c in s.split(",")])
    return header, rows


def fetch_wheel(explicit):
    if explicit:
        return explicit
    tmp = tempfile.mkdtemp(prefix="common_datasets_")
    subprocess.check_call([sys.executable, "-m", "pip", "download", "--no-deps",
                           "-q", "-d", tmp, WHEEL_PIN])
    return glob.glob(os.path.join(tmp, "*.whl"))[0]


def convert_bundled(wheel):
    z = zipfile.ZipFile(wheel)
    for name, member in KEEL_FILES.items():
        header, rows = parse_keel(z.read(PREFIX + member).decode("utf-8"))
        write_csv(name, header, rows)
    text = z.read(PREFIX + "glass/glass.data.txt").decode("utf-8")
    rows = [[c.strip() for c in l.split(",")] for l in text.splitlines() if l.strip()]
    write_csv("glass", GLASS_COLUMNS, rows)


def convert_manual():
    missing = []
    for name, (fname, url) in MANUAL.items():
        src = os.path.join(RAW, fname)
        if not os.path.exists(src):
            missing.append((name, fname, url))
            continue
        with open(src, newline="") as f:
            text = f.read()
        if name == "seeds":
            rows = [l.split() for l in text.splitlines() if l.strip()]
            write_csv(name, None, rows)
        else:
            rows = list(csv.reader(text.splitlines()))
            write_csv(name, None, [r for r in rows if r])
    for name, fname, url in missing:
        print(f"missing {name}: download {url} to data/raw/{fname} and re-run")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--wheel", help="local common_datasets wheel (skips pip download)")
    args = ap.parse_args()
    convert_bundled(fetch_wheel(args.wheel))
    convert_manual()


if __name__ == "__main__":
    main()
