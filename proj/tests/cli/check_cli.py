#!/usr/bin/env python3
"""Black-box checks of the dkb command line tool.

  check_cli.py schemas     --cli BIN --schemas DIR --work DIR
  check_cli.py determinism --cli BIN --work DIR
  check_cli.py exit-codes  --cli BIN --work DIR
"""

import argparse
import filecmp
import json
import shutil
import subprocess
import sys
from pathlib import Path

# Small but complete runs of every command: (name, argv, {output file: schema}).
RUNS = [
    ("hopf_json", ["hopf-curves", "--format", "json", "--n", "80"], {"hopf_curves.json": "hopf_curves"}),
    ("hopf_csv", ["hopf-curves", "--n", "80"], {}),
    ("branch_k", ["branch", "--tau", "1", "--sweep", "k"], {"branch.json": "branch"}),
    ("branch_tau", ["branch", "--k", "1", "--sweep", "tau", "--range", "0.05:3", "--branches", "plus:0,minus:0"],
     {"branch.json": "branch"}),
    ("reduced", ["simulate", "reduced", "--k", "2.5", "--r0", "0.9", "--t-end", "150", "--window", "50"],
     {"summary.json": "summary_reduced"}),
    ("network", ["simulate", "network", "--N", "60", "--k", "2.5", "--span", "3.14159", "--t-end", "60",
                 "--window", "20", "--snapshot-every", "10"], {"summary.json": "summary_network"}),
    ("hr", ["simulate", "hr", "--N", "30", "--span", "1:1.2", "--seed", "2", "--t-end", "80"],
     {"summary.json": "summary_hr"}),
    ("sweep", ["simulate", "sweep", "--sweep", "k", "--range", "2:3", "--steps", "4", "--transient", "60",
               "--window", "20"], {"summary.json": "summary_sweep"}),
    ("double_hopf", ["double-hopf"], {"double_hopf.json": "double_hopf"}),
    ("double_hopf_none", ["double-hopf", "--pair", "plus:0,plus:1"], {"double_hopf.json": "double_hopf"}),
]


def run(cli, argv, out):
    cmd = [cli, *argv, "--out", str(out)]
    return subprocess.run(cmd, capture_output=True, text=True, timeout=600)


def fresh(path):
    shutil.rmtree(path, ignore_errors=True)
    return path


def check_schemas(args):
    import jsonschema

    schemas = {p.name.removesuffix(".schema.json"): json.loads(p.read_text())
               for p in Path(args.schemas).glob("*.schema.json")}
    failures = []
    for name, argv, files in RUNS:
        out = fresh(Path(args.work) / "schemas" / name)
        res = run(args.cli, argv, out)
        if res.returncode != 0:
            failures.append(f"{name}: exit {res.returncode}: {res.stderr.strip()}")
            continue
        manifests = list(out.glob("*_manifest.json"))
        if len(manifests) != 1:
            failures.append(f"{name}: expected one manifest, found {len(manifests)}")
        checks = {**files, **{m.name: "manifest" for m in manifests}}
        for fname, schema in checks.items():
            try:
                doc = json.loads((out / fname).read_text())
                jsonschema.validate(doc, schemas[schema])
            except (OSError, ValueError, jsonschema.ValidationError) as e:
                failures.append(f"{name}/{fname}: {str(e).splitlines()[0]}")
        for m in manifests:
            listed = set(json.loads(m.read_text())["outputs"])
            present = {p.name for p in out.iterdir()} - {m.name}
            if listed != present:
                failures.append(f"{name}: manifest outputs {sorted(listed)} != files {sorted(present)}")
    return failures


def check_determinism(args):
    failures = []
    for name, argv, _ in RUNS:
        a = fresh(Path(args.work) / "det" / (name + "_a"))
        b = fresh(Path(args.work) / "det" / (name + "_b"))
        ra = run(args.cli, argv + ["--jobs", "1"], a)
        rb = run(args.cli, argv + ["--jobs", "2"], b)
        if ra.returncode or rb.returncode:
            failures.append(f"{name}: exit {ra.returncode}/{rb.returncode}")
            continue
        if ra.stdout != rb.stdout:
            failures.append(f"{name}: stdout differs")
        names = sorted(p.name for p in a.iterdir() if "manifest" not in p.name)
        if names != sorted(p.name for p in b.iterdir() if "manifest" not in p.name):
            failures.append(f"{name}: file sets differ")
            continue
        _, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
        if mismatch or errors:
            failures.append(f"{name}: differing files {mismatch + errors}")
    return failures


def check_exit_codes(args):
    work = Path(args.work) / "exit"
    cases = [
        ("empty range", ["branch", "--tau", "1", "--sweep", "k", "--range", "2:2"], 2),
        ("reversed range", ["simulate", "sweep", "--range", "3:2"], 2),
        ("unknown flag", ["hopf-curves", "--no-such-flag"], 2),
        ("missing subcommand", ["simulate"], 2),
        ("sweep without fixed value", ["branch", "--sweep", "tau"], 2),
        ("span too wide", ["simulate", "network", "--N", "10", "--span", "7", "--t-end", "10", "--window", "5"], 2),
        ("no double-Hopf point", ["double-hopf", "--pair", "plus:0,plus:1"], 0),
        ("incoherent run", ["simulate", "reduced", "--k", "0.5", "--tau", "1", "--t-end", "150", "--window", "50"], 0),
    ]
    failures = []
    for i, (what, argv, want) in enumerate(cases):
        res = run(args.cli, argv, fresh(work / str(i)))
        if res.returncode != want:
            failures.append(f"{what}: exit {res.returncode}, expected {want} ({res.stderr.strip()[:120]})")
    res = run(args.cli, ["simulate", "reduced", "--k", "0.5", "--tau", "1", "--t-end", "150", "--window", "50"],
              fresh(work / "stdout"))
    if res.stdout.strip() != "incoherent":
        failures.append(f"reduced below threshold printed {res.stdout.strip()!r}")
    nf = json.loads((work / str(6) / "double_hopf.json").read_text())
    if nf.get("found") is not False:
        failures.append("non-intersecting pair did not report found: false")
    return failures


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("mode", choices=["schemas", "determinism", "exit-codes"])
    ap.add_argument("--cli", required=True)
    ap.add_argument("--schemas")
    ap.add_argument("--work", required=True)
    args = ap.parse_args()
    check = {"schemas": check_schemas, "determinism": check_determinism, "exit-codes": check_exit_codes}[args.mode]
    failures = check(args)
    for f in failures:
        print("FAIL", f)
    print(f"{args.mode}: {'ok' if not failures else f'{len(failures)} failure(s)'}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
