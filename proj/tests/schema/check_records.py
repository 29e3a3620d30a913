#!/usr/bin/env python3
"""Validates every record the muri binary writes against the JSON schema.

Runs the mini fixture through the full pipeline and the WikiHow adapter,
then checks release records, stage checkpoints, drop records and the
golden file.
"""
import argparse
import json
import pathlib
import shutil
import subprocess
import sys

import jsonschema


def run(cmd):
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        sys.exit(f"{' '.join(map(str, cmd))} exited {proc.returncode}\n{proc.stderr}")
    return proc.stdout


def records(path):
    with open(path, encoding="utf-8") as f:
        for no, line in enumerate(f, 1):
            if line.strip():
                yield no, json.loads(line)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--muri", required=True)
    ap.add_argument("--schema", required=True)
    ap.add_argument("--fixtures", required=True, type=pathlib.Path)
    ap.add_argument("--golden", required=True, type=pathlib.Path)
    ap.add_argument("--work", required=True, type=pathlib.Path)
    args = ap.parse_args()

    shutil.rmtree(args.work, ignore_errors=True)
    args.work.mkdir(parents=True)
    ckpt = args.work / "run"
    run([args.muri, "--checkpoint-dir", ckpt, "run", "--config", args.fixtures / "mini" / "config.json"])
    adapted = args.work / "wikihow.jsonl"
    run([args.muri, "adapt", "wikihow", args.fixtures / "wikihow_3.jsonl", "--out", adapted])

    # Stage checkpoints after ingest hold records; ingest holds raw documents.
    files = sorted((ckpt / "release").glob("*.jsonl"))
    for stage in ("muri", "filter", "adapt", "dedup"):
        files += [ckpt / f"{stage}.jsonl"] + sorted(ckpt.glob(f"{stage}.drops.jsonl"))
    files += [adapted, args.golden]

    with open(args.schema, encoding="utf-8") as f:
        validator = jsonschema.Draft202012Validator(json.load(f))
    checked = failures = 0
    for path in files:
        for no, rec in records(path):
            checked += 1
            for err in validator.iter_errors(rec):
                failures += 1
                print(f"{path}:{no}: {err.json_path}: {err.message}")
    print(f"{checked} records in {len(files)} files, {failures} schema violations")
    if checked == 0:
        sys.exit("no records checked")
    sys.exit(1 if failures else 0)


if __name__ == "__main__":
    main()
