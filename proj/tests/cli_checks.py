"""Checks on the riverweb command line: schema conformance, exit codes and
byte-identical reruns. Usage: cli_checks.py {schema|errors|determinism} CLI SCHEMA WORKDIR"""

import filecmp
import json
import shutil
import subprocess
import sys
from pathlib import Path

import jsonschema

# Small configurations, one per experiment. Tables use a short walk so the
# area-tail runs stay quick.
SMALL = {
    "survival": ["--n", "16", "--replicas", "1500"],
    "width-law": ["--n", "16", "--replicas", "2000"],
    "coupling": ["--n", "16", "--replicas", "2000"],
    "gen-count-tail": ["--n", "16", "--replicas", "2000", "--u", "0.8"],
    "hack": ["--n", "8", "--replicas", "3000", "--min-l", "4"],
    "dmax": ["--n", "8", "--replicas", "3000", "--min-l", "4"],
    "area-tail": ["--n", "16", "--replicas", "2000", "--table-m", "100", "--lambda", "2"],
    "dual-kernel": ["--replicas", "20000"],
    "invariants": ["--replicas", "200"],
    "xi-count": ["--n", "16", "--replicas", "500"],
}


def run(cli, args, cwd):
    return subprocess.run([cli, *args], cwd=cwd, capture_output=True, text=True)


def run_ok(cli, args, cwd):
    r = run(cli, args, cwd)
    if r.returncode != 0:
        raise SystemExit(f"riverweb {' '.join(args)} failed ({r.returncode}):\n{r.stderr}")
    return r


def check_schema(cli, schema, work):
    validator = jsonschema.Draft202012Validator(json.loads(Path(schema).read_text()))
    for exp, extra in SMALL.items():
        for fmt in ("csv", "json"):
            out = work / f"{exp}_{fmt}"
            run_ok(cli, [exp, "--seed", "3", "--format", fmt, "--out", str(out), "--table-dir", str(work / "tables"),
                         *extra], work)
            docs = [out / f"{exp}_summary.json"] if fmt == "csv" else [out / f"{exp}.json"]
            for d in docs:
                doc = json.loads(d.read_text())
                errors = sorted(validator.iter_errors(doc), key=str)
                if errors:
                    raise SystemExit(f"{d}: {errors[0].message}")
            if fmt == "json":
                # The JSON rows mirror the CSV rows.
                csv_lines = (work / f"{exp}_csv" / f"{exp}.csv").read_text().splitlines()
                doc = json.loads((out / f"{exp}.json").read_text())
                if exp != "area-tail":
                    assert csv_lines[0].split(",") == doc["columns"], exp
                    assert len(csv_lines) - 1 == len(doc["rows"]), exp
    inv = json.loads((work / "invariants_csv" / "invariants_summary.json").read_text())
    assert inv["violations"] == 0, inv
    print("schema: all documents valid")


def check_errors(cli, schema, work):
    cases = [
        (["survival", "--replicas", "0"], 2),
        (["survival", "--replicas", "999"], 2),
        (["survival", "--p", "1.5"], 2),
        (["survival", "--format", "xml"], 2),
        (["teleport"], 2),
        (["survival", "--bogus-flag", "3"], 2),
    ]
    for args, code in cases:
        r = run(cli, [*args, "--out", str(work / "err")], work)
        assert r.returncode == code, (args, r.returncode, r.stderr)
    cfg = work / "bad.json"
    cfg.write_text(json.dumps({"experiment": "survival", "replicas": 2000, "colour": "red"}))
    r = run(cli, ["--config", str(cfg), "--out", str(work / "err")], work)
    assert r.returncode == 2 and "colour" in r.stderr, r.stderr
    cfg.write_text("{not json")
    assert run(cli, ["--config", str(cfg)], work).returncode == 2
    cfg.write_text(json.dumps({"experiment": "survival", "n": "ten"}))
    assert run(cli, ["--config", str(cfg)], work).returncode == 2

    # A config file and the equivalent flags give the same files; flags override the file.
    cfg.write_text(json.dumps({"experiment": "survival", "p": 0.5, "n": 16, "replicas": 1200, "seed": 4,
                               "out": str(work / "from_file")}))
    run_ok(cli, ["--config", str(cfg)], work)
    run_ok(cli, ["survival", "--p", "0.5", "--n", "16", "--replicas", "1200", "--seed", "4", "--out",
                 str(work / "from_flags")], work)
    assert filecmp.cmp(work / "from_file" / "survival.csv", work / "from_flags" / "survival.csv", shallow=False)
    run_ok(cli, ["--config", str(cfg), "--seed", "5", "--out", str(work / "override")], work)
    summary = json.loads((work / "override" / "survival_summary.json").read_text())
    assert summary["config"]["seed"] == 5

    # Invariants at p = 0.5, seed 7 report no violations.
    run_ok(cli, ["invariants", "--p", "0.5", "--seed", "7", "--replicas", "500", "--out", str(work / "inv")], work)
    inv = json.loads((work / "inv" / "invariants_summary.json").read_text())
    assert inv["violations"] == 0, inv
    print("errors: exit codes and config handling as documented")


def check_determinism(cli, schema, work):
    for exp, extra in SMALL.items():
        dirs = []
        for tag, threads in (("a", "1"), ("b", "1"), ("c", "4")):
            out = work / f"{exp}_{tag}"
            run_ok(cli, [exp, "--seed", "11", "--threads", threads, "--out", str(out), "--table-dir",
                         str(work / "tables"), *extra], work)
            dirs.append(out)
        for other in dirs[1:]:
            names = sorted(p.name for p in dirs[0].iterdir())
            assert names == sorted(p.name for p in other.iterdir()), exp
            for n in names:
                assert filecmp.cmp(dirs[0] / n, other / n, shallow=False), (exp, n)
    print("determinism: byte-identical across reruns and thread counts")


def main():
    mode, cli, schema, work = sys.argv[1:5]
    cli = str(Path(cli).resolve())
    work = Path(work)
    shutil.rmtree(work, ignore_errors=True)
    work.mkdir(parents=True)
    {"schema": check_schema, "errors": check_errors, "determinism": check_determinism}[mode](cli, schema, work)


if __name__ == "__main__":
    main()
