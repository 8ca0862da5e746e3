"""Exit codes, report schema and determinism of the command-line tool.

usage: cli_checks.py BIFLAT DATA_DIR
"""
import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema

BIN = sys.argv[1]
DATA = pathlib.Path(sys.argv[2])
SCHEMA = json.loads((DATA / "report.schema.json").read_text())
failures = []


def run(*args):
    return subprocess.run([BIN, *map(str, args)], capture_output=True, text=True)


def expect(cond, what):
    print(("ok    " if cond else "FAIL  ") + what)
    if not cond:
        failures.append(what)


def report(tmp, name, *args):
    path = pathlib.Path(tmp) / name
    p = run(*args, "--json", path)
    return p, (json.loads(path.read_text()) if path.exists() else None), path


with tempfile.TemporaryDirectory() as tmp:
    cat = DATA / "catalog"

    p, rep, _ = report(tmp, "toy.json", "verify", cat / "toy1d.fman")
    expect(p.returncode == 0, "verify toy1d exits 0")
    jsonschema.validate(rep, SCHEMA)
    expect(all(c["status"] in ("pass", "vacuous") for c in rep["checks"]), "toy1d report has no failures")

    p = run("verify", DATA / "mutants" / "broken_torsion.fman")
    expect(p.returncode == 1, "verify broken_torsion exits 1")
    expect("FAIL  flat.torsion" in p.stdout, "broken_torsion reports the torsion check")

    expect(run("verify", pathlib.Path(tmp) / "nosuch.fman").returncode == 2, "missing file exits 2")

    bad = pathlib.Path(tmp) / "bad.fman"
    bad.write_text("dim 1\ncoords t\nc[1,1,1] = 1 +\ne = (1)\nE = (t)\nbasepoint (1)\n")
    p = run("verify", bad)
    expect(p.returncode == 2, "syntax error exits 2")

    p, rep, _ = report(tmp, "gm.json", "gm", cat / "A2.fman", "--lambda", "1/3")
    expect(p.returncode == 0, "gm A2 --lambda 1/3 exits 0")
    jsonschema.validate(rep, SCHEMA)
    names = {c["name"]: c["status"] for c in rep["checks"]}
    expect(names.get("gm.curvature") == "pass" and names.get("gm.torsion") == "pass", "gm A2 flat and torsionless")

    p = run("chain", cat / "toy1d.fman", "--terms", "3")
    expect(p.returncode == 0, "chain toy1d exits 0")
    members = [line.split(" = ", 1)[1] for line in p.stdout.splitlines() if line.startswith("X(1,")]
    expect(members == ["(1)", "(1 - t)", "(1 - t)", "(1 - t)"], "toy1d chain prints 1, 1 - t, 1 - t, 1 - t")

    expect(run("chain", cat / "toy1d.fman", "--terms", "-1").returncode == 2, "chain --terms -1 is a usage error")
    expect(run("gm", cat / "A2.fman", "--lambda", "abc").returncode == 2, "malformed --lambda is a usage error")

    p = run("flatsec", cat / "toy1d.fman", "--terms", "3")
    expect(p.returncode == 0 and "X1[lambda^-2] = (1 - t)" in p.stdout, "flatsec toy1d")

    p, rep, _ = report(tmp, "dual.json", "dual", cat / "A2.fman")
    expect(p.returncode == 0, "dual A2 exits 0")
    jsonschema.validate(rep, SCHEMA)

    # Float catalog entry and the automatic switch to float mode.
    p, rep, _ = report(tmp, "cp1.json", "gm", cat / "CP1.fman")
    expect(p.returncode == 0 and rep["mode"] == "float", "CP1 runs in float mode")
    jsonschema.validate(rep, SCHEMA)
    noflag = pathlib.Path(tmp) / "cp1_noflag.fman"
    noflag.write_text("".join(l for l in (cat / "CP1.fman").read_text().splitlines(True) if not l.startswith("flag")))
    p, rep, _ = report(tmp, "cp1b.json", "dual", noflag)
    expect(p.returncode == 0 and rep["mode"] == "float" and "warning" in p.stderr, "exp forces a switch to float")
    expect(run("dual", noflag, "--mode", "exact").returncode == 2, "--mode exact with exp exits 2")

    # Same seed, same bytes.
    _, _, a = report(tmp, "det_a.json", "verify", cat / "A2.fman", "--seed", "7", "--points", "4")
    _, _, b = report(tmp, "det_b.json", "verify", cat / "A2.fman", "--seed", "7", "--points", "4")
    expect(a.read_bytes() == b.read_bytes(), "reports are byte-identical under a fixed seed")

print(f"{len(failures)} failure(s)")
sys.exit(1 if failures else 0)
