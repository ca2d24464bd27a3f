#!/usr/bin/env python3
"""Exit-code and output contract checks for the crd binary."""

import json
import os
import subprocess
import sys
import tempfile

CRD = sys.argv[1]
DATA = sys.argv[2]

failures = []


def check(name, ok, extra=""):
    print(("PASS " if ok else "FAIL ") + name + (" " + extra if extra else ""))
    if not ok:
        failures.append(name)


def run(*args, **kw):
    return subprocess.run([CRD, *args], capture_output=True, text=True, timeout=300, **kw)


def main():
    titanic = os.path.join(DATA, "titanic.csv")
    actionable = "class,pname,sex,age,sib_sip,par_ch,embarked"

    # discover: table output carries the top rule.
    r = run("discover", "--data", titanic, "--target", "survived", "--outcome", "1",
            "--actionable", actionable, "--k", "3", "--beta", "2.0")
    check("discover table exit 0", r.returncode == 0, r.stderr.strip()[:120])
    check("discover table top rule", "class <= 2 && sex = female" in r.stdout)

    # discover: json round-trips with the same rules and scores.
    r = run("discover", "--data", titanic, "--target", "survived", "--outcome", "1",
            "--actionable", actionable, "--k", "3", "--format", "json")
    check("discover json exit 0", r.returncode == 0)
    doc = json.loads(r.stdout)
    r2 = run("discover", "--data", titanic, "--target", "survived", "--outcome", "1",
             "--actionable", actionable, "--k", "3", "--format", "json")
    doc2 = json.loads(r2.stdout)
    check("discover json round trip",
          [x["rule"] for x in doc["rules"]][0] == "class <= 2 && sex = female"
          and abs(doc["rules"][0]["reliable"] - 0.5767) < 1e-3
          and doc["stats"]["nodes_expanded"] > 0
          and [(x["rule"], x["reliable"], x["coverage"]) for x in doc["rules"]]
          == [(x["rule"], x["reliable"], x["coverage"]) for x in doc2["rules"]])

    # gamma < 1 prints the approximation disclaimer.
    r = run("discover", "--data", titanic, "--target", "survived", "--outcome", "1",
            "--actionable", actionable, "--k", "1", "--gamma", "0.8")
    check("gamma disclaimer", r.returncode == 0 and "approximation" in r.stdout)

    # missing --outcome is a config error.
    r = run("discover", "--data", titanic, "--target", "survived", "--actionable", actionable)
    check("missing outcome exits 2", r.returncode == 2, str(r.returncode))

    # unreadable file is a data error.
    r = run("discover", "--data", "/nonexistent.csv", "--target", "y", "--outcome", "1",
            "--actionable", "x")
    check("bad data exits 1", r.returncode == 1, str(r.returncode))

    # no partial output file on data errors.
    with tempfile.TemporaryDirectory() as tmp:
        out = os.path.join(tmp, "report.json")
        r = run("discover", "--data", "/nonexistent.csv", "--target", "y", "--outcome", "1",
                "--actionable", "x", "--out", out)
        check("no partial output file", r.returncode == 1 and not os.path.exists(out))

    # check-graph on the shipped example.
    fig4 = os.path.join(DATA, "fig4.json")
    r = run("check-graph", "--graph", fig4)
    check("check-graph admissible exit 0", r.returncode == 0 and "admissible" in r.stdout)

    with tempfile.TemporaryDirectory() as tmp:
        bad = os.path.join(tmp, "bad.json")
        with open(fig4) as f:
            doc = json.load(f)
        doc["edges"].append(["Y", "X2"])  # target -> actionable, still acyclic
        with open(bad, "w") as f:
            json.dump(doc, f)
        r = run("check-graph", "--graph", bad)
        check("check-graph violation exits 3",
              r.returncode == 3 and "(a)" in r.stdout, str(r.returncode))

        cyc = os.path.join(tmp, "cyc.json")
        doc["edges"][-1] = ["Y", "X1"]  # X1 -> Y already exists: a cycle
        with open(cyc, "w") as f:
            json.dump(doc, f)
        r = run("check-graph", "--graph", cyc)
        check("cyclic graph exits 1", r.returncode == 1, str(r.returncode))

        notjson = os.path.join(tmp, "not.json")
        with open(notjson, "w") as f:
            f.write("{broken")
        r = run("check-graph", "--graph", notjson)
        check("malformed json exits 1", r.returncode == 1, str(r.returncode))

    # synth-experiment: deterministic TSV under a fixed seed.
    args = ("synth-experiment", "mse", "--preset", "fig4", "--fast", "--seed", "7",
            "--reps", "6", "--threads", "2")
    a = run(*args)
    b = run(*args)
    check("experiment exit 0", a.returncode == 0, a.stderr.strip()[:120])
    check("experiment deterministic", a.stdout == b.stdout and len(a.stdout) > 0)
    header = [l for l in a.stdout.splitlines() if not l.startswith("#")][0]
    check("experiment tsv header", header == "N\tmeasure\tvalue\tstddev")

    r = run("synth-experiment", "nonsense")
    check("unknown experiment exits 2", r.returncode == 2, str(r.returncode))

    # --out writes the same bytes that stdout would carry.
    with tempfile.TemporaryDirectory() as tmp:
        out = os.path.join(tmp, "report.tsv")
        r = run("synth-experiment", "recovery", "--preset", "fig4", "--fast", "--seed", "3",
                "--reps", "4", "--out", out)
        with open(out) as f:
            body = f.read()
        r2 = run("synth-experiment", "recovery", "--preset", "fig4", "--fast", "--seed", "3",
                 "--reps", "4")
        check("out file matches stdout", r.returncode == 0 and body == r2.stdout)

    # bench: k monotonicity of expanded nodes.
    r = run("bench", "--data", titanic, "--target", "survived", "--outcome", "1",
            "--actionable", actionable, "--k-list", "1,10")
    check("bench exit 0", r.returncode == 0, r.stderr.strip()[:120])
    lines = [l.split("\t") for l in r.stdout.strip().splitlines()[1:]]
    check("bench k monotone", len(lines) == 2 and int(lines[0][2]) <= int(lines[1][2]))

    print(f"{len(failures)} failure(s)")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
