"""Smoke test for the datahide_py extension.

Build and install next to this script, then run it:

    cargo build --release -p datahide-py --features extension-module
    cp target/release/libdatahide_py.so python/datahide_py.so
    python3 python/smoke_test.py
"""

import os
import shutil
import sys

HERE = os.path.dirname(os.path.abspath(__file__))
BUILT = os.path.join(HERE, "..", "target", "release", "libdatahide_py.so")
sys.path.insert(0, HERE)

if not os.path.exists(os.path.join(HERE, "datahide_py.so")) and os.path.exists(BUILT):
    shutil.copy(BUILT, os.path.join(HERE, "datahide_py.so"))

import datahide_py as dh  # noqa: E402


def check(name, ok, detail=""):
    print(f"{'PASS' if ok else 'FAIL'} {name} {detail}".rstrip())
    if not ok:
        sys.exit(1)


def main():
    print("datahide_py", dh.__version__)

    p = dh.derive_parameters(2, 2, 2, epsilon=1.0, delta=1.0)
    check("tiny sizes are infeasible", not p["feasibility"]["feasible"] and p["s"] == "0")
    big = dh.derive_parameters(3, 2, 10**12, epsilon=0.5, delta=1.0)
    check("large d is feasible", big["feasibility"]["feasible"], f"r={big['r']} s={big['s']}")

    scheme = dh.Scheme(2, 2, 2, 1, 2, seed=3)
    check("dimensions", (scheme.dim, scheme.code_dim) == (4, 2))
    check("unitarity", scheme.unitarity_defect() < 1e-10)
    fid, leak = scheme.roundtrip([1 + 0j, 1j], [0, 1])
    check("full access recovers", abs(fid - 1.0) < 1e-9 and abs(leak) < 1e-9, f"fidelity={fid:.12f}")

    report = dh.run(7, n=2, k=2, d=4, r=8, s=2, pairs=1, samples=10, restarts=1, max_iters=5)
    check("run passes", report["passed"], f"epsilon_hat={report['security']['epsilon_hat']:.4f}")
    again = dh.run(7, n=2, k=2, d=4, r=8, s=2, pairs=1, samples=10, restarts=1, max_iters=5)
    report.pop("timings")
    again.pop("timings")
    check("run is deterministic", report == again)

    suites = dh.verify("unitarity,decoder")
    check("verify", all(o["passed"] for o in suites), ", ".join(o["name"] for o in suites))
    broken = dh.verify("unitarity", broken_unitary=True)
    check("injected fault is caught", not broken[0]["passed"])

    facts = dh.check_facts(fact_trials=2000, overlap_trials=100)
    check("facts within envelope", facts["all_within_envelope"])

    try:
        dh.run(1, bogus=3)
    except ValueError as e:
        check("unknown key rejected", "bogus" in str(e))
    else:
        check("unknown key rejected", False)

    print("all smoke checks passed")


if __name__ == "__main__":
    main()
