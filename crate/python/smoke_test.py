"""Smoke test for the ftau_py extension.

    pip install --no-build-isolation -e crates/py
    python python/smoke_test.py
"""

import json
import math

import ftau_py


def check(name, ok, detail=""):
    print(f"{'ok  ' if ok else 'FAIL'} {name} {detail}")
    return ok


def main():
    results = []

    op = ftau_py.Operator(0.0, 3)
    results.append(check("operator case", op.case == "MA", repr(op)))

    # Monge-Ampere: u'/r = (c r^-3 + 1)^(1/3)
    sol = ftau_py.solve(0.0, 3, 1.0)
    err = max(abs(sol.w(r) - (r ** -3 + 1.0) ** (1 / 3)) for r in (2.0, 10.0, 100.0, 1e3))
    results.append(check("closed form", err < 1e-10, f"{err:.2e}"))

    exp = sol.expansion(3)
    want = -1 / 3
    results.append(check("c_-1", abs(exp["tail"][0] - want) < 1e-14, str(exp["tail"])))

    slope, expected = sol.remainder_slope(2)
    results.append(check("remainder slope", abs(slope - expected) < 0.1, f"{slope:.3f} vs {expected}"))

    res = sol.pde_residual([[3.0, 0.5, -1.0], [10.0, 20.0, 5.0]])
    results.append(check("pde residual", res < 1e-6, f"{res:.2e}"))

    spl = ftau_py.Operator(math.pi / 2, 3, C0=0.0)
    names = [b["xi_names"] for b in spl.branches()]
    results.append(check("branches", names == [("Xi_1", "Xi_2")], str(names)))

    try:
        ftau_py.solve(math.pi / 2, 3, 50.0)
        results.append(check("range error", False, "no exception"))
    except ValueError as e:
        results.append(check("range error", "Xi_2" in str(e), str(e)[-40:]))

    reports = ftau_py.run("verify", json.dumps({"tau": math.pi / 2, "n": 3, "c": 1.0}))
    summary = json.loads(reports[0])
    results.append(check("verify", summary["pass"], ",".join(c["name"] for c in summary["checks"])))

    if not all(results):
        raise SystemExit(1)


if __name__ == "__main__":
    main()
