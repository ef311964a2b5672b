"""Smoke test for the intervalcg_py extension.

Build first:
    cargo build -p intervalcg-py --features extension-module --release
then run from the repository root:
    python3 python/smoke.py
"""

import importlib.util
import math
import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    built = ROOT / "target" / "release" / "libintervalcg_py.so"
    if not built.exists():
        sys.exit(f"missing {built}; build the extension first")
    tmp = pathlib.Path(tempfile.mkdtemp())
    target = tmp / "intervalcg_py.so"
    shutil.copy(built, target)
    spec = importlib.util.spec_from_file_location("intervalcg_py", target)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def main():
    icg = load()

    a = icg.Interval(1.0, 3.0)
    b = icg.Interval(2.0, 5.0)
    assert a.dominates(b) and not b.dominates(a)
    assert (a + b) == icg.Interval(3.0, 8.0)
    assert a.gh_diff(a) == icg.Interval.point(0.0)
    assert b.norm() == 5.0
    try:
        icg.Interval(2.0, 1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("reversed endpoints accepted")

    names = [p["name"] for p in icg.list_problems()]
    assert "iq-convex-2" in names and "deg-real-sd" in names, names

    x = icg.sample_start("iq-convex-2", 3)
    assert x == icg.sample_start("iq-convex-2", 3)
    d = icg.solve_direction("iq-convex-2", x)
    assert d["xi"] <= 0.0 and len(d["v"]) == 2

    # one real objective: the direction is the negative gradient
    r = icg.direction_from_data([[2.0, -4.0]], [[0.0, 0.0]])
    assert all(math.isclose(v, g, abs_tol=1e-6) for v, g in zip(r["v"], [-1.0, 2.0])), r

    for variant in icg.BETA_VARIANTS:
        rec = icg.solve("bk1-analogue", variant=variant, seed=5)
        assert rec["status"] == "Critical", (variant, rec["status"])
        assert rec["xi_trace"][-1] > -1e-6 and len(rec["final_values"]) == 2

    prof = icg.performance_profile([[10.0, 20.0], [30.0, 15.0]])
    assert prof["ratios"] == [[1.0, 2.0], [2.0, 1.0]], prof["ratios"]

    rows = icg.run_bench(problems=["iq-shared-min"], variants=["sd", "dy"], seeds="0..2")
    assert len(rows) == 6 and all(r["status"] == "Critical" for r in rows)

    print("python smoke test passed")


if __name__ == "__main__":
    main()
