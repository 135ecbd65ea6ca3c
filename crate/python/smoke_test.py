"""Smoke test for the bachflow extension module.

Build and install first:
    pip install --no-build-isolation ./crates/py
Then run:
    python python/smoke_test.py
"""

import json
import math
import sys

import bachflow


def main() -> int:
    suites = bachflow.list_suites()
    assert "indicial-table" in suites and "nonlinear-flow" in suites, suites

    assert bachflow.zero_lambda_table(4)[0] == [-3, -2, 1, 2]
    assert abs(bachflow.indicial_radius(4, 0.0) - 0.5) < 1e-12

    t = bachflow.thresholds(4)
    assert abs(t["r"] - 0.375) < 1e-15 and abs(t["a"] - 14 / 128) < 1e-15, t
    assert bachflow.gap_constants(4)["a"] == 0.25

    assert abs(bachflow.torus_mode_eigenvalue([1, 0], 4) + 8 * math.pi**4) < 1e-9
    assert bachflow.sphere_trace_eigenvalues(2, 4) == [0.0, -30.0]
    assert bachflow.sphere_kernel_dim(4) == 5

    bad = json.dumps({"schema_version": 1, "suite": "indicial-table", "modle": {}})
    assert any("modle" in d for d in bachflow.validate_config(bad))

    cfg = bachflow.default_config("indicial-table")
    assert bachflow.validate_config(cfg) == []
    report = json.loads(bachflow.run_suite(cfg))
    assert report["schema_version"] == bachflow.SCHEMA_VERSION
    assert all(c["pass"] for c in report["checks"]), report["checks"]

    try:
        bachflow.run_suite(bad)
    except ValueError:
        pass
    else:
        raise AssertionError("invalid config was accepted")

    print(f"smoke test ok: {len(report['checks'])} indicial checks passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
