"""Smoke test for the Python bindings. Run after `pip install --no-build-isolation -e crates/python`."""

import json
import math

import numpy as np

import qmerge


def close(a, b, tol=1e-6):
    assert abs(a - b) <= tol, (a, b)


def main():
    bell = json.loads(qmerge.builtin_state("bell"))
    assert bell["kind"] == "pure"

    rho_ar = qmerge.partial_trace("bell", ["A", "R"])
    doc = json.loads(rho_ar)
    d = int(math.isqrt(len(doc["entries"])))
    m = np.array([complex(re, im) for re, im in doc["entries"]]).reshape(d, d)
    close(np.trace(m).real, 1.0, 1e-12)
    assert np.all(np.linalg.eigvalsh(m) > -1e-12)

    close(qmerge.h_min_cond(rho_ar, ["R"]), -1.0)
    close(qmerge.h_min_smooth_cond(rho_ar, ["R"], 0.1), -1.0 - math.log2(0.9), 1e-5)

    hmin, hmax = qmerge.duality_pair("ghz")
    close(hmin + hmax, 0.0, 1e-8)

    plan = json.loads(qmerge.plan_cost("bell", 0.1))
    assert plan["cost_bits"] == 8, plan

    err, cond, cost = qmerge.run_protocol("product", 1, 1, 3)
    close(err, 0.0, 1e-8)

    csv = qmerge.compute(json.dumps({"command": "duality", "state": "w", "params": {}}))
    assert csv.startswith("state_id,quantity,conditioning,value_bits,method,gap"), csv

    try:
        qmerge.h_min_smooth_cond(rho_ar, ["R"], 1.5)
    except ValueError:
        pass
    else:
        raise AssertionError("eps out of range was accepted")

    print("python smoke test ok, qmerge", qmerge.__version__)


if __name__ == "__main__":
    main()
