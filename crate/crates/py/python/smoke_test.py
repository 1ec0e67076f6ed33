"""Smoke test for the Python bindings.

Build and run from the repository root:

    cargo build -p avreach-py --features extension-module --release
    cp target/release/libavreach.so crates/py/python/avreach.so
    python3 crates/py/python/smoke_test.py
"""

import json
import math

import avreach


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    m = avreach.m5()
    assert (m.n_states, m.n_actions) == (5, 2)
    assert m.state_labels == ["1", "2", "3", "4", "5"]
    back = avreach.Model.from_json(m.to_json())
    assert back.prob(2, 0, 4) == 0.9

    ra = avreach.reach_avoid(m, ["4"], ["1", "2"])
    assert all(close(v, w, 1e-8) for v, w in zip(ra["v_tilde"], [0, 0, 0.1, 1, 0]))
    assert close(ra["value"], 0.22, 1e-8)

    r = avreach.constrained_reach(m, ["4"], ["1", "2"], 0.5)
    assert r["status"] == "FEASIBLE"
    assert close(r["value"], 0.71, 1e-8) and close(r["lambda_star"], 0.9, 1e-6)
    assert avreach.constrained_reach(m, [3], [0, 1], 0.3)["status"] == "INFEASIBLE"

    est = avreach.estimate_hitting_probabilities(m, r["policy"], ["4"], ["1", "2"], n=20000, seed=1)
    se = math.sqrt(0.71 * 0.29 / 20000)
    assert abs(est["p_hat_a"] - 0.71) <= 3 * se, est
    again = avreach.estimate_hitting_probabilities(m, json.dumps(r["policy"]), ["4"], ["1", "2"], n=20000, seed=1)
    assert again == est

    d = avreach.p_domain(m, ["4"], [1.0])
    assert d["escape"] == ["5"]

    g, target, obstacles = avreach.grid(8, 6, 0.2, ["0:0,1:4"], ["4:4,0:2"])
    gr = avreach.reach_avoid(g, target, obstacles)
    assert all(gr["v_tilde"][x] == 0 for x in obstacles)

    try:
        avreach.Model.from_json('{"states": 0}')
    except ValueError:
        pass
    else:
        raise AssertionError("invalid model accepted")

    print("smoke test passed, avreach", avreach.__version__)


if __name__ == "__main__":
    main()
