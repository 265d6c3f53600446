"""Quick end-to-end check of the compiled `biped5` module."""

import math
import os
import sys
import tempfile

import biped5


def main() -> int:
    params = biped5.RobotParams()
    assert abs(params.gravity - 9.81) < 1e-12
    assert biped5.RobotParams.from_config(params.to_config()).masses == params.masses

    sol = biped5.solve_gait()
    assert sol.m1 * sol.h1 < 0
    theta0, _, _ = sol.theta1(0.0)
    theta_f, _, _ = sol.theta1(1.0)
    assert abs(theta0 - (math.pi / 2 + 0.1)) < 1e-10
    assert abs(theta_f - (math.pi / 2 - 0.1)) < 1e-10
    assert sol.numeric_check() <= 1e-6

    header, rows = sol.sample(1e-3)
    assert header == biped5.csv_header()
    assert len(rows) == 1001
    mid = rows[500]
    assert abs(mid[5] - mid[1] + 1.0) < 1e-15

    upright = [math.pi / 2] * 5
    m = biped5.inertia_matrix(upright)
    assert all(abs(m[i][j] - m[j][i]) == 0 for i in range(5) for j in range(5))
    assert abs(biped5.joint_positions(upright)[5][1]) < 1e-12
    assert max(abs(g) for g in biped5.gravity_vector(upright)) < 1e-12

    run = biped5.simulate(sol, offset=0.05)
    assert len(run["t"]) == 1001
    assert max(run["final_error"]) <= 1e-4

    passed, report = biped5.validate()
    assert passed, report
    assert report.rstrip().endswith("STATUS: PASS")

    svg = biped5.render_svg([r[1:6] for r in rows[::250]])
    assert svg.count("<line ") == 5 * 5 + 1

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "gait.csv")
        sol.to_csv(path)
        with open(path) as f:
            assert sum(1 for _ in f) == 1002

    try:
        biped5.GaitSpec(period=0.0)
    except ValueError:
        pass
    else:
        raise AssertionError("period 0 accepted")

    print("smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
