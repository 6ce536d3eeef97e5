"""Smoke test for the bridgebench_py extension. Run python/build.sh first."""

import json
import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import bridgebench_py as bb


def main():
    k = bb.element_stiffness([(0, 0), (1, 0), (1, 1), (0, 1)])
    assert abs(k[0][0] - 2 / 3) < 1e-12 and abs(k[0][1] + 1 / 6) < 1e-12 and abs(k[0][2] + 1 / 3) < 1e-12

    mesh = bb.Mesh.uniform(0.2, 0.4, 10, 20)
    assert (mesh.node_count, mesh.cell_count) == (231, 200)
    bc = bb.BoundarySpec.case1()
    assert bc.singular_corners() == ["top-right"]

    field = bb.solve_temperature(mesh, bc)
    assert field.relative_residual <= 1e-10
    assert all(-1e-9 <= t <= 20 + 1e-9 for t in field.values)
    flux = bb.recover_flux(mesh, field)
    flow = bb.boundary_heat_flow(mesh, flux, bc, "top", 1)
    assert math.isclose(flow["total"] - flow["masked_total"], 10.0, rel_tol=1e-9)

    exact = bb.Case1Exact()
    assert abs(exact.exact_temperature(0.0, 0.2) - 5.0) < 1e-9
    assert len(exact.reference_grid()) == 28

    flat = bb.BoundarySpec.one_dimensional(20.0, 0.0)
    f1 = bb.solve_temperature(mesh, flat, solver="cg")
    q1 = bb.boundary_heat_flow(mesh, bb.recover_flux(mesh, f1), flat)
    assert math.isclose(q1["total"], 10.0, rel_tol=1e-9)

    report = bb.run_case1(h_sequence=[0.02, 0.01])
    rows = report.rows
    print(report.to_csv(), end="")
    assert rows[0]["nodes"] == 231 and math.isclose(rows[0]["q_marginal"], 1000.0, rel_tol=0.1)
    assert json.loads(report.to_json())["verdicts"] == report.verdicts

    try:
        bb.run_case1(h_sequence=[0.03])
    except ValueError:
        pass
    else:
        raise AssertionError("0.03 m should not divide the domain")
    print("smoke ok")


if __name__ == "__main__":
    main()
