"""Smoke test for the betatree Python module.

Build and install first:  pip install ./crates/python   (or maturin develop -m crates/python/Cargo.toml)
Then run:                 python python/smoke_test.py
"""
import json
import math

import betatree


def check(cond, what):
    if not cond:
        raise SystemExit(f"FAIL: {what}")
    print(f"ok: {what}")


def main():
    tree = betatree.Tree(2, 3)
    check(len(tree) == 15, "binary tree of depth 3 has 15 nodes")
    check(tree.children(0) == [1, 2] and tree.parent(2) == 0, "root children and parent")
    check(tree.index(tree.path(9)) == 9 and tree.path(0) == "", "path round trip")
    check(tree.psi(tree.index("1.0")) == 0.5, "psi(1.0) = 1/2")

    lower, upper = betatree.bounds(0.25)
    r = betatree.principal_eigenvalue(0.25, 400, 1e-12)
    check(lower <= r.lambda1 <= upper, f"lambda1(0.25) = {r.lambda1} within [{lower}, {upper}]")
    check(abs(r.eigenfunction[1] - (1 - r.lambda1)) < 1e-12, "u_1 = 1 - lambda1")
    check(json.loads(r.report_json)["lambda1"] == r.lambda1, "JSON report round trips lambda1")

    u = betatree.closed_form_beta0(0.5, 3)
    check(u == [1.0, 0.5, 0.25, 0.125], "beta = 0 closed form")
    check(betatree.shoot(1 / 3, 0.6, 4)[1] == 2, "shooting trace changes sign at level 2")

    values = [float(i) for i in range(len(tree))]
    lap = betatree.apply_laplacian_tree(0.3, tree, values)
    avg = betatree.apply_laplacian_level(0.3, betatree.level_average(tree, values))
    check(max(abs(a - b) for a, b in zip(betatree.level_average(tree, lap), avg)) < 1e-12,
          "level averaging commutes with the operator")

    v, root_defect, warning = betatree.build_supersolution(1 / 3, 2.0, 20)
    cert = betatree.check_supersolution(1 / 3, (1 - 2 / 3) / (2 * max(v)), v)
    check(warning is None and root_defect < 0 and cert.valid, "supersolution certificate")

    phi = betatree.solve_resolvent(0.3, 0.5 * betatree.principal_eigenvalue(0.3, 100).lambda1, 100)
    check(all(x >= 0 for x in phi) and all(b <= a for a, b in zip(phi, phi[1:])), "resolvent shape")
    try:
        betatree.principal_eigenvalue(0.6)
    except ValueError as e:
        check("diagnose-supercritical" in str(e), "beta >= 1/2 raises ValueError")
    else:
        raise SystemExit("FAIL: beta = 0.6 accepted")

    table = betatree.supercritical_diagnostic(0.5, [10, 20, 40])
    check(all(b[1] < a[1] for a, b in zip(table, table[1:])), "supercritical eigenvalues decrease")

    tree8 = betatree.Tree(2, 8)
    eig = betatree.principal_eigenvalue(0.3, 8)
    f = [eig.eigenfunction[tree8.level_of(i)] for i in range(len(tree8))]
    traj = betatree.evolve(0.3, tree8, f, t_end=1.0, dt=1e-3, extrapolation=2, full_tree=True)
    err = max(abs(a - math.exp(-eig.lambda1) * b) for a, b in zip(traj.states[-1], f))
    check(err < 1e-6, f"eigenfunction decays as exp(-lambda1 t) (error {err:.1e})")
    check(abs(traj.decay_rate() - eig.lambda1) < 1e-3, "fitted decay rate")

    pic = betatree.evolve(0.3, betatree.Tree(2, 3), [1.0] + [0.0] * 14, t_end=0.1, dt=1e-3, scheme="picard")
    check(pic.fixed_point_residual() < 1e-9, "Picard trajectory is a fixed point")

    report = json.loads(betatree.run_verify(seed=1, operator_cases=2, comparison_pairs=2))
    check(sum(len(s["violations"]) for s in report["suites"]) == 0, "property suites clean")
    print("all smoke checks passed")


if __name__ == "__main__":
    main()
