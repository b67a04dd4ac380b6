"""Smoke test for the spde_galerkin extension module.

Build and install first, e.g.

    cd crates/python && maturin build --release -o ../../target/wheels
    pip install ../../target/wheels/spde_galerkin-*.whl

then run `python python/smoke_test.py`.
"""

import math
import pathlib
import sys
import tempfile

import spde_galerkin as sg


def close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    gamma = math.sqrt(0.1)

    # oracle
    assert close(sg.moment_exponent(1, gamma, 4.0), -1.6, 1e-12)
    assert close(sg.exact_mode_moment(1, gamma, 4.0, 0.5), math.exp(-0.8), 1e-12)
    pred = sg.wellposed_predicates(gamma, 4.0)
    assert pred["coercivity_ok"] and not pred["brz_veraar_illposed"]

    # equations and fields
    eq = sg.Equation.fractional(4, gamma, 4.0)
    assert eq.m == 9 and eq.basis == "fourier-torus"
    assert close(eq.ledger()["theta"], 0.8, 1e-12)
    u = sg.Field.single_mode(eq, 2, 1.0)
    b = eq.diffusion(u)
    assert close(b.h_norm ** 2, 4 * 0.1 * 4 * u.h_norm ** 2, 1e-12)
    assert close((u * 2.0 - u).h_norm, u.h_norm, 1e-12)
    try:
        u.inner(sg.Field.zeros(sg.Equation.heat(4, 0.0)))
    except ValueError:
        pass
    else:
        raise AssertionError("mixing bases must raise")

    burgers = sg.Equation.burgers(16, math.sqrt(0.2), '{"kind": "constant", "value": 1.0}')
    w = sg.Field.random(burgers, 1.5, 1.0, seed=3)
    assert abs(burgers.drift(w).inner(w) + w.v_norm ** 2) < 1e-9 * (1 + w.v_norm ** 3)

    # solver and moments
    path = sg.solve_path(eq, u, 1e-3, 0.05, seed=1)
    assert len(path["times"]) == 51 and path["exploded"] is None
    assert len(path["coefficients"][0]) == eq.m
    rep = sg.estimate_moments(eq, sg.Field.single_mode(eq, 1, 1.0), 5e-4, 0.25, 2000, seed=7, track_mode=1)
    series = next(s for s in rep["series"] if s["name"] == "E|c_1|^p" and s["p"] == 4.0)
    mean, se = series["mean"][-1], series["se"][-1]
    oracle = sg.exact_mode_moment(1, gamma, 4.0, 0.25)
    assert abs(mean - oracle) <= 4 * se, (mean, se, oracle)

    # assumption checks and studies
    report = sg.check_assumptions(sg.Equation.fractional(16, gamma, 4.0), samples=200, seed=2)
    assert not any(r["violated"] for r in report["results"].values())
    rows = sg.sharpness_sweep([0.1, 0.15, 0.2, 0.25])
    assert [r["bounded"] for r in rows] == [True, True, False, False]
    conv = sg.convergence_study(gamma, [2e-3, 1e-3, 5e-4], n_paths=200, seed=3)
    assert 0.3 < conv["slope"] < 0.7, conv["slope"]

    # config-driven run
    with tempfile.TemporaryDirectory() as tmp:
        cfg = pathlib.Path(tmp) / "frac.toml"
        cfg.write_text(
            "[equation]\nname = \"fractional\"\ngamma = 0.3\n"
            "[basis]\nm = 5\n[solver]\ndt = 1e-3\nt_end = 0.01\nseed = 4\n"
        )
        manifest = sg.run(str(cfg), str(pathlib.Path(tmp) / "out"), task="check", paths=50)
        assert manifest["exit_code"] == 0 and manifest["task"] == "check"
        try:
            sg.run(str(cfg), str(pathlib.Path(tmp) / "bad"), task="nonsense")
        except ValueError:
            pass
        else:
            raise AssertionError("unknown task must raise")

    print(f"spde_galerkin {sg.__version__}: smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
