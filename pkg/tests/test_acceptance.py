"""Acceptance gate: every criterion at its stated tolerance, one line per check.

Run with `pytest tests/test_acceptance.py -v -s` to see the pass/fail lines.
"""

import time

import numpy as np
import pytest

from bnlab import convolution as cv
from bnlab import dirichlet as dm
from bnlab import geometry as geo
from bnlab import kernels as K
from bnlab import scenarios as sc
from bnlab import semigroup as sg
from bnlab.kernels import HeatKernel


def _line(criterion, ok, detail):
    tag = "PASS" if ok else "FAIL"
    print(f"[{tag}] {criterion}: {detail}", flush=True)
    return ok


def test_acceptance_1_ito_isometry_suite():
    """MC variance of the convolution matches the quadrature variance, 3 SE, n=1e4."""
    all_ok = True
    cases = {
        "p71": [(t, x) for t in (0.05, 0.1, 0.2, 0.35, 0.5)
                for x in (0.12, 0.3, 0.5, 0.7, 0.88)],
        "p72": [(t, x) for t in (0.05, 0.15, 0.3, 0.5)
                for x in (0.15, 0.4, 0.8, 1.5, 2.5)],
        "p717": [(t, (x0, x1)) for t in (0.08, 0.2, 0.35)
                 for x0 in (0.2, 0.45, 0.7, 1.0) for x1 in (-0.7, 0.4)],
    }
    for sid, probes in cases.items():
        assert len(probes) >= 20
        setup, _ = sc.build_setup(sid, p=2.0, theta=2.0)
        t0 = time.time()
        _, stats = cv.simulate_convolution(setup, probes, n_paths=10000, root_seed=11)
        wall = time.time() - t0
        z = np.abs((stats["var"] - stats["var_oracle"]) / stats["var_se"])
        ok = bool(np.all(z <= 3.0)) and wall < 120.0
        all_ok &= _line("1 ito-isometry", ok,
                        f"{sid}: {len(probes)} probes, max|z|={z.max():.2f}, {wall:.0f}s")
    assert all_ok


def test_acceptance_2_threshold_suite():
    """J verdicts at interval endpoints -/+ 0.25 match the catalogued ranges."""
    sweeps = [
        ("p71", (0.75, 1.25, 2.75, 3.25), {}),          # (1, 3)
        ("p78", (1.75, 2.25, 2.75, 3.25), {}),          # (2, 3)
        ("p717", (1.75, 2.25, 2.75, 3.25), {}),         # (2, 3)
        ("p718", (1.25, 1.75, 2.75, 3.25), {"kappa": 0.5}),   # (1.5, 3)
    ]
    n_checks, disagreements = 0, 0
    for sid, thetas, kw in sweeps:
        for th in thetas:
            setup, pred = sc.build_setup(sid, p=2.0, theta=th, horizon=0.5, **kw)
            rep = cv.j_integral(setup, prediction=pred)
            n_checks += 1
            disagreements += not rep.agreement
            _line("2 threshold", rep.agreement,
                  f"{sid} theta={th}: verdict={rep.verdict} predicted={rep.predicted}")
    ok = n_checks >= 8 and disagreements == 0
    _line("2 threshold", ok, f"{n_checks} verdicts, {disagreements} disagreements")
    assert ok


def test_acceptance_3_kernel_suite():
    im, sn = HeatKernel(geo.interval01(), "image"), HeatKernel(geo.interval01(), "sine")
    xs = np.linspace(0.02, 0.98, 25)
    cross = max(float(np.max(np.abs(im.value(t, xs[:, None], xs[None, :])
                                    - sn.value(t, xs[:, None], xs[None, :]))))
                for t in (1e-3, 1e-2, 0.1, 0.5, 1.0))
    ok = _line("3 kernel", cross < 1e-10, f"image-vs-sine sup {cross:.2e} < 1e-10")

    ck_worst = 0.0
    for dom, n, hi in ((geo.interval01(), 4096, 1.0), (geo.half_line(), 8192, 14.0)):
        ker = HeatKernel(dom)
        zs = np.linspace(hi / n / 2, hi - hi / n / 2, n)
        for (t, s) in ((0.05, 0.05), (0.05, 0.1), (0.1, 0.1)):
            conv = np.sum(ker.value(t, 0.3, zs) * ker.value(s, zs, 0.62)) * (hi / n)
            ck_worst = max(ck_worst, abs(conv - ker.value(t + s, 0.3, 0.62)))
    ok &= _line("3 kernel", ck_worst < 1e-6, f"Chapman-Kolmogorov residual {ck_worst:.2e} < 1e-6")

    grid = geo.interval_grid(n=2048)
    psi = sg.field_from_function(geo.interval01(), grid, lambda x: np.sin(np.pi * x))
    out = sg.apply_semigroup(HeatKernel(geo.interval01()), 0.1, psi)
    eig = float(np.max(np.abs(out.values - np.exp(-np.pi ** 2 * 0.1) * np.sin(np.pi * grid.x))))
    ok &= _line("3 kernel", eig < 1e-6, f"eigenfunction decay error {eig:.2e} < 1e-6")

    kerH = HeatKernel(geo.half_line())
    res = max(abs(kerH.resolvent(lam, x, y) - K.halfline_resolvent_exact(lam, x, y))
              for lam in (0.5, 1.0, 3.0) for (x, y) in ((1.0, 2.0), (1.0, 1.0), (0.3, 2.5)))
    ok &= _line("3 kernel", res < 1e-8, f"resolvent vs closed form {res:.2e} < 1e-8")
    assert ok


def test_acceptance_4_estimate_verifier_suite():
    etr = K.difference_bound_report(n_z=200, n_v=200)
    ok = _line("4 estimates", etr.verdict == "bounded" and np.isfinite(etr.fitted["C"]),
               f"difference bound certified on 200x200 grid, C={etr.fitted['C']:.4f}")

    for dom in (geo.half_line(), geo.interval01()):
        rep = K.fit_singular_moment_exponent(dom, -0.5)
        good = abs(rep.fitted["exponent"] + 0.25) <= 0.03
        ok &= _line("4 estimates", good,
                    f"{dom.kind} distance-moment exponent {rep.fitted['exponent']:.4f} = -0.25 +/- 0.03")

    for d in (2, 3):
        rep = K.fit_boundary_mass_constant(d)
        good = rep.fitted["relative_spread"] <= 0.10
        ok &= _line("4 estimates", good,
                    f"ball d={d} boundary-mass C1={rep.fitted['C1']:.4f} "
                    f"spread {rep.fitted['relative_spread']:.2%} <= 10%")

    fw = K.far_weight_constants(theta=0.0, c=1.0)
    target = 2 * np.sqrt(np.pi)
    good = (abs(fw.fitted["N"] - target) < 1e-8
            and fw.fitted["A1"] + fw.fitted["A2"] <= fw.fitted["N"])
    ok &= _line("4 estimates", good,
                f"A1+A2={fw.fitted['A1'] + fw.fitted['A2']:.4f} <= N={fw.fitted['N']:.6f} (2 sqrt pi)")
    assert ok


def test_acceptance_5_operator_suite():
    rep = sg.schur_constants(geo.interval01(), 2, 2.0, c=4.0, levels=3)
    ok = _line("5 operator", rep.all_bounded, "schur k1..k8 all bounded at (p,theta)=(2,2)")

    gs = sg.gradient_smoothing_ratio(HeatKernel(geo.interval01()),
                                     geo.WeightedSpaceParams(2, 1.5, 0))
    good = abs(gs.fitted["slope"] + 0.5) <= 0.05
    ok &= _line("5 operator", good, f"gradient smoothing slope {gs.fitted['slope']:.4f} = -0.5 +/- 0.05")

    st = sg.stability_rate(HeatKernel(geo.interval01()), geo.WeightedSpaceParams(2, 2, 0))
    good = abs(st["rate"] - np.pi ** 2) <= 0.01 * np.pi ** 2
    ok &= _line("5 operator", good, f"stability rate {st['rate']:.4f} = pi^2 +/- 1%")

    csr = sg.cross_space_smoothing(HeatKernel(geo.interval01()), geo.WeightedSpaceParams(2, 2, 0))
    good = abs(csr.fitted["slope"] + 0.5) <= 0.1
    ok &= _line("5 operator", good, f"cross-space slope {csr.fitted['slope']:.4f} = -0.5 +/- 0.1")

    sp = sg.min_weight_splice_check(HeatKernel(geo.interval01()), 0.1,
                                    geo.WeightedSpaceParams(2, 0.2, 1.0), n_fields=100)
    ok &= _line("5 operator", sp["failures"] == 0,
                f"splice inequality on 100 random fields, worst ratio {sp['worst_ratio']:.3f}")
    assert ok


def test_acceptance_6_dirichlet_suite():
    I, H = geo.interval01(), geo.half_line()
    grid = geo.interval_grid(n=41)
    u = dm.dirichlet_map(I, 0.0, dm.endpoint_data(I, 1.0, 0.0), grid)
    err = float(np.max(np.abs(u.values - (1 - grid.x))))
    ok = _line("6 dirichlet", err < 1e-6, f"linear interpolant error {err:.2e} < 1e-6")

    gh = geo.halfline_grid(level=6, cutoff=5.0, per_panel=4)
    uh = dm.dirichlet_map(H, 1.0, dm.endpoint_data(H, 1.0), gh)
    errh = float(np.max(np.abs(uh.values - np.exp(-gh.x))))
    ok &= _line("6 dirichlet", errh < 1e-6, f"half-line exponential error {errh:.2e} < 1e-6")

    r1 = dm.verify_harmonicity(H, 1.0, dm.endpoint_data(H, 1.0), h=1e-2)["residual"]
    r2 = dm.verify_harmonicity(H, 1.0, dm.endpoint_data(H, 1.0), h=5e-3)["residual"]
    good = 3.0 <= r1 / r2 <= 5.0
    ok &= _line("6 dirichlet", good, f"harmonicity residual O(h^2): ratio {r1 / r2:.2f} on halving")

    gx = geo.interval_grid(n=33)
    e = dm.endpoint_data(I, 1.0, 0.0)
    a = dm.boundary_propagator(I, 0.2, e, gx, kernel=HeatKernel(I, "image"))
    b = dm.boundary_propagator(I, 0.2, e, gx, kernel=HeatKernel(I, "sine"))
    cross = float(np.max(np.abs(a.values - b.values)))
    ok &= _line("6 dirichlet", cross < 1e-8, f"propagator cross-series {cross:.2e} < 1e-8")

    eH = dm.endpoint_data(H, 1.0)
    gridH = geo.halfline_grid(level=8, cutoff=8.0)
    C = dm.fit_majorant_constant(H, eH, gridH, c=4.0)
    dominated = True
    for t in np.geomspace(2e-3, 0.9, 9):
        exact = dm.boundary_propagator(H, t, eH, gridH)
        maj = dm.propagator_majorant(H, t, eH, gridH, c=4.0, big_c=C * (1 + 1e-9))
        dominated &= bool(np.all(np.abs(exact.values) <= maj.values + 1e-15))
    ok &= _line("6 dirichlet", dominated, f"majorant with single fitted C={C:.4f} dominates pointwise")
    assert ok


def test_acceptance_7_simulation_suite():
    setup, _ = sc.build_setup("p71", p=2.0, theta=2.0, horizon=0.3)
    flow = cv.flow_consistency_check(setup, 0.1, 0.2, n_paths=10000, root_seed=13)
    ok = _line("7 simulation", flow["max_cov_z"] < 3.5,
               f"two-stage vs one-shot covariance max|z|={flow['max_cov_z']:.2f}")

    grid = geo.interior_grid(geo.interval01(), graded=True, level=6, per_panel=6)
    x0 = sg.field_from_function(geo.interval01(), grid, lambda x: np.sin(np.pi * x))
    tg = np.linspace(0, 0.1, 11)
    lin = cv.simulate_mild(setup, x0, tg, n_paths=6, root_seed=3, grid=grid)
    nl = cv.simulate_mild(setup, x0, tg, n_paths=6, root_seed=3, grid=grid,
                          drift=lambda u: 0.0 * u)
    exact_red = np.array_equal(lin.values, nl.values)
    ok &= _line("7 simulation", exact_red, "f=0 semilinear reduction exact per path")

    probes = [(t, x) for t in (0.1, 0.3) for x in (0.3, 0.5, 0.7)]
    _, stats = cv.simulate_convolution(setup, probes, n_paths=10000, root_seed=19)
    # SE of the kurtosis-type ratio for Gaussians is about sqrt(24/n)
    tol = 4 * np.sqrt(24.0 / 10000)
    good = bool(np.all(np.abs(stats["fourth_moment_ratio"] - 3.0) <= tol))
    ok &= _line("7 simulation", good,
                f"fourth-moment ratio within {tol:.3f} of 3: "
                f"range ({stats['fourth_moment_ratio'].min():.3f}, "
                f"{stats['fourth_moment_ratio'].max():.3f})")

    inv = cv.invariant_diagnostics(setup)
    good = inv["max_rel_gap_at_probe"] < 0.02
    ok &= _line("7 simulation", good,
                f"variance at t=5/pi^2 within {inv['max_rel_gap_at_probe']:.2e} of the limit (< 2%)")
    assert ok
