"""Acceptance suite: one test per quantitative criterion, each printing a
single pass/fail line with the measured values at the stated tolerance.
"""
import time
from dataclasses import replace

import numpy as np
import pytest

from sigma_energy import euler_lagrange as el
from sigma_energy import stability as st
from sigma_energy.distortion import analyze_points
from sigma_energy.energy import (KAPPA_CAL, TWELVE_PI2, bounds_report,
                                 degree, hopf_invariant, integrate_energy,
                                 minimize_over_radius, product_rule)
from sigma_energy.geometry import deform_metric, make_chart
from sigma_energy.maps import make_map
from sigma_energy.pipelines import case_names

PI2 = np.pi ** 2
SEED = 20250825


def _report(num, name, ok, detail):
    line = f"ACCEPTANCE {num:02d} {name}: {'PASS' if ok else 'FAIL'} ({detail})"
    print(line)
    assert ok, line


def test_criterion_01_identity_calibration():
    opt = minimize_over_radius(make_map("identity"), kappa=KAPPA_CAL)
    d_ratio = abs(opt.ratio - 1.0)
    d_rstar = abs(opt.r_star - 2.0)
    ok = (d_ratio < 1e-10 and d_rstar < 1e-10
          and opt.golden_defect <= 1e-8 and opt.quadrature_defect <= 1e-8)
    _report(1, "identity-calibration", ok,
            f"ratio defect {d_ratio:.2e}, R* defect {d_rstar:.2e}, "
            f"cross-checks {opt.golden_defect:.2e}/{opt.quadrature_defect:.2e}")


def test_criterion_02_join_ansatz_ratio():
    m = make_map("alpha_join", alpha="arccos_cos2", k=2, l=1)
    opt = minimize_over_radius(m, kappa=KAPPA_CAL)
    defect = abs(opt.ratio - 1.05175)
    ok = defect < 1e-3
    _report(2, "join-ansatz-ratio", ok,
            f"ratio {opt.ratio:.7f}, target defect {defect:.2e}")


def test_criterion_03_profile_minimization():
    t0 = time.time()
    opt = el.minimize_profile(k=2, l=1, kappa=KAPPA_CAL)
    elapsed = time.time() - t0
    ok = 1.045 <= opt.ratio <= 1.0518 and elapsed <= 300.0
    _report(3, "profile-minimization", ok,
            f"ratio {opt.ratio:.7f} in [1.045, 1.0518], {elapsed:.1f}s")


def test_criterion_04_quartic_minimizers():
    details, ok = [], True
    for k in (2, 4):
        m = make_map("gamma_hopf", gamma="hopf_minus", k=k)
        q = hopf_invariant(m)
        rep = bounds_report(replace(integrate_energy(m), charge=q))
        e_rel = abs(rep.e_sigma2 - 4 * PI2 * k * k) / (4 * PI2 * k * k)
        q_def = abs(q.value - k * k / 4.0)
        slack = abs(rep.bound_slack) / rep.bound_value
        ok = ok and e_rel < 1e-8 and q_def < 1e-6 and slack < 1e-6
        details.append(f"k={k}: E rel {e_rel:.1e}, Q defect {q_def:.1e}, "
                       f"slack {slack:.1e}")
    _report(4, "quartic-minimizers", ok, "; ".join(details))


def test_criterion_05_criticality_suite():
    sups = {}
    for b in (0.3, 1.0):
        rep = el.residual_2target(make_map("henon", a=1.4, b=b), n=64)
        sups[f"henon(b={b})"] = max(rep.sup_norms)
    mg = make_map("gamma_hopf", gamma="hopf_minus", k=2)
    sups["gamma_hopf/fh"] = max(el.residual_2target(mg, n=64).sup_norms)
    sups["gamma_hopf/submersion"] = max(
        el.residual_4harmonic(mg, n=64).sup_norms)
    for lam in (0.5, 1.0, 2.0):
        rep = el.residual_3target(make_map("identity", lam=lam), n=48)
        sups[f"homothety({lam})"] = max(rep.sup_norms)
    sups["unit-tangent-ode"] = max(el.nomizu_residual("id_pi4", 1).sup_norms)
    for (k, l) in ((1, 1), (2, 1), (2, 3)):
        dom = deform_metric(make_chart("s3_join"), "hopf_squash", k=k, l=l)
        m = make_map("alpha_hopf", alpha="double", k=k, l=l, domain=dom)
        sups[f"fibration({k},{l})"] = max(
            el.residual_4harmonic(m, n=64).sup_norms)
    for a in (0.5, 2.0):
        rep = el.residual_contact(make_map("heis_dilation", a=a), n=27)
        sups[f"heis({a})"] = max(rep.sup_norms)
    worst = max(sups.values())
    ok = worst < 1e-6
    worst_name = max(sups, key=sups.get)
    _report(5, "criticality-suite", ok,
            f"{len(sups)} systems, worst sup {worst:.2e} at {worst_name}")


def test_criterion_06_stability_threshold():
    chart = make_chart("s3_suspension")
    rule = product_rule(chart, order=24)
    scan = st.threshold_scan(1.0, chart=chart, rule=rule)
    lam_defect = abs(scan.lam_star - 0.7071)
    hess = st.hessian_homothety(st.conformal_fields(chart)[0], lam=1.0,
                                kappa=1.0, form="full", rule=rule)
    h_rel = abs(hess.value - 1.5 * PI2) / (1.5 * PI2)
    ok = lam_defect < 1e-3 and h_rel < 1e-6
    _report(6, "stability-threshold", ok,
            f"lam* {scan.lam_star:.6f} (defect {lam_defect:.1e}), "
            f"Hessian rel {h_rel:.1e}")


def test_criterion_07_integral_identity():
    chart = make_chart("s3_join")
    rule = product_rule(chart, order=24)
    ctx = st._ChartContext(chart, rule.nodes)
    fields = st.band_limited_fields(chart, seed=SEED, count=200, band=2)
    residuals = np.array([st.yano_residual(f, rule, ctx) for f in fields])
    worst = float(np.max(residuals))
    ok = bool(np.all(residuals < 1e-6))
    _report(7, "integral-identity", ok,
            f"200 fields, max relative residual {worst:.2e}")


def test_criterion_08_newton_inequalities():
    zoo = [
        make_map("identity"),
        make_map("identity", lam=2.0),
        make_map("alpha_join", alpha="arccos_cos2", k=2, l=1),
        make_map("nomizu", alpha="id_pi4", k=3),
        make_map("suspension", f="id_pi", winding=2),
        make_map("heis_dilation", a=2.0),
        make_map("torus_contacto", f="sin", a=2),
        make_map("sphere_contacto", A="one", k=1),
    ]
    worst_violation = 0.0
    eq_defect = 0.0
    for m in zoo:
        pts = m.grid_points(64, margin_frac=0.01)
        an = analyze_points(m, pts)
        margin = an.sigma1 ** 2 / 3.0 - an.sigma2
        worst_violation = max(worst_violation, float(-np.min(margin)))
        if m.name == "identity":
            eq_defect = max(eq_defect, float(np.max(np.abs(margin))))
    chart = make_chart("s3_join")
    x = chart.interior_points(12, margin=0.05)
    ctx = st._ChartContext(chart, x)
    fields = st.band_limited_fields(chart, seed=SEED + 1, count=20, band=2)
    f_min = min(float(np.min(st.divergence_inequality_margin(f, x, ctx)))
                for f in fields)
    conf_eq = float(np.max(np.abs(st.divergence_inequality_margin(
        st.conformal_fields(chart)[0], x, ctx))))
    ok = (worst_violation < 1e-10 and eq_defect < 1e-8
          and f_min > -1e-10 and conf_eq < 1e-8)
    _report(8, "newton-inequalities", ok,
            f"zoo of {len(zoo)} on 64^3 grids, violation {worst_violation:.1e}, "
            f"homothety equality {eq_defect:.1e}, field margin {f_min:.1e}, "
            f"conformal equality {conf_eq:.1e}")


def test_criterion_09_charge_table():
    rows, ok = [], True

    def check(label, info, expected, tol):
        nonlocal ok
        defect = abs(info.value - expected)
        ok = ok and info.snapped is not None and defect <= tol
        rows.append(f"{label}={info.value:g}")

    for (k, l, alpha) in ((1, 1, "id_pi2"), (2, 1, "arccos_cos2"),
                          (3, 2, "arccos_cos2")):
        check(f"join({k},{l})",
              degree(make_map("alpha_join", alpha=alpha, k=k, l=l)),
              k * l, 1e-4)
    for k in (1, 3):
        check(f"ut({k})", degree(make_map("nomizu", alpha="id_pi4", k=k)),
              k, 1e-4)
    for (k, l) in ((1, 1), (2, 3)):
        check(f"hopf({k},{l})",
              hopf_invariant(make_map("alpha_hopf", alpha="double",
                                      k=k, l=l)), k * l, 1e-4)
    for a in (2, 3):
        m = make_map("torus_contacto", f="sin", a=a)
        expected = a * a * m.domain.volume / m.codomain.volume
        check(f"contacto({a})", degree(m), expected, 1e-6)
    _report(9, "charge-table", ok, ", ".join(rows))


def test_criterion_10_conformal_invariance():
    m4 = el.t4_to_t2_test_map()
    sig = el.random_smooth_factor(m4.domain, seed=SEED, amplitude=0.15)
    inv4 = el.conformal_invariance_check(m4, sig, n=48)

    m32 = make_map("gamma_hopf", gamma="hopf_minus", k=2)
    sig2 = el.random_smooth_factor(m32.domain, seed=SEED + 1, amplitude=0.1)

    def vert(y):
        y = np.asarray(y, dtype=float)
        v = np.zeros(y.shape[:-1] + (1, 3))
        v[..., 0, 0] = 1.0
        return v

    inv32 = el.conformal_invariance_check(
        m32, sig2, rho_fn=lambda y: sig2(y) ** 2, vertical_frame_fn=vert,
        n=48)
    ok = inv4.mismatch < 1e-5 and inv32.mismatch < 1e-5
    _report(10, "conformal-invariance", ok,
            f"4d mismatch {inv4.mismatch:.2e}, "
            f"3-to-2 mismatch {inv32.mismatch:.2e}")


def test_criterion_11_out_of_scope_boundary():
    # full 3d free minimization and knotted-soliton relaxation are
    # deliberately excluded; the registry must not promise them, and the
    # in-scope descent (criterion 3) plus residual checks (criterion 5)
    # stand in for them
    names = case_names()
    excluded = [n for n in names
                if "relax" in n or "rational-map" in n or "knot" in n]
    ok = not excluded and "profile-minimizer" in names
    _report(11, "scope-boundary", ok,
            f"{len(names)} canned cases, no full-scale minimization cases")
