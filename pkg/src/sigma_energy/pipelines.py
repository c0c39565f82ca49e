"""Named analysis pipelines shared by the command-line tool and the HTTP
service.  Every pipeline takes a RunConfig and returns a RunResult holding a
JSON-ready report, optional CSV tables, and optional plot series.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, replace as dc_replace
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from . import euler_lagrange as el
from . import stability as st
from .config import RunConfig
from .distortion import analyze_points, classify
from .energy import (KAPPA_CAL, TWELVE_PI2, COMPARISON_RATIO_B2, EnergyReport,
                     bounds_report, charge_for_map, degree, hopf_invariant,
                     integrate_energy, minimize_over_radius, product_rule,
                     rule_for_map)
from .geometry import deform_metric, make_chart
from .maps import MapFamily, make_map, scale_domain

Array = np.ndarray


def to_jsonable(obj):
    """Recursively convert report objects into plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    return str(obj)


@dataclass(frozen=True)
class Table:
    name: str
    header: tuple
    rows: tuple

    def to_csv(self) -> str:
        lines = [",".join(str(h) for h in self.header)]
        for row in self.rows:
            lines.append(",".join(_csv_cell(v) for v in row))
        return "\n".join(lines) + "\n"


def _csv_cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


@dataclass(frozen=True)
class RunResult:
    command: str
    report: dict
    tables: tuple = ()
    plotdata: tuple = ()
    exit_code: int = 0


# ---------------------------------------------------------------------------
# map construction from configuration


def build_map(cfg: RunConfig) -> MapFamily:
    fam = cfg["map.family"]
    kw = {}
    if cfg["map.alpha"]:
        kw["alpha"] = cfg["map.alpha"]
    if cfg["map.gamma"]:
        kw["gamma"] = cfg["map.gamma"]
    if cfg["map.f"]:
        kw["f"] = cfg["map.f"]
    if fam in ("alpha_join", "alpha_hopf", "nomizu", "gamma_hopf",
               "degree_k_sphere"):
        kw["k"] = cfg["map.k"]
    if fam in ("alpha_join", "alpha_hopf"):
        kw["l"] = cfg["map.l"]
    if fam == "suspension":
        kw["winding"] = cfg["map.winding"]
    if fam in ("henon",):
        kw["a"] = cfg["map.a"]
        kw["b"] = cfg["map.b"]
    if fam in ("heis_dilation", "heis_shift", "torus_contacto",
               "sphere_contacto"):
        kw["a"] = cfg["map.a"]
    if fam == "identity":
        kw["lam"] = cfg["map.lam"]
        kw["chart"] = cfg["map.chart"]
    if fam == "hedgehog":
        kw["r_max"] = cfg["map.r_max"]
    m = make_map(fam, **kw)
    if cfg["map.squash_k"]:
        dom = deform_metric(make_chart("s3_join"), "hopf_squash",
                            k=cfg["map.squash_k"], l=cfg["map.squash_l"])
        from .maps import with_domain
        m = with_domain(m, dom)
    if cfg["radius"] != 1.0:
        m = scale_domain(m, cfg["radius"])
    return m


# ---------------------------------------------------------------------------
# plain pipelines


def run_analyze(cfg: RunConfig) -> RunResult:
    m = build_map(cfg)
    pts = m.sample_points(min(cfg["grid.n"], 256), seed=cfg["seed"])
    an = analyze_points(m, pts)
    cls = classify(m, n=min(cfg["grid.n"], 256))
    report = {
        "map": m.name, "params": to_jsonable(m.params),
        "n_points": int(pts.shape[0]),
        "sigma1_range": [float(np.min(an.sigma1)), float(np.max(an.sigma1))],
        "sigma2_range": [float(np.min(an.sigma2)), float(np.max(an.sigma2))],
        "classification": to_jsonable(asdict(cls)),
        "config": cfg.render(),
    }
    rows = tuple(
        (i, *[float(v) for v in an.lambdas2[i]], float(an.sigma1[i]),
         float(an.sigma2[i]))
        for i in range(min(32, pts.shape[0])))
    tab = Table("spectrum", ("index",) + tuple(
        f"lambda{j+1}_sq" for j in range(an.lambdas2.shape[1]))
        + ("sigma1", "sigma2"), rows)
    return RunResult("analyze", report, tables=(tab,))


def run_energy(cfg: RunConfig) -> RunResult:
    m = build_map(cfg)
    rep = integrate_energy(m, kappa=cfg["kappa"],
                           order_1d=cfg["quad.order_1d"],
                           order_3d=cfg["quad.order_3d"])
    ch = charge_for_map(m)
    if ch is not None:
        rep = dc_replace(rep, charge=ch)
        rep = bounds_report(rep)
    if m.domain.dim == 3 and cfg["kappa"] > 0:
        try:
            opt = minimize_over_radius(m, kappa=cfg["kappa"], charge=ch)
            rep = dc_replace(rep, radius_opt=opt)
        except ValueError:
            pass
    out = rep.to_dict()
    out["config"] = cfg.render()
    return RunResult("energy", to_jsonable(out))


def _auto_system(m: MapFamily) -> str:
    if m.name == "nomizu":
        return "nomizu"
    if m.codomain.dim == 2:
        return "fh"
    if m.name in ("heis_dilation", "heis_shift", "torus_contacto",
                  "sphere_contacto"):
        return "contactsig3"
    return "sig3"


def run_critical(cfg: RunConfig) -> RunResult:
    m = build_map(cfg)
    system = cfg["system"]
    if system == "auto":
        system = _auto_system(m)
    tol = cfg["tol.critical"] or None
    n = cfg["grid.n"]
    if system in ("fh", "area2d"):
        rep = el.residual_2target(m, n=n, tol=tol)
    elif system == "sig3":
        rep = el.residual_3target(m, n=n, tol=tol)
    elif system == "harmonic":
        rep = el.residual_harmonic(m, n=n, tol=tol)
    elif system == "contactsig3":
        rep = el.residual_contact(m, n=n, tol=tol)
    elif system == "fourharm":
        rep = el.residual_4harmonic(m, n=n, tol=tol)
    elif system == "nomizu":
        rep = el.nomizu_residual(m.params.get("alpha", "id_pi4"),
                                 int(m.params.get("k", cfg["map.k"])), n=n)
    else:
        raise ValueError(f"unknown criticality system {system!r}")
    out = rep.to_dict()
    out["map"] = m.name
    out["params"] = to_jsonable(m.params)
    out["config"] = cfg.render()
    rows = tuple((name, sup, l2) for name, sup, l2
                 in zip(rep.equation_names, rep.sup_norms, rep.l2_norms))
    tab = Table("residual_norms", ("equation", "sup", "l2"), rows)
    return RunResult("critical", to_jsonable(out), tables=(tab,),
                     exit_code=0)


def _minimize_log_table(opt) -> Table:
    return Table(
        "minimize_log",
        ("iteration", "e_min", "r_star", "ratio", "sigma2_ode_sup",
         "coupled_grad_sup"),
        tuple((e["iteration"], e["e_min"], e["r_star"], e["ratio"],
               e["sigma2_ode_sup"], e["coupled_grad_sup"])
              for e in opt.log))


def _minimize_plots(opt) -> Tuple[Table, ...]:
    ratio_tab = Table(
        "ratio_history", ("iteration", "ratio"),
        tuple((e["iteration"], e["ratio"]) for e in opt.log))
    resid_tab = Table(
        "residual_history",
        ("iteration", "sigma2_ode_sup", "coupled_grad_sup"),
        tuple((e["iteration"], e["sigma2_ode_sup"], e["coupled_grad_sup"])
              for e in opt.log))
    return (ratio_tab, resid_tab)


def run_minimize(cfg: RunConfig) -> RunResult:
    opt = el.minimize_profile(k=cfg["map.k"], l=cfg["map.l"],
                              kappa=cfg["kappa"],
                              n_prof=cfg["minimize.n_prof"],
                              max_iter=cfg["minimize.max_iter"])
    report = {
        "ratio": opt.ratio,
        "iterations": opt.iterations,
        "converged": opt.converged,
        "energy": to_jsonable(opt.report.to_dict()),
        "comparison_ratio": COMPARISON_RATIO_B2,
        "config": cfg.render(),
    }
    log_tab = _minimize_log_table(opt)
    s, a = opt.profile.to_grid(241)
    prof_tab = Table("profile", ("s", "alpha"),
                     tuple((float(si), float(ai)) for si, ai in zip(s, a)))
    return RunResult("minimize-profile", to_jsonable(report),
                     tables=(log_tab,),
                     plotdata=_minimize_plots(opt) + (prof_tab,))


def run_stability(cfg: RunConfig) -> RunResult:
    chart = make_chart("s3_suspension")
    rule = product_rule(chart, order=24)
    scan = st.threshold_scan(cfg["kappa"], chart=chart, rule=rule)
    conf = st.conformal_fields(chart)[0]
    hess = st.hessian_homothety(conf, lam=cfg["stability.lam"],
                                kappa=cfg["kappa"],
                                form=cfg["stability.form"], rule=rule)
    fields = st.band_limited_fields(chart, seed=cfg["seed"],
                                    count=min(cfg["stability.count"], 64),
                                    band=cfg["stability.band"])
    ctx = st._ChartContext(chart, rule.nodes)
    residuals = [st.yano_residual(f, rule, ctx) for f in fields]
    report = {
        "threshold": to_jsonable(scan.to_dict()),
        "hessian": to_jsonable(hess.to_dict()),
        "yano_max_residual": float(max(residuals)),
        "yano_fields": len(residuals),
        "config": cfg.render(),
    }
    tab = Table("thresholds", ("field", "lam_star"),
                tuple((nm, "" if v is None else v)
                      for nm, v in scan.per_field))
    return RunResult("stability", to_jsonable(report), tables=(tab,))


# ---------------------------------------------------------------------------
# reproduction cases


@dataclass(frozen=True)
class CaseResult:
    name: str
    claim: str
    passed: bool
    values: dict
    targets: dict
    tables: tuple = ()
    plotdata: tuple = ()

    def to_dict(self) -> dict:
        return {"name": self.name, "claim": self.claim,
                "passed": self.passed,
                "values": to_jsonable(self.values),
                "targets": to_jsonable(self.targets)}


def _case_identity_ratio(cfg: RunConfig) -> CaseResult:
    m = make_map("identity")
    opt = minimize_over_radius(m, kappa=KAPPA_CAL)
    values = {
        "ratio": opt.ratio, "r_star": opt.r_star, "e_min": opt.e_min,
        "golden_defect": opt.golden_defect,
        "quadrature_defect": opt.quadrature_defect,
    }
    targets = {"ratio": 1.0, "r_star": 2.0, "tol": 1e-10,
               "cross_check_tol": 1e-8}
    passed = (abs(opt.ratio - 1.0) < 1e-10 and abs(opt.r_star - 2.0) < 1e-10
              and opt.golden_defect < 1e-8 and opt.quadrature_defect < 1e-8)
    return CaseResult(
        "identity-ratio",
        "With the calibrated coupling, the identity configuration on the "
        "3-sphere attains the normalized energy bound exactly: ratio 1 at "
        "optimal radius 2.",
        passed, values, targets)


def _case_alpha_join_ratio(cfg: RunConfig) -> CaseResult:
    m = make_map("alpha_join", alpha="arccos_cos2", k=2, l=1)
    opt = minimize_over_radius(m, kappa=KAPPA_CAL)
    res = el.residual_3target(m, n=cfg["grid.n"])
    values = {"ratio": opt.ratio, "r_star": opt.r_star,
              "charge": opt.charge.value if opt.charge else None,
              "sigma2_residual_sup": max(res.sup_norms),
              "critical": res.critical}
    targets = {"ratio": 1.05175, "tol": 1e-3,
               "residual_sup_exceeds": 0.01}
    passed = (abs(opt.ratio - 1.05175) < 1e-3
              and max(res.sup_norms) > 0.01 and not res.critical)
    return CaseResult(
        "alpha-join-ratio",
        "The closed-form degree-2 join profile reaches a per-charge ratio "
        "of 1.05175 but fails the quartic criticality system, so it is a "
        "good yet non-optimal trial configuration.",
        passed, values, targets)


def _case_faddeev_minimizer(cfg: RunConfig, k: int) -> CaseResult:
    m = make_map("gamma_hopf", gamma="hopf_minus", k=k)
    q = hopf_invariant(m)
    rep = integrate_energy(m, kappa=0.0)
    rep = bounds_report(dc_replace(rep, charge=q))
    res_fh = el.residual_2target(m, n=cfg["grid.n"])
    values = {"e_sigma2": rep.e_sigma2, "q": q.value, "q_raw": q.raw,
              "bound_value": rep.bound_value, "bound_slack": rep.bound_slack,
              "attained": rep.bound_attained,
              "fh_residual_sup": max(res_fh.sup_norms)}
    e_target = 4.0 * np.pi ** 2 * k * k
    targets = {"e_sigma2": e_target, "rel_tol": 1e-8,
               "q": k * k / 4.0, "q_tol": 1e-6, "slack_tol": 1e-6,
               "residual_tol": res_fh.tol}
    passed = (abs(rep.e_sigma2 - e_target) / e_target < 1e-8
              and abs(q.value - k * k / 4.0) < 1e-6
              and rep.bound_attained
              and res_fh.critical)
    extra = True
    if k == 2:
        res4 = el.residual_4harmonic(m, n=cfg["grid.n"])
        values["fourharm_residual_sup"] = max(res4.sup_norms)
        extra = res4.critical
    return CaseResult(
        f"faddeev-minimizer-k{k}",
        f"The fiberwise winding-{k} configuration on the 3-sphere attains "
        "the quartic topological bound exactly: its quartic energy equals "
        "16 pi^2 times the invariant, and the criticality system vanishes.",
        passed and extra, values, targets)


def _case_hopf_critical(cfg: RunConfig) -> CaseResult:
    values, ok = {}, True
    for (k, l) in ((1, 1), (2, 1), (2, 3)):
        dom = deform_metric(make_chart("s3_join"), "hopf_squash", k=k, l=l)
        m = make_map("alpha_hopf", alpha="double", k=k, l=l, domain=dom)
        res = el.residual_4harmonic(m, n=cfg["grid.n"])
        q = hopf_invariant(m)
        values[f"({k},{l})"] = {"residual_sup": max(res.sup_norms),
                                "q": q.value}
        ok = ok and res.critical and abs(q.value - k * l) < 1e-6
    targets = {"residual_tol": 1e-6, "q": "k*l"}
    return CaseResult(
        "hopf-critical",
        "Fibrations with doubled profile over squashed 3-spheres satisfy "
        "the conformal-submersion criticality system for every tested "
        "winding pair, with the expected linking invariant.",
        ok, values, targets)


def _case_henon_critical(cfg: RunConfig) -> CaseResult:
    values, ok = {}, True
    for b in (0.3, 1.0):
        m = make_map("henon", a=1.4, b=b)
        res = el.residual_2target(m, n=cfg["grid.n"])
        values[f"b={b}"] = {"residual_sup": max(res.sup_norms),
                            "critical": res.critical}
        ok = ok and res.critical
    return CaseResult(
        "henon-critical",
        "Planar quadratic maps with constant Jacobian determinant are "
        "critical for the quartic energy in two dimensions, for any "
        "parameter values.",
        ok, values, {"residual_tol": 1e-6})


def _case_nomizu(cfg: RunConfig) -> CaseResult:
    rep1 = el.nomizu_residual("id_pi4", 1)
    rep3 = el.nomizu_residual("id_pi4", 3)
    m1 = make_map("nomizu", alpha="id_pi4", k=1)
    d1 = degree(m1)
    m3 = make_map("nomizu", alpha="id_pi4", k=3)
    d3 = degree(m3)
    values = {"k1_residual_sup": max(rep1.sup_norms),
              "k3_residual_sup": max(rep3.sup_norms),
              "k1_degree": d1.value, "k3_degree": d3.value}
    passed = (rep1.critical and max(rep3.sup_norms) > 0.1
              and d1.value == 1 and d3.value == 3)
    return CaseResult(
        "nomizu-k1",
        "The linear profile solves the unit-tangent-chart profile equation "
        "for winding 1 (and only for winding 1); the family realizes every "
        "odd degree.",
        passed, values, {"k1_tol": 1e-6, "k3_exceeds": 0.1})


def _case_threshold(cfg: RunConfig) -> CaseResult:
    chart = make_chart("s3_suspension")
    rule = product_rule(chart, order=24)
    scan = st.threshold_scan(1.0, chart=chart, rule=rule)
    conf = st.conformal_fields(chart)[0]
    hess = st.hessian_homothety(conf, lam=1.0, kappa=1.0, form="full",
                                rule=rule)
    target_h = 1.5 * np.pi ** 2
    values = {"lam_star": scan.lam_star,
              "lam_star_bisect": scan.lam_star_bisect,
              "hessian_conformal": hess.value}
    passed = (abs(scan.lam_star - 0.7071) < 1e-3
              and abs(scan.lam_star_bisect - scan.lam_star) < 1e-3
              and abs(hess.value - target_h) / target_h < 1e-6)
    return CaseResult(
        "threshold-kappa1",
        "At unit coupling, homotheties of the 3-sphere lose stability "
        "exactly below dilation 1/sqrt(2); the conformal variation at "
        "dilation 1 has second variation 3 pi^2 / 2.",
        passed, values,
        {"lam_star": 1.0 / np.sqrt(2.0), "tol": 1e-3,
         "hessian": target_h, "rel_tol": 1e-6},
        tables=(Table("thresholds", ("field", "lam_star"),
                      tuple((nm, "" if v is None else v)
                            for nm, v in scan.per_field)),))


def _case_yano(cfg: RunConfig) -> CaseResult:
    chart = make_chart("s3_join")
    rule = product_rule(chart, order=24)
    ctx = st._ChartContext(chart, rule.nodes)
    fields = st.band_limited_fields(chart, seed=cfg["seed"], count=200,
                                    band=2)
    residuals = [st.yano_residual(f, rule, ctx) for f in fields]
    values = {"max_residual": float(max(residuals)),
              "n_fields": len(fields)}
    passed = max(residuals) < 1e-6
    return CaseResult(
        "yano-identity",
        "The integral identity relating the rough Dirichlet integrand, "
        "Ricci term, divergence, and metric Lie derivative vanishes for "
        "200 seeded band-limited fields on the 3-sphere.",
        passed, values, {"rel_tol": 1e-6})


def _case_newton(cfg: RunConfig) -> CaseResult:
    # pointwise sigma2 <= sigma1^2 / 3 over large grids of 3-target maps
    zoo = [
        make_map("identity"),
        make_map("identity", lam=2.0),
        make_map("alpha_join", alpha="arccos_cos2", k=2, l=1),
        make_map("nomizu", alpha="id_pi4", k=3),
        make_map("suspension", f="id_pi", winding=2),
        make_map("heis_dilation", a=2.0),
        make_map("torus_contacto", f="sin", a=2),
    ]
    worst = -np.inf
    eq_defect = None
    per = 40        # 40^3 = 64000 points per family
    values = {}
    for m in zoo:
        pts = m.grid_points(per, margin_frac=0.01)
        an = analyze_points(m, pts)
        margin = an.sigma1 ** 2 / 3.0 - an.sigma2
        mn = float(np.min(margin))
        values[m.name + str(to_jsonable(m.params))] = mn
        worst = max(worst, -mn)
        if m.name == "identity":
            d = float(np.max(np.abs(margin)))
            eq_defect = d if eq_defect is None else max(eq_defect, d)
    # field version on generated variations
    chart = make_chart("s3_join")
    fields = st.band_limited_fields(chart, seed=cfg["seed"] + 1, count=20,
                                    band=2)
    pts = chart.interior_points(12, margin=0.05)
    ctx = st._ChartContext(chart, pts)
    f_min = min(float(np.min(st.divergence_inequality_margin(f, pts, ctx)))
                for f in fields)
    conf = st.conformal_fields(chart)[0]
    conf_eq = float(np.max(np.abs(
        st.divergence_inequality_margin(conf, pts, ctx))))
    values.update({"field_min_margin": f_min,
                   "conformal_equality_defect": conf_eq,
                   "identity_equality_defect": eq_defect})
    passed = (worst < 1e-10 and eq_defect < 1e-8
              and f_min > -1e-10 and conf_eq < 1e-8)
    return CaseResult(
        "newton-inequality",
        "The pairwise eigenvalue sum never exceeds one third of the squared "
        "trace on dense grids of every three-target family, and the "
        "divergence inequality for variation fields holds with equality "
        "exactly in the conformal cases.",
        passed, values, {"violation_tol": 1e-10, "equality_tol": 1e-8})


def _case_conformal_invariance(cfg: RunConfig) -> CaseResult:
    m4 = el.t4_to_t2_test_map()
    sig = el.random_smooth_factor(m4.domain, seed=cfg["seed"],
                                  amplitude=0.15)
    inv4 = el.conformal_invariance_check(m4, sig, n=48)

    mg = make_map("gamma_hopf", gamma="hopf_minus", k=2)
    sig2 = el.random_smooth_factor(mg.domain, seed=cfg["seed"] + 1,
                                   amplitude=0.1)

    def vert(y):
        y = np.asarray(y, dtype=float)
        v = np.zeros(y.shape[:-1] + (1, 3))
        v[..., 0, 0] = 1.0
        return v

    inv32 = el.conformal_invariance_check(
        mg, sig2, rho_fn=lambda y: sig2(y) ** 2, vertical_frame_fn=vert,
        n=48)
    values = {"m4_mismatch": inv4.mismatch, "m4_base_sup": inv4.base_sup,
              "m32_mismatch": inv32.mismatch,
              "m4_factor_defect": inv4.factor_defect,
              "m32_factor_defect": inv32.factor_defect}
    passed = inv4.mismatch < 1e-5 and inv32.mismatch < 1e-5
    return CaseResult(
        "conformal-invariance-m4",
        "The two-target residual covector transforms with the fourth power "
        "of the conformal factor: exactly conformally invariant for 4d "
        "domains, and for 3d domains over 2d targets when the fiber factor "
        "is the square of the horizontal one.",
        passed, values, {"mismatch_tol": 1e-5})


def _case_degree_table(cfg: RunConfig) -> CaseResult:
    rows = []
    ok = True

    def add(label, info, expected, tol):
        nonlocal ok
        defect = abs(info.value - expected)
        good = defect <= tol
        ok = ok and good
        rows.append((label, info.kind, expected, info.raw, info.value,
                     defect, "pass" if good else "FAIL"))

    add("alpha_join(2,1)", degree(make_map(
        "alpha_join", alpha="arccos_cos2", k=2, l=1)), 2, 1e-6)
    add("alpha_join(1,1)", degree(make_map(
        "alpha_join", alpha="id_pi2", k=1, l=1)), 1, 1e-6)
    add("alpha_join(3,2)", degree(make_map(
        "alpha_join", alpha="arccos_cos2", k=3, l=2)), 6, 1e-6)
    add("nomizu(k=1)", degree(make_map("nomizu", alpha="id_pi4", k=1)),
        1, 1e-6)
    add("nomizu(k=3)", degree(make_map("nomizu", alpha="id_pi4", k=3)),
        3, 1e-6)
    add("identity", degree(make_map("identity")), 1, 1e-6)
    add("suspension(w=2)", degree(make_map(
        "suspension", f="id_pi", winding=2)), 2, 1e-6)
    add("degree_k_sphere(4)", degree(make_map("degree_k_sphere", k=4)),
        4, 1e-6)
    for a in (2, 3):
        m = make_map("torus_contacto", f="sin", a=a)
        expected = a * a * m.domain.volume / m.codomain.volume
        add(f"torus_contacto(a={a})", degree(m), expected, 1e-6)
    for (k, l) in ((1, 1), (2, 3)):
        m = make_map("alpha_hopf", alpha="double", k=k, l=l)
        add(f"alpha_hopf({k},{l})", hopf_invariant(m), k * l, 1e-4)
    for k in (2, 4):
        m = make_map("gamma_hopf", gamma="hopf_minus", k=k)
        add(f"gamma_hopf(k={k})", hopf_invariant(m), k * k / 4.0, 1e-6)

    tab = Table("degrees",
                ("map", "kind", "expected", "raw", "snapped", "defect",
                 "status"), tuple(rows))
    values = {r[0]: {"expected": r[2], "computed": r[4], "defect": r[5]}
              for r in rows}
    return CaseResult(
        "degree-table",
        "Every family realizes its designed topological charge: mapping "
        "degrees are integers matching winding products and the linking "
        "invariants land on quarter-integers.",
        ok, values, {"degree_tol": 1e-6, "hopf_tol": 1e-4},
        tables=(tab,))


def _case_minimizer(cfg: RunConfig) -> CaseResult:
    opt = el.minimize_profile(k=cfg["map.k"] if cfg["map.k"] != 1 else 2,
                              l=1, kappa=KAPPA_CAL,
                              n_prof=cfg["minimize.n_prof"],
                              max_iter=cfg["minimize.max_iter"])
    ratios = [e["ratio"] for e in opt.log]
    mono = all(b <= a + 1e-12 for a, b in zip(ratios, ratios[1:]))
    values = {"ratio": opt.ratio, "iterations": opt.iterations,
              "ratio_monotone": mono,
              "final_sigma2_ode_sup": opt.log[-1]["sigma2_ode_sup"],
              "comparison_ratio": COMPARISON_RATIO_B2}
    passed = 1.045 <= opt.ratio <= 1.0518 and mono
    return CaseResult(
        "profile-minimizer",
        "Gradient descent over discretized join profiles drives the "
        "per-charge ratio from 1.2248 (linear profile) below the "
        "closed-form trial value, approaching the best known degree-2 "
        "ratio near 1.0478.",
        passed, values, {"window": [1.045, 1.0518]},
        tables=(_minimize_log_table(opt),), plotdata=_minimize_plots(opt))


_CASES: Dict[str, Callable[[RunConfig], CaseResult]] = {
    "identity-ratio": _case_identity_ratio,
    "alpha-join-ratio": _case_alpha_join_ratio,
    "faddeev-minimizer-k2": lambda cfg: _case_faddeev_minimizer(cfg, 2),
    "faddeev-minimizer-k4": lambda cfg: _case_faddeev_minimizer(cfg, 4),
    "hopf-critical": _case_hopf_critical,
    "henon-critical": _case_henon_critical,
    "nomizu-k1": _case_nomizu,
    "threshold-kappa1": _case_threshold,
    "yano-identity": _case_yano,
    "newton-inequality": _case_newton,
    "conformal-invariance-m4": _case_conformal_invariance,
    "degree-table": _case_degree_table,
    "profile-minimizer": _case_minimizer,
}


def case_names() -> List[str]:
    return list(_CASES)


def reproduce_case(name: str, cfg: RunConfig) -> CaseResult:
    if name not in _CASES:
        raise ValueError(f"unknown case {name!r}; known: "
                         f"{', '.join(_CASES)}")
    return _CASES[name](cfg)


def run_reproduce(cfg: RunConfig, case: Optional[str] = None) -> RunResult:
    name = case or cfg["case"] or "all"
    if name == "all":
        names = case_names()
    else:
        names = [name]
    results = [reproduce_case(nm, cfg) for nm in names]
    report = {
        "cases": [r.to_dict() for r in results],
        "passed": all(r.passed for r in results),
        "config": cfg.render(),
    }
    tables = tuple(t for r in results for t in r.tables)
    plotdata = tuple(p for r in results for p in r.plotdata)
    summary = Table("summary", ("case", "status"),
                    tuple((r.name, "pass" if r.passed else "FAIL")
                          for r in results))
    exit_code = 0 if report["passed"] else 2
    return RunResult("reproduce", to_jsonable(report),
                     tables=(summary,) + tables, plotdata=plotdata,
                     exit_code=exit_code)


COMMANDS = {
    "analyze": run_analyze,
    "energy": run_energy,
    "critical": run_critical,
    "minimize-profile": run_minimize,
    "stability": run_stability,
    "reproduce": run_reproduce,
}


def run_command(command: str, cfg: RunConfig, **kwargs) -> RunResult:
    if command not in COMMANDS:
        raise ValueError(f"unknown command {command!r}; known: "
                         f"{', '.join(COMMANDS)}")
    return COMMANDS[command](cfg, **kwargs)
