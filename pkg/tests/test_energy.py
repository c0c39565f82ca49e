"""Quadrature, energies, charges, and topological bounds."""
from dataclasses import replace

import numpy as np
import pytest

from sigma_energy.energy import (KAPPA_CAL, TWELVE_PI2, bounds_report,
                                 charge_for_map, degree, hopf_invariant,
                                 integrate_energy, minimize_over_radius,
                                 product_rule, reduced_rule, rule_for_map)
from sigma_energy.geometry import make_chart
from sigma_energy.maps import make_map

PI2 = np.pi ** 2


def test_identity_energies_closed_form():
    # identity at dilation lam on the radius-1/lam sphere:
    # E_s1 = 3 pi^2 / lam, E_s2 = 3 pi^2 lam
    for lam in (1.0, 2.0):
        rep = integrate_energy(make_map("identity", lam=lam), kappa=1.0)
        assert rep.e_sigma1 == pytest.approx(3 * PI2 / lam, rel=1e-12)
        assert rep.e_sigma2 == pytest.approx(3 * PI2 * lam, rel=1e-12)


def test_identity_radius_optimum_is_calibrated():
    opt = minimize_over_radius(make_map("identity"), kappa=KAPPA_CAL)
    assert abs(opt.ratio - 1.0) < 1e-10
    assert abs(opt.r_star - 2.0) < 1e-10
    assert abs(opt.e_min - TWELVE_PI2) < 1e-8
    assert opt.golden_defect < 1e-8
    assert opt.quadrature_defect < 1e-8


def test_constant_map_energy_is_zero():
    rep = integrate_energy(make_map("constant"), kappa=4.0)
    assert rep.e_sigma1 == 0.0
    assert rep.e_sigma2 == 0.0
    assert rep.e_total == 0.0


def test_quadrature_volume_and_refinement():
    chart = make_chart("s3_join")
    rule = product_rule(chart, order=24)
    assert rule.volume == pytest.approx(chart.volume, rel=1e-12)
    # energies must be stable under doubling the order
    m = make_map("alpha_join", alpha="arccos_cos2", k=2, l=1)
    r1 = rule_for_map(m)
    e1 = integrate_energy(m, kappa=1.0, rule=r1)
    e2 = integrate_energy(m, kappa=1.0, rule=r1.refined())
    assert abs(e2.e_total - e1.e_total) / e1.e_total < 1e-7


def test_reduced_rule_matches_full_product():
    m = make_map("gamma_hopf", gamma="hopf_minus", k=2)
    red = integrate_energy(m, kappa=1.0, rule=rule_for_map(m))
    full = integrate_energy(m, kappa=1.0,
                            rule=rule_for_map(m, force_full=True))
    assert red.e_sigma1 == pytest.approx(full.e_sigma1, rel=1e-9)
    assert red.e_sigma2 == pytest.approx(full.e_sigma2, rel=1e-9)


def test_negative_coupling_rejected():
    with pytest.raises(ValueError):
        integrate_energy(make_map("identity"), kappa=-1.0)


@pytest.mark.parametrize("family,kw,expected", [
    ("identity", {}, 1),
    ("alpha_join", {"alpha": "arccos_cos2", "k": 2, "l": 1}, 2),
    ("alpha_join", {"alpha": "arccos_cos2", "k": 3, "l": 2}, 6),
    ("nomizu", {"alpha": "id_pi4", "k": 3}, 3),
    ("suspension", {"f": "id_pi", "winding": 2}, 2),
    ("degree_k_sphere", {"k": 4}, 4),
])
def test_degree_integrality(family, kw, expected):
    info = degree(make_map(family, **kw))
    assert info.snapped is not None
    assert info.value == expected
    assert info.defect < 1e-6


def test_degree_refuses_noncompact():
    with pytest.raises(ValueError):
        degree(make_map("henon"))


def test_degree_refuses_dimension_mismatch():
    with pytest.raises(ValueError):
        degree(make_map("gamma_hopf", gamma="hopf_minus", k=2))


@pytest.mark.parametrize("k", [2, 4])
def test_hopf_charge_quarter_squares(k):
    q = hopf_invariant(make_map("gamma_hopf", gamma="hopf_minus", k=k))
    assert q.value == pytest.approx(k * k / 4.0, abs=1e-6)


@pytest.mark.parametrize("k,l", [(1, 1), (2, 3)])
def test_hopf_charge_winding_products(k, l):
    q = hopf_invariant(make_map("alpha_hopf", alpha="double", k=k, l=l))
    assert q.value == pytest.approx(k * l, abs=1e-4)


def test_charge_dispatch():
    assert charge_for_map(make_map("identity")).kind == "degree"
    assert charge_for_map(
        make_map("gamma_hopf", gamma="hopf_minus", k=2)).kind == "hopf"
    assert charge_for_map(make_map("henon")) is None


@pytest.mark.parametrize("k", [2, 4])
def test_quartic_bound_attained_by_fiberwise_family(k):
    m = make_map("gamma_hopf", gamma="hopf_minus", k=k)
    rep = integrate_energy(m, kappa=0.0)
    rep = bounds_report(replace(rep, charge=hopf_invariant(m)))
    target = 4 * PI2 * k * k
    assert rep.e_sigma2 == pytest.approx(target, rel=1e-8)
    assert rep.bound_attained
    assert abs(rep.bound_slack) / rep.bound_value < 1e-6


def test_coupled_bound_for_degree_maps():
    m = make_map("alpha_join", alpha="arccos_cos2", k=2, l=1)
    opt = minimize_over_radius(m, kappa=KAPPA_CAL)
    # per-charge ratio sits a fraction of a percent above the bound
    assert opt.ratio == pytest.approx(1.05175, abs=1e-3)
    assert opt.ratio > 1.0
    assert opt.ratio_unnormalized == pytest.approx(2 * opt.ratio, rel=1e-12)


def test_radius_optimum_scaling_consistency():
    # minimizing after a pre-scale must land on the same energy
    m = make_map("gamma_hopf", gamma="hopf_minus", k=2)
    from sigma_energy.maps import scale_domain
    a = minimize_over_radius(m, kappa=KAPPA_CAL)
    b = minimize_over_radius(scale_domain(m, 1.6), kappa=KAPPA_CAL)
    assert a.e_min == pytest.approx(b.e_min, rel=1e-10)
    assert a.r_star == pytest.approx(1.6 * b.r_star, rel=1e-10)


def test_bounds_report_requires_charge():
    rep = integrate_energy(make_map("henon"), kappa=0.0)
    with pytest.raises(ValueError):
        bounds_report(rep)
