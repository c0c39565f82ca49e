"""Second-variation forms, integral identities, and stability thresholds."""
import numpy as np
import pytest

from sigma_energy import stability as st
from sigma_energy.energy import product_rule
from sigma_energy.geometry import make_chart

PI2 = np.pi ** 2


@pytest.fixture(scope="module")
def sphere():
    chart = make_chart("s3_suspension")
    rule = product_rule(chart, order=20)
    ctx = st._ChartContext(chart, rule.nodes)
    return chart, rule, ctx


@pytest.fixture(scope="module")
def join_sphere():
    chart = make_chart("s3_join")
    rule = product_rule(chart, order=20)
    ctx = st._ChartContext(chart, rule.nodes)
    return chart, rule, ctx


def test_conformal_field_integrals(sphere):
    # gradient of the ambient height function: closed forms 6 pi^2, 4.5 pi^2
    chart, rule, ctx = sphere
    field = st.conformal_fields(chart)[0]
    ints = st.field_integrals(field, rule, ctx)
    assert ints.j_lie == pytest.approx(6 * PI2, rel=1e-9)
    assert ints.j_div == pytest.approx(4.5 * PI2, rel=1e-9)


def test_killing_fields_have_zero_lie_derivative(sphere):
    chart, rule, ctx = sphere
    for field in st.killing_fields(chart):
        ints = st.field_integrals(field, rule, ctx)
        assert abs(ints.j_lie) < 1e-12
        assert abs(ints.j_div) < 1e-12


def test_yano_identity_on_sampled_fields(join_sphere):
    chart, rule, ctx = join_sphere
    fields = st.band_limited_fields(chart, seed=20250825, count=20, band=2)
    for field in fields:
        assert st.yano_residual(field, rule, ctx) < 1e-8


def test_band_limited_fields_are_seeded(join_sphere):
    chart, rule, ctx = join_sphere
    a = st.band_limited_fields(chart, seed=3, count=2, band=2)
    b = st.band_limited_fields(chart, seed=3, count=2, band=2)
    x = chart.interior_points(4, margin=0.2)
    assert np.array_equal(a[0].components(x), b[0].components(x))
    c = st.band_limited_fields(chart, seed=4, count=2, band=2)
    assert not np.array_equal(a[0].components(x), c[0].components(x))


def test_conformal_hessian_closed_form(sphere):
    # at unit coupling and unit dilation the value is 3 pi^2 / 2
    chart, rule, ctx = sphere
    field = st.conformal_fields(chart)[0]
    rep = st.hessian_homothety(field, lam=1.0, kappa=1.0, form="full",
                               rule=rule, ctx=ctx)
    assert rep.value == pytest.approx(1.5 * PI2, rel=1e-9)


def test_hessian_forms_consistency(sphere):
    # the pointwise-Bochner and Lie-derivative forms agree through the
    # integral identity for every sampled field
    chart, rule, ctx = sphere
    fields = st.band_limited_fields(chart, seed=9, count=5, band=2)
    for field in fields:
        a = st.hessian_homothety(field, kappa=1.0, form="sigma2",
                                 rule=rule, ctx=ctx)
        b = st.hessian_homothety(field, kappa=1.0, form="sigma2_rough",
                                 rule=rule, ctx=ctx)
        scale = max(1.0, abs(a.value))
        assert abs(a.value - b.value) / scale < 1e-8


def test_dirichlet_form_is_yano_defect(sphere):
    # rough Laplacian minus Ricci: zero for Killing fields
    chart, rule, ctx = sphere
    for field in st.killing_fields(chart):
        rep = st.hessian_homothety(field, kappa=1.0, form="dirichlet",
                                   rule=rule, ctx=ctx)
        assert abs(rep.value) < 1e-8


@pytest.mark.parametrize("kappa,expected", [(1.0, 1.0 / np.sqrt(2.0)),
                                            (4.0, 1.0 / np.sqrt(8.0))])
def test_threshold_closed_form(kappa, expected):
    chart = make_chart("s3_suspension")
    rule = product_rule(chart, order=16)
    scan = st.threshold_scan(kappa, chart=chart, rule=rule)
    assert scan.lam_star == pytest.approx(expected, abs=1e-4)
    assert scan.lam_star_bisect == pytest.approx(expected, abs=1e-4)
    assert scan.binding_field


def test_threshold_splits_killing_from_conformal():
    chart = make_chart("s3_suspension")
    rule = product_rule(chart, order=16)
    scan = st.threshold_scan(1.0, chart=chart, rule=rule)
    per = dict(scan.per_field)
    # rotations never destabilize; at least one conformal direction does
    assert any(v is None for v in per.values())
    assert any(v is not None for v in per.values())


def test_stability_above_threshold(sphere):
    chart, rule, ctx = sphere
    field = st.conformal_fields(chart)[0]
    lam_star = 1.0 / np.sqrt(2.0)
    above = st.hessian_homothety(field, lam=lam_star * 1.05, kappa=1.0,
                                 form="full", rule=rule, ctx=ctx)
    below = st.hessian_homothety(field, lam=lam_star * 0.95, kappa=1.0,
                                 form="full", rule=rule, ctx=ctx)
    assert above.value > 0
    assert below.value < 0


def test_hopf_hessian_vanishes_on_fiber_rotation(join_sphere):
    chart, rule, _ = join_sphere
    fields = st.hopf_fields(chart)
    values = [st.hessian_hopf(f, rule).value for f in fields]
    assert min(abs(v) for v in values) < 1e-9      # the fiber direction
    assert all(v > -1e-8 for v in values)          # never destabilizing


def test_hopf_hessian_requires_contact_chart():
    chart = make_chart("s2")
    rule = product_rule(chart, order=12)
    with pytest.raises(ValueError):
        st.hessian_hopf(st.conformal_fields(chart)[0], rule)


def test_divergence_inequality_pointwise(join_sphere):
    chart, rule, ctx0 = join_sphere
    x = chart.interior_points(10, margin=0.1)
    ctx = st._ChartContext(chart, x)
    fields = st.band_limited_fields(chart, seed=21, count=10, band=2)
    for field in fields:
        margin = st.divergence_inequality_margin(field, x, ctx)
        assert np.min(margin) > -1e-10


def test_divergence_inequality_equality_cases(join_sphere):
    chart, _, _ = join_sphere
    x = chart.interior_points(8, margin=0.15)
    ctx = st._ChartContext(chart, x)
    conf = st.conformal_fields(chart)[0]
    assert np.max(np.abs(
        st.divergence_inequality_margin(conf, x, ctx))) < 1e-8
    flat = make_chart("t3_flat")
    y = flat.interior_points(5)
    dil = st.coordinate_dilation_field(flat)
    assert np.max(np.abs(st.divergence_inequality_margin(
        dil, y, st._ChartContext(flat, y)))) < 1e-12


def test_ambient_field_is_tangential(join_sphere):
    # fields built by projecting ambient polynomials stay tangent: their
    # pairing with the embedding normal vanishes
    chart, _, _ = join_sphere
    x = chart.interior_points(6, margin=0.1)
    field = st.band_limited_fields(chart, seed=5, count=1, band=2)[0]
    J = chart.embedding_jac_fn(x)
    ambient = np.einsum("...ai,...i->...a", J, field.components(x))
    p = chart.embedding_fn(x)
    radial = np.einsum("...a,...a->...", ambient, p)
    assert np.max(np.abs(radial)) < 1e-10
