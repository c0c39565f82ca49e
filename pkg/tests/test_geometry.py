"""Chart-level checks: metrics, embeddings, connections, curvature."""
import numpy as np
import pytest

from sigma_energy.geometry import (FrameField, connection_coeffs,
                                   contact_defect, deform_metric, make_chart,
                                   ricci_form)

EMBEDDED = ["s3_join", "s3_suspension", "s3_unit_tangent", "s2"]
ALL_CHARTS = EMBEDDED + ["t3_flat", "heisenberg", "r3_spherical"]


@pytest.mark.parametrize("name", ALL_CHARTS)
def test_metric_symmetric_positive(name):
    chart = make_chart(name)
    x = chart.interior_points(5, margin=0.1)
    g = chart.metric(x)
    assert np.allclose(g, np.swapaxes(g, -1, -2), atol=1e-14)
    w = np.linalg.eigvalsh(g)
    assert np.all(w > 0)


@pytest.mark.parametrize("name", EMBEDDED)
def test_embedding_induces_metric(name):
    # J^T J must reproduce the chart metric wherever both are defined
    chart = make_chart(name)
    x = chart.interior_points(5, margin=0.08)
    J = chart.embedding_jac_fn(x)
    g = chart.metric(x)
    assert np.max(np.abs(np.einsum("...ai,...aj->...ij", J, J) - g)) < 1e-12


@pytest.mark.parametrize("name", EMBEDDED)
def test_embedding_jacobian_matches_finite_differences(name):
    chart = make_chart(name)
    x = chart.interior_points(3, margin=0.15)
    J = chart.embedding_jac_fn(x)
    h = 1e-6
    for i in range(chart.dim):
        dx = np.zeros(chart.dim)
        dx[i] = h
        fd = (chart.embedding_fn(x + dx) - chart.embedding_fn(x - dx)) / (2 * h)
        assert np.max(np.abs(J[..., i] - fd)) < 5e-9


@pytest.mark.parametrize("name", EMBEDDED)
def test_embedding_lands_on_sphere(name):
    chart = make_chart(name)
    x = chart.interior_points(4, margin=0.1)
    p = chart.embedding_fn(x)
    r = np.linalg.norm(p, axis=-1)
    assert np.max(np.abs(r - chart.radius)) < 1e-12


@pytest.mark.parametrize("name,volume", [
    ("s3_join", 2 * np.pi ** 2),
    ("s3_suspension", 2 * np.pi ** 2),
    ("s2", 4 * np.pi),
    ("t3_flat", (2 * np.pi) ** 3),
])
def test_chart_volume(name, volume):
    chart = make_chart(name)
    assert chart.volume == pytest.approx(volume, rel=1e-12)


def test_radius_scale_deformation():
    # g -> c^2 g multiplies volumes by c^dim and the radius by c
    unit = make_chart("s3_join")
    big = deform_metric(unit, "radius_scale", c=3.0)
    x = unit.interior_points(4, margin=0.1)
    assert np.allclose(big.metric(x), 9.0 * unit.metric(x), rtol=1e-12)
    assert big.volume == pytest.approx(27 * unit.volume, rel=1e-12)
    assert big.radius == pytest.approx(3.0)


@pytest.mark.parametrize("name", ["s3_join", "s3_suspension", "s2"])
def test_ricci_space_form(name):
    # round sphere of radius R: Ric = (d - 1) / R^2 g
    chart = make_chart(name)
    x = chart.interior_points(4, margin=0.1)
    ric = ricci_form(chart)(x)
    assert np.max(np.abs(ric - (chart.dim - 1) * chart.metric(x))) < 1e-10


def test_ricci_flat_torus():
    chart = make_chart("t3_flat")
    x = chart.interior_points(3)
    assert np.max(np.abs(ricci_form(chart)(x))) == 0.0


def test_ricci_refuses_unknown_deformation():
    chart = deform_metric(make_chart("s3_join"), "hopf_squash", k=2, l=1)
    with pytest.raises(ValueError):
        ricci_form(chart)


def test_coordinate_frame_connection_is_torsion_free():
    # for a coordinate frame the Koszul coefficients inherit the symmetry
    # Gamma(i, j, k) - Gamma(j, i, k) = g([E_i, E_j], E_k) = 0
    chart = make_chart("s3_join")
    x = chart.interior_points(4, margin=0.12)

    def vecs(y):
        e = np.zeros(y.shape[:-1] + (3, 3))
        for i in range(3):
            e[..., i, i] = 1.0
        return e

    def jac(y):
        return np.zeros(y.shape[:-1] + (3, 3, 3))

    frame = FrameField(chart, vecs, jac)
    gamma = connection_coeffs(chart, frame, x)
    assert gamma.shape == x.shape[:-1] + (3, 3, 3)
    skew = gamma - np.swapaxes(gamma, -3, -2)
    assert np.max(np.abs(skew)) < 1e-9


def test_metric_compatibility_of_first_kind_symbols():
    # d_k g_ij = Gamma_{ik,j} + Gamma_{jk,i}
    chart = make_chart("s3_join")
    x = chart.interior_points(4, margin=0.1)
    dg = chart.metric_grad(x)
    g1 = 0.5 * (np.einsum("...kji->...ikj", dg)
                + np.einsum("...ijk->...ikj", dg)
                - np.einsum("...ikj->...ikj", dg))
    rhs = (np.einsum("...ikj->...ijk", g1)
           + np.einsum("...jki->...ijk", g1))
    assert np.max(np.abs(dg - rhs)) < 1e-9


def test_contact_structure():
    # the shipped contact frames satisfy eta(xi) = 1 and iota_xi d eta = 0
    for name in ("heisenberg", "s3_unit_tangent"):
        chart = make_chart(name)
        assert chart.contact is not None
        pairing_defect, contraction_defect = contact_defect(chart)
        assert pairing_defect < 1e-8
        assert contraction_defect < 1e-6


def test_contact_defect_needs_contact_data():
    with pytest.raises(ValueError):
        contact_defect(make_chart("s2"))


def test_interior_points_respect_margin():
    chart = make_chart("s3_join")
    x = chart.interior_points(6, margin=0.05)
    for i, (lo, hi) in enumerate(chart.coord_ranges):
        assert np.all(x[:, i] >= lo + 0.05 - 1e-12)
        assert np.all(x[:, i] <= hi - 0.05 + 1e-12)


def test_unknown_chart_errors():
    with pytest.raises(ValueError):
        make_chart("mystery_manifold")
