"""Criticality residual systems and the profile minimizer."""
import numpy as np
import pytest

from sigma_energy import euler_lagrange as el
from sigma_energy.geometry import deform_metric, make_chart
from sigma_energy.maps import make_map, make_profile


# --- two-target system ------------------------------------------------------

@pytest.mark.parametrize("b", [0.3, 1.0])
def test_henon_is_area_critical(b):
    rep = el.residual_2target(make_map("henon", a=1.4, b=b), n=64)
    assert rep.system == "area2d"
    assert max(rep.sup_norms) < 1e-6
    assert rep.critical


def test_fiberwise_family_is_fh_critical():
    m = make_map("gamma_hopf", gamma="hopf_minus", k=2)
    rep = el.residual_2target(m, n=64)
    assert rep.system == "fh"
    assert max(rep.sup_norms) < 1e-6
    assert rep.critical


def test_two_target_needs_2d_codomain():
    with pytest.raises(ValueError):
        el.residual_2target(make_map("identity"))


# --- three-target system ----------------------------------------------------

@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
def test_homotheties_solve_quartic_system(lam):
    rep = el.residual_3target(make_map("identity", lam=lam), n=48)
    assert max(rep.sup_norms) < 1e-6
    assert rep.critical
    # homotheties are simultaneously critical for the Dirichlet energy
    assert rep.companion is not None
    assert max(rep.companion.sup_norms) < 1e-6


def test_join_ansatz_fails_quartic_system():
    m = make_map("alpha_join", alpha="arccos_cos2", k=2, l=1)
    rep = el.residual_3target(m, n=48)
    assert not rep.critical
    assert max(rep.sup_norms) > 0.01


def test_join_residual_matches_closed_form_ode():
    # independent oracle: the scalar profile ODE evaluated on a dense grid
    m = make_map("alpha_join", alpha="arccos_cos2", k=2, l=1)
    rep = el.residual_3target(m, n=48)
    s_eig = rep.grid[:, m.profile_axis]
    prof = make_profile("arccos_cos2", interval=(0.0, np.pi / 2))
    s_nodes = np.linspace(s_eig[0] - 1e-3, s_eig[-1] + 1e-3, 20001)
    ode = el.join_profile_ode_residual(prof(s_nodes), s_nodes, 2, 1)
    interp = np.interp(s_eig, s_nodes[1:-1], ode)
    # the two equations tangent to the symmetry directions vanish; the
    # profile equation reproduces the ODE pointwise
    assert max(rep.sup_norms[0], rep.sup_norms[1]) < 1e-9
    assert np.max(np.abs(rep.residuals[:, 2] - interp)) < 5e-6


def test_norms_recomputed_from_residuals_match():
    m = make_map("alpha_join", alpha="arccos_cos2", k=2, l=1)
    rep = el.residual_3target(m, n=40)
    sup = np.max(np.abs(rep.residuals), axis=0)
    assert np.allclose(sup, rep.sup_norms, rtol=0, atol=0)
    l2 = np.sqrt(np.mean(rep.residuals ** 2, axis=0))
    assert np.allclose(l2, rep.l2_norms, rtol=1e-12, atol=1e-300)


def test_grid_density_does_not_change_verdict():
    m = make_map("identity", lam=2.0)
    a = el.residual_3target(m, n=32)
    b = el.residual_3target(m, n=56)
    assert a.critical and b.critical


# --- contact system ---------------------------------------------------------

@pytest.mark.parametrize("a", [0.5, 2.0])
def test_heisenberg_dilation_is_contact_critical(a):
    rep = el.residual_contact(make_map("heis_dilation", a=a), n=27)
    assert rep.flags["hypothesis_ok"]
    assert rep.flags["contact_defect"] < 1e-9
    assert rep.flags["dilation_constancy_defect"] < 1e-9
    assert max(rep.sup_norms) < 1e-6
    assert rep.critical


def test_heisenberg_shift_is_not_critical():
    rep = el.residual_contact(make_map("heis_shift", f="sin"), n=27)
    assert rep.flags["hypothesis_ok"]
    assert not rep.critical
    assert max(rep.sup_norms) > 0.1


def test_torus_shear_is_not_critical():
    rep = el.residual_contact(make_map("torus_contacto", f="sin", a=1),
                              n=27)
    assert rep.flags["hypothesis_ok"]
    assert not rep.critical


# --- conformal-submersion system --------------------------------------------

@pytest.mark.parametrize("k,l", [(1, 1), (2, 1), (2, 3)])
def test_hopf_fibrations_solve_submersion_system(k, l):
    dom = deform_metric(make_chart("s3_join"), "hopf_squash", k=k, l=l)
    m = make_map("alpha_hopf", alpha="double", k=k, l=l, domain=dom)
    rep = el.residual_4harmonic(m, n=64)
    assert max(rep.sup_norms) < 1e-6
    assert rep.critical


def test_fiberwise_k2_solves_submersion_system():
    m = make_map("gamma_hopf", gamma="hopf_minus", k=2)
    rep = el.residual_4harmonic(m, n=64)
    assert max(rep.sup_norms) < 1e-6


def test_submersion_system_rejects_nonconformal():
    # winding 4 stretches the fiber anisotropically: hypothesis violated
    m = make_map("gamma_hopf", gamma="hopf_minus", k=4)
    with pytest.raises(ValueError):
        el.residual_4harmonic(m, n=32)
    with pytest.raises(ValueError):
        el.residual_4harmonic(
            make_map("alpha_join", alpha="arccos_cos2", k=2, l=1), n=32)


# --- profile ODEs -----------------------------------------------------------

def test_unit_tangent_profile_equation():
    rep1 = el.nomizu_residual("id_pi4", 1)
    assert max(rep1.sup_norms) < 1e-6
    assert rep1.critical
    rep3 = el.nomizu_residual("id_pi4", 3)
    assert max(rep3.sup_norms) > 0.1


def test_unit_tangent_profile_needs_odd_winding():
    with pytest.raises(ValueError):
        el.nomizu_residual("id_pi4", 2)


# --- profile minimization ---------------------------------------------------

def test_minimize_profile_descends_monotonically():
    opt = el.minimize_profile(k=2, l=1, kappa=4.0, n_prof=64, max_iter=250)
    ratios = [e["ratio"] for e in opt.log]
    assert all(b <= a + 1e-12 for a, b in zip(ratios, ratios[1:]))
    energies = [e["e_min"] for e in opt.log]
    assert all(b <= a + 1e-10 for a, b in zip(energies, energies[1:]))
    assert 1.0 < opt.ratio < 1.15
    for key in ("iteration", "e_min", "r_star", "ratio", "sigma2_ode_sup",
                "coupled_grad_sup"):
        assert key in opt.log[0]


def test_minimize_profile_beats_closed_form_ansatz():
    opt = el.minimize_profile(k=2, l=1, kappa=4.0, n_prof=96, max_iter=4000)
    assert 1.045 <= opt.ratio <= 1.0518


# --- conformal invariance ---------------------------------------------------

def test_residual_covector_conformally_invariant_dim4():
    m = el.t4_to_t2_test_map()
    sig = el.random_smooth_factor(m.domain, seed=20250825, amplitude=0.15)
    inv = el.conformal_invariance_check(m, sig, n=40)
    assert inv.mismatch < 1e-5
    assert inv.base_sup > 1e-3        # the comparison is not vacuous


def test_residual_covector_biconformally_invariant_3_to_2():
    m = make_map("gamma_hopf", gamma="hopf_minus", k=2)
    sig = el.random_smooth_factor(m.domain, seed=20250826, amplitude=0.1)

    def vert(y):
        y = np.asarray(y, dtype=float)
        v = np.zeros(y.shape[:-1] + (1, 3))
        v[..., 0, 0] = 1.0
        return v

    inv = el.conformal_invariance_check(
        m, sig, rho_fn=lambda y: sig(y) ** 2, vertical_frame_fn=vert, n=40)
    assert inv.mismatch < 1e-5


def test_random_smooth_factor_positive_and_seeded():
    chart = make_chart("t3_flat")
    f = el.random_smooth_factor(chart, seed=11, amplitude=0.2)
    g = el.random_smooth_factor(chart, seed=11, amplitude=0.2)
    x = chart.interior_points(6)
    assert np.all(f(x) > 0)
    assert np.array_equal(f(x), g(x))
    # periodicity across the fundamental domain
    lo = np.array([r[0] for r in chart.coord_ranges])
    hi = np.array([r[1] for r in chart.coord_ranges])
    assert np.allclose(f(lo[None, :]), f(hi[None, :]), atol=1e-12)
