"""Principal distortion spectra: ordering, frames, invariants, structure."""
import numpy as np
import pytest

from sigma_energy.distortion import (analyze_point, analyze_points,
                                     best_contact_assignment, classify)
from sigma_energy.maps import make_map


def test_identity_spectrum_is_constant():
    for lam in (0.5, 1.0, 2.0):
        m = make_map("identity", lam=lam)
        an = analyze_points(m, m.sample_points(50, seed=2))
        assert np.max(np.abs(an.lambdas2 - lam ** 2)) < 1e-12
        assert np.max(np.abs(an.sigma1 - 3 * lam ** 2)) < 1e-12
        assert np.max(np.abs(an.sigma2 - 3 * lam ** 4)) < 1e-11


def test_eigenvalues_sorted_and_clamped():
    m = make_map("gamma_hopf", gamma="hopf_minus", k=2)
    an = analyze_points(m, m.sample_points(200, seed=3))
    lam = an.lambdas2
    assert np.all(np.diff(lam, axis=-1) <= 1e-12)   # descending
    assert np.all(lam >= 0.0)                        # clamped at zero


def test_frames_are_metric_orthonormal():
    m = make_map("alpha_join", alpha="arccos_cos2", k=2, l=1)
    x = m.sample_points(60, seed=4)
    an = analyze_points(m, x)
    g = m.domain.metric(x)
    gram = np.einsum("...ia,...ij,...jb->...ab", an.frames, g, an.frames)
    eye = np.zeros_like(gram)
    for i in range(gram.shape[-1]):
        eye[..., i, i] = 1.0
    assert np.max(np.abs(gram - eye)) < 1e-10


def test_cross_check_of_invariants():
    # sigma2 recomputed from pairwise products must match the minor-sum path
    m = make_map("heis_dilation", a=2.0)
    an = analyze_points(m, m.sample_points(80, seed=5))
    assert np.max(an.cross_check) < 1e-9


def test_analyze_point_matches_batch():
    m = make_map("nomizu", alpha="id_pi4", k=3)
    x = m.sample_points(4, seed=11)
    batch = analyze_points(m, x)
    single = analyze_point(m, x[2])
    assert np.allclose(single.lambdas2, batch.lambdas2[2], atol=1e-12)


def test_classify_hopf_family():
    c = classify(make_map("gamma_hopf", gamma="hopf_minus", k=2))
    assert c.horizontally_conformal
    assert c.paired_eigenvalues
    assert not c.homothetic


def test_classify_homothety():
    c = classify(make_map("identity", lam=2.0))
    assert c.homothetic
    assert c.horizontally_conformal


def test_classify_contact_families():
    c = classify(make_map("heis_dilation", a=2.0))
    assert c.contact_spectrum
    assert c.contact_dilation_constant
    c2 = classify(make_map("torus_contacto", f="sin", a=2))
    assert c2.contact_spectrum


def test_classify_area_preserving():
    c = classify(make_map("henon", a=1.4, b=1.0))
    assert c.area_preserving_2d


def test_contact_assignment_relabels():
    # dilation spectrum (a^4, a^2, 1) with a = 2: the contact eigenvalue
    # 16 = 4 * 4... fails for the naive top label but holds after relabel
    m = make_map("heis_dilation", a=2.0)
    an = analyze_points(m, m.sample_points(50, seed=6))
    (a, b, c), defect = best_contact_assignment(an.lambdas2)
    assert defect < 1e-9
    lam = an.lambdas2[0]
    assert abs(lam[a] - lam[b] * lam[c]) < 1e-9


def test_contact_assignment_needs_3d():
    m = make_map("henon")
    an = analyze_points(m, m.sample_points(10, seed=7))
    with pytest.raises(ValueError):
        best_contact_assignment(an.lambdas2)
