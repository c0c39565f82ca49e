"""Pointwise distortion analysis of a map: principal distortion spectrum,
elementary symmetric invariants, and structural classification flags.

The squared principal distortions are the eigenvalues of the pullback metric
relative to the domain metric.  They are computed through the Cholesky
factor of the domain metric, so the returned eigenvector frames are
orthonormal for the domain metric, not the Euclidean one.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import Chart
from .maps import MapFamily, jacobian

Array = np.ndarray

EIG_CLAMP = 1e-12
DEGENERACY_RTOL = 1e-8


@dataclass(frozen=True)
class SpectralAnalysis:
    """Batched spectral data at sample points.

    lambdas2 holds the squared principal distortions in descending order;
    frames holds matching eigenvector columns, orthonormal with respect to
    the domain metric.  cross_check is the worst relative disagreement
    between invariants built from the eigenvalues and the same invariants
    recomputed from traces and determinants of the whitened pullback matrix.
    """

    points: Array
    lambdas2: Array
    frames: Array
    sigma1: Array
    sigma2: Array
    sigma3: Array
    v2: Optional[Array]
    four_density: Array
    cross_check: float

    @property
    def dim(self) -> int:
        return self.lambdas2.shape[-1]

    def degenerate_clusters(self, index) -> list:
        """Groups of eigenvalue indices that coincide at the given point,
        up to a relative tolerance tied to sigma1."""
        lam = self.lambdas2[index]
        scale = max(float(self.sigma1[index]), 1.0)
        clusters = [[0]]
        for i in range(1, lam.shape[-1]):
            if abs(lam[i] - lam[clusters[-1][-1]]) <= DEGENERACY_RTOL * scale:
                clusters[-1].append(i)
            else:
                clusters.append([i])
        return clusters


def pullback_matrix(m: MapFamily, x: Array) -> Array:
    """First fundamental form of the map: J^t h J in domain coordinates."""
    x = np.asarray(x, dtype=float)
    J = jacobian(m, x)
    h = m.codomain.metric(m.eval_fn(x))
    return np.einsum("...ai,...ab,...bj->...ij", J, h, J)


def _whiten(g: Array, c: Array):
    """Transform the generalized problem c v = lam g v to an ordinary
    symmetric one via the Cholesky factor of g."""
    L = np.linalg.cholesky(g)
    Li = np.linalg.inv(L)
    A = Li @ c @ np.swapaxes(Li, -1, -2)
    A = 0.5 * (A + np.swapaxes(A, -1, -2))
    return L, A


def analyze_points(m: MapFamily, x: Array) -> SpectralAnalysis:
    """Spectral analysis at a batch of points (last axis = coordinates)."""
    x = np.asarray(x, dtype=float)
    g = m.domain.metric(x)
    c = pullback_matrix(m, x)
    L, A = _whiten(g, c)
    w, V = np.linalg.eigh(A)

    floor = -EIG_CLAMP * np.maximum(1.0, np.max(np.abs(w), axis=-1))
    if np.any(w < floor[..., None]):
        worst = float(np.min(w))
        raise FloatingPointError(
            f"pullback spectrum has a significantly negative eigenvalue "
            f"({worst:.3e}); the Jacobian or metric is inconsistent")
    w = np.clip(w, 0.0, None)

    # descending order, eigenvectors back-transformed to g-orthonormal columns
    w = w[..., ::-1]
    V = V[..., ::-1]
    frames = np.linalg.solve(np.swapaxes(L, -1, -2), V)

    sigma1 = np.add.reduce(w, axis=-1)
    d = w.shape[-1]
    pair = np.zeros(w.shape[:-1])
    for i in range(d):
        for j in range(i + 1, d):
            pair = pair + w[..., i] * w[..., j]
    sigma3 = np.zeros(w.shape[:-1])
    if d >= 3:
        for i in range(d):
            for j in range(i + 1, d):
                for k in range(j + 1, d):
                    sigma3 = sigma3 + w[..., i] * w[..., j] * w[..., k]

    # trace-polynomial recomputation, independent of the eigensolver output
    t1 = np.trace(A, axis1=-2, axis2=-1)
    t2 = np.trace(A @ A, axis1=-2, axis2=-1)
    sigma2_poly = 0.5 * (t1 * t1 - t2)
    rel = np.max(np.abs(sigma2_poly - pair) / np.maximum(1.0, np.abs(pair)))
    rel = max(float(rel), float(np.max(
        np.abs(t1 - sigma1) / np.maximum(1.0, np.abs(sigma1)))))
    if d == 3:
        det_poly = np.linalg.det(A)
        rel = max(rel, float(np.max(
            np.abs(det_poly - sigma3) / np.maximum(1.0, np.abs(sigma3)))))

    v2 = None
    if m.domain.dim == m.codomain.dim:
        v2 = np.prod(w, axis=-1)

    return SpectralAnalysis(
        points=x, lambdas2=w, frames=frames,
        sigma1=sigma1, sigma2=pair, sigma3=sigma3, v2=v2,
        four_density=0.25 * sigma1 ** 2, cross_check=rel)


def analyze_point(m: MapFamily, x) -> SpectralAnalysis:
    return analyze_points(m, np.atleast_2d(np.asarray(x, dtype=float)))


def analyze_path(m: MapFamily, path: Array) -> SpectralAnalysis:
    """Analysis along an ordered path with continuous eigenbranch tracking.

    Eigenvalues are permuted at each step to minimize the total jump from
    the previous step, and eigenvector signs are aligned with the previous
    frame, so columns can be differentiated along the path.
    """
    from itertools import permutations

    base = analyze_points(m, path)
    lam = base.lambdas2.copy()
    V = base.frames.copy()
    g = m.domain.metric(base.points)
    d = lam.shape[-1]
    perms = list(permutations(range(d)))
    for t in range(1, lam.shape[0]):
        costs = [np.sum((lam[t, list(p)] - lam[t - 1]) ** 2) for p in perms]
        p = list(perms[int(np.argmin(costs))])
        lam[t] = lam[t, p]
        V[t] = V[t][:, p]
        overlap = np.einsum("ip,ij,jp->p", V[t - 1], g[t], V[t])
        V[t] *= np.where(overlap < 0.0, -1.0, 1.0)
    return SpectralAnalysis(
        points=base.points, lambdas2=lam, frames=V,
        sigma1=base.sigma1, sigma2=base.sigma2, sigma3=base.sigma3,
        v2=base.v2, four_density=base.four_density,
        cross_check=base.cross_check)


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class Classification:
    """Structural flags for a sampled map, with numeric witnesses.

    Each defect is a sup-norm over the sample; a flag is set when its
    defect falls below the tolerance used for the call.
    """

    horizontally_conformal: bool
    homothetic: bool
    paired_eigenvalues: bool
    contact_spectrum: bool
    contact_dilation_constant: bool
    area_preserving_2d: bool
    tol: float
    witnesses: dict = field(default_factory=dict)


def best_contact_assignment(lambdas2: Array):
    """Assignment (a, b, c) minimizing the sup of |lam_a^2 - lam_b^2 lam_c^2|
    over the sample, for 3d spectra.  Returns (assignment, defect)."""
    if lambdas2.shape[-1] != 3:
        raise ValueError("contact assignment needs a 3d spectrum")
    best = None
    for a in range(3):
        b, c = [i for i in range(3) if i != a]
        scale = np.maximum(1.0, lambdas2[..., a])
        defect = float(np.max(np.abs(
            lambdas2[..., a] - lambdas2[..., b] * lambdas2[..., c]) / scale))
        if best is None or defect < best[1]:
            best = ((a, b, c), defect)
    return best


def classify(m: MapFamily, x: Optional[Array] = None, n: int = 200,
             tol: float = 1e-8) -> Classification:
    """Classify a map from its sampled distortion spectrum."""
    if x is None:
        x = m.sample_points(n)
    an = analyze_points(m, x)
    lam = an.lambdas2
    d = lam.shape[-1]
    scale = np.maximum(1.0, lam[..., 0])
    wit = {}

    # horizontal conformality: the nonzero part of the spectrum consists of
    # a repeated top eigenvalue, the rest vanishing
    n_cod = m.codomain.dim
    r = min(d, n_cod)
    top = lam[..., :r]
    hwc_defect = float(np.max(
        (np.max(top, axis=-1) - np.min(top, axis=-1)) / scale))
    if r < d:
        hwc_defect = max(hwc_defect,
                         float(np.max(np.abs(lam[..., r:]) / scale[..., None])))
    wit["horizontal_conformality_defect"] = hwc_defect

    eq_defect = float(np.max((lam[..., 0] - lam[..., -1]) / scale))
    const_defect = float(np.max(np.abs(lam - lam.reshape(-1, d)[0]) /
                                max(1.0, float(lam.reshape(-1, d)[0][0]))))
    wit["isotropy_defect"] = eq_defect
    wit["constancy_defect"] = const_defect
    homothetic = eq_defect <= tol and const_defect <= tol

    paired_defect = np.inf
    for i in range(d):
        for j in range(i + 1, d):
            paired_defect = min(paired_defect, float(
                np.max(np.abs(lam[..., i] - lam[..., j]) / scale)))
    wit["paired_defect"] = paired_defect

    contact = False
    contact_const = False
    if d == 3:
        (a, b, c), cdefect = best_contact_assignment(lam)
        wit["contact_assignment"] = (a, b, c)
        wit["contact_defect"] = cdefect
        contact = cdefect <= max(tol, 1e-7)
        if contact:
            la = lam[..., a]
            cc = float(np.max(np.abs(la - la.reshape(-1)[0]) /
                              max(1.0, float(la.reshape(-1)[0]))))
            wit["contact_dilation_constancy_defect"] = cc
            wit["contact_dilation"] = float(np.sqrt(la.reshape(-1)[0]))
            contact_const = cc <= tol

    area2d = False
    if d == 2 and m.codomain.dim == 2 and an.v2 is not None:
        a_defect = float(np.max(np.abs(an.v2 - 1.0)))
        wit["area_defect"] = a_defect
        area2d = a_defect <= max(tol, 1e-7)

    return Classification(
        horizontally_conformal=hwc_defect <= tol,
        homothetic=homothetic,
        paired_eigenvalues=paired_defect <= tol,
        contact_spectrum=contact,
        contact_dilation_constant=contact_const,
        area_preserving_2d=area2d,
        tol=tol, witnesses=wit)
