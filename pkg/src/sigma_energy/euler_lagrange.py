"""Residual evaluation for the reduced criticality systems: the two-target
and three-target quartic-energy systems, their contact-spectrum reduction,
the conformal-submersion form, the generalized harmonicity system, the
equivariant self-map profile equation, profile-energy minimization, and the
behaviour of residuals under (bi)conformal metric changes.

All residuals are evaluated along eigenframes of the pullback metric.
Frames at stencil points are aligned to the frame at the evaluation point by
orthogonal Procrustes within each degenerate eigenvalue cluster, so the
finite-difference frame derivatives are those of a smooth eigenframe field
and the residuals are independent of the arbitrary basis choices the
eigensolver makes inside clusters.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace as dc_replace
from itertools import permutations
from typing import Callable, Optional

import numpy as np

from .geometry import (Chart, FrameField, connection_coeffs, deform_metric,
                       flat_chart)
from .maps import (MapFamily, ProfileFunction, make_profile, make_map,
                   with_domain)
from .distortion import analyze_points, best_contact_assignment

Array = np.ndarray

EIG_STEP = 1e-4
ALIGN_RTOL = 1e-6
TOL_CRIT = 1e-6
TOL_CRIT_FD = 1e-4
RESID_MARGIN = 0.04


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class ResidualReport:
    """Per-point residuals of one criticality system on a sample grid.

    verdict: critical iff every equation's sup norm is below tol.  flags
    carry auxiliary diagnostics (spectrum-hypothesis defects, boundary
    conditions).  companion optionally holds a related system evaluated on
    the same grid (e.g. the harmonicity system next to the quartic one).
    """

    system: str
    grid: Array
    residuals: Array
    equation_names: tuple
    sup_norms: tuple
    l2_norms: tuple
    tol: float
    critical: bool
    flags: dict = field(default_factory=dict)
    companion: Optional["ResidualReport"] = None

    def to_dict(self) -> dict:
        out = {
            "system": self.system,
            "equations": list(self.equation_names),
            "sup_norms": [float(s) for s in self.sup_norms],
            "l2_norms": [float(s) for s in self.l2_norms],
            "tol": self.tol,
            "critical": self.critical,
            "n_points": int(self.grid.shape[0]),
            "flags": {k: (bool(v) if isinstance(v, (bool, np.bool_)) else v)
                      for k, v in self.flags.items()},
        }
        if self.companion is not None:
            out["companion"] = self.companion.to_dict()
        return out


def _build_report(system: str, grid: Array, residuals: Array, names, tol,
                  flags=None, companion=None) -> ResidualReport:
    residuals = np.asarray(residuals, dtype=float)
    sup = tuple(float(np.max(np.abs(residuals[:, j])))
                for j in range(residuals.shape[1]))
    l2 = tuple(float(np.sqrt(np.mean(residuals[:, j] ** 2)))
               for j in range(residuals.shape[1]))
    return ResidualReport(
        system=system, grid=grid, residuals=residuals,
        equation_names=tuple(names), sup_norms=sup, l2_norms=l2,
        tol=tol, critical=all(s < tol for s in sup),
        flags=dict(flags or {}), companion=companion)


def default_tol(m: MapFamily) -> float:
    return TOL_CRIT if m.jacobian_mode == "analytic" else TOL_CRIT_FD


def default_grid(m: MapFamily, n: int = 64) -> Array:
    """Sample grid for residual evaluation: a 1d sweep along the profile
    axis when the family is equivariant, otherwise a product grid of about
    n points, with wide margins so frame fields stay mild."""
    if m.profile_axis is not None:
        return m.profile_grid(n, margin_frac=RESID_MARGIN)
    d = m.domain.dim
    per = max(2, int(round(n ** (1.0 / d))))
    return m.grid_points(per, margin_frac=RESID_MARGIN)


# ---------------------------------------------------------------------------
# eigenframe fields


def _fd4(fn: Callable[[Array], Array], x: Array, direction: Array,
         h: float) -> Array:
    """Fourth-order central difference of fn along a direction field."""
    d1 = direction * h
    return (-fn(x + 2.0 * d1) + 8.0 * fn(x + d1)
            - 8.0 * fn(x - d1) + fn(x - 2.0 * d1)) / (12.0 * h)


def _fd4_jacobian(fn: Callable[[Array], Array], x: Array, h: float) -> Array:
    """Fourth-order coordinate Jacobian, stacking the derivative axis last."""
    cols = []
    d = x.shape[-1]
    for i in range(d):
        e = np.zeros(d)
        e[i] = 1.0
        cols.append(_fd4(fn, x, e, h))
    return np.stack(cols, axis=-1)


def _value_clusters(lam_row: Array, scale: float) -> tuple:
    """Indices grouped by eigenvalue proximity (not necessarily adjacent)."""
    order = np.argsort(lam_row)
    groups = [[int(order[0])]]
    for i in order[1:]:
        if abs(lam_row[i] - lam_row[groups[-1][-1]]) <= ALIGN_RTOL * scale:
            groups[-1].append(int(i))
        else:
            groups.append([int(i)])
    return tuple(tuple(g) for g in groups)


class EigenframeSystem:
    """Eigenframe data of a map on a fixed grid, with smoothly aligned
    frames and branch-matched eigenvalues at displaced points."""

    def __init__(self, m: MapFamily, grid: Array,
                 order: Optional[tuple] = None):
        self.m = m
        self.grid = np.asarray(grid, dtype=float)
        an = analyze_points(m, self.grid)
        lam = an.lambdas2
        V = an.frames
        if order is not None:
            lam = lam[:, list(order)]
            V = V[:, :, list(order)]
        self.lam0 = lam
        self.V0 = V
        self.analysis = an
        d = lam.shape[-1]
        self._perms = np.array(list(permutations(range(d))))
        scales = np.maximum(1.0, np.max(np.abs(lam), axis=-1))
        sigs = [_value_clusters(lam[i], scales[i])
                for i in range(lam.shape[0])]
        groups: dict = {}
        for i, s in enumerate(sigs):
            groups.setdefault(s, []).append(i)
        self._cluster_groups = [(sig, np.array(idx))
                                for sig, idx in groups.items()]

    # -- eigen data at displaced points --------------------------------

    def _whitened(self, y: Array):
        g = self.m.domain.metric(y)
        J = self.m.jac_fn(y) if self.m.jac_fn is not None else None
        if J is None:
            from .maps import jacobian as _jac
            J = _jac(self.m, y)
        h = self.m.codomain.metric(self.m.eval_fn(y))
        c = np.einsum("...ai,...ab,...bj->...ij", J, h, J)
        L = np.linalg.cholesky(g)
        Li = np.linalg.inv(L)
        A = Li @ c @ np.swapaxes(Li, -1, -2)
        return L, 0.5 * (A + np.swapaxes(A, -1, -2))

    def branch_lambdas(self, y: Array) -> Array:
        """Eigenvalues at y permuted per point to track the reference
        branches (nearest-assignment matching)."""
        _, A = self._whitened(y)
        w = np.linalg.eigvalsh(A)
        w = np.clip(w, 0.0, None)
        cand = w[:, self._perms]                       # (N, P, d)
        cost = np.sum((cand - self.lam0[:, None, :]) ** 2, axis=-1)
        best = np.argmin(cost, axis=-1)
        return cand[np.arange(w.shape[0]), best]

    def frames_at(self, y: Array) -> Array:
        """g-orthonormal eigenframe columns at y, aligned to the reference
        frame by per-cluster orthogonal Procrustes in whitened coordinates."""
        L, A = self._whitened(y)
        w, W = np.linalg.eigh(A)
        w = w[..., ::-1]
        W = W[..., ::-1]
        R = np.einsum("...ji,...jk->...ik", L, self.V0)  # L^T V0
        Wa = np.empty_like(W)
        for sig, idx in self._cluster_groups:
            Wsub = W[idx]
            Rsub = R[idx]
            # permute descending-order columns to the reference label order:
            # match on eigenvalue proximity like branch_lambdas
            cand = w[idx][:, self._perms]
            cost = np.sum((cand - self.lam0[idx][:, None, :]) ** 2, axis=-1)
            best = self._perms[np.argmin(cost, axis=-1)]
            Wsub = np.take_along_axis(Wsub, best[:, None, :], axis=2)
            out = np.empty_like(Wsub)
            for block in sig:
                P = Wsub[:, :, block]
                B = np.einsum("...ia,...ib->...ab", P, Rsub[:, :, block])
                U, _, Vt = np.linalg.svd(B)
                out[:, :, block] = P @ (U @ Vt)
            Wa[idx] = out
        return np.linalg.solve(np.swapaxes(L, -1, -2), Wa)

    # -- derived objects -------------------------------------------------

    def gamma(self, step: float = EIG_STEP) -> Array:
        """Connection coefficients of the aligned eigenframe field."""
        def rows(y):
            return np.swapaxes(self.frames_at(y), -1, -2)

        frame = FrameField(self.m.domain, rows,
                           jacobian_fn=lambda y: _fd4_jacobian(rows, y, step),
                           name="eigenframe")
        return connection_coeffs(self.m.domain, frame, self.grid, step=step)

    def dir_deriv(self, fn: Callable[[Array], Array], k: int,
                  step: float = EIG_STEP) -> Array:
        """Derivative of a scalar field along the k-th eigenvector."""
        return _fd4(fn, self.grid, self.V0[:, :, k], step)

    def lambda_fn(self, combine: Callable[[Array], Array]
                  ) -> Callable[[Array], Array]:
        """Scalar field built from branch-matched eigenvalues."""
        def f(y):
            return combine(self.branch_lambdas(y))
        return f


# ---------------------------------------------------------------------------
# residual systems


def residual_2target(m: MapFamily, grid: Optional[Array] = None, n: int = 64,
                     tol: Optional[float] = None,
                     step: float = EIG_STEP) -> ResidualReport:
    """Criticality system for quartic energy with a 2d target: the
    horizontal gradient of ln(lambda1 lambda2) balances the fiber mean
    curvature; for 2d domains the residual is the bare gradient."""
    if m.codomain.dim != 2:
        raise ValueError("two-target system needs a 2d codomain")
    if grid is None:
        grid = default_grid(m, n)
    tol = default_tol(m) if tol is None else tol
    sys_ = EigenframeSystem(m, grid)
    md = m.domain.dim
    lam = sys_.lam0
    prod = lam[:, 0] * lam[:, 1]
    if np.min(prod) <= 0.0:
        raise ValueError("two-target system undefined where the map is "
                         "singular (a top eigenvalue vanishes)")

    f = sys_.lambda_fn(lambda w: 0.5 * np.log(w[:, 0] * w[:, 1]))
    G = sys_.gamma(step) if md > 2 else None
    res = np.empty((grid.shape[0], 2))
    for k in (0, 1):
        r = sys_.dir_deriv(f, k, step)
        if md > 2:
            r = r - np.add.reduce([G[:, g_, g_, k] for g_ in range(2, md)])
        res[:, k] = r
    system = "fh" if md > 2 else "area2d"
    flags = {"vertical_dim": md - 2,
             "min_top_product": float(np.min(prod))}
    return _build_report(system, grid, res, ("r_1", "r_2"), tol, flags)


def _sig3_combo(k: int):
    a, b = [j for j in range(3) if j != k]

    def combo(w):
        return w[:, k] * (w[:, a] + w[:, b]) - w[:, a] * w[:, b]
    return combo


def residual_3target(m: MapFamily, grid: Optional[Array] = None, n: int = 64,
                     tol: Optional[float] = None, step: float = EIG_STEP,
                     include_harmonic: bool = True) -> ResidualReport:
    """Three-equation criticality system for quartic energy with a 3d
    target, with the generalized harmonicity system evaluated alongside on
    the same eigenframe data (companion report)."""
    if m.codomain.dim != 3:
        raise ValueError("three-target system needs a 3d codomain")
    if m.domain.dim < 3:
        raise ValueError("three-target system needs domain dimension >= 3")
    if grid is None:
        grid = default_grid(m, n)
    tol = default_tol(m) if tol is None else tol
    sys_ = EigenframeSystem(m, grid)
    md = m.domain.dim
    lam = sys_.lam0
    G = sys_.gamma(step)

    fiber = np.zeros((grid.shape[0], 3))
    if md > 3:
        for k in range(3):
            fiber[:, k] = np.add.reduce(
                [G[:, g_, g_, k] for g_ in range(3, md)])

    res = np.empty((grid.shape[0], 3))
    harm = np.empty_like(res)
    sigma1 = lam[:, 0] + lam[:, 1] + lam[:, 2]
    for k in range(3):
        a, b = [j for j in range(3) if j != k]
        dC = sys_.dir_deriv(sys_.lambda_fn(_sig3_combo(k)), k, step)
        r = 0.5 * dC
        r = r + lam[:, b] * (lam[:, a] - lam[:, k]) * G[:, a, a, k]
        r = r + lam[:, a] * (lam[:, b] - lam[:, k]) * G[:, b, b, k]
        r = r - lam[:, k] * (lam[:, a] + lam[:, b]) * fiber[:, k]
        res[:, k] = r

        dh = sys_.dir_deriv(
            sys_.lambda_fn(lambda w, kk=k: w[:, kk] - 0.5 * np.add.reduce(
                [w[:, j] for j in range(3)])), k, step)
        hr = dh + np.add.reduce(
            [(lam[:, i] - lam[:, k]) * G[:, i, i, k] for i in range(3)])
        hr = hr - lam[:, k] * fiber[:, k]
        harm[:, k] = hr

    companion = None
    if include_harmonic:
        companion = _build_report("harmonic", grid, harm,
                                  ("h_1", "h_2", "h_3"), tol)
    return _build_report("sig3", grid, res, ("r_1", "r_2", "r_3"), tol,
                         {"fiber_dim": md - 3}, companion)


def residual_harmonic(m: MapFamily, grid: Optional[Array] = None, n: int = 64,
                      tol: Optional[float] = None,
                      step: float = EIG_STEP) -> ResidualReport:
    """Generalized harmonicity system standalone (3d targets)."""
    rep = residual_3target(m, grid=grid, n=n, tol=tol, step=step,
                           include_harmonic=True)
    return rep.companion


def residual_contact(m: MapFamily, grid: Optional[Array] = None, n: int = 64,
                     tol: Optional[float] = None,
                     step: float = EIG_STEP) -> ResidualReport:
    """Criticality system reduced under the contactomorphic spectrum
    hypothesis (one eigenvalue equal to the product of the other two, with
    constant dilation), plus the equivalent gradient condition (c)."""
    if m.domain.dim != 3 or m.codomain.dim != 3:
        raise ValueError("contact-spectrum system is three-dimensional")
    if grid is None:
        grid = default_grid(m, n)
    tol = default_tol(m) if tol is None else tol

    probe = analyze_points(m, grid)
    (a, b, c), contact_defect = best_contact_assignment(probe.lambdas2)
    sys_ = EigenframeSystem(m, grid, order=(a, b, c))
    lam = sys_.lam0
    k2 = float(np.mean(lam[:, 0]))
    k2_defect = float(np.max(np.abs(lam[:, 0] - k2)) / max(1.0, k2))
    lam2 = lam[:, 1]
    G = sys_.gamma(step)

    def f1(w):
        return w[:, 1] + k2 / w[:, 1]

    def f2(w):
        return w[:, 1] - k2 / w[:, 1]

    res = np.empty((grid.shape[0], 3))
    res[:, 0] = (0.5 * sys_.dir_deriv(sys_.lambda_fn(f1), 0, step)
                 + (1.0 - k2 / lam2) * G[:, 1, 1, 0]
                 + (1.0 - lam2) * G[:, 2, 2, 0])
    res[:, 1] = (0.5 * sys_.dir_deriv(sys_.lambda_fn(f2), 1, step)
                 + (k2 / lam2 - lam2) * G[:, 2, 2, 1]
                 + (k2 / lam2 - 1.0) * G[:, 0, 0, 1])
    res[:, 2] = (-0.5 * sys_.dir_deriv(sys_.lambda_fn(f2), 2, step)
                 + (lam2 - 1.0) * G[:, 0, 0, 2]
                 + (lam2 - k2 / lam2) * G[:, 1, 1, 2])

    # gradient condition (c): (1/2) grad(l2^2 - l3^2) balanced by the
    # non-Killing directions' mean curvature times the eigenvalue gap
    gap_fn = sys_.lambda_fn(lambda w: w[:, 1] - w[:, 2])
    gap = lam[:, 1] - lam[:, 2]
    cond_c = np.empty_like(res)
    for k in range(3):
        cond_c[:, k] = (0.5 * sys_.dir_deriv(gap_fn, k, step)
                        - gap * (G[:, 1, 1, k] + G[:, 2, 2, k]))

    res_all = np.concatenate([res, cond_c], axis=1)
    flags = {
        "contact_assignment": (a, b, c),
        "contact_defect": contact_defect,
        "dilation_sq": k2,
        "dilation_constancy_defect": k2_defect,
        "hypothesis_ok": bool(contact_defect < 1e-6 and k2_defect < 1e-6),
    }
    return _build_report(
        "contactsig3", grid, res_all,
        ("r_1", "r_2", "r_3", "c_1", "c_2", "c_3"), tol, flags)


def residual_4harmonic(m: MapFamily, grid: Optional[Array] = None,
                       n: int = 64, tol: Optional[float] = None,
                       step: float = EIG_STEP) -> ResidualReport:
    """Conformal-submersion criticality: (n-4) grad ln(dilation) balances
    (m-n) times the fiber mean curvature, projected on the horizontal
    eigenframe.  Requires a horizontally conformal map."""
    if grid is None:
        grid = default_grid(m, n)
    tol = default_tol(m) if tol is None else tol
    nd = m.codomain.dim
    md = m.domain.dim
    if md <= nd:
        raise ValueError("conformal-submersion system expects a submersion "
                         "with fibers (domain dim > codomain dim)")
    sys_ = EigenframeSystem(m, grid)
    lam = sys_.lam0
    top = lam[:, :nd]
    scale = np.maximum(1.0, lam[:, 0])
    hwc_defect = float(np.max(
        (np.max(top, axis=-1) - np.min(top, axis=-1)) / scale))
    if hwc_defect > 1e-6:
        raise ValueError(
            f"map is not horizontally conformal (defect {hwc_defect:.3e}); "
            "the conformal-submersion system does not apply")
    G = sys_.gamma(step)

    lam_fn = sys_.lambda_fn(
        lambda w: 0.5 * np.log(np.mean(w[:, :nd], axis=-1)))
    res = np.empty((grid.shape[0], nd))
    for k in range(nd):
        r = (nd - 4.0) * sys_.dir_deriv(lam_fn, k, step)
        r = r + np.add.reduce([G[:, g_, g_, k] for g_ in range(nd, md)])
        res[:, k] = r
    flags = {"hwc_defect": hwc_defect,
             "dilation_sq_mean": float(np.mean(top))}
    return _build_report("fourharm", grid, res,
                         tuple(f"r_{k+1}" for k in range(nd)), tol, flags)


# ---------------------------------------------------------------------------
# equivariant self-map profile equation


def nomizu_residual(alpha, k: int, s_grid: Optional[Array] = None,
                    n: int = 64, tol: float = TOL_CRIT) -> ResidualReport:
    """Reduced profile equation of the equivariant self-map family in the
    unit-tangent chart; boundary conditions are flagged, not enforced."""
    prof = make_profile(alpha, interval=(0.0, np.pi / 4))
    k = int(k)
    if k % 2 == 0:
        raise ValueError("the equivariant family needs odd winding")
    if s_grid is None:
        lo, hi = 0.0, np.pi / 4
        mmar = RESID_MARGIN * (hi - lo)
        s_grid = np.linspace(lo + mmar, hi - mmar, n)
    s = np.asarray(s_grid, dtype=float)
    al = prof(s)
    d1 = prof.deriv(s)
    d2 = prof.deriv2(s)
    res = (d2 * (k * k - 2.0 * k * np.sin(2 * al) * np.sin(2 * s) + 1.0)
           - 2.0 * k * d1 ** 2 * np.sin(2 * s) * np.cos(2 * al)
           + 2.0 * d1 * ((k * k + 1.0) * np.tan(2 * s)
                         - 2.0 * k * np.sin(2 * al) / np.cos(2 * s))
           + k * k * np.sin(4 * al))
    v0, v1 = prof.boundary_values
    bc_ok = abs(v0) < 1e-8 and abs(v1 - np.pi / 4) < 1e-8
    grid = s[:, None]
    return _build_report(
        "nomizu", grid, res[:, None], ("ode",), tol,
        {"bc_satisfied": bool(bc_ok), "k": k,
         "boundary_values": (float(v0), float(v1))})


# ---------------------------------------------------------------------------
# profile-energy minimization for the join family


def _join_energy_parts(a_full: Array, s_nodes: Array, k: int, l: int):
    """Midpoint-rule reduced energies of the join family on the unit sphere
    and their gradients with respect to interior profile values."""
    h = s_nodes[1] - s_nodes[0]
    sm = 0.5 * (s_nodes[1:] + s_nodes[:-1])
    am = 0.5 * (a_full[1:] + a_full[:-1])
    ap = (a_full[1:] - a_full[:-1]) / h
    w = 2.0 * np.pi ** 2 * np.cos(sm) * np.sin(sm) * h

    sin2, cos2 = np.sin(sm) ** 2, np.cos(sm) ** 2
    P = l * l * np.sin(am) ** 2 / sin2
    Q = k * k * np.cos(am) ** 2 / cos2
    dP = l * l * np.sin(2 * am) / sin2
    dQ = -k * k * np.sin(2 * am) / cos2

    e1 = ap ** 2 + P + Q
    e2 = ap ** 2 * (P + Q) + P * Q
    A = float(np.sum(w * e1))
    B = float(np.sum(w * e2))

    # cellwise partials; node i receives contributions from cells i-1, i
    dA_dap = 2.0 * w * ap
    dA_dam = w * (dP + dQ)
    dB_dap = 2.0 * w * ap * (P + Q)
    dB_dam = w * (ap ** 2 * (dP + dQ) + dP * Q + P * dQ)

    def scatter(d_dap, d_dam):
        grad = np.zeros_like(a_full)
        np.add.at(grad, np.arange(len(sm)), -d_dap / h + 0.5 * d_dam)
        np.add.at(grad, np.arange(1, len(sm) + 1), d_dap / h + 0.5 * d_dam)
        return grad[1:-1]

    return A, B, scatter(dA_dap, dA_dam), scatter(dB_dap, dB_dam)


def join_profile_ode_residual(a_full: Array, s_nodes: Array, k: int, l: int,
                              radius: float = 1.0) -> Array:
    """Closed-form third-equation residual of the quartic system for the
    join family, evaluated at interior nodes of a discrete profile on the
    sphere of the given radius."""
    h = s_nodes[1] - s_nodes[0]
    s = s_nodes[1:-1]
    al = a_full[1:-1]
    ap = (a_full[2:] - a_full[:-2]) / (2.0 * h)
    app = (a_full[2:] - 2.0 * a_full[1:-1] + a_full[:-2]) / h ** 2

    sin2, cos2 = np.sin(s) ** 2, np.cos(s) ** 2
    P = l * l * np.sin(al) ** 2 / sin2
    Q = k * k * np.cos(al) ** 2 / cos2
    dP = (l * l * np.sin(2 * al) * ap / sin2
          - l * l * np.sin(al) ** 2 * np.sin(2 * s) / sin2 ** 2)
    dQ = (-k * k * np.sin(2 * al) * ap / cos2
          + k * k * np.cos(al) ** 2 * np.sin(2 * s) / cos2 ** 2)

    dC = (2.0 * ap * app * (P + Q) + ap ** 2 * (dP + dQ)
          - dP * Q - P * dQ)
    res = (0.5 * dC
           - Q * (P - ap ** 2) * (np.cos(s) / np.sin(s))
           + P * (Q - ap ** 2) * (np.sin(s) / np.cos(s)))
    return res / radius ** 5


@dataclass(frozen=True)
class ProfileOptimum:
    profile: ProfileFunction
    report: "object"               # EnergyReport with radius optimization
    ratio: float
    log: tuple
    iterations: int
    converged: bool


def minimize_profile(k: int = 2, l: int = 1, kappa: float = 4.0,
                     n_prof: int = 96, max_iter: int = 4000,
                     grad_tol: float = 1e-8,
                     log_every: int = 50) -> ProfileOptimum:
    """Minimize the radius-optimized coupled energy of the join family over
    discretized profiles with pinned boundary values.

    Projected gradient descent with Armijo backtracking on interior node
    values; the logged checkpoints record the energy, optimal radius,
    normalized ratio, and the sup norm of the closed-form profile equation
    residual of the quartic part at the current radius.
    """
    from .energy import (integrate_energy, minimize_over_radius, degree,
                         TWELVE_PI2)

    s_nodes = np.linspace(0.0, np.pi / 2, n_prof + 2)
    a_full = s_nodes.copy()                 # start at the identity profile
    qnorm = float(max(1, abs(k * l)))

    def objective(interior):
        a_full2 = np.concatenate([[0.0], interior, [np.pi / 2]])
        A, B, gA, gB = _join_energy_parts(a_full2, s_nodes, k, l)
        E = 2.0 * np.sqrt(kappa * A * B)
        rstar = np.sqrt(kappa * B / A)
        grad = rstar * gA + (kappa / rstar) * gB
        return E, grad, A, B, rstar

    interior = a_full[1:-1].copy()
    E, grad, A, B, rstar = objective(interior)
    log = []
    t0 = 1.0
    it = 0
    converged = False

    def checkpoint(it, E, rstar, interior, grad):
        a_f = np.concatenate([[0.0], interior, [np.pi / 2]])
        ode = join_profile_ode_residual(a_f, s_nodes, k, l, radius=rstar)
        log.append({"iteration": it, "e_min": E, "r_star": rstar,
                    "ratio": E / (TWELVE_PI2 * qnorm),
                    "sigma2_ode_sup": float(np.max(np.abs(ode))),
                    "coupled_grad_sup": float(np.max(np.abs(grad)))})

    checkpoint(0, E, rstar, interior, grad)
    for it in range(1, max_iter + 1):
        gnorm2 = float(np.dot(grad, grad))
        if np.sqrt(gnorm2) < grad_tol:
            converged = True
            break
        t = t0
        while True:
            trial = interior - t * grad
            E_t, grad_t, A_t, B_t, r_t = objective(trial)
            if E_t <= E - 1e-4 * t * gnorm2 or t < 1e-14:
                break
            t *= 0.5
        interior, E, grad, A, B, rstar = trial, E_t, grad_t, A_t, B_t, r_t
        t0 = min(1.0, 2.5 * t)
        if it % log_every == 0:
            checkpoint(it, E, rstar, interior, grad)
    if not log or log[-1]["iteration"] != it:
        checkpoint(it, E, rstar, interior, grad)

    a_full = np.concatenate([[0.0], interior, [np.pi / 2]])
    prof = ProfileFunction.from_grid(s_nodes, a_full, name="optimized")
    fam = make_map("alpha_join", alpha=prof, k=k, l=l)
    opt = minimize_over_radius(fam, kappa=kappa, charge=degree(fam))
    rep = integrate_energy(fam, kappa=kappa)
    rep = dc_replace(rep, charge=opt.charge, radius_opt=opt)
    return ProfileOptimum(profile=prof, report=rep, ratio=opt.ratio,
                          log=tuple(log), iterations=it,
                          converged=converged)


# ---------------------------------------------------------------------------
# (bi)conformal behaviour of the two-target residual


@dataclass(frozen=True)
class InvarianceReport:
    """Comparison of the two-target residual covector before and after a
    biconformal metric change, against the predicted quartic scaling."""

    mismatch: float
    base_sup: float
    deformed_sup: float
    factor_defect: float           # sup |sigma^(4-n) rho^(n-m) - 1|
    grid: Array
    flags: dict = field(default_factory=dict)


def _residual_covector(m: MapFamily, grid: Array,
                       step: float = EIG_STEP) -> Array:
    """Frame-free residual one-form of the two-target system:
    omega = sum_k (lam1^2 lam2^2 r_k) g(E_k, .) over the horizontal frame."""
    sys_ = EigenframeSystem(m, grid)
    md = m.domain.dim
    lam = sys_.lam0
    G = sys_.gamma(step) if md > 2 else None
    f = sys_.lambda_fn(lambda w: 0.5 * np.log(w[:, 0] * w[:, 1]))
    g = m.domain.metric(grid)
    omega = np.zeros_like(grid)
    prod = lam[:, 0] * lam[:, 1]
    for k in (0, 1):
        r = sys_.dir_deriv(f, k, step)
        if md > 2:
            r = r - np.add.reduce([G[:, g_, g_, k] for g_ in range(2, md)])
        cov = np.einsum("...ij,...j->...i", g, sys_.V0[:, :, k])
        omega = omega + (prod * r)[:, None] * cov
    return omega


def conformal_invariance_check(m: MapFamily, sigma_fn,
                               rho_fn=None,
                               vertical_frame_fn=None,
                               grid: Optional[Array] = None, n: int = 48,
                               step: float = EIG_STEP) -> InvarianceReport:
    """Deform the domain metric biconformally and compare the two-target
    residual covector with its predicted transformation: the quartic
    conformal factor times the base covector plus the explicit
    weighted-gradient correction when the invariance factor is not 1."""
    if m.codomain.dim != 2:
        raise ValueError("the invariance check is built on the two-target "
                         "system")
    if grid is None:
        grid = default_grid(m, n)
    md = m.domain.dim
    nd = m.codomain.dim
    if rho_fn is None:
        rho_fn = sigma_fn

    base_sys = EigenframeSystem(m, grid)
    lam = base_sys.lam0
    prod = lam[:, 0] * lam[:, 1]
    omega = _residual_covector(m, grid, step)

    def lnF(y):
        s = np.asarray(sigma_fn(y))
        r = np.asarray(rho_fn(y))
        return (4.0 - nd) * np.log(s) + (nd - md) * np.log(r)

    sig_g = np.asarray(sigma_fn(grid))
    F_defect = float(np.max(np.abs(np.exp(lnF(grid)) - 1.0)))

    # correction covector: lam1^2 lam2^2 * (g grad^H lnF)
    g = m.domain.metric(grid)
    corr = np.zeros_like(grid)
    for k in (0, 1):
        dk = _fd4(lnF, grid, base_sys.V0[:, :, k], step)
        cov = np.einsum("...ij,...j->...i", g, base_sys.V0[:, :, k])
        corr = corr + (prod * dk)[:, None] * cov
    predicted = (sig_g ** 4)[:, None] * (omega + corr)

    chart_bar = deform_metric(m.domain, "biconformal", sigma_fn=sigma_fn,
                              rho_fn=rho_fn,
                              vertical_frame_fn=vertical_frame_fn)
    m_bar = with_domain(m, chart_bar)
    omega_bar = _residual_covector(m_bar, grid, step)

    scale = max(1.0, float(np.max(np.abs(omega_bar))),
                float(np.max(np.abs(predicted))))
    mismatch = float(np.max(np.abs(omega_bar - predicted)) / scale)
    return InvarianceReport(
        mismatch=mismatch,
        base_sup=float(np.max(np.abs(omega))),
        deformed_sup=float(np.max(np.abs(omega_bar))),
        factor_defect=F_defect,
        grid=grid,
        flags={"m": md, "n": nd,
               "conformal": vertical_frame_fn is None and rho_fn is sigma_fn})


def t4_to_t2_test_map(a: float = 0.3, b: float = 0.2) -> MapFamily:
    """Generic smooth 4-torus to 2-torus map with nonconstant top
    eigenvalue product, used to exercise the conformal invariance of the
    two-target residual in dimension four."""
    domain = flat_chart(4, half_width=np.pi, name="t4_flat", compact=True)
    codomain = flat_chart(2, half_width=2.0 * np.pi, name="t2_flat",
                          compact=True)

    def ev(x):
        out = np.empty(x.shape[:-1] + (2,))
        out[..., 0] = x[..., 0] + a * np.sin(x[..., 1]) + b * np.cos(x[..., 2])
        out[..., 1] = x[..., 1] + b * np.sin(x[..., 3]) + a * np.cos(x[..., 0])
        return out

    def jac(x):
        J = np.zeros(x.shape[:-1] + (2, 4))
        J[..., 0, 0] = 1.0
        J[..., 0, 1] = a * np.cos(x[..., 1])
        J[..., 0, 2] = -b * np.sin(x[..., 2])
        J[..., 1, 1] = 1.0
        J[..., 1, 3] = b * np.cos(x[..., 3])
        J[..., 1, 0] = -a * np.sin(x[..., 0])
        return J

    return MapFamily("t4_to_t2", domain, codomain, ev, jac,
                     params={"a": a, "b": b})


def random_smooth_factor(chart: Chart, seed: int, amplitude: float = 0.1,
                         band: int = 2) -> Callable[[Array], Array]:
    """Strictly positive random trigonometric-polynomial factor, periodic
    in every coordinate, for metric deformation tests."""
    rng = np.random.default_rng(seed)
    d = chart.dim
    n_terms = 4
    freqs = rng.integers(-band, band + 1, size=(n_terms, d))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=n_terms)
    amps = rng.uniform(-1.0, 1.0, size=n_terms)
    amps *= amplitude / np.sum(np.abs(amps))
    spans = np.array([hi - lo for lo, hi in chart.coord_ranges])

    def factor(x):
        x = np.asarray(x, dtype=float)
        phase = np.einsum("td,...d->...t", freqs * (2.0 * np.pi / spans), x)
        return np.exp(np.sum(amps * np.cos(phase + phases), axis=-1))

    return factor
