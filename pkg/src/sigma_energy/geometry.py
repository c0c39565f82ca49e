"""Coordinate charts on the model manifolds, with metric deformations,
connection coefficients, and Ricci forms.

A Chart bundles everything downstream code needs about a coordinate patch:
the metric tensor as a vectorized callable, the closed-form volume density,
coordinate ranges with their singular loci, an orientation sign, and optional
contact data (eta, Reeb field) for the contact charts.

All geometric callables are numpy-vectorized: points have shape (..., d) and
tensors come back with matching batch dimensions.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

Array = np.ndarray

# Central-difference steps in chart coordinates.
FD_STEP = 1e-5      # first derivatives
FD_STEP2 = 1e-4     # second derivatives


# ---------------------------------------------------------------------------
# core types


@dataclass(frozen=True)
class ContactData:
    """Contact 1-form eta and its Reeb field xi on a chart.

    eta_fn(x) returns covector components (..., d); reeb_fn(x) returns vector
    components (..., d).  The pair satisfies eta(xi) = 1 and the interior
    product of xi with d(eta) vanishes; both are checked by sample grids in
    the test suite and are independent of any metric deformation.
    """

    eta_fn: Callable[[Array], Array]
    reeb_fn: Callable[[Array], Array]


@dataclass(frozen=True)
class Chart:
    """A coordinate chart with metric and bookkeeping data.

    metric_fn(x): (..., d) -> (..., d, d), symmetric positive definite away
    from the singular locus.  volume_density_fn gives the closed form
    sqrt(det g).  metric_grad_fn, when present, returns the analytic
    derivative dg[..., i, j, k] = d(g_ij)/dx^k; callers fall back to central
    differences when it is None.
    """

    name: str
    dim: int
    coord_ranges: tuple
    metric_fn: Callable[[Array], Array]
    volume_density_fn: Callable[[Array], Array]
    singular_locus: tuple = ()          # ((axis, value), ...)
    orientation_sign: float = 1.0
    periodic: tuple = ()                # per-axis period or None
    compact: bool = True
    volume: Optional[float] = None      # closed-form total volume
    contact: Optional[ContactData] = None
    radius: Optional[float] = None
    ricci_kind: Optional[str] = None    # 'space_form' | 'flat' | 'heisenberg'
    profile_axis: Optional[int] = None
    reduced_density_fn: Optional[Callable[[Array], Array]] = None
    metric_grad_fn: Optional[Callable[[Array], Array]] = None
    embedding_fn: Optional[Callable[[Array], Array]] = None
    embedding_jac_fn: Optional[Callable[[Array], Array]] = None
    area_form_fn: Optional[Callable[[Array], Array]] = None  # 2d charts only

    def metric(self, x: Array) -> Array:
        return self.metric_fn(np.asarray(x, dtype=float))

    def volume_density(self, x: Array) -> Array:
        return self.volume_density_fn(np.asarray(x, dtype=float))

    def metric_grad(self, x: Array, step: float = FD_STEP) -> Array:
        """d(g_ij)/dx^k, analytic when available, else central differences."""
        x = np.asarray(x, dtype=float)
        if self.metric_grad_fn is not None:
            return self.metric_grad_fn(x)
        return _fd_tensor_grad(self.metric_fn, x, step)

    def interior_points(self, n_per_axis, margin: float = 0.05) -> Array:
        """Cartesian product grid strictly inside the coordinate ranges.

        margin is an absolute coordinate offset kept from every range end
        (singular loci all sit on range boundaries for the catalogue charts).
        """
        if np.isscalar(n_per_axis):
            n_per_axis = (int(n_per_axis),) * self.dim
        axes = []
        for (lo, hi), n in zip(self.coord_ranges, n_per_axis):
            axes.append(np.linspace(lo + margin, hi - margin, n))
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)


@dataclass(frozen=True)
class FrameField:
    """A field of m tangent vectors on a chart.

    vectors_fn(x): (..., d) -> (..., m, d), row a holding the components of
    the a-th vector.  jacobian_fn, when present, returns the analytic
    component derivatives (..., m, d, d) with last index the derivative axis.
    """

    chart: Chart
    vectors_fn: Callable[[Array], Array]
    jacobian_fn: Optional[Callable[[Array], Array]] = None
    name: str = "frame"

    def vectors(self, x: Array) -> Array:
        return self.vectors_fn(np.asarray(x, dtype=float))

    def jacobian(self, x: Array, step: float = FD_STEP) -> Array:
        x = np.asarray(x, dtype=float)
        if self.jacobian_fn is not None:
            return self.jacobian_fn(x)
        return _fd_tensor_grad(self.vectors_fn, x, step)


# ---------------------------------------------------------------------------
# finite-difference helpers


def _fd_tensor_grad(fn: Callable[[Array], Array], x: Array, step: float) -> Array:
    """Fourth-order central-difference gradient of a tensor-valued function.

    Returns T[..., (tensor shape), k] with k the coordinate axis.
    """
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    cols = []
    for k in range(d):
        dx = np.zeros(d)
        dx[k] = step
        cols.append((-fn(x + 2.0 * dx) + 8.0 * fn(x + dx)
                     - 8.0 * fn(x - dx) + fn(x - 2.0 * dx)) / (12.0 * step))
    return np.stack(cols, axis=-1)


def one_form_differential(omega_fn: Callable[[Array], Array], x: Array,
                          step: float = FD_STEP) -> Array:
    """Exterior derivative of a 1-form by central differences.

    (d omega)_{ij} = d_i omega_j - d_j omega_i, returned as (..., d, d).
    """
    grad = _fd_tensor_grad(omega_fn, x, step)       # (..., j, i) = d_i w_j
    domega = np.swapaxes(grad, -1, -2) - grad       # (..., i, j)
    return domega


# ---------------------------------------------------------------------------
# chart catalogue

TWO_PI = 2.0 * np.pi


def _diag_metric(*entries):
    def fn(x):
        vals = [np.broadcast_to(e(x), x.shape[:-1]) if callable(e)
                else np.broadcast_to(e, x.shape[:-1]) for e in entries]
        d = len(vals)
        g = np.zeros(x.shape[:-1] + (d, d))
        for i, v in enumerate(vals):
            g[..., i, i] = v
        return g
    return fn


def _s3_join(R: float = 1.0) -> Chart:
    """Unit-join picture of the 3-sphere: coordinates (x1, x2, s).

    g = R^2 (cos^2 s dx1^2 + sin^2 s dx2^2 + ds^2) on [0,2pi)^2 x [0,pi/2].
    The contact form cos^2 s dx1 - sin^2 s dx2 and Reeb field d/dx1 - d/dx2
    are attached (they do not depend on the radius).
    """
    R2 = R * R

    def metric(x):
        s = x[..., 2]
        g = np.zeros(x.shape[:-1] + (3, 3))
        g[..., 0, 0] = R2 * np.cos(s) ** 2
        g[..., 1, 1] = R2 * np.sin(s) ** 2
        g[..., 2, 2] = R2
        return g

    def metric_grad(x):
        s = x[..., 2]
        dg = np.zeros(x.shape[:-1] + (3, 3, 3))
        dg[..., 0, 0, 2] = -R2 * np.sin(2.0 * s)
        dg[..., 1, 1, 2] = R2 * np.sin(2.0 * s)
        return dg

    def density(x):
        s = x[..., 2]
        return R ** 3 * np.cos(s) * np.sin(s)

    def reduced_density(s):
        return (TWO_PI ** 2) * R ** 3 * np.cos(s) * np.sin(s)

    def eta(x):
        s = x[..., 2]
        out = np.zeros(x.shape)
        out[..., 0] = np.cos(s) ** 2
        out[..., 1] = -np.sin(s) ** 2
        return out

    def reeb(x):
        out = np.zeros(x.shape)
        out[..., 0] = 1.0
        out[..., 1] = -1.0
        return out

    def embedding(x):
        x1, x2, s = x[..., 0], x[..., 1], x[..., 2]
        p = np.zeros(x.shape[:-1] + (4,))
        p[..., 0] = np.cos(s) * np.cos(x1)
        p[..., 1] = np.cos(s) * np.sin(x1)
        p[..., 2] = np.sin(s) * np.cos(x2)
        p[..., 3] = np.sin(s) * np.sin(x2)
        return R * p

    def embedding_jac(x):
        x1, x2, s = x[..., 0], x[..., 1], x[..., 2]
        c, sn = np.cos(s), np.sin(s)
        J = np.zeros(x.shape[:-1] + (4, 3))
        J[..., 0, 0] = -c * np.sin(x1)
        J[..., 1, 0] = c * np.cos(x1)
        J[..., 2, 1] = -sn * np.sin(x2)
        J[..., 3, 1] = sn * np.cos(x2)
        J[..., 0, 2] = -sn * np.cos(x1)
        J[..., 1, 2] = -sn * np.sin(x1)
        J[..., 2, 2] = c * np.cos(x2)
        J[..., 3, 2] = c * np.sin(x2)
        return R * J

    return Chart(
        name="s3_join", dim=3,
        coord_ranges=((0.0, TWO_PI), (0.0, TWO_PI), (0.0, np.pi / 2)),
        metric_fn=metric, metric_grad_fn=metric_grad,
        volume_density_fn=density,
        singular_locus=((2, 0.0), (2, np.pi / 2)),
        periodic=(TWO_PI, TWO_PI, None),
        volume=2.0 * np.pi ** 2 * R ** 3,
        contact=ContactData(eta, reeb),
        radius=R, ricci_kind="space_form",
        profile_axis=2, reduced_density_fn=reduced_density,
        embedding_fn=embedding, embedding_jac_fn=embedding_jac,
    )


def _s3_suspension(R: float = 1.0) -> Chart:
    """Double-suspension picture of the 3-sphere: coordinates (s, t, x).

    g = R^2 (ds^2 + sin^2 s (dt^2 + sin^2 t dx^2)) on [0,pi]^2 x [0,2pi).
    """
    R2 = R * R

    def metric(x):
        s, t = x[..., 0], x[..., 1]
        g = np.zeros(x.shape[:-1] + (3, 3))
        g[..., 0, 0] = R2
        g[..., 1, 1] = R2 * np.sin(s) ** 2
        g[..., 2, 2] = R2 * (np.sin(s) * np.sin(t)) ** 2
        return g

    def metric_grad(x):
        s, t = x[..., 0], x[..., 1]
        dg = np.zeros(x.shape[:-1] + (3, 3, 3))
        dg[..., 1, 1, 0] = R2 * np.sin(2.0 * s)
        dg[..., 2, 2, 0] = R2 * np.sin(2.0 * s) * np.sin(t) ** 2
        dg[..., 2, 2, 1] = R2 * np.sin(s) ** 2 * np.sin(2.0 * t)
        return dg

    def density(x):
        s, t = x[..., 0], x[..., 1]
        return R ** 3 * np.sin(s) ** 2 * np.sin(t)

    def reduced_density(s):
        return (2.0 * TWO_PI) * R ** 3 * np.sin(s) ** 2

    def eta(x):
        s, t = x[..., 0], x[..., 1]
        out = np.zeros(x.shape)
        out[..., 0] = np.cos(t)
        out[..., 1] = -0.5 * np.sin(2.0 * s) * np.sin(t)
        out[..., 2] = (np.sin(s) * np.sin(t)) ** 2
        return out

    def reeb(x):
        s, t = x[..., 0], x[..., 1]
        out = np.zeros(x.shape)
        out[..., 0] = np.cos(t)
        out[..., 1] = -np.sin(t) / np.tan(s)
        out[..., 2] = 1.0
        return out

    def embedding(x):
        s, t, xx = x[..., 0], x[..., 1], x[..., 2]
        p = np.zeros(x.shape[:-1] + (4,))
        p[..., 0] = np.cos(s)
        p[..., 1] = np.sin(s) * np.cos(t)
        p[..., 2] = np.sin(s) * np.sin(t) * np.cos(xx)
        p[..., 3] = np.sin(s) * np.sin(t) * np.sin(xx)
        return R * p

    def embedding_jac(x):
        s, t, xx = x[..., 0], x[..., 1], x[..., 2]
        cs, ss = np.cos(s), np.sin(s)
        ct, st = np.cos(t), np.sin(t)
        cx, sx = np.cos(xx), np.sin(xx)
        J = np.zeros(x.shape[:-1] + (4, 3))
        J[..., 0, 0] = -ss
        J[..., 1, 0] = cs * ct
        J[..., 2, 0] = cs * st * cx
        J[..., 3, 0] = cs * st * sx
        J[..., 1, 1] = -ss * st
        J[..., 2, 1] = ss * ct * cx
        J[..., 3, 1] = ss * ct * sx
        J[..., 2, 2] = -ss * st * sx
        J[..., 3, 2] = ss * st * cx
        return R * J

    return Chart(
        name="s3_suspension", dim=3,
        coord_ranges=((0.0, np.pi), (0.0, np.pi), (0.0, TWO_PI)),
        metric_fn=metric, metric_grad_fn=metric_grad,
        volume_density_fn=density,
        singular_locus=((0, 0.0), (0, np.pi), (1, 0.0), (1, np.pi)),
        periodic=(None, None, TWO_PI),
        volume=2.0 * np.pi ** 2 * R ** 3,
        contact=ContactData(eta, reeb),
        radius=R, ricci_kind="space_form",
        profile_axis=0, reduced_density_fn=reduced_density,
        embedding_fn=embedding, embedding_jac_fn=embedding_jac,
    )


def _s3_unit_tangent(R: float = 1.0) -> Chart:
    """Unit-tangent-bundle picture of the 3-sphere: coordinates (theta, s, mu).

    g = R^2 (d theta^2 + ds^2 + d mu^2 + 2 sin(2s) d theta d mu) with
    s in [0, pi/4]; the metric degenerates at s = pi/4.
    """
    R2 = R * R

    def metric(x):
        s = x[..., 1]
        g = np.zeros(x.shape[:-1] + (3, 3))
        g[..., 0, 0] = R2
        g[..., 1, 1] = R2
        g[..., 2, 2] = R2
        g[..., 0, 2] = R2 * np.sin(2.0 * s)
        g[..., 2, 0] = R2 * np.sin(2.0 * s)
        return g

    def metric_grad(x):
        s = x[..., 1]
        dg = np.zeros(x.shape[:-1] + (3, 3, 3))
        dg[..., 0, 2, 1] = 2.0 * R2 * np.cos(2.0 * s)
        dg[..., 2, 0, 1] = 2.0 * R2 * np.cos(2.0 * s)
        return dg

    def density(x):
        s = x[..., 1]
        return R ** 3 * np.cos(2.0 * s)

    def reduced_density(s):
        return (TWO_PI ** 2) * R ** 3 * np.cos(2.0 * s)

    def eta(x):
        s = x[..., 1]
        out = np.zeros(x.shape)
        out[..., 0] = 1.0
        out[..., 2] = np.sin(2.0 * s)
        return out

    def reeb(x):
        out = np.zeros(x.shape)
        out[..., 0] = 1.0
        return out

    def embedding(x):
        th, s, mu = x[..., 0], x[..., 1], x[..., 2]
        p = np.zeros(x.shape[:-1] + (4,))
        c, sn = np.cos(s), np.sin(s)
        p[..., 0] = np.cos(th) * c * np.cos(mu) - np.sin(th) * sn * np.sin(mu)
        p[..., 1] = np.sin(th) * c * np.cos(mu) + np.cos(th) * sn * np.sin(mu)
        p[..., 2] = np.cos(th) * c * np.sin(mu) + np.sin(th) * sn * np.cos(mu)
        p[..., 3] = np.sin(th) * c * np.sin(mu) - np.cos(th) * sn * np.cos(mu)
        return R * p

    def embedding_jac(x):
        th, s, mu = x[..., 0], x[..., 1], x[..., 2]
        c, sn = np.cos(s), np.sin(s)
        cth, sth = np.cos(th), np.sin(th)
        cmu, smu = np.cos(mu), np.sin(mu)
        p0 = cth * c * cmu - sth * sn * smu
        p1 = sth * c * cmu + cth * sn * smu
        p2 = cth * c * smu + sth * sn * cmu
        p3 = sth * c * smu - cth * sn * cmu
        J = np.zeros(x.shape[:-1] + (4, 3))
        J[..., 0, 0] = -p1
        J[..., 1, 0] = p0
        J[..., 2, 0] = -p3
        J[..., 3, 0] = p2
        # d/ds swaps (cos s, sin s) -> (-sin s, cos s)
        J[..., 0, 1] = -cth * sn * cmu - sth * c * smu
        J[..., 1, 1] = -sth * sn * cmu + cth * c * smu
        J[..., 2, 1] = -cth * sn * smu + sth * c * cmu
        J[..., 3, 1] = -sth * sn * smu - cth * c * cmu
        J[..., 0, 2] = -p2
        J[..., 1, 2] = -p3
        J[..., 2, 2] = p0
        J[..., 3, 2] = p1
        return R * J

    return Chart(
        name="s3_unit_tangent", dim=3,
        coord_ranges=((0.0, TWO_PI), (0.0, np.pi / 4), (0.0, TWO_PI)),
        metric_fn=metric, metric_grad_fn=metric_grad,
        volume_density_fn=density,
        singular_locus=((1, np.pi / 4),),
        periodic=(TWO_PI, None, TWO_PI),
        volume=2.0 * np.pi ** 2 * R ** 3,
        contact=ContactData(eta, reeb),
        radius=R, ricci_kind="space_form",
        profile_axis=1, reduced_density_fn=reduced_density,
        embedding_fn=embedding, embedding_jac_fn=embedding_jac,
    )


def _s2(R: float = 1.0) -> Chart:
    """Round 2-sphere: coordinates (u, v), g = R^2 (du^2 + sin^2 u dv^2).

    area_form_fn returns the coefficient of du ^ dv in the normalized area
    2-form -(1/2) sin u du ^ dv used by the Hopf-invariant machinery.
    """
    R2 = R * R

    def metric(x):
        u = x[..., 0]
        g = np.zeros(x.shape[:-1] + (2, 2))
        g[..., 0, 0] = R2
        g[..., 1, 1] = R2 * np.sin(u) ** 2
        return g

    def metric_grad(x):
        u = x[..., 0]
        dg = np.zeros(x.shape[:-1] + (2, 2, 2))
        dg[..., 1, 1, 0] = R2 * np.sin(2.0 * u)
        return dg

    def density(x):
        u = x[..., 0]
        return R2 * np.sin(u)

    def area_form(x):
        u = x[..., 0]
        return -0.5 * np.sin(u)

    def embedding(x):
        u, v = x[..., 0], x[..., 1]
        p = np.zeros(x.shape[:-1] + (3,))
        p[..., 0] = np.cos(u)
        p[..., 1] = np.sin(u) * np.cos(v)
        p[..., 2] = np.sin(u) * np.sin(v)
        return R * p

    def embedding_jac(x):
        u, v = x[..., 0], x[..., 1]
        J = np.zeros(x.shape[:-1] + (3, 2))
        J[..., 0, 0] = -np.sin(u)
        J[..., 1, 0] = np.cos(u) * np.cos(v)
        J[..., 2, 0] = np.cos(u) * np.sin(v)
        J[..., 1, 1] = -np.sin(u) * np.sin(v)
        J[..., 2, 1] = np.sin(u) * np.cos(v)
        return R * J

    return Chart(
        name="s2", dim=2,
        coord_ranges=((0.0, np.pi), (0.0, TWO_PI)),
        metric_fn=metric, metric_grad_fn=metric_grad,
        volume_density_fn=density,
        singular_locus=((0, 0.0), (0, np.pi)),
        periodic=(None, TWO_PI),
        volume=4.0 * np.pi * R2,
        radius=R, ricci_kind="space_form",
        embedding_fn=embedding, embedding_jac_fn=embedding_jac,
        area_form_fn=area_form,
    )


def _t3_flat() -> Chart:
    """Flat 3-torus (x, y, z) in [0,2pi)^3 with the overtwisted-type contact
    form cos z dx + sin z dy."""

    def eta(x):
        z = x[..., 2]
        out = np.zeros(x.shape)
        out[..., 0] = np.cos(z)
        out[..., 1] = np.sin(z)
        return out

    def reeb(x):
        z = x[..., 2]
        out = np.zeros(x.shape)
        out[..., 0] = np.cos(z)
        out[..., 1] = np.sin(z)
        return out

    def metric_grad(x):
        return np.zeros(x.shape[:-1] + (3, 3, 3))

    return Chart(
        name="t3_flat", dim=3,
        coord_ranges=((0.0, TWO_PI),) * 3,
        metric_fn=_diag_metric(1.0, 1.0, 1.0),
        metric_grad_fn=metric_grad,
        volume_density_fn=lambda x: np.ones(x.shape[:-1]),
        periodic=(TWO_PI,) * 3,
        volume=TWO_PI ** 3,
        contact=ContactData(eta, reeb),
        ricci_kind="flat",
    )


def _heisenberg(half_width: float = np.pi) -> Chart:
    """Heisenberg group chart (x, y, z) with eta = dz - y dx and
    g = dx^2 + dy^2 + eta (x) eta.  Non-compact; the coordinate box only
    bounds sampling grids."""

    def metric(x):
        y = x[..., 1]
        g = np.zeros(x.shape[:-1] + (3, 3))
        g[..., 0, 0] = 1.0 + y * y
        g[..., 1, 1] = 1.0
        g[..., 2, 2] = 1.0
        g[..., 0, 2] = -y
        g[..., 2, 0] = -y
        return g

    def metric_grad(x):
        y = x[..., 1]
        dg = np.zeros(x.shape[:-1] + (3, 3, 3))
        dg[..., 0, 0, 1] = 2.0 * y
        dg[..., 0, 2, 1] = -1.0
        dg[..., 2, 0, 1] = -1.0
        return dg

    def eta(x):
        y = x[..., 1]
        out = np.zeros(x.shape)
        out[..., 0] = -y
        out[..., 2] = 1.0
        return out

    def reeb(x):
        out = np.zeros(x.shape)
        out[..., 2] = 1.0
        return out

    L = float(half_width)
    return Chart(
        name="heisenberg", dim=3,
        coord_ranges=((-L, L), (-L, L), (-L, L)),
        metric_fn=metric, metric_grad_fn=metric_grad,
        volume_density_fn=lambda x: np.ones(x.shape[:-1]),
        compact=False,
        contact=ContactData(eta, reeb),
        ricci_kind="heisenberg",
    )


def _r3_spherical(r_max: float = 20.0) -> Chart:
    """Euclidean 3-space in spherical coordinates (r, t, x):
    g = dr^2 + r^2 (dt^2 + sin^2 t dx^2).  Non-compact (truncated ball)."""

    def metric(x):
        r, t = x[..., 0], x[..., 1]
        g = np.zeros(x.shape[:-1] + (3, 3))
        g[..., 0, 0] = 1.0
        g[..., 1, 1] = r * r
        g[..., 2, 2] = (r * np.sin(t)) ** 2
        return g

    def metric_grad(x):
        r, t = x[..., 0], x[..., 1]
        dg = np.zeros(x.shape[:-1] + (3, 3, 3))
        dg[..., 1, 1, 0] = 2.0 * r
        dg[..., 2, 2, 0] = 2.0 * r * np.sin(t) ** 2
        dg[..., 2, 2, 1] = r * r * np.sin(2.0 * t)
        return dg

    def density(x):
        r, t = x[..., 0], x[..., 1]
        return r * r * np.sin(t)

    def reduced_density(r):
        return 4.0 * np.pi * r * r

    return Chart(
        name="r3_spherical", dim=3,
        coord_ranges=((0.0, r_max), (0.0, np.pi), (0.0, TWO_PI)),
        metric_fn=metric, metric_grad_fn=metric_grad,
        volume_density_fn=density,
        singular_locus=((0, 0.0), (1, 0.0), (1, np.pi)),
        periodic=(None, None, TWO_PI),
        compact=False,
        ricci_kind="flat",
        profile_axis=0, reduced_density_fn=reduced_density,
    )


def flat_chart(dim: int, half_width: float = np.pi, name: str = None,
               compact: bool = False) -> Chart:
    """Generic flat chart in cartesian coordinates (used for plane targets
    and flat product domains)."""

    def metric(x):
        g = np.zeros(x.shape[:-1] + (dim, dim))
        for i in range(dim):
            g[..., i, i] = 1.0
        return g

    def metric_grad(x):
        return np.zeros(x.shape[:-1] + (dim, dim, dim))

    L = float(half_width)
    return Chart(
        name=name or f"r{dim}_flat", dim=dim,
        coord_ranges=((-L, L),) * dim,
        metric_fn=metric, metric_grad_fn=metric_grad,
        volume_density_fn=lambda x: np.ones(x.shape[:-1]),
        compact=compact,
        volume=(2.0 * L) ** dim if compact else None,
        periodic=((2.0 * L,) * dim if compact else (None,) * dim),
        ricci_kind="flat",
    )


_CATALOGUE = {
    "s3_join": _s3_join,
    "s3_suspension": _s3_suspension,
    "s3_unit_tangent": _s3_unit_tangent,
    "s2": _s2,
    "t3_flat": _t3_flat,
    "heisenberg": _heisenberg,
    "r3_spherical": _r3_spherical,
}


def make_chart(spec: str, **kwargs) -> Chart:
    """Build a catalogue chart from a specifier.

    spec is either a bare name ('s3_join') or a name with positional
    parameters ('s3_join(2.0)').  Keyword arguments are passed through to
    the chart constructor; unknown names raise ValueError.
    """
    spec = spec.strip()
    args = []
    if "(" in spec:
        if not spec.endswith(")"):
            raise ValueError(f"malformed chart specifier: {spec!r}")
        name, rest = spec.split("(", 1)
        name = name.strip()
        body = rest[:-1].strip()
        if body:
            args = [float(tok) for tok in body.split(",")]
    else:
        name = spec
    if name not in _CATALOGUE:
        raise ValueError(f"unknown chart {name!r}; known: {sorted(_CATALOGUE)}")
    return _CATALOGUE[name](*args, **kwargs)


# ---------------------------------------------------------------------------
# metric deformations


def deform_metric(chart: Chart, kind: str, **params) -> Chart:
    """Return a new Chart carrying a deformed metric.

    kinds:
      radius_scale(c):      g -> c^2 g (exact identity for c = 1)
      squash(R):            g -> R^-1 g + (1 - R^-1) eta (x) eta
      hopf_squash(k, l):    join-chart Berger-type family
                            k^2 cos^2 s dx1^2 + l^2 sin^2 s dx2^2 + ds^2
      biconformal(sigma_fn, rho_fn, vertical_frame_fn):
                            g -> sigma^-2 g^H + rho^-2 g^V, splitting induced
                            by the supplied vertical frame (g-orthonormal);
                            with no splitting the whole metric is conformally
                            scaled by sigma^-2.
    """
    if kind == "radius_scale":
        c = float(params.pop("c"))
        _reject_extra(params)
        c2 = c * c
        base_metric = chart.metric_fn
        base_grad = chart.metric_grad_fn
        base_density = chart.volume_density_fn
        base_reduced = chart.reduced_density_fn
        cd = c ** chart.dim
        return replace(
            chart,
            name=f"{chart.name}*radius_scale({c})",
            metric_fn=lambda x: c2 * base_metric(x),
            metric_grad_fn=(None if base_grad is None
                            else (lambda x: c2 * base_grad(x))),
            volume_density_fn=lambda x: cd * base_density(x),
            reduced_density_fn=(None if base_reduced is None
                                else (lambda s: cd * base_reduced(s))),
            volume=(None if chart.volume is None else cd * chart.volume),
            radius=(None if chart.radius is None else c * chart.radius),
        )

    if kind == "squash":
        R = float(params.pop("R"))
        _reject_extra(params)
        if chart.contact is None:
            raise ValueError("squash deformation needs a chart with contact data")
        a = 1.0 / R
        b = 1.0 - a
        base_metric = chart.metric_fn
        eta_fn = chart.contact.eta_fn
        base_density = chart.volume_density_fn

        def metric(x):
            g = base_metric(x)
            eta = eta_fn(x)
            return a * g + b * eta[..., :, None] * eta[..., None, :]

        def density(x):
            # det(a g + b eta x eta) = a^(d-1) (a + b |eta|^2_{g^-1}) det g;
            # for the unit contact metrics |eta|_{g^-1} = 1.
            return np.sqrt(a ** (chart.dim - 1)) * base_density(x)

        return replace(
            chart,
            name=f"{chart.name}*squash({R})",
            metric_fn=metric, metric_grad_fn=None,
            volume_density_fn=density,
            reduced_density_fn=None,
            volume=(None if chart.volume is None
                    else chart.volume * np.sqrt(a ** (chart.dim - 1))),
            radius=None, ricci_kind=None,
        )

    if kind == "hopf_squash":
        k = float(params.pop("k"))
        l = float(params.pop("l"))
        _reject_extra(params)
        if chart.name != "s3_join" or chart.contact is None:
            raise ValueError("hopf_squash is defined on the s3_join chart")

        def metric(x):
            s = x[..., 2]
            g = np.zeros(x.shape[:-1] + (3, 3))
            g[..., 0, 0] = (k * np.cos(s)) ** 2
            g[..., 1, 1] = (l * np.sin(s)) ** 2
            g[..., 2, 2] = 1.0
            return g

        def metric_grad(x):
            s = x[..., 2]
            dg = np.zeros(x.shape[:-1] + (3, 3, 3))
            dg[..., 0, 0, 2] = -k * k * np.sin(2.0 * s)
            dg[..., 1, 1, 2] = l * l * np.sin(2.0 * s)
            return dg

        def density(x):
            s = x[..., 2]
            return abs(k * l) * np.cos(s) * np.sin(s)

        def reduced_density(s):
            return (TWO_PI ** 2) * abs(k * l) * np.cos(s) * np.sin(s)

        def eta(x):
            s = x[..., 2]
            out = np.zeros(x.shape)
            out[..., 0] = k * np.cos(s) ** 2
            out[..., 1] = -l * np.sin(s) ** 2
            return out

        def reeb(x):
            out = np.zeros(x.shape)
            out[..., 0] = 1.0 / k
            out[..., 1] = -1.0 / l
            return out

        return replace(
            chart,
            name=f"s3_join*hopf_squash({k:g},{l:g})",
            metric_fn=metric, metric_grad_fn=metric_grad,
            volume_density_fn=density, reduced_density_fn=reduced_density,
            volume=2.0 * np.pi ** 2 * abs(k * l),
            contact=ContactData(eta, reeb),
            radius=None,
            ricci_kind=("space_form" if (k == 1.0 and l == 1.0) else None),
        )

    if kind == "biconformal":
        sigma_fn = params.pop("sigma_fn")
        rho_fn = params.pop("rho_fn", None)
        vertical_frame_fn = params.pop("vertical_frame_fn", None)
        _reject_extra(params)
        base_metric = chart.metric_fn

        if vertical_frame_fn is None:
            def metric(x):
                g = base_metric(x)
                sig = np.asarray(sigma_fn(x))
                return g + (sig ** -2 - 1.0)[..., None, None] * g
        else:
            def metric(x):
                g = base_metric(x)
                sig = np.asarray(sigma_fn(x))
                rho = np.asarray(rho_fn(x))
                vert = vertical_frame_fn(x)            # (..., k, d)
                gv = np.einsum("...ij,...aj->...ai", g, vert)
                g_vert = np.einsum("...ai,...aj->...ij", gv, gv)
                g_hor = g - g_vert
                return (g + (sig ** -2 - 1.0)[..., None, None] * g_hor
                        + (rho ** -2 - 1.0)[..., None, None] * g_vert)

        def density(x):
            g = metric(x)
            return np.sqrt(np.linalg.det(g))

        return replace(
            chart,
            name=f"{chart.name}*biconformal",
            metric_fn=metric, metric_grad_fn=None,
            volume_density_fn=density, reduced_density_fn=None,
            volume=None, radius=None, ricci_kind=None, contact=None,
        )

    raise ValueError(f"unknown deformation {kind!r}")


def _reject_extra(params: dict) -> None:
    if params:
        raise ValueError(f"unexpected deformation parameters: {sorted(params)}")


# ---------------------------------------------------------------------------
# frames and connection coefficients


def coordinate_frame(chart: Chart) -> FrameField:
    def vectors(x):
        v = np.zeros(x.shape + (x.shape[-1],))
        for i in range(x.shape[-1]):
            v[..., i, i] = 1.0
        return v

    def jac(x):
        d = x.shape[-1]
        return np.zeros(x.shape[:-1] + (d, d, d))

    return FrameField(chart, vectors, jac, name="coordinate")


def orthonormal_frame(chart: Chart) -> FrameField:
    """Gram-Schmidt of the coordinate frame in coordinate order.

    Rows of inv(L) for the Cholesky factor g = L L^T; for diagonal metrics
    this is the familiar frame d_i / sqrt(g_ii).
    """
    def vectors(x):
        g = chart.metric_fn(x)
        L = np.linalg.cholesky(g)
        return np.linalg.inv(L)

    return FrameField(chart, vectors, None, name="orthonormal")


def frame_gram(chart: Chart, frame: FrameField, x: Array) -> Array:
    v = frame.vectors(x)
    g = chart.metric(x)
    return np.einsum("...ai,...ij,...bj->...ab", v, g, v)


def connection_coeffs(chart: Chart, frame: FrameField, x: Array,
                      step: float = FD_STEP) -> Array:
    """Gamma[i, j, k] = g(nabla_{E_i} E_j, E_k) by the Koszul formula.

    Frame component derivatives come from the frame's analytic jacobian when
    available, otherwise central differences of step `step`; metric
    derivatives likewise.  Shape (..., m, m, m) for an m-vector frame.
    """
    x = np.asarray(x, dtype=float)
    g = chart.metric(x)                       # (..., d, d)
    dg = chart.metric_grad(x, step)           # (..., d, d, l)
    V = frame.vectors(x)                      # (..., a, d)
    dV = frame.jacobian(x, step)              # (..., a, k, l)

    # d_l G_ab for the Gram matrix G_ab = V_a . g . V_b
    term1 = np.einsum("...ail,...ij,...bj->...abl", dV, g, V)
    term2 = np.einsum("...ai,...ijl,...bj->...abl", V, dg, V)
    term3 = np.einsum("...ai,...ij,...bjl->...abl", V, g, dV)
    dG = term1 + term2 + term3                # (..., a, b, l)

    # directional derivatives E_c(G_ab) = V_c^l d_l G_ab
    DG = np.einsum("...cl,...abl->...cab", V, dG)

    # Lie brackets [E_a, E_b]^k = V_a^l d_l V_b^k - V_b^l d_l V_a^k
    B = (np.einsum("...al,...bkl->...abk", V, dV)
         - np.einsum("...bl,...akl->...abk", V, dV))
    gB = np.einsum("...abk,...kj,...cj->...abc", B, g, V)

    # 2 g(nabla_X Y, Z) = X<Y,Z> + Y<X,Z> - Z<X,Y>
    #                     + <[X,Y],Z> - <[X,Z],Y> - <[Y,Z],X>
    gamma = 0.5 * (
        DG
        + np.einsum("...jik->...ijk", DG)
        - np.einsum("...kij->...ijk", DG)
        + gB
        - np.einsum("...ikj->...ijk", gB)
        - np.einsum("...jki->...ijk", gB)
    )
    return gamma


# ---------------------------------------------------------------------------
# Ricci forms


def ricci_form(chart: Chart) -> Callable[[Array], Array]:
    """Closed-form Ricci tensor of the catalogue metrics.

    Supports the round spheres (Ric = (d-1)/R^2 g), the flat charts (0), and
    the Heisenberg metric; raises for deformed metrics outside the catalogue.
    """
    if chart.ricci_kind == "space_form":
        if chart.radius is None:
            raise ValueError("space form chart missing its radius")
        factor = (chart.dim - 1) / chart.radius ** 2
        metric = chart.metric_fn
        return lambda x: factor * metric(x)

    if chart.ricci_kind == "flat":
        d = chart.dim
        return lambda x: np.zeros(x.shape[:-1] + (d, d))

    if chart.ricci_kind == "heisenberg":
        def ric(x):
            y = x[..., 1]
            out = np.zeros(x.shape[:-1] + (3, 3))
            # -(1/2)(dx^2 + dy^2) + (1/2) eta (x) eta with eta = dz - y dx
            out[..., 0, 0] = 0.5 * (y * y - 1.0)
            out[..., 1, 1] = -0.5
            out[..., 2, 2] = 0.5
            out[..., 0, 2] = -0.5 * y
            out[..., 2, 0] = -0.5 * y
            return out
        return ric

    raise ValueError(
        f"no closed-form Ricci catalogued for chart {chart.name!r}")


# ---------------------------------------------------------------------------
# contact checks


def contact_defect(chart: Chart, n: int = 10, margin: float = 0.05,
                   step: float = FD_STEP) -> tuple:
    """Max deviations of (eta(xi) - 1, iota_xi d eta) on a sample grid."""
    if chart.contact is None:
        raise ValueError(f"chart {chart.name!r} carries no contact data")
    pts = chart.interior_points(n, margin)
    eta = chart.contact.eta_fn(pts)
    xi = chart.contact.reeb_fn(pts)
    pairing = np.einsum("...i,...i->...", eta, xi)
    domega = one_form_differential(chart.contact.eta_fn, pts, step)
    contraction = np.einsum("...i,...ij->...j", xi, domega)
    return (float(np.max(np.abs(pairing - 1.0))),
            float(np.max(np.abs(contraction))))
