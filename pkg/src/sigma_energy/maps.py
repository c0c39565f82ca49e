"""Map families between the model charts, with profile functions and
analytic Jacobians.

Every family is packaged as a MapFamily whose eval_fn returns unwrapped
codomain coordinates (periodic coordinates are not reduced mod their period,
which keeps finite differences smooth) and whose jac_fn, when present, is the
closed-form coordinate Jacobian.  Construction runs a mandatory self-test
comparing the analytic Jacobian against central differences at random
interior points.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

import numpy as np
from scipy.interpolate import CubicSpline

from .geometry import (Chart, FD_STEP, FD_STEP2, deform_metric, flat_chart,
                       make_chart)

Array = np.ndarray

SELF_TEST_POINTS = 100
SELF_TEST_RTOL = 1e-6
_SELF_TEST_SEED = 20250825


# ---------------------------------------------------------------------------
# profile functions


@dataclass(frozen=True)
class ProfileFunction:
    """A scalar profile s -> alpha(s) with first and second derivatives.

    kind 'closed' profiles carry analytic derivatives; 'grid' profiles are
    natural cubic splines through tabulated values; 'numeric' wraps a bare
    callable with central-difference derivatives.
    """

    name: str
    interval: tuple
    fn: Callable[[Array], Array]
    d1: Callable[[Array], Array]
    d2: Callable[[Array], Array]
    kind: str = "closed"

    def __call__(self, s):
        return self.fn(np.asarray(s, dtype=float))

    def deriv(self, s):
        return self.d1(np.asarray(s, dtype=float))

    def deriv2(self, s):
        return self.d2(np.asarray(s, dtype=float))

    @property
    def boundary_values(self):
        lo, hi = self.interval
        return float(self.fn(np.asarray(lo))), float(self.fn(np.asarray(hi)))

    @staticmethod
    def from_callable(fn, interval, d1=None, d2=None, name="custom"):
        if d1 is None:
            def d1(s, _f=fn):
                return (_f(s + FD_STEP) - _f(s - FD_STEP)) / (2.0 * FD_STEP)
        if d2 is None:
            def d2(s, _f=fn):
                return (_f(s + FD_STEP2) - 2.0 * _f(s)
                        + _f(s - FD_STEP2)) / FD_STEP2 ** 2
        kind = "closed" if name in _PROFILE_REGISTRY else "numeric"
        return ProfileFunction(name, tuple(interval), fn, d1, d2, kind)

    @staticmethod
    def from_grid(s_values, alpha_values, name="grid"):
        s_values = np.asarray(s_values, dtype=float)
        alpha_values = np.asarray(alpha_values, dtype=float)
        if s_values.ndim != 1 or s_values.shape != alpha_values.shape:
            raise ValueError("grid profile needs matching 1d arrays")
        if not np.all(np.diff(s_values) > 0):
            raise ValueError("grid profile abscissae must be increasing")
        spline = CubicSpline(s_values, alpha_values, bc_type="natural")
        d1 = spline.derivative(1)
        d2 = spline.derivative(2)
        return ProfileFunction(name, (float(s_values[0]), float(s_values[-1])),
                               spline, d1, d2, kind="grid")

    @staticmethod
    def from_csv(path, name=None):
        data = np.loadtxt(path, delimiter=",", comments="#")
        if data.ndim != 2 or data.shape[1] != 2:
            raise ValueError(f"profile csv {path!r} must have two columns")
        return ProfileFunction.from_grid(data[:, 0], data[:, 1],
                                         name=name or f"csv:{path}")

    def to_grid(self, n: int):
        s = np.linspace(self.interval[0], self.interval[1], n)
        return s, self(s)


def _closed(name, interval, fn, d1, d2):
    return ProfileFunction(name, interval, fn, d1, d2, kind="closed")


PI = np.pi

_PROFILE_REGISTRY = {
    # identity-type profiles on the intervals the families use
    "id_pi2": lambda: _closed("id_pi2", (0.0, PI / 2),
                              lambda s: s, lambda s: np.ones_like(s),
                              lambda s: np.zeros_like(s)),
    "id_pi4": lambda: _closed("id_pi4", (0.0, PI / 4),
                              lambda s: s, lambda s: np.ones_like(s),
                              lambda s: np.zeros_like(s)),
    "id_pi": lambda: _closed("id_pi", (0.0, PI),
                             lambda s: s, lambda s: np.ones_like(s),
                             lambda s: np.zeros_like(s)),
    "arccos_cos2": lambda: _closed(
        "arccos_cos2", (0.0, PI / 2),
        lambda s: np.arccos(np.cos(s) ** 2),
        lambda s: 2.0 * np.cos(s) / np.sqrt(1.0 + np.cos(s) ** 2),
        lambda s: (-2.0 * np.sin(s) / np.sqrt(1.0 + np.cos(s) ** 2)
                   + 2.0 * np.cos(s) ** 2 * np.sin(s)
                   * (1.0 + np.cos(s) ** 2) ** -1.5)),
    "double": lambda: _closed("double", (0.0, PI / 2),
                              lambda s: 2.0 * s,
                              lambda s: np.full_like(np.asarray(s, float), 2.0),
                              lambda s: np.zeros_like(s)),
    "hopf_minus": lambda: _closed("hopf_minus", (0.0, PI / 4),
                                  lambda s: PI / 2 - 2.0 * s,
                                  lambda s: np.full_like(np.asarray(s, float), -2.0),
                                  lambda s: np.zeros_like(s)),
    "hopf_plus": lambda: _closed("hopf_plus", (0.0, PI / 4),
                                 lambda s: PI / 2 + 2.0 * s,
                                 lambda s: np.full_like(np.asarray(s, float), 2.0),
                                 lambda s: np.zeros_like(s)),
    "hedgehog_exp": lambda: _closed("hedgehog_exp", (0.0, 20.0),
                                    lambda r: PI * np.exp(-r),
                                    lambda r: -PI * np.exp(-r),
                                    lambda r: PI * np.exp(-r)),
    "zero": lambda: _closed("zero", (0.0, 2.0 * PI),
                            lambda s: np.zeros_like(np.asarray(s, float)),
                            lambda s: np.zeros_like(np.asarray(s, float)),
                            lambda s: np.zeros_like(np.asarray(s, float))),
    "sin": lambda: _closed("sin", (0.0, 2.0 * PI),
                           np.sin, np.cos, lambda s: -np.sin(s)),
    "cos": lambda: _closed("cos", (0.0, 2.0 * PI),
                           np.cos, lambda s: -np.sin(s), lambda s: -np.cos(s)),
    "one": lambda: _closed("one", (0.0, 2.0 * PI),
                           lambda s: np.ones_like(np.asarray(s, float)),
                           lambda s: np.zeros_like(np.asarray(s, float)),
                           lambda s: np.zeros_like(np.asarray(s, float))),
}


def make_profile(spec, interval=None) -> ProfileFunction:
    """Resolve a profile from a registry name, 'csv:<path>' specifier,
    ProfileFunction, or bare callable."""
    if isinstance(spec, ProfileFunction):
        return spec
    if callable(spec):
        if interval is None:
            raise ValueError("callable profiles need an explicit interval")
        return ProfileFunction.from_callable(spec, interval)
    if isinstance(spec, str):
        spec = spec.strip()
        if spec.startswith("csv:"):
            return ProfileFunction.from_csv(spec[4:])
        if spec in _PROFILE_REGISTRY:
            return _PROFILE_REGISTRY[spec]()
        raise ValueError(f"unknown profile {spec!r}; "
                         f"known: {sorted(_PROFILE_REGISTRY)}")
    raise TypeError(f"cannot interpret profile specifier {spec!r}")


# ---------------------------------------------------------------------------
# map families


@dataclass(frozen=True)
class MapFamily:
    """A smooth map between charts with optional analytic Jacobian.

    sample_box restricts random sampling and default grids to a region where
    the formulas are well defined (several families have coordinate poles).
    hopf_potential, when present, returns covector components of a 1-form A
    with dA equal to the pullback of the codomain area form.
    """

    name: str
    domain: Chart
    codomain: Chart
    eval_fn: Callable[[Array], Array]
    jac_fn: Optional[Callable[[Array], Array]] = None
    params: dict = field(default_factory=dict)
    profile_axis: Optional[int] = None
    sample_box: Optional[tuple] = None
    hopf_potential: Optional[Callable[[Array], Array]] = None

    @property
    def jacobian_mode(self) -> str:
        return "analytic" if self.jac_fn is not None else "fd"

    def __call__(self, x):
        return self.eval_fn(np.asarray(x, dtype=float))

    def box(self) -> tuple:
        if self.sample_box is not None:
            return self.sample_box
        margins = []
        for lo, hi in self.domain.coord_ranges:
            m = 0.05 * (hi - lo)
            margins.append((lo + m, hi - m))
        return tuple(margins)

    def sample_points(self, n: int, seed: int = _SELF_TEST_SEED) -> Array:
        rng = np.random.default_rng(seed)
        box = np.asarray(self.box())
        return rng.uniform(box[:, 0], box[:, 1], size=(n, self.domain.dim))

    def grid_points(self, n_per_axis, margin_frac: float = 0.02) -> Array:
        """Cartesian grid inside the sample box."""
        box = self.box()
        if np.isscalar(n_per_axis):
            n_per_axis = (int(n_per_axis),) * self.domain.dim
        axes = []
        for (lo, hi), n in zip(box, n_per_axis):
            m = margin_frac * (hi - lo)
            axes.append(np.linspace(lo + m, hi - m, n))
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def profile_grid(self, n: int, margin_frac: float = 0.005) -> Array:
        """1d sweep along the profile axis, other coordinates mid-box."""
        if self.profile_axis is None:
            raise ValueError(f"family {self.name!r} has no profile axis")
        box = self.box()
        mid = np.array([0.5 * (lo + hi) for lo, hi in box])
        lo, hi = box[self.profile_axis]
        m = margin_frac * (hi - lo)
        sweep = np.linspace(lo + m, hi - m, n)
        pts = np.tile(mid, (n, 1))
        pts[:, self.profile_axis] = sweep
        return pts


def jacobian(m: MapFamily, x: Array, step: float = FD_STEP) -> Array:
    """Coordinate Jacobian J[..., a, i] = d(phi^a)/dx^i."""
    x = np.asarray(x, dtype=float)
    if m.jac_fn is not None:
        return m.jac_fn(x)
    d = m.domain.dim
    cols = []
    for i in range(d):
        dx = np.zeros(d)
        dx[i] = step
        cols.append((m.eval_fn(x + dx) - m.eval_fn(x - dx)) / (2.0 * step))
    return np.stack(cols, axis=-1)


def pullback_oneform(m: MapFamily, omega_fn: Callable[[Array], Array],
                     x: Array) -> Array:
    """(phi^* omega)_i = omega_a(phi(x)) J^a_i."""
    x = np.asarray(x, dtype=float)
    J = jacobian(m, x)
    w = omega_fn(m.eval_fn(x))
    return np.einsum("...a,...ai->...i", w, J)


def pullback_area_form(m: MapFamily, x: Array) -> Array:
    """Pullback of the codomain area 2-form, as an antisymmetric matrix."""
    if m.codomain.area_form_fn is None:
        raise ValueError(
            f"codomain chart {m.codomain.name!r} carries no area form")
    x = np.asarray(x, dtype=float)
    J = jacobian(m, x)                        # (..., 2, d)
    coeff = m.codomain.area_form_fn(m.eval_fn(x))
    wedge = (J[..., 0, :, None] * J[..., 1, None, :]
             - J[..., 1, :, None] * J[..., 0, None, :])
    return coeff[..., None, None] * wedge


def _self_test(m: MapFamily) -> MapFamily:
    """Compare the analytic Jacobian against central differences at random
    interior points; any failing point is a constructor error."""
    if m.jac_fn is None:
        return m
    pts = m.sample_points(SELF_TEST_POINTS)
    J_an = m.jac_fn(pts)
    J_fd = np.stack(
        [(m.eval_fn(pts + dx) - m.eval_fn(pts - dx)) / (2.0 * FD_STEP)
         for dx in np.eye(m.domain.dim) * FD_STEP], axis=-1)
    scale = max(1.0, float(np.max(np.abs(J_an))))
    err = np.max(np.abs(J_an - J_fd), axis=(-2, -1)) / scale
    worst = float(np.max(err))
    if worst > SELF_TEST_RTOL:
        i = int(np.argmax(err))
        raise ValueError(
            f"family {m.name!r}: analytic/finite-difference Jacobian mismatch "
            f"{worst:.3e} at {pts[i]}")
    return m


def _require_int(value, name, nonzero=True, odd=None, even=None):
    iv = int(round(float(value)))
    if abs(iv - float(value)) > 1e-12:
        raise ValueError(f"{name} must be an integer, got {value!r}")
    if nonzero and iv == 0:
        raise ValueError(f"{name} must be nonzero")
    if odd and iv % 2 == 0:
        raise ValueError(f"{name} must be odd, got {iv}")
    if even and iv % 2 != 0:
        raise ValueError(f"{name} must be even, got {iv}")
    return iv


def _check_boundary(profile, expected, tol_closed=1e-8, tol_grid=1e-10,
                    what="profile"):
    """expected: pairs (endpoint index, target value or tuple of targets)."""
    tol = tol_grid if profile.kind == "grid" else tol_closed
    vals = profile.boundary_values
    for idx, target in expected:
        targets = target if isinstance(target, tuple) else (target,)
        if min(abs(vals[idx] - t) for t in targets) > tol:
            ends = ("left", "right")
            raise ValueError(
                f"{what} {profile.name!r}: {ends[idx]} boundary value "
                f"{vals[idx]:.6g} not in {targets}")


# --- family constructors ----------------------------------------------------


def _hedgehog(f="hedgehog_exp", r_max: float = 20.0) -> MapFamily:
    """Radially symmetric map of Euclidean 3-space onto the 3-sphere:
    (r, t, x) -> (f(r), t, x) in the suspension chart."""
    prof = make_profile(f, interval=(0.0, r_max))
    lo, hi = prof.interval
    if abs(lo) > 1e-12 or abs(hi - r_max) > 1e-9:
        raise ValueError("hedgehog profile must live on [0, r_max]")
    f0, f1 = prof.boundary_values
    if abs(f0 - PI) > 1e-8:
        raise ValueError(f"hedgehog profile must start at pi, got {f0!r}")
    if abs(f1) >= 1e-3:
        raise ValueError(
            f"hedgehog profile must decay below 1e-3 at r_max, got {f1!r}")
    domain = make_chart(f"r3_spherical({r_max})")
    codomain = make_chart("s3_suspension")

    def ev(x):
        out = x.copy()
        out[..., 0] = prof(x[..., 0])
        return out

    def jac(x):
        J = np.zeros(x.shape[:-1] + (3, 3))
        J[..., 0, 0] = prof.deriv(x[..., 0])
        J[..., 1, 1] = 1.0
        J[..., 2, 2] = 1.0
        return J

    return _self_test(MapFamily(
        "hedgehog", domain, codomain, ev, jac,
        params={"f": prof.name, "r_max": r_max}, profile_axis=0,
        sample_box=((0.3, r_max - 0.5), (0.15, PI - 0.15), (0.1, 2 * PI - 0.1)),
    ))


def _suspension(f="id_pi", winding: int = 1, q=None, r=None) -> MapFamily:
    """Suspension-equivariant self-map of the 3-sphere:
    (s, t, x) -> (f(s), q(t, x), r(t, x)).

    The shipped sub-cases are (f(s), t, k x) for integer winding k (the
    identity on the 2-sphere factor composed with a k-fold azimuthal wrap);
    user-supplied callables q, r switch the Jacobian to finite differences.
    """
    prof = make_profile(f, interval=(0.0, PI))
    _check_boundary(prof, [(0, (0.0, PI)), (1, (0.0, PI))],
                    what="suspension profile")
    domain = make_chart("s3_suspension")
    codomain = make_chart("s3_suspension")

    if q is None and r is None:
        k = _require_int(winding, "winding")

        def ev(x):
            out = x.copy()
            out[..., 0] = prof(x[..., 0])
            out[..., 2] = k * x[..., 2]
            return out

        def jac(x):
            J = np.zeros(x.shape[:-1] + (3, 3))
            J[..., 0, 0] = prof.deriv(x[..., 0])
            J[..., 1, 1] = 1.0
            J[..., 2, 2] = k
            return J

        return _self_test(MapFamily(
            "suspension", domain, codomain, ev, jac,
            params={"f": prof.name, "winding": k}, profile_axis=0))

    if q is None or r is None:
        raise ValueError("supply both q and r or neither")

    def ev(x):
        out = np.empty_like(x)
        out[..., 0] = prof(x[..., 0])
        out[..., 1] = q(x[..., 1], x[..., 2])
        out[..., 2] = r(x[..., 1], x[..., 2])
        return out

    return MapFamily("suspension", domain, codomain, ev, None,
                     params={"f": prof.name, "q": "custom", "r": "custom"},
                     profile_axis=None)


def _alpha_join(alpha="id_pi2", k: int = 1, l: int = 1,
                domain: Optional[Chart] = None) -> MapFamily:
    """Join-equivariant self-map of the 3-sphere:
    (x1, x2, s) -> (k x1, l x2, alpha(s)), topological degree k*l."""
    prof = make_profile(alpha, interval=(0.0, PI / 2))
    _check_boundary(prof, [(0, 0.0), (1, PI / 2)], what="join profile")
    k = _require_int(k, "k")
    l = _require_int(l, "l")
    dom = domain if domain is not None else make_chart("s3_join")
    codomain = make_chart("s3_join")

    def ev(x):
        out = x.copy()
        out[..., 0] = k * x[..., 0]
        out[..., 1] = l * x[..., 1]
        out[..., 2] = prof(x[..., 2])
        return out

    def jac(x):
        J = np.zeros(x.shape[:-1] + (3, 3))
        J[..., 0, 0] = k
        J[..., 1, 1] = l
        J[..., 2, 2] = prof.deriv(x[..., 2])
        return J

    return _self_test(MapFamily(
        "alpha_join", dom, codomain, ev, jac,
        params={"alpha": prof.name, "k": k, "l": l}, profile_axis=2))


def _nomizu(alpha="id_pi4", k: int = 1) -> MapFamily:
    """Equivariant self-map of the 3-sphere in the unit-tangent-bundle chart:
    (theta, s, mu) -> (k theta, alpha(s), mu) for odd k; degree k."""
    prof = make_profile(alpha, interval=(0.0, PI / 4))
    _check_boundary(prof, [(0, 0.0), (1, PI / 4)], what="nomizu profile")
    k = _require_int(k, "k", odd=True)
    domain = make_chart("s3_unit_tangent")
    codomain = make_chart("s3_unit_tangent")

    def ev(x):
        out = x.copy()
        out[..., 0] = k * x[..., 0]
        out[..., 1] = prof(x[..., 1])
        return out

    def jac(x):
        J = np.zeros(x.shape[:-1] + (3, 3))
        J[..., 0, 0] = k
        J[..., 1, 1] = prof.deriv(x[..., 1])
        J[..., 2, 2] = 1.0
        return J

    return _self_test(MapFamily(
        "nomizu", domain, codomain, ev, jac,
        params={"alpha": prof.name, "k": k}, profile_axis=1))


def _gamma_hopf(gamma="hopf_minus", k: int = 2) -> MapFamily:
    """Fibration-type map of the 3-sphere onto the 2-sphere:
    (theta, s, mu) -> (gamma(s), k mu) for even k; Hopf charge k^2/4."""
    prof = make_profile(gamma, interval=(0.0, PI / 4))
    g0, g1 = prof.boundary_values
    if not (-1e-9 <= min(g0, g1) and max(g0, g1) <= PI + 1e-9):
        raise ValueError("gamma must take values in [0, pi]")
    if abs(np.sin(g1)) > 1e-6:
        raise ValueError("gamma(pi/4) must be a multiple of pi "
                         "(polar point over the degenerate circle)")
    k = _require_int(k, "k", even=True)
    domain = make_chart("s3_unit_tangent")
    codomain = make_chart("s2")

    def ev(x):
        out = np.empty(x.shape[:-1] + (2,))
        out[..., 0] = prof(x[..., 1])
        out[..., 1] = k * x[..., 2]
        return out

    def jac(x):
        J = np.zeros(x.shape[:-1] + (2, 3))
        J[..., 0, 1] = prof.deriv(x[..., 1])
        J[..., 1, 2] = k
        return J

    def potential(x):
        # exact primitive of the pulled-back area form for any profile;
        # reduces to (k/2) eta when cos(gamma) = sin(2s)
        s = x[..., 1]
        out = np.zeros(x.shape)
        out[..., 0] = 0.5 * k
        out[..., 2] = 0.5 * k * np.cos(prof(s))
        return out

    return _self_test(MapFamily(
        "gamma_hopf", domain, codomain, ev, jac,
        params={"gamma": prof.name, "k": k}, profile_axis=1,
        hopf_potential=potential))


def _alpha_hopf(alpha="double", k: int = 1, l: int = 1,
                domain: Optional[Chart] = None) -> MapFamily:
    """Join-equivariant map of the 3-sphere onto the 2-sphere:
    (x1, x2, s) -> (alpha(s), k x1 + l x2); Hopf charge k*l."""
    prof = make_profile(alpha, interval=(0.0, PI / 2))
    _check_boundary(prof, [(0, 0.0), (1, PI)], what="hopf profile")
    k = _require_int(k, "k")
    l = _require_int(l, "l")
    dom = domain if domain is not None else make_chart("s3_join")
    codomain = make_chart("s2")

    def ev(x):
        out = np.empty(x.shape[:-1] + (2,))
        out[..., 0] = prof(x[..., 2])
        out[..., 1] = k * x[..., 0] + l * x[..., 1]
        return out

    def jac(x):
        J = np.zeros(x.shape[:-1] + (2, 3))
        J[..., 0, 2] = prof.deriv(x[..., 2])
        J[..., 1, 0] = k
        J[..., 1, 1] = l
        return J

    def potential(x):
        # global primitive of the pulled-back area form: the dx1 coefficient
        # vanishes where the x1 circle collapses (s = pi/2) and the dx2
        # coefficient where the x2 circle collapses (s = 0).
        a = prof(x[..., 2])
        out = np.zeros(x.shape)
        out[..., 0] = 0.5 * k * (np.cos(a) + 1.0)
        out[..., 1] = 0.5 * l * (np.cos(a) - 1.0)
        return out

    return _self_test(MapFamily(
        "alpha_hopf", dom, codomain, ev, jac,
        params={"alpha": prof.name, "k": k, "l": l}, profile_axis=2,
        hopf_potential=potential))


def _identity(lam: float = 1.0, chart: str = "s3_join") -> MapFamily:
    """Homothetic identity: the identity chart map from the sphere of radius
    1/lam onto the unit sphere, so every principal distortion equals lam."""
    lam = float(lam)
    if lam <= 0:
        raise ValueError("identity dilation must be positive")
    domain = make_chart(f"{chart}(%r)" % (1.0 / lam))
    codomain = make_chart(chart)

    def ev(x):
        return x.copy()

    def jac(x):
        d = x.shape[-1]
        J = np.zeros(x.shape[:-1] + (d, d))
        for i in range(d):
            J[..., i, i] = 1.0
        return J

    return _self_test(MapFamily(
        "identity", domain, codomain, ev, jac,
        params={"lam": lam, "chart": chart},
        profile_axis=domain.profile_axis))


def _henon(a: float = 1.4, b: float = 0.3) -> MapFamily:
    """Henon map of the plane, (x, y) -> (y + 1 - a x^2, b x)."""
    a = float(a)
    b = float(b)
    w = 2.0
    domain = flat_chart(2, half_width=w)
    codomain = flat_chart(2, half_width=w + 1.0 + abs(a) * w * w + abs(b) * w)

    def ev(x):
        out = np.empty_like(x)
        out[..., 0] = x[..., 1] + 1.0 - a * x[..., 0] ** 2
        out[..., 1] = b * x[..., 0]
        return out

    def jac(x):
        J = np.zeros(x.shape[:-1] + (2, 2))
        J[..., 0, 0] = -2.0 * a * x[..., 0]
        J[..., 0, 1] = 1.0
        J[..., 1, 0] = b
        return J

    return _self_test(MapFamily(
        "henon", domain, codomain, ev, jac, params={"a": a, "b": b}))


def _heis_dilation(a: float = 2.0) -> MapFamily:
    """Anisotropic dilation of the Heisenberg group,
    (x, y, z) -> (a x, a y, a^2 z); pulls the contact form back to a^2 eta."""
    a = float(a)
    if a <= 0:
        raise ValueError("dilation factor must be positive")
    domain = make_chart("heisenberg")
    codomain = make_chart("heisenberg", half_width=max(a, a * a) * PI)

    def ev(x):
        out = np.empty_like(x)
        out[..., 0] = a * x[..., 0]
        out[..., 1] = a * x[..., 1]
        out[..., 2] = a * a * x[..., 2]
        return out

    def jac(x):
        J = np.zeros(x.shape[:-1] + (3, 3))
        J[..., 0, 0] = a
        J[..., 1, 1] = a
        J[..., 2, 2] = a * a
        return J

    return _self_test(MapFamily(
        "heis_dilation", domain, codomain, ev, jac, params={"a": a}))


def _heis_shift(f="sin", a: float = 1.0) -> MapFamily:
    """Shear of the Heisenberg group,
    (x, y, z) -> (x, a y + f'(x), a z + f(x))."""
    a = float(a)
    prof = make_profile(f, interval=(-PI, PI))
    domain = make_chart("heisenberg")
    # generous codomain box for the shifted coordinates
    codomain = make_chart("heisenberg", half_width=(abs(a) + 2.0) * PI + 3.0)

    def ev(x):
        out = np.empty_like(x)
        out[..., 0] = x[..., 0]
        out[..., 1] = a * x[..., 1] + prof.deriv(x[..., 0])
        out[..., 2] = a * x[..., 2] + prof(x[..., 0])
        return out

    def jac(x):
        J = np.zeros(x.shape[:-1] + (3, 3))
        J[..., 0, 0] = 1.0
        J[..., 1, 0] = prof.deriv2(x[..., 0])
        J[..., 1, 1] = a
        J[..., 2, 0] = prof.deriv(x[..., 0])
        J[..., 2, 2] = a
        return J

    return _self_test(MapFamily(
        "heis_shift", domain, codomain, ev, jac,
        params={"f": prof.name, "a": a}))


_TORUS_QUAD = np.polynomial.legendre.leggauss(48)


def _torus_contacto(f="zero", a: int = 1) -> MapFamily:
    """Contact transformation of the flat 3-torus,
    (x, y, z) -> (a x - I(z), a y + f(z), z) with I(z) the primitive of
    tan(s) f'(s).  For nonzero f the x-displacement integral has a pole at
    z = pi/2, so sampling is confined to z below the pole."""
    a = _require_int(a, "a")
    prof = make_profile(f, interval=(0.0, 2.0 * PI))
    vals = prof.boundary_values
    if abs(vals[0] - vals[1]) > 1e-8:
        raise ValueError("torus profile must be 2 pi periodic")
    domain = make_chart("t3_flat")
    codomain = make_chart("t3_flat")
    trivial = prof.name == "zero"

    nodes, weights = _TORUS_QUAD

    def integral(z):
        # I(z) = int_0^z tan(s) f'(s) ds by fixed-order Gauss-Legendre
        z = np.asarray(z, dtype=float)
        half = 0.5 * z[..., None]
        s = half * (nodes + 1.0)
        vals = np.tan(s) * prof.deriv(s)
        return np.einsum("...q,q->...", vals, weights) * half[..., 0]

    def ev(x):
        out = np.empty_like(x)
        z = x[..., 2]
        out[..., 0] = a * x[..., 0] - (0.0 if trivial else integral(z))
        out[..., 1] = a * x[..., 1] + prof(z)
        out[..., 2] = z
        return out

    def jac(x):
        z = x[..., 2]
        J = np.zeros(x.shape[:-1] + (3, 3))
        J[..., 0, 0] = a
        J[..., 0, 2] = 0.0 if trivial else -np.tan(z) * prof.deriv(z)
        J[..., 1, 1] = a
        J[..., 1, 2] = prof.deriv(z)
        J[..., 2, 2] = 1.0
        return J

    box = None
    if not trivial:
        box = ((0.1, 2 * PI - 0.1), (0.1, 2 * PI - 0.1), (0.05, PI / 2 - 0.1))
    return _self_test(MapFamily(
        "torus_contacto", domain, codomain, ev, jac,
        params={"f": prof.name, "a": a}, sample_box=box))


def _sphere_contacto(A="one", k: int = 1) -> MapFamily:
    """Contact transformation of the 3-sphere in the unit-tangent chart,
    (theta, s, mu) -> (k theta, arcsin(k A(mu) sin 2s)/2, B(mu)) with
    B the primitive of 1/A; pulls the contact form back to k eta."""
    k = _require_int(k, "k")
    prof = make_profile(A, interval=(0.0, 2.0 * PI))
    domain = make_chart("s3_unit_tangent")
    codomain = make_chart("s3_unit_tangent")

    # restrict sampling to keep the arcsin argument away from 1
    amax = float(np.max(prof(np.linspace(0, 2 * PI, 512))))
    amin = float(np.min(prof(np.linspace(0, 2 * PI, 512))))
    if amin <= 0:
        raise ValueError("contact amplitude A must be positive")
    arg_cap = 0.95
    s_cap = 0.5 * np.arcsin(min(1.0, arg_cap / (abs(k) * amax)))
    s_max = min(PI / 4 - 0.02, s_cap)

    nodes, weights = _TORUS_QUAD

    def beta(mu):
        mu = np.asarray(mu, dtype=float)
        half = 0.5 * mu[..., None]
        s = half * (nodes + 1.0)
        vals = 1.0 / prof(s)
        return np.einsum("...q,q->...", vals, weights) * half[..., 0]

    def ev(x):
        th, s, mu = x[..., 0], x[..., 1], x[..., 2]
        out = np.empty_like(x)
        out[..., 0] = k * th
        out[..., 1] = 0.5 * np.arcsin(k * prof(mu) * np.sin(2.0 * s))
        out[..., 2] = beta(mu)
        return out

    def jac(x):
        th, s, mu = x[..., 0], x[..., 1], x[..., 2]
        Amu = prof(mu)
        dAmu = prof.deriv(mu)
        root = np.sqrt(1.0 - (k * Amu * np.sin(2.0 * s)) ** 2)
        J = np.zeros(x.shape[:-1] + (3, 3))
        J[..., 0, 0] = k
        J[..., 1, 1] = k * Amu * np.cos(2.0 * s) / root
        J[..., 1, 2] = 0.5 * k * dAmu * np.sin(2.0 * s) / root
        J[..., 2, 2] = 1.0 / Amu
        return J

    box = ((0.1, 2 * PI - 0.1), (0.02, s_max), (0.1, 2 * PI - 0.1))
    return _self_test(MapFamily(
        "sphere_contacto", domain, codomain, ev, jac,
        params={"A": prof.name, "k": k}, sample_box=box))


def _degree_k_sphere(k: int = 1) -> MapFamily:
    """Azimuthal k-fold wrap of the 2-sphere, (u, v) -> (u, k v)."""
    k = _require_int(k, "k")
    domain = make_chart("s2")
    codomain = make_chart("s2")

    def ev(x):
        out = x.copy()
        out[..., 1] = k * x[..., 1]
        return out

    def jac(x):
        J = np.zeros(x.shape[:-1] + (2, 2))
        J[..., 0, 0] = 1.0
        J[..., 1, 1] = k
        return J

    return _self_test(MapFamily(
        "degree_k_sphere", domain, codomain, ev, jac, params={"k": k}))


def _constant(chart: str = "s3_join", codomain: str = "s2",
              point=None) -> MapFamily:
    """Constant map (zero differential); useful as the trivial reference."""
    dom = make_chart(chart)
    cod = make_chart(codomain)
    if point is None:
        point = np.array([0.5 * (lo + hi) for lo, hi in cod.coord_ranges])
    point = np.asarray(point, dtype=float)

    def ev(x):
        return np.broadcast_to(point, x.shape[:-1] + (cod.dim,)).copy()

    def jac(x):
        return np.zeros(x.shape[:-1] + (cod.dim, dom.dim))

    def potential(x):
        return np.zeros(x.shape)

    return _self_test(MapFamily(
        "constant", dom, cod, ev, jac,
        params={"point": [float(p) for p in point]},
        hopf_potential=(potential if cod.area_form_fn is not None else None)))


_FAMILIES = {
    "hedgehog": _hedgehog,
    "suspension": _suspension,
    "alpha_join": _alpha_join,
    "nomizu": _nomizu,
    "gamma_hopf": _gamma_hopf,
    "alpha_hopf": _alpha_hopf,
    "identity": _identity,
    "henon": _henon,
    "heis_dilation": _heis_dilation,
    "heis_shift": _heis_shift,
    "torus_contacto": _torus_contacto,
    "sphere_contacto": _sphere_contacto,
    "degree_k_sphere": _degree_k_sphere,
    "constant": _constant,
}


def make_map(family: str, **params) -> MapFamily:
    """Build a map family by name.  Unknown names or parameters raise."""
    if family not in _FAMILIES:
        raise ValueError(
            f"unknown map family {family!r}; known: {sorted(_FAMILIES)}")
    return _FAMILIES[family](**params)


def scale_domain(m: MapFamily, R: float) -> MapFamily:
    """Same map formulas with the domain metric scaled to radius factor R."""
    return replace(m, domain=deform_metric(m.domain, "radius_scale", c=float(R)))


def with_domain(m: MapFamily, chart: Chart) -> MapFamily:
    """Swap the domain chart (same coordinates, deformed metric)."""
    if chart.dim != m.domain.dim:
        raise ValueError("replacement domain must have the same dimension")
    return replace(m, domain=chart)


def maps_into_codomain(m: MapFamily, pts: Array, tol: float = 1e-9) -> bool:
    """Check that evaluated points land in the codomain ranges, reducing
    periodic coordinates mod their period first."""
    y = m.eval_fn(np.asarray(pts, dtype=float))
    ranges = m.codomain.coord_ranges
    periods = m.codomain.periodic or (None,) * m.codomain.dim
    for i, ((lo, hi), per) in enumerate(zip(ranges, periods)):
        yi = y[..., i]
        if per is not None:
            yi = np.mod(yi - lo, per) + lo
        if np.any(yi < lo - tol) or np.any(yi > hi + tol):
            return False
    return True
