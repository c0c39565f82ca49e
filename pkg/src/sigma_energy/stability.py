"""Second-variation analysis: vector-field calculus on charts, generated
variation fields (isometry generators, gradients of ambient coordinates,
seeded band-limited fields), Hessians of the coupled energy at homothetic
solutions, the Hopf-fibration Hessian, the dilation threshold scan, and the
integral identity used to cross-check the two Hessian forms.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from .geometry import Chart, _fd_tensor_grad, make_chart, ricci_form
from .energy import QuadratureRule, product_rule

Array = np.ndarray

FIELD_FD_STEP = 1e-5


# ---------------------------------------------------------------------------
# variation fields


@dataclass(frozen=True)
class VariationField:
    """A tangent vector field on a chart.

    components_fn(x): (..., d) -> (..., d).  jacobian_fn, when present,
    returns d(X^j)/dx^i as (..., j, i) with the derivative axis last;
    otherwise high-order central differences are used.
    """

    chart: Chart
    components_fn: Callable[[Array], Array]
    jacobian_fn: Optional[Callable[[Array], Array]] = None
    name: str = "field"

    def components(self, x: Array) -> Array:
        return self.components_fn(np.asarray(x, dtype=float))

    def jacobian(self, x: Array, step: float = FIELD_FD_STEP) -> Array:
        x = np.asarray(x, dtype=float)
        if self.jacobian_fn is not None:
            return self.jacobian_fn(x)
        return _fd_tensor_grad(self.components_fn, x, step)


def _ambient_pushforward(chart: Chart):
    """x -> (Phi(x), g^-1 dPhi^T), the ingredients for converting ambient
    vectors into chart components of their tangential projection."""
    if chart.embedding_fn is None or chart.embedding_jac_fn is None:
        raise ValueError(f"chart {chart.name} has no ambient embedding; "
                         "ambient field constructions are unavailable")
    emb, jac, met = chart.embedding_fn, chart.embedding_jac_fn, chart.metric_fn

    def parts(x):
        x = np.asarray(x, dtype=float)
        return emb(x), jac(x), met(x)

    return parts


def ambient_field(chart: Chart, ambient_fn: Callable[[Array], Array],
                  name: str = "ambient") -> VariationField:
    """Tangential projection of an ambient vector field B(p) along the
    chart embedding: X = g^-1 dPhi^T B(Phi).  Smooth ambient B gives a
    globally smooth field on the embedded manifold."""
    parts = _ambient_pushforward(chart)

    def comp(x):
        p, J, g = parts(x)
        rhs = np.einsum("...ai,...a->...i", J, ambient_fn(p))
        return np.linalg.solve(g, rhs[..., None])[..., 0]

    return VariationField(chart, comp, name=name)


def killing_fields(chart: Chart) -> List[VariationField]:
    """Generators of the ambient rotation group, one per coordinate plane;
    Killing for the round metric."""
    p0 = chart.embedding_fn(np.array([
        0.5 * (lo + hi) for lo, hi in chart.coord_ranges]))
    na = p0.shape[-1]
    fields = []
    for a in range(na):
        for b in range(a + 1, na):
            A = np.zeros((na, na))
            A[a, b] = 1.0
            A[b, a] = -1.0

            def amb(p, A=A):
                return np.einsum("ab,...b->...a", A, p)

            fields.append(ambient_field(chart, amb, name=f"rot_{a}{b}"))
    return fields


def conformal_fields(chart: Chart) -> List[VariationField]:
    """Gradients of the ambient linear coordinates; on round spheres these
    are the non-Killing conformal fields (first spherical harmonics)."""
    p0 = chart.embedding_fn(np.array([
        0.5 * (lo + hi) for lo, hi in chart.coord_ranges]))
    na = p0.shape[-1]
    fields = []
    for a in range(na):
        e = np.zeros(na)
        e[a] = 1.0

        def amb(p, e=e):
            return np.broadcast_to(e, p.shape).copy()

        fields.append(ambient_field(chart, amb, name=f"grad_coord{a}"))
    return fields


_QUAT_RIGHT = {
    "i": np.array([[0., -1., 0., 0.],
                   [1., 0., 0., 0.],
                   [0., 0., 0., 1.],
                   [0., 0., -1., 0.]]),
    "j": np.array([[0., 0., -1., 0.],
                   [0., 0., 0., -1.],
                   [1., 0., 0., 0.],
                   [0., 1., 0., 0.]]),
    "k": np.array([[0., 0., 0., -1.],
                   [0., 0., 1., 0.],
                   [0., -1., 0., 0.],
                   [1., 0., 0., 0.]]),
}


def hopf_fields(chart: Chart) -> List[VariationField]:
    """The three quaternionic right-translation generators on the 3-sphere;
    the first one spans the Hopf fibers."""
    fields = []
    for key, M in _QUAT_RIGHT.items():
        def amb(p, M=M):
            return np.einsum("ab,...b->...a", M, p)

        fields.append(ambient_field(chart, amb, name=f"quat_{key}"))
    return fields


def band_limited_fields(chart: Chart, seed: int, count: int,
                        band: int = 2) -> List[VariationField]:
    """Seeded random smooth global fields: tangential projections of
    ambient vector fields with polynomial components of degree <= band."""
    parts = _ambient_pushforward(chart)
    p_probe = chart.embedding_fn(np.array([
        0.5 * (lo + hi) for lo, hi in chart.coord_ranges]))
    na = p_probe.shape[-1]
    rng = np.random.default_rng(seed)

    def monomials(p):
        cols = [np.ones(p.shape[:-1])]
        for a in range(na):
            cols.append(p[..., a])
        if band >= 2:
            for a in range(na):
                for b in range(a, na):
                    cols.append(p[..., a] * p[..., b])
        if band >= 3:
            for a in range(na):
                for b in range(a, na):
                    for c in range(b, na):
                        cols.append(p[..., a] * p[..., b] * p[..., c])
        return np.stack(cols, axis=-1)

    n_mono = monomials(p_probe[None])[0].shape[-1]
    fields = []
    for idx in range(count):
        C = rng.standard_normal((na, n_mono)) / np.sqrt(n_mono)

        def comp(x, C=C):
            p, J, g = parts(x)
            B = np.einsum("am,...m->...a", C, monomials(p))
            rhs = np.einsum("...ai,...a->...i", J, B)
            return np.linalg.solve(g, rhs[..., None])[..., 0]

        fields.append(VariationField(chart, comp, name=f"band{band}_{idx}"))
    return fields


def trig_fields(chart: Chart, seed: int, count: int,
                band: int = 2) -> List[VariationField]:
    """Seeded trigonometric-polynomial fields in the chart coordinates,
    with analytic Jacobians; suited to flat and Heisenberg charts."""
    rng = np.random.default_rng(seed)
    d = chart.dim
    spans = np.array([hi - lo for lo, hi in chart.coord_ranges])
    fields = []
    n_terms = 3
    for idx in range(count):
        freqs = rng.integers(-band, band + 1, size=(d, n_terms, d))
        phases = rng.uniform(0.0, 2.0 * np.pi, size=(d, n_terms))
        amps = rng.standard_normal((d, n_terms)) / n_terms
        k = freqs * (2.0 * np.pi / spans)

        def comp(x, k=k, phases=phases, amps=amps):
            x = np.asarray(x, dtype=float)
            ph = np.einsum("jtd,...d->...jt", k, x) + phases
            return np.sum(amps * np.cos(ph), axis=-1)

        def jac(x, k=k, phases=phases, amps=amps):
            x = np.asarray(x, dtype=float)
            ph = np.einsum("jtd,...d->...jt", k, x) + phases
            return -np.einsum("...jt,jti->...ji", amps * np.sin(ph), k)

        fields.append(VariationField(chart, comp, jac, name=f"trig_{idx}"))
    return fields


def coordinate_dilation_field(chart: Chart) -> VariationField:
    """X = sum_i x^i d_i on a flat chart; a homothety generator, hence an
    equality case of the divergence inequality."""

    def comp(x):
        return np.asarray(x, dtype=float).copy()

    def jac(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.eye(chart.dim), x.shape + (chart.dim,)
                               ).copy()

    return VariationField(chart, comp, jac, name="dilation")


def reeb_field(chart: Chart) -> VariationField:
    if chart.contact is None:
        raise ValueError(f"chart {chart.name} carries no contact structure")
    return VariationField(chart, chart.contact.reeb_fn, name="reeb")


# ---------------------------------------------------------------------------
# pointwise vector calculus


@dataclass(frozen=True)
class FieldCalculus:
    """Pointwise first-order invariants of a field on a grid."""

    points: Array
    nabla: Array          # (..., i, j) = (nabla_i X)_j, index lowered
    lie: Array            # (L_X g)_{ij}
    div: Array
    nabla_sq: Array       # |nabla X|^2
    lie_sq: Array         # |L_X g|^2
    ric_xx: Array         # Ric(X, X)


class _ChartContext:
    """Cached metric data at a fixed point set."""

    def __init__(self, chart: Chart, x: Array):
        self.chart = chart
        self.x = np.asarray(x, dtype=float)
        self.g = chart.metric(self.x)
        self.g_inv = np.linalg.inv(self.g)
        dg = chart.metric_grad(self.x)
        # first-kind Christoffel symbols Gamma_{ik,j}
        self.gamma1 = 0.5 * (np.einsum("...kji->...ikj", dg)
                             + np.einsum("...ijk->...ikj", dg)
                             - np.einsum("...ikj->...ikj", dg))
        try:
            self.ric = ricci_form(chart)(self.x)
        except ValueError:
            self.ric = None


def field_calculus(field: VariationField, x: Array,
                   ctx: Optional[_ChartContext] = None) -> FieldCalculus:
    """First-order covariant data of a field at the given points."""
    if ctx is None:
        ctx = _ChartContext(field.chart, x)
    X = field.components(ctx.x)
    dX = field.jacobian(ctx.x)                     # (..., j, i) = d_i X^j
    # (nabla_i X)_j = g_{jl} d_i X^l + X^k Gamma_{ik,j}
    A = (np.einsum("...jl,...li->...ij", ctx.g, dX)
         + np.einsum("...k,...ikj->...ij", X, ctx.gamma1))
    lie = A + np.swapaxes(A, -1, -2)
    div = np.einsum("...ij,...ij->...", ctx.g_inv, A)
    nabla_sq = np.einsum("...ik,...jl,...ij,...kl->...",
                         ctx.g_inv, ctx.g_inv, A, A)
    lie_sq = np.einsum("...ik,...jl,...ij,...kl->...",
                       ctx.g_inv, ctx.g_inv, lie, lie)
    if ctx.ric is None:
        ric_xx = np.full(X.shape[:-1], np.nan)
    else:
        ric_xx = np.einsum("...ij,...i,...j->...", ctx.ric, X, X)
    return FieldCalculus(points=ctx.x, nabla=A, lie=lie, div=div,
                         nabla_sq=nabla_sq, lie_sq=lie_sq, ric_xx=ric_xx)


def directional_derivative(field: VariationField, along: VariationField,
                           x: Array,
                           ctx: Optional[_ChartContext] = None) -> Array:
    """Components of nabla_along(field) at the given points."""
    if ctx is None:
        ctx = _ChartContext(field.chart, x)
    X = field.components(ctx.x)
    dX = field.jacobian(ctx.x)
    Y = along.components(ctx.x)
    gamma2 = np.einsum("...jl,...ikl->...ikj", ctx.g_inv, ctx.gamma1)
    return (np.einsum("...i,...ji->...j", Y, dX)
            + np.einsum("...i,...k,...ikj->...j", Y, X, gamma2))


# ---------------------------------------------------------------------------
# integrals and Hessians


@dataclass(frozen=True)
class FieldIntegrals:
    """Quadratic integrals of a variation field used by every Hessian form.

    yano_residual is the defect of the integral identity
    int { |nabla X|^2 - Ric(X,X) + (div X)^2 - |L_X g|^2 / 2 } = 0
    that holds for smooth fields on closed manifolds, relative to the
    largest constituent term.
    """

    field_name: str
    j_lie: float          # int |L_X g|^2
    j_div: float          # int (div X)^2
    j_nabla: float        # int |nabla X|^2
    j_ric: float          # int Ric(X, X)
    yano: float
    yano_residual: float


def field_integrals(field: VariationField, rule: QuadratureRule,
                    ctx: Optional[_ChartContext] = None) -> FieldIntegrals:
    calc = field_calculus(field, rule.nodes, ctx)
    j_lie = rule.integrate(calc.lie_sq)
    j_div = rule.integrate(calc.div ** 2)
    j_nabla = rule.integrate(calc.nabla_sq)
    j_ric = rule.integrate(calc.ric_xx)
    yano = j_nabla - j_ric + j_div - 0.5 * j_lie
    scale = max(abs(j_nabla), abs(j_ric), abs(j_div), abs(0.5 * j_lie), 1e-30)
    return FieldIntegrals(field.name, float(j_lie), float(j_div),
                          float(j_nabla), float(j_ric), float(yano),
                          float(abs(yano) / scale))


def yano_residual(field: VariationField,
                  rule: Optional[QuadratureRule] = None,
                  ctx: Optional[_ChartContext] = None) -> float:
    """Relative defect of the integral identity for one field."""
    if rule is None:
        rule = product_rule(field.chart, order=24)
    return field_integrals(field, rule, ctx).yano_residual


@dataclass(frozen=True)
class HessianReport:
    """One second-variation value with its constituent integrals."""

    value: float
    form: str
    kappa: float
    lam: float
    field_name: str
    integrals: FieldIntegrals
    terms: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"value": self.value, "form": self.form, "kappa": self.kappa,
                "lam": self.lam, "field": self.field_name,
                "terms": dict(self.terms)}


def _hessian_value(form: str, ints: FieldIntegrals, lam: float, kappa: float,
                   n: int):
    li, dv = ints.j_lie, ints.j_div
    rough = ints.j_nabla - ints.j_ric
    if form == "full":
        terms = {"lie_coeff": 0.5 * (lam ** -2 + (n - 2) * kappa),
                 "div_coeff": -(lam ** -2 + (n - 3) * kappa)}
        value = terms["lie_coeff"] * li + terms["div_coeff"] * dv
    elif form == "sigma2":
        terms = {"lie_coeff": 0.5 * (n - 2), "div_coeff": -(n - 3)}
        value = terms["lie_coeff"] * li + terms["div_coeff"] * dv
    elif form == "sigma2_rough":
        terms = {"rough_coeff": float(n - 2), "div_coeff": 1.0}
        value = (n - 2) * rough + dv
    elif form == "dirichlet":
        terms = {"rough_coeff": lam ** -2}
        value = lam ** -2 * rough
    else:
        raise ValueError(f"unknown Hessian form {form!r}; use full | sigma2 "
                         "| sigma2_rough | dirichlet")
    return value, terms


def hessian_homothety(field: VariationField, lam: float = 1.0,
                      kappa: float = 1.0, form: str = "full",
                      rule: Optional[QuadratureRule] = None,
                      ctx: Optional[_ChartContext] = None) -> HessianReport:
    """Second variation of the coupled energy at a homothetic local
    diffeomorphism with dilation lam, along the variation induced by the
    given field.  Forms:

      full          (lam^-2 + (n-2) kappa)/2 |L_X g|^2
                    - (lam^-2 + (n-3) kappa) (div X)^2, integrated
      sigma2        quartic part alone (kappa-independent)
      sigma2_rough  equivalent quartic form via |nabla X|^2 - Ric(X,X);
                    agrees with sigma2 by the integral identity
      dirichlet     quadratic part alone
    """
    chart = field.chart
    if rule is None:
        rule = product_rule(chart, order=24)
    ints = field_integrals(field, rule, ctx)
    n = chart.dim
    value, terms = _hessian_value(form, ints, lam, kappa, n)
    return HessianReport(value=float(value), form=form, kappa=kappa,
                         lam=lam, field_name=field.name, integrals=ints,
                         terms=terms)


def hessian_hopf(field: VariationField,
                 rule: Optional[QuadratureRule] = None) -> HessianReport:
    """Second variation of the quartic energy at the Hopf fibration along
    the variation induced by a field X on the total space:
    int { (div X)^2 + |nabla_xi X|^2 - |nabla_X xi|^2 }, with xi the unit
    vertical (Reeb) field."""
    chart = field.chart
    if chart.contact is None:
        raise ValueError("the fibration Hessian needs a chart with contact "
                         "data supplying the vertical field")
    if rule is None:
        rule = product_rule(chart, order=24)
    ctx = _ChartContext(chart, rule.nodes)
    xi = reeb_field(chart)
    calc = field_calculus(field, rule.nodes, ctx)
    n_xi_X = directional_derivative(field, xi, rule.nodes, ctx)
    n_X_xi = directional_derivative(xi, field, rule.nodes, ctx)
    sq = lambda v: np.einsum("...ij,...i,...j->...", ctx.g, v, v)
    j_div = rule.integrate(calc.div ** 2)
    j_plus = rule.integrate(sq(n_xi_X))
    j_minus = rule.integrate(sq(n_X_xi))
    ints = field_integrals(field, rule, ctx)
    return HessianReport(
        value=float(j_div + j_plus - j_minus), form="hopf",
        kappa=np.nan, lam=1.0, field_name=field.name, integrals=ints,
        terms={"j_div": float(j_div), "j_nabla_xi_X": float(j_plus),
               "j_nabla_X_xi": float(j_minus)})


# ---------------------------------------------------------------------------
# threshold scan


@dataclass(frozen=True)
class ThresholdReport:
    """Dilation threshold below which some variation makes the full-energy
    Hessian negative at a homothetic solution."""

    kappa: float
    lam_star: float
    lam_star_bisect: float
    binding_field: str
    per_field: tuple          # (name, lam_star or None)
    n_fields: int

    def to_dict(self) -> dict:
        return {"kappa": self.kappa, "lam_star": self.lam_star,
                "lam_star_bisect": self.lam_star_bisect,
                "binding_field": self.binding_field,
                "per_field": [[n, v] for n, v in self.per_field]}


def threshold_scan(kappa: float, chart: Optional[Chart] = None,
                   fields: Optional[Sequence[VariationField]] = None,
                   rule: Optional[QuadratureRule] = None,
                   bisect_tol: float = 1e-6) -> ThresholdReport:
    """Largest dilation at which the full-energy Hessian vanishes along a
    generated variation field, at a homothety of a 3d space form.

    The per-field threshold is closed-form in the dilation given the two
    quadratic integrals; a bisection on the minimum Hessian cross-checks it.
    Raises if every supplied field is an isometry generator (no field sees
    the threshold).
    """
    if kappa <= 0:
        raise ValueError("threshold scan needs a positive coupling constant")
    if chart is None:
        chart = make_chart("s3_suspension")
    if chart.dim != 3:
        raise ValueError("threshold scan applies to 3d domains")
    if fields is None:
        fields = conformal_fields(chart) + killing_fields(chart)
    if rule is None:
        rule = product_rule(chart, order=24)
    ctx = _ChartContext(chart, rule.nodes)

    ints = [field_integrals(f, rule, ctx) for f in fields]
    per_field = []
    lam_star = None
    binding = None
    kill_tol = 1e-10 * max(max(i.j_lie for i in ints), 1.0)
    n_active = 0
    for f, i in zip(fields, ints):
        if i.j_lie <= kill_tol:
            per_field.append((f.name, None))      # isometry direction
            continue
        n_active += 1
        num = i.j_div - 0.5 * i.j_lie
        if num <= 0:
            per_field.append((f.name, None))      # stable at every dilation
            continue
        ls = float(np.sqrt(num / (0.5 * kappa * i.j_lie)))
        per_field.append((f.name, ls))
        if lam_star is None or ls > lam_star:
            lam_star, binding = ls, f.name
    if n_active == 0:
        raise ValueError("all supplied fields are isometry generators; the "
                         "scan needs at least one non-Killing field")
    if lam_star is None:
        raise ValueError("no supplied field detects an instability "
                         "threshold; include a conformal direction")

    def min_hess(lam):
        vals = [_hessian_value("full", i, lam, kappa, 3)[0] for i in ints]
        return min(vals)

    lo, hi = 1e-3, max(10.0, 4.0 * lam_star)
    if not (min_hess(lo) < 0 < min_hess(hi)):
        raise ValueError("bisection bracket failed; Hessian does not change "
                         "sign over the scanned dilation range")
    while hi - lo > bisect_tol:
        mid = 0.5 * (lo + hi)
        if min_hess(mid) < 0:
            lo = mid
        else:
            hi = mid
    return ThresholdReport(kappa=kappa, lam_star=lam_star,
                           lam_star_bisect=0.5 * (lo + hi),
                           binding_field=binding,
                           per_field=tuple(per_field), n_fields=len(fields))


# ---------------------------------------------------------------------------
# divergence inequality


def divergence_inequality_margin(field: VariationField, x: Array,
                                 ctx: Optional[_ChartContext] = None
                                 ) -> Array:
    """Pointwise margin |L_X g|^2 / 2 - (2/n)(div X)^2, nonnegative for
    every field, zero exactly along conformal directions."""
    calc = field_calculus(field, x, ctx)
    n = field.chart.dim
    return 0.5 * calc.lie_sq - (2.0 / n) * calc.div ** 2
