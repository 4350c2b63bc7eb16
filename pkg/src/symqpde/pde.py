"""PDE problem definitions, physics-informed loss, and validation metrics.

A problem bundles loss *terms*.  Each term owns a point set and a small
algebraic description of the operator it applies there: which *slots* it
reads (the model value ``"u"`` or a derivative ``(axis, order)``), how the
slot values combine into a residual, and the partial derivative of that
combination with respect to each slot (needed for gradient weighting).

The slot values themselves can come from two providers: central-difference
stencils around model evaluations (quantum circuits and generic callables),
or analytic partials supplied by a caller (the classical networks).  The
term algebra is shared, so the loss definition is written once.

Loss = L_res + lambda_I * L_init + lambda_B * L_bnd, each part a mean of
squared operator values over its own collocation set; problems with several
operators in one part (the wave equation constrains both initial
displacement and initial velocity) contribute one mean per operator.
"""

from __future__ import annotations

import dataclasses
from typing import Callable, Optional

import numpy as np

from .autodiff import DEFAULT_STENCIL, circuit_forward, circuit_gradient
from .bessel import bessel_j0, bessel_j0_zeros, bessel_j1  # re-exported
from .errors import NumericIntegrityError
from .simulator import Circuit, model_eval_batch

__all__ = [
    "CollocationSet", "LossTerm", "PdeProblem",
    "poisson2d", "diffusion2d", "wave1d", "burgers1d",
    "loss", "loss_and_gradient", "mae", "residual_at", "evaluate_terms",
    "export_points",
    "bessel_j0", "bessel_j1", "bessel_j0_zeros",
]

DEFAULT_COLLOCATION_SEED = 1


@dataclasses.dataclass(frozen=True, eq=False)
class CollocationSet:
    residual_points: np.ndarray
    boundary_points: Optional[np.ndarray]
    initial_points: Optional[np.ndarray]

    def counts(self):
        def n(a):
            return 0 if a is None else a.shape[0]

        return (n(self.residual_points), n(self.boundary_points),
                n(self.initial_points))


@dataclasses.dataclass(frozen=True, eq=False)
class LossTerm:
    """One operator applied over one point set."""

    name: str
    weight_key: str  # 'res' | 'init' | 'bnd'
    points: np.ndarray
    slots: tuple
    combine: Callable[[dict], np.ndarray]
    partials: Callable[[dict], dict]


@dataclasses.dataclass(frozen=True, eq=False)
class PdeProblem:
    name: str
    input_dim: int
    terms: tuple
    exact: Callable[[np.ndarray], np.ndarray]
    lambda_i: float
    lambda_b: float
    validation_set: np.ndarray
    collocation: CollocationSet
    meta: dict = dataclasses.field(default_factory=dict)
    extra_validation: dict = dataclasses.field(default_factory=dict)

    def term_weight(self, key):
        return {"res": 1.0, "init": self.lambda_i, "bnd": self.lambda_b}[key]


# ---------------------------------------------------------------------------
# slot evaluation


def _term_offsets(term):
    """Ordered evaluation offsets for a term: 'c' for the unshifted point,
    (axis, +1) and (axis, -1) for each differentiated axis."""
    axes = sorted({s[0] for s in term.slots if s != "u"})
    need_center = "u" in term.slots or any(
        s != "u" and s[1] == 2 for s in term.slots)
    offsets = (["c"] if need_center else [])
    for a in axes:
        offsets.extend([(a, +1), (a, -1)])
    return offsets


def _stencil_coeffs(slot, h):
    """Offset -> coefficient decomposition of one slot."""
    if slot == "u":
        return {"c": 1.0}
    axis, order = slot
    if order == 1:
        return {(axis, +1): 0.5 / h, (axis, -1): -0.5 / h}
    return {(axis, +1): 1.0 / (h * h), "c": -2.0 / (h * h),
            (axis, -1): 1.0 / (h * h)}


def _shifted(points, offset, h):
    if offset == "c":
        return points
    axis, sign = offset
    out = points.copy()
    out[:, axis] += sign * h
    return out


def _slot_values_from_offsets(term, values_by_offset, h):
    out = {}
    for slot in term.slots:
        acc = None
        for off, coeff in _stencil_coeffs(slot, h).items():
            contrib = coeff * values_by_offset[off]
            acc = contrib if acc is None else acc + contrib
        out[slot] = acc
    return out


def _check_finite(r, term):
    bad = ~np.isfinite(r)
    if bad.any():
        i = int(np.argmax(bad))
        raise NumericIntegrityError(
            f"non-finite value in term {term.name!r} at point index {i}, "
            f"z={term.points[i].tolist()}")


def evaluate_terms(prob, slot_provider):
    """Assemble (total, parts, residuals) from per-term slot values.

    ``slot_provider(term) -> {slot: ndarray}`` supplies the model value and
    derivative arrays; this function owns the algebra and the weighting."""
    parts = {"res": 0.0, "init": 0.0, "bnd": 0.0}
    residuals = {}
    for term in prob.terms:
        slot_vals = slot_provider(term)
        r = term.combine(slot_vals)
        _check_finite(r, term)
        residuals[term.name] = r
        parts[term.weight_key] += float(np.mean(np.square(r)))
    total = parts["res"] + prob.lambda_i * parts["init"] + prob.lambda_b * parts["bnd"]
    return total, parts, residuals


def _batched_model(f):
    if isinstance(f, Circuit):
        return lambda theta, Z: model_eval_batch(f, theta, Z)
    if callable(f):
        return lambda theta, Z: np.array(
            [float(f(theta, z)) for z in Z], dtype=float)
    raise TypeError(f"model must be a Circuit or callable, got {type(f)!r}")


def _stencil_slot_provider(f, theta, prob, cfg):
    model = _batched_model(f)
    h = cfg.h_input

    def provider(term):
        vals = {off: model(theta, _shifted(term.points, off, h))
                for off in _term_offsets(term)}
        return _slot_values_from_offsets(term, vals, h)

    return provider


def loss(f, theta, prob, cfg=DEFAULT_STENCIL):
    """Physics-informed loss of a model (circuit or callable f(theta, z)).
    Returns (total, {'res', 'init', 'bnd'})."""
    total, parts, _ = evaluate_terms(
        prob, _stencil_slot_provider(f, theta, prob, cfg))
    return total, parts


def loss_and_gradient(circuit, theta, prob, cfg=DEFAULT_STENCIL):
    """Loss plus its adjoint-mode parameter gradient, sharing one batched
    forward pass over every shifted collocation point."""
    h = cfg.h_input
    layout = []  # (term, offsets, start row of each offset block)
    blocks = []
    row = 0
    for term in prob.terms:
        offsets = _term_offsets(term)
        starts = {}
        for off in offsets:
            blocks.append(_shifted(term.points, off, h))
            starts[off] = row
            row += term.points.shape[0]
        layout.append((term, offsets, starts))
    E = np.vstack(blocks)
    values, cache = circuit_forward(circuit, theta, E)

    parts = {"res": 0.0, "init": 0.0, "bnd": 0.0}
    weights = np.zeros(E.shape[0])
    for term, offsets, starts in layout:
        n_pts = term.points.shape[0]
        vals = {off: values[starts[off]:starts[off] + n_pts] for off in offsets}
        slot_vals = _slot_values_from_offsets(term, vals, h)
        r = term.combine(slot_vals)
        _check_finite(r, term)
        parts[term.weight_key] += float(np.mean(np.square(r)))
        lam = prob.term_weight(term.weight_key)
        scale = 2.0 * lam / n_pts
        slot_partials = term.partials(slot_vals)
        for slot in term.slots:
            p = np.broadcast_to(np.asarray(slot_partials[slot], dtype=float),
                                (n_pts,))
            for off, coeff in _stencil_coeffs(slot, h).items():
                s = starts[off]
                weights[s:s + n_pts] += scale * r * p * coeff
    total = parts["res"] + prob.lambda_i * parts["init"] + prob.lambda_b * parts["bnd"]
    grad = circuit_gradient(circuit, theta, E, weights=weights, cache=cache)
    return total, parts, grad


def mae(f, theta, prob, points=None):
    """Mean absolute deviation from the exact solution over the validation
    set (or an explicit point set)."""
    pts = prob.validation_set if points is None else points
    if pts.shape[0] == 0:
        raise ValueError("validation set is empty")
    values = _batched_model(f)(theta, pts)
    return float(np.mean(np.abs(values - prob.exact(pts))))


def residual_at(f, theta, prob, points, cfg=DEFAULT_STENCIL):
    """The problem's interior residual evaluated at arbitrary points."""
    term = dataclasses.replace(prob.terms[0], points=np.atleast_2d(points))
    provider = _stencil_slot_provider(f, theta, prob, cfg)
    return term.combine(provider(term))


def export_points(path, points, header=""):
    """Write a point set as whitespace-delimited text, one row per point."""
    np.savetxt(path, points, fmt="%.17g", header=header)


# ---------------------------------------------------------------------------
# problem builders


def _disk_rejection_points(count, seed):
    rng = np.random.default_rng(seed)
    out = np.empty((0, 2))
    while out.shape[0] < count:
        draw = rng.uniform(-1.0, 1.0, size=(4 * count, 2))
        keep = draw[np.hypot(draw[:, 0], draw[:, 1]) < 1.0]
        out = np.vstack([out, keep])
    return out[:count]


def _circle_points(count):
    angles = 2.0 * np.pi * np.arange(count) / count
    return np.column_stack([np.cos(angles), np.sin(angles)])


def _value_term(name, weight_key, points, targets):
    targets = np.asarray(targets, dtype=float)
    return LossTerm(
        name=name, weight_key=weight_key, points=points, slots=("u",),
        combine=lambda s: s["u"] - targets,
        partials=lambda s: {"u": np.ones_like(s["u"])},
    )


def poisson2d(D=1.0, lambda_b=1.0, seed=DEFAULT_COLLOCATION_SEED):
    """Steady diffusion with a constant source on the unit disk, zero
    Dirichlet boundary: u_xx + u_yy = 1/D, exact solution (x^2+y^2-1)/4
    for D = 1 (scaled by 1/D in general)."""
    if not D > 0:
        raise ValueError("diffusivity must be positive")
    res_pts = _disk_rejection_points(276, seed)
    bnd_pts = _circle_points(100)
    assert np.all(np.hypot(res_pts[:, 0], res_pts[:, 1]) < 1.0)
    assert np.all(np.abs(np.hypot(bnd_pts[:, 0], bnd_pts[:, 1]) - 1.0) < 1e-12)

    inv_d = 1.0 / D

    def exact(Z):
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        return inv_d * 0.25 * (Z[:, 0] ** 2 + Z[:, 1] ** 2 - 1.0)

    res_term = LossTerm(
        name="res", weight_key="res", points=res_pts,
        slots=((0, 2), (1, 2)),
        combine=lambda s: s[(0, 2)] + s[(1, 2)] - inv_d,
        partials=lambda s: {(0, 2): 1.0, (1, 2): 1.0},
    )
    bnd_term = _value_term("bnd", "bnd", bnd_pts, np.zeros(100))

    grid = np.linspace(-1.0, 1.0, 41)
    gx, gy = np.meshgrid(grid, grid, indexing="ij")
    val = np.column_stack([gx.ravel(), gy.ravel()])
    val = val[np.hypot(val[:, 0], val[:, 1]) <= 1.0]

    return PdeProblem(
        name="poisson2d", input_dim=2, terms=(res_term, bnd_term),
        exact=exact, lambda_i=1.0, lambda_b=lambda_b,
        validation_set=val,
        collocation=CollocationSet(res_pts, bnd_pts, None),
        meta={"D": D, "collocation_seed": seed},
    )


def diffusion2d(D=1.0, R=1.0, n_terms=50, lambda_i=1.0, lambda_b=1.0):
    """Heat flow on a disk with zero boundary: u_xx + u_yy = (1/D) u_t.
    The reference solution is the truncated radial eigenfunction series;
    the initial condition targets are that series at t = 0, making the
    problem self-consistent under truncation."""
    if not (D > 0 and R > 0):
        raise ValueError("D and R must be positive")
    alphas = np.array(bessel_j0_zeros(n_terms))
    j1_at = np.array([bessel_j1(a) for a in alphas])
    coeffs = -R * R / (2.0 * alphas ** 3 * j1_at)
    decay = D * alphas ** 2 / (R * R)

    def exact(Z):
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        r = np.hypot(Z[:, 0], Z[:, 1])
        t = Z[:, 2]
        acc = np.zeros(Z.shape[0])
        for a, c, d in zip(alphas, coeffs, decay):
            j0_vals = np.array([bessel_j0(v) for v in a * r / R])
            acc += c * j0_vals * np.exp(-d * t)
        return acc

    # residual grid: 16x16 spatial points clipped to the disk, 10 times
    grid = np.linspace(-1.0, 1.0, 16)
    gx, gy = np.meshgrid(grid, grid, indexing="ij")
    spatial = np.column_stack([gx.ravel(), gy.ravel()])
    spatial = spatial[np.hypot(spatial[:, 0], spatial[:, 1]) <= 1.0]
    if spatial.shape[0] != 172:
        raise RuntimeError(f"expected 172 spatial points, got {spatial.shape[0]}")
    times = np.linspace(0.0, 0.5, 10)
    res_pts = np.column_stack([
        np.tile(spatial, (times.size, 1)),
        np.repeat(times, spatial.shape[0])])

    # boundary: 200 angles x 19 times (the t=0 ring belongs to the initial set)
    angles = _circle_points(200) * R
    bnd_times = np.linspace(0.0, 0.5, 20)[1:]
    bnd_pts = np.column_stack([
        np.tile(angles, (bnd_times.size, 1)),
        np.repeat(bnd_times, angles.shape[0])])

    init_pts = np.column_stack([spatial, np.zeros(spatial.shape[0])])
    init_targets = exact(init_pts)

    inv_d = 1.0 / D
    res_term = LossTerm(
        name="res", weight_key="res", points=res_pts,
        slots=((0, 2), (1, 2), (2, 1)),
        combine=lambda s: s[(0, 2)] + s[(1, 2)] - inv_d * s[(2, 1)],
        partials=lambda s: {(0, 2): 1.0, (1, 2): 1.0, (2, 1): -inv_d},
    )
    bnd_term = _value_term("bnd", "bnd", bnd_pts, np.zeros(bnd_pts.shape[0]))
    init_term = _value_term("init", "init", init_pts, init_targets)

    val_times = np.arange(6) * 0.1
    val = np.column_stack([
        np.tile(spatial, (val_times.size, 1)),
        np.repeat(val_times, spatial.shape[0])])
    extrap = np.column_stack([spatial, np.full(spatial.shape[0], 0.6)])

    return PdeProblem(
        name="diffusion2d", input_dim=3,
        terms=(res_term, init_term, bnd_term),
        exact=exact, lambda_i=lambda_i, lambda_b=lambda_b,
        validation_set=val,
        collocation=CollocationSet(res_pts, bnd_pts, init_pts),
        meta={"D": D, "R": R, "n_terms": n_terms},
        extra_validation={"t=0.6": extrap},
    )


def _line_time_grid():
    xs = np.linspace(-1.0, 1.0, 20)
    ts = np.linspace(0.0, 1.0, 11)[1:]  # residual time range excludes t=0
    pts = np.column_stack([np.tile(xs, ts.size), np.repeat(ts, xs.size)])
    return xs, pts


def wave1d(c=1.0, A=1.0, k=np.pi, lambda_i=1.0, lambda_b=1.0):
    """1D wave equation u_tt = c^2 u_xx on [-1,1] x [0,1] with the standing
    wave A sin(kx) cos(wt) as reference; constrains initial displacement,
    initial velocity, and the fixed string ends u(+-1, t) = 0.  The
    reference is odd in x, matching the parity the sign-flip-equivariant
    models are built to respect, and vanishes at both ends, so the boundary
    data is homogeneous.  Without the end-point anchor the strip problem is
    underdetermined (any d'Alembert extension beyond the initial light cone
    fits residual plus initial data), and trained models drift there."""
    if not c > 0:
        raise ValueError("wave speed must be positive")
    omega = c * k

    def exact(Z):
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        return A * np.sin(k * Z[:, 0]) * np.cos(omega * Z[:, 1])

    xs, res_pts = _line_time_grid()
    init_pts = np.column_stack([xs, np.zeros(xs.size)])
    disp_targets = exact(init_pts)
    ts = np.unique(res_pts[:, 1])
    bnd_pts = np.vstack([
        np.column_stack([np.full(ts.size, -1.0), ts]),
        np.column_stack([np.full(ts.size, 1.0), ts]),
    ])

    c2 = c * c
    res_term = LossTerm(
        name="res", weight_key="res", points=res_pts,
        slots=((1, 2), (0, 2)),
        combine=lambda s: s[(1, 2)] - c2 * s[(0, 2)],
        partials=lambda s: {(1, 2): 1.0, (0, 2): -c2},
    )
    disp_term = _value_term("init", "init", init_pts, disp_targets)
    # initial velocity of the standing wave is identically zero
    vel_term = LossTerm(
        name="init_v", weight_key="init", points=init_pts,
        slots=((1, 1),),
        combine=lambda s: s[(1, 1)],
        partials=lambda s: {(1, 1): 1.0},
    )
    bnd_term = _value_term("bnd", "bnd", bnd_pts,
                           np.zeros(bnd_pts.shape[0]))

    vx = np.linspace(-1.0, 1.0, 50)
    vt = np.linspace(0.0, 1.0, 20)
    val = np.column_stack([np.tile(vx, vt.size), np.repeat(vt, vx.size)])

    return PdeProblem(
        name="wave1d", input_dim=2,
        terms=(res_term, disp_term, vel_term, bnd_term),
        exact=exact, lambda_i=lambda_i, lambda_b=lambda_b,
        validation_set=val,
        collocation=CollocationSet(res_pts, bnd_pts, init_pts),
        meta={"c": c, "A": A, "k": k},
    )


def burgers1d(nu=0.01, lambda_i=1.0):
    """Viscous Burgers' equation u_t + u u_x = nu u_xx on [-1,1] x [0,1]
    with a closed-form steepening-front solution; initial condition from the
    exact profile at t = 0, no boundary term."""
    if not nu > 0:
        raise ValueError("viscosity must be positive")
    ln_t0 = 1.0 / (8.0 * nu)  # reference time enters only through its log

    def exact(Z):
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        x, t = Z[:, 0], Z[:, 1]
        tp = t + 1.0
        # sqrt((t+1)/t0) * exp(x^2 / (4 nu (t+1))) folded into one exponent
        # so a single clamp keeps extreme arguments finite (value underflows
        # toward the correct limit 0)
        expo = x * x / (4.0 * nu * tp) + 0.5 * np.log(tp) - 0.5 * ln_t0
        return (x / tp) / (1.0 + np.exp(np.minimum(expo, 700.0)))

    xs, res_pts = _line_time_grid()
    init_pts = np.column_stack([xs, np.zeros(xs.size)])
    init_targets = exact(init_pts)

    res_term = LossTerm(
        name="res", weight_key="res", points=res_pts,
        slots=("u", (1, 1), (0, 1), (0, 2)),
        combine=lambda s: s[(1, 1)] + s["u"] * s[(0, 1)] - nu * s[(0, 2)],
        partials=lambda s: {"u": s[(0, 1)], (1, 1): 1.0,
                            (0, 1): s["u"], (0, 2): -nu},
    )
    init_term = _value_term("init", "init", init_pts, init_targets)

    vx = np.linspace(-1.0, 1.0, 50)
    vt = np.linspace(0.0, 1.0, 20)
    val = np.column_stack([np.tile(vx, vt.size), np.repeat(vt, vx.size)])

    return PdeProblem(
        name="burgers1d", input_dim=2,
        terms=(res_term, init_term),
        exact=exact, lambda_i=lambda_i, lambda_b=1.0,
        validation_set=val,
        collocation=CollocationSet(res_pts, None, init_pts),
        meta={"nu": nu, "ln_t0": ln_t0},
    )


PROBLEM_BUILDERS = {
    "poisson2d": poisson2d,
    "diffusion2d": diffusion2d,
    "wave1d": wave1d,
    "burgers1d": burgers1d,
}


def get_problem(name, **kwargs):
    if name not in PROBLEM_BUILDERS:
        raise ValueError(
            f"unknown problem {name!r}; choose from {sorted(PROBLEM_BUILDERS)}")
    return PROBLEM_BUILDERS[name](**kwargs)
