"""Iterated composition with a frozen activation layer, and the constructive
transitivity certificates built on the escape of compact cubes.

The certificate algorithm: pick the cube [-k0, k0]^m large enough that the
truncated-series tail is below half the requested tolerances, find the first
iterate N at which the cube's image clears a guard cube, and perturb the
seed g only out there — on the escaped box the perturbation is f pulled back
through the inverse iterate, blended linearly back into g across a margin
shell.  The N-th iterate of the perturbed seed then reproduces f exactly on
the cube, and every remaining series term is dominated by its 2^-k weight,
so both measured distances are certified by construction and re-measured.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels as K
from .activations import ActivationSpec, classify, invert_array
from .errors import (
    DimensionMismatchError,
    NoEscapeError,
    PreconditionError,
    QuadratureError,
    VerificationError,
)
from .function_space import (
    GridFunction,
    GridSpec,
    Measure1D,
    d_ucc,
    lp_norm,
    sup_norm_on_ball,
)
from .network import FitConfig, fit_shallow

__all__ = [
    "CompositionOperator",
    "TransitivityCertificate",
    "apply",
    "escape_time",
    "construct_transitive_approximant",
    "l1_transitive_approximant",
]


@dataclass(frozen=True)
class CompositionOperator:
    """f -> f o sigma•(A x + b); A=None means the identity matrix.

    With A=None every shift component must be strictly positive (that is the
    regime in which injective fixed-point-free activations make the iterated
    cube escape every compact).
    """

    activation: ActivationSpec
    b: np.ndarray
    A: Optional[np.ndarray] = None

    def __post_init__(self):
        b = np.atleast_1d(np.asarray(self.b, dtype=np.float64))
        object.__setattr__(self, "b", b)
        if self.A is None:
            if not np.all(b > 0):
                raise PreconditionError(
                    "identity-matrix operators need strictly positive shifts"
                )
        else:
            A = np.asarray(self.A, dtype=np.float64)
            if A.shape != (b.size, b.size):
                raise DimensionMismatchError(
                    f"A must be {b.size}x{b.size}, got {A.shape}"
                )
            object.__setattr__(self, "A", A)

    @property
    def dim(self) -> int:
        return self.b.size

    def step(self, points: np.ndarray) -> np.ndarray:
        return self.iterate(points, 1)

    def iterate(self, points: np.ndarray, n: int) -> np.ndarray:
        """S^n(points) for points of shape (N, m)."""
        x = np.asarray(points, dtype=np.float64)
        if x.ndim == 1:
            x = x[:, None]
        if n == 0:
            return x.copy()
        if self.A is None and self.activation.is_tabulated:
            edges, kinds, par, _ = self.activation._table
            return K.s_iter(edges, kinds, par, x, self.b, int(n))
        out = x.copy()
        for _ in range(int(n)):
            z = out if self.A is None else out @ self.A.T
            out = self.activation(z + self.b)
        return out

    def inverse_iterate(self, points: np.ndarray, n: int) -> np.ndarray:
        """S^{-n}(points); requires A=None and an (Lp-)transitive activation."""
        if self.A is not None:
            raise PreconditionError("inverse iteration is offered for A=identity")
        y = np.asarray(points, dtype=np.float64)
        if y.ndim == 1:
            y = y[:, None]
        if n == 0:
            return y.copy()
        verdict = classify(self.activation)
        if verdict.kind == "NotTransitive":
            raise PreconditionError(
                f"{self.activation.name} is not invertible for iteration"
            )
        if self.activation.is_tabulated:
            edges, kinds, par, vedges = self.activation._table
            return K.s_inv_iter(edges, kinds, par, vedges, y, self.b, int(n))
        out = y.copy()
        for _ in range(int(n)):
            out = invert_array(self.activation, out) - self.b[None, :]
        return out


def apply(op: CompositionOperator, f: GridFunction, n: int) -> GridFunction:
    """x -> f(S^n(x)); n = 0 returns f itself."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if f.dim_in != op.dim:
        raise DimensionMismatchError(
            f"operator dimension {op.dim} does not match function dim_in {f.dim_in}"
        )
    if n == 0:
        return f
    return GridFunction(
        lambda X, _f=f, _op=op, _n=int(n): _f.sample(_op.iterate(X, _n)),
        f.dim_in,
        f.dim_out,
        name=f"{f.name}∘S^{n}",
        unbounded=f.unbounded,
    )


def _escape_gate(op: CompositionOperator) -> None:
    verdict = classify(op.activation)
    if not verdict.injective:
        raise PreconditionError(
            f"{op.activation.name} is not injective (witness near "
            f"{verdict.witness}); escape analysis needs an injective activation"
        )
    if verdict.kind == "NotTransitive":
        raise PreconditionError(
            f"{op.activation.name} has fixed points with sign changes "
            f"(witness {verdict.witness}); the iterated cube need not escape"
        )


def _box_step(op: CompositionOperator, lo: np.ndarray, hi: np.ndarray):
    """Propagate the box [lo, hi] through one step (coordinatewise monotone)."""
    if op.A is None:
        pair = op.iterate(np.stack([lo, hi]), 1)
        return pair[0], pair[1]
    a_pos = np.maximum(op.A, 0.0)
    a_neg = np.minimum(op.A, 0.0)
    z_lo = a_pos @ lo + a_neg @ hi + op.b
    z_hi = a_pos @ hi + a_neg @ lo + op.b
    return (
        np.asarray(op.activation(z_lo), dtype=np.float64),
        np.asarray(op.activation(z_hi), dtype=np.float64),
    )


def escape_time(op: CompositionOperator, K_radius: float,
                guard_radius: Optional[float] = None,
                max_N: int = 10_000) -> int:
    """Smallest N with S^N([-K, K]^m) disjoint from the guard cube.

    For A=identity and a monotone activation the cube image is exactly the
    box spanned by the two corner iterates; for general full-rank A the box
    is propagated by interval arithmetic, a sound over-approximation that may
    overestimate N.  Raises NoEscapeError after max_N steps.
    """
    if not K_radius > 0:
        raise ValueError("K_radius must be positive")
    guard = K_radius if guard_radius is None else float(guard_radius)
    if guard < K_radius:
        raise ValueError("guard_radius must be >= K_radius")
    _escape_gate(op)
    if op.A is not None:
        if np.linalg.matrix_rank(op.A) < op.dim:
            raise PreconditionError("A must be of full rank")
    m = op.dim
    lo = np.full(m, -float(K_radius))
    hi = np.full(m, float(K_radius))
    for n in range(1, int(max_N) + 1):
        lo, hi = _box_step(op, lo, hi)
        if np.any(lo > guard) or np.any(hi < -guard):
            return n
    raise NoEscapeError(int(max_N))


def _escape_box(op: CompositionOperator, K_radius: float, n: int):
    m = op.dim
    lo = np.full(m, -float(K_radius))
    hi = np.full(m, float(K_radius))
    for _ in range(n):
        lo, hi = _box_step(op, lo, hi)
    return lo, hi


def _pullback_kinks(op: CompositionOperator, n: int, box_lo: np.ndarray,
                    box_hi: np.ndarray, margin: float) -> list:
    """Input locations where f o S^{-n} changes slope on the escaped box.

    The inverse orbit of y crosses an activation breakpoint at step j exactly
    when y = S^j(sigma(bp)), so those forward-orbit points (plus the box
    edges, where the clamp kinks) are returned; a shallow fit cannot resolve
    the slope jumps there without a unit kinked at each.
    """
    if op.dim != 1:
        return []
    seeds = [float(np.asarray(op.activation(bp)))
             for bp in op.activation.breakpoints]
    kinks = {float(box_lo[0]), float(box_hi[0])}
    lo = float(box_lo[0]) - margin
    hi = float(box_hi[0]) + margin
    for v in seeds:
        y = np.asarray([[v]])
        for _ in range(n):
            if lo <= float(y[0, 0]) <= hi:
                kinks.add(float(y[0, 0]))
            y = op.iterate(y, 1)
        if lo <= float(y[0, 0]) <= hi:
            kinks.add(float(y[0, 0]))
    return sorted(kinks)


def _two_zone_points(core_radius: float, box_lo: np.ndarray, box_hi: np.ndarray,
                     total_points: int, dim: int) -> np.ndarray:
    """Training points covering the core cube and the escaped box.

    The ramp shells between the zones are deliberately excluded: the metric
    terms they influence are capped by their 2^-k weights, and including the
    steep blend ramps would dominate the least-squares objective.
    """
    if dim != 1:
        raise DimensionMismatchError("zoned training grids support dim 1")
    core_len = 2.0 * core_radius
    box_len = float(box_hi[0] - box_lo[0])
    total_len = core_len + box_len
    n_core = max(64, int(round(total_points * core_len / total_len)))
    n_box = max(64, total_points - n_core)
    pts = np.concatenate([
        np.linspace(-core_radius, core_radius, n_core),
        np.linspace(float(box_lo[0]), float(box_hi[0]), n_box),
    ])
    return np.unique(pts)[:, None]


@dataclass(frozen=True)
class TransitivityCertificate:
    """Measured witness that {Phi^N of a delta-perturbation of g} meets the
    epsilon-ball around f."""

    N: int
    g_tilde: GridFunction
    d_seed: float
    d_target: float
    k0: float
    blend_margin: float
    metric: str
    escape_lo: tuple
    escape_hi: tuple
    activation_name: str
    b: tuple
    fit_residual: Optional[float] = None

    def to_config(self) -> dict:
        return {
            "N": self.N,
            "k0": self.k0,
            "d_seed": self.d_seed,
            "d_target": self.d_target,
            "blend_margin": self.blend_margin,
            "metric": self.metric,
            "escape_lo": list(self.escape_lo),
            "escape_hi": list(self.escape_hi),
            "activation": self.activation_name,
            "b": list(self.b),
            "fit_residual": self.fit_residual,
        }


def _blend(g: GridFunction, f: GridFunction, op: CompositionOperator, n: int,
           box_lo: np.ndarray, box_hi: np.ndarray, margin: float) -> GridFunction:
    """g outside the margin shell of the escaped box, f o S^{-n} on the box,
    linear sup-distance interpolation in between."""

    def sample(Y: np.ndarray) -> np.ndarray:
        Y = np.asarray(Y, dtype=np.float64)
        clamped = np.clip(Y, box_lo[None, :], box_hi[None, :])
        pulled = f.sample(op.inverse_iterate(clamped, n))
        dist = np.max(
            np.maximum(box_lo[None, :] - Y, Y - box_hi[None, :]).clip(min=0.0),
            axis=1,
        )
        w = np.clip(dist / margin, 0.0, 1.0)[:, None]
        return (1.0 - w) * pulled + w * g.sample(Y)

    return GridFunction(
        sample, g.dim_in, g.dim_out, name=f"blend[{g.name}->{f.name}]",
        unbounded=g.unbounded or f.unbounded,
    )


def _min_tail_cutoff(tol: float) -> int:
    """Smallest k with 2^-k < tol (tol > 0)."""
    k = 1
    while 2.0**-k >= tol:
        k += 1
    return k


def construct_transitive_approximant(
    op: CompositionOperator,
    g: GridFunction,
    f: GridFunction,
    eps: float,
    delta: float,
    fitter: Optional[FitConfig] = None,
    *,
    terms: int = 20,
    grid: Optional[GridSpec] = None,
    blend_margin: float = 1.0,
    max_N: int = 10_000,
) -> TransitivityCertificate:
    """Build g_tilde with d(g, g_tilde) < delta and d(f, Phi^N(g_tilde)) < eps.

    Tolerances above 1 are accepted (the metric is bounded by 1, so such a
    constraint is vacuous).  With a fitter config, g_tilde is refitted as a
    one-hidden-layer net over a region covering both the cube and the escaped
    box, and the measured distances are those of the fitted seed.
    """
    if eps <= 0 or delta <= 0:
        raise PreconditionError("eps and delta must be positive")
    if op.A is not None:
        raise PreconditionError("the blend construction needs A=identity")
    verdict = classify(op.activation)
    if verdict.kind != "Transitive":
        raise PreconditionError(
            f"{op.activation.name} classified {verdict.kind}; the uniform "
            f"construction needs a Transitive activation (witness "
            f"{verdict.witness})"
        )
    if f.dim_in != op.dim or g.dim_in != op.dim or f.dim_out != g.dim_out:
        raise DimensionMismatchError("operator/function dimensions do not agree")
    if grid is None:
        grid = GridSpec(dim_in=f.dim_in, dim_out=f.dim_out, points_per_axis=301)

    d0 = d_ucc(f, g, terms, grid)
    if d0 == 0.0:
        return TransitivityCertificate(
            0, g, 0.0, 0.0, 0, blend_margin, "d_ucc",
            (), (), op.activation.name, tuple(op.b),
        )

    k0 = _min_tail_cutoff(min(eps, delta) / 2.0)
    n = escape_time(op, k0, k0 + blend_margin, max_N)
    box_lo, box_hi = _escape_box(op, k0, n)
    g_tilde = _blend(g, f, op, n, box_lo, box_hi, blend_margin)

    fit_residual = None
    if fitter is not None:
        reach = float(max(np.max(np.abs(box_lo)), np.max(np.abs(box_hi)), k0))
        region = max(fitter.region, reach + blend_margin)
        pts = _two_zone_points(float(k0), box_lo, box_hi,
                               fitter.grid_points, op.dim)
        result = fit_shallow(
            g_tilde, fitter.width, op.activation, region,
            seed=fitter.seed, ridge=fitter.ridge,
            grid_points=fitter.grid_points, train_points=pts,
            extra_kinks=_pullback_kinks(op, n, box_lo, box_hi, blend_margin),
        )
        fit_residual = result.sup_residual
        g_tilde = result.net.as_gridfunction(name="blend-refit")

    d_seed = d_ucc(g, g_tilde, terms, grid)
    d_target = d_ucc(f, apply(op, g_tilde, n), terms, grid)
    if not (d_seed < delta and d_target < eps):
        raise VerificationError(
            "certificate verification failed",
            {"d_seed": d_seed, "delta": delta, "d_target": d_target, "eps": eps},
        )
    return TransitivityCertificate(
        n, g_tilde, d_seed, d_target, k0, blend_margin, "d_ucc",
        tuple(box_lo), tuple(box_hi), op.activation.name, tuple(op.b),
        fit_residual,
    )


def l1_transitive_approximant(
    op: CompositionOperator,
    g: GridFunction,
    f: GridFunction,
    mu: Measure1D,
    eps: float,
    delta: float,
    *,
    quad_nodes: int = 20_000,
    blend_margin: float = 1.0,
    max_N: int = 10_000,
    max_radius: float = 64.0,
) -> TransitivityCertificate:
    """Integrable-variant certificate: distances measured in the L1(mu) norm.

    The perturbed region is pushed past a radius R holding all but a small
    fraction of the measure's mass (tail <= min(eps, delta)/(4*(M+1)) with M
    a numeric sup bound on f and g), so the seed distance is controlled by
    the tail mass while the N-th iterate reproduces f exactly on [-R, R]^m.
    """
    if eps <= 0 or delta <= 0:
        raise PreconditionError("eps and delta must be positive")
    if op.A is not None or op.dim != 1:
        raise PreconditionError("the L1 construction is offered for m=1, A=identity")
    verdict = classify(op.activation)
    if verdict.kind not in ("Transitive", "LpTransitiveOnly"):
        raise PreconditionError(
            f"{op.activation.name} classified {verdict.kind}; need a "
            f"transitive or Lp-transitive activation"
        )
    from .rate_bounds import pushforward_density_norm

    push = pushforward_density_norm(op.activation, float(op.b[0]), mu)
    if not push.well_defined:
        raise PreconditionError(
            "the composition operator is not well-defined on L1(mu): the "
            "pushforward density is unbounded (flat stretch in the activation)"
        )

    diff0 = lp_norm(f - g, mu, 1.0, quad_nodes)
    if diff0 == 0.0:
        return TransitivityCertificate(
            0, g, 0.0, 0.0, 0.0, blend_margin, "l1",
            (), (), op.activation.name, tuple(op.b),
        )

    probe = GridSpec(dim_in=1, dim_out=f.dim_out, points_per_axis=4001)
    bound = max(
        sup_norm_on_ball(f, max_radius, probe),
        sup_norm_on_ball(g, max_radius, probe),
    )
    budget = min(eps, delta) / (4.0 * (bound + 1.0))
    radius = None
    r = 1.0
    while r <= max_radius:
        if mu.tail_mass(r) <= budget:
            radius = r
            break
        r *= 2.0
    if radius is None and mu.tail_mass(max_radius) <= budget:
        radius = max_radius
    if radius is None:
        raise QuadratureError(
            f"measure tail too heavy: needs tail mass <= {budget:.3e} within "
            f"radius {max_radius}"
        )

    n = escape_time(op, radius, radius + blend_margin, max_N)
    box_lo, box_hi = _escape_box(op, radius, n)
    g_tilde = _blend(g, f, op, n, box_lo, box_hi, blend_margin)
    d_seed = lp_norm(g_tilde - g, mu, 1.0, quad_nodes)
    d_target = lp_norm(f - apply(op, g_tilde, n), mu, 1.0, quad_nodes)
    if not (d_seed < delta and d_target < eps):
        raise VerificationError(
            "L1 certificate verification failed",
            {"d_seed": d_seed, "delta": delta, "d_target": d_target, "eps": eps},
        )
    return TransitivityCertificate(
        n, g_tilde, d_seed, d_target, float(radius), blend_margin, "l1",
        tuple(box_lo), tuple(box_hi), op.activation.name, tuple(op.b),
    )
