"""Domain geometry: distance to the boundary, normals and principal
curvatures, the quadratic distance barrier on a boundary collar, boundary
convexity in the eigenvalue-sum sense, and numeric verification that the
linearized operator dominates the barrier.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm, qmc

from . import lift, symfun
from .errors import CollarError, ConfigError


@dataclass(frozen=True)
class DomainGeometry:
    """Ball, axis-aligned box, or radial (ball handled through 1-D profiles).

    ``mu0`` is the collar width within which the distance function is smooth;
    for a ball any width below the radius works, for a box smoothness fails
    near edges and the collar machinery flags tie zones.
    """

    kind: str
    dim: int
    radius: float = 0.0
    center: np.ndarray = field(default=None, repr=False)
    extents: np.ndarray = field(default=None, repr=False)
    mu0: float = 0.0


def ball(radius, dim=3, center=None, mu0=None):
    if radius <= 0:
        raise ValueError("radius must be positive")
    center = np.zeros(dim) if center is None else np.asarray(center, dtype=np.float64)
    if center.shape != (dim,):
        raise ValueError("center must have length dim")
    return DomainGeometry(
        kind="ball", dim=dim, radius=float(radius), center=center,
        mu0=float(mu0) if mu0 is not None else radius / 2.0,
    )


def radial(radius, dim=3, mu0=None):
    if radius <= 0:
        raise ValueError("radius must be positive")
    return DomainGeometry(
        kind="radial", dim=dim, radius=float(radius), center=np.zeros(dim),
        mu0=float(mu0) if mu0 is not None else radius / 2.0,
    )


def box(extents, center=None, mu0=None):
    extents = np.asarray(extents, dtype=np.float64)
    if extents.ndim != 1 or np.any(extents <= 0):
        raise ValueError("extents must be positive")
    dim = extents.size
    center = np.zeros(dim) if center is None else np.asarray(center, dtype=np.float64)
    return DomainGeometry(
        kind="box", dim=dim, extents=extents, center=center,
        mu0=float(mu0) if mu0 is not None else float(extents.min()) / 4.0,
    )


def _is_ball(geom):
    return geom.kind in ("ball", "radial")


def distance(geom, x):
    """Signed-inward distance to the boundary (positive inside)."""
    x = np.asarray(x, dtype=np.float64)
    if _is_ball(geom):
        return geom.radius - float(np.linalg.norm(x - geom.center))
    lo = geom.center - geom.extents / 2.0
    hi = geom.center + geom.extents / 2.0
    return float(min((x - lo).min(), (hi - x).min()))


def distance_pack(geom, x, edge_tol=0.0):
    """Distance, its gradient, and its Hessian at a collar point.

    Raises CollarError outside the smooth collar. For a box the Hessian is
    zero on face zones; a tie between faces within ``edge_tol`` triggers a
    non-smoothness warning.
    """
    x = np.asarray(x, dtype=np.float64)
    d = distance(geom, x)
    if d <= 0 or d >= geom.mu0:
        raise CollarError(f"point at distance {d:g} outside collar (0, {geom.mu0:g})")
    if _is_ball(geom):
        rel = x - geom.center
        r = np.linalg.norm(rel)
        u = rel / r
        grad = -u
        hess = -(np.eye(geom.dim) - np.outer(u, u)) / r
        return d, grad, hess
    lo = geom.center - geom.extents / 2.0
    hi = geom.center + geom.extents / 2.0
    dists = np.concatenate([x - lo, hi - x])
    order = np.argsort(dists)
    if edge_tol > 0 and dists[order[1]] - dists[order[0]] < edge_tol:
        warnings.warn("distance not smooth: near a box edge", stacklevel=2)
    face = int(order[0])
    grad = np.zeros(geom.dim)
    if face < geom.dim:
        grad[face] = 1.0  # low face, inward is +axis
    else:
        grad[face - geom.dim] = -1.0
    return d, grad, np.zeros((geom.dim, geom.dim))


def boundary_data(geom, x):
    """Outward unit normal and principal curvatures at the boundary point
    nearest to ``x``."""
    x = np.asarray(x, dtype=np.float64)
    if _is_ball(geom):
        rel = x - geom.center
        nu = rel / np.linalg.norm(rel)
        kappa = np.full(geom.dim - 1, 1.0 / geom.radius)
        return nu, kappa
    _, grad, _ = distance_pack(geom, x)
    return -grad, np.zeros(geom.dim - 1)


@dataclass(frozen=True)
class BarrierParams:
    """Constants of the collar barrier -d + K3 d^2."""

    K3: float
    k3: float = 0.01

    def __post_init__(self):
        if self.K3 <= 0 or self.k3 <= 0:
            raise ValueError("barrier constants must be positive")

    def collar(self, geom):
        return min(1.0 / (4.0 * self.K3), geom.mu0)


def barrier_value(geom, params, x):
    d = distance(geom, x)
    return -d + params.K3 * d * d


def barrier_hessian(geom, params, x):
    """Hessian of the barrier; in the principal frame its eigenvalues are
    (1 - 2 K3 d) kappa_i / (1 - kappa_i d) tangentially and 2 K3 along the
    normal. Valid on the smoothness collar (0, mu0)."""
    d, grad, hess_d = distance_pack(geom, x)
    H = 2.0 * params.K3 * np.outer(grad, grad) + (2.0 * params.K3 * d - 1.0) * hess_d
    return symfun.symmetrize(H)


def mk0_convex_check(kappa, m, k0):
    """Strict convexity of a boundary point in the eigenvalue-sum sense:
    the m-sums of the principal curvatures lie in the degree-k0 cone."""
    kappa = symfun.as_spectrum(kappa)
    if m > kappa.size:
        raise ValueError(f"need m <= {kappa.size}, got m={m}")
    table = lift.subset_table(kappa.size, m)
    sums = kappa[table.tuples].sum(axis=1)
    if not 1 <= k0 <= sums.size:
        raise ValueError(f"need 1 <= k0 <= {sums.size}, got k0={k0}")
    return symfun.in_cone(sums, k0)


def collar_points(geom, count, depth_max, edge_exclusion=0.0):
    """Deterministic low-discrepancy points in the collar 0 < d < depth_max."""
    if depth_max <= 0 or depth_max > geom.mu0:
        raise CollarError(f"collar depth {depth_max:g} outside (0, {geom.mu0:g}]")
    if count == 0:
        return np.empty((0, geom.dim))
    sampler = qmc.Halton(d=geom.dim + 1, scramble=False)
    raw = sampler.random(count + 1)[1:]  # drop the origin sample
    depth = (0.02 + 0.96 * raw[:, -1]) * depth_max
    if _is_ball(geom):
        gauss = norm.ppf(np.clip(raw[:, : geom.dim], 1e-12, 1 - 1e-12))
        dirs = gauss / np.linalg.norm(gauss, axis=1, keepdims=True)
        return geom.center + (geom.radius - depth)[:, None] * dirs
    lo = geom.center - geom.extents / 2.0
    hi = geom.center + geom.extents / 2.0
    if edge_exclusion < 0 or 2 * edge_exclusion >= float(geom.extents.min()):
        raise ValueError("edge_exclusion must be nonnegative and below half the extent")
    pts = np.empty((count, geom.dim))
    for i in range(count):
        face = i % (2 * geom.dim)
        axis, side = face % geom.dim, face // geom.dim
        for j in range(geom.dim):
            if j == axis:
                pts[i, j] = (lo[j] + depth[i]) if side == 0 else (hi[j] - depth[i])
            else:
                span = hi[j] - lo[j] - 2 * edge_exclusion
                pts[i, j] = lo[j] + edge_exclusion + raw[i, j] * span
    return pts


@dataclass
class BarrierReport:
    which: str
    K3: float
    k3: float
    count: int = 0
    skips: list = field(default_factory=list)
    min_margin: float = math.inf
    empirical_k3: float = math.inf
    min_h_margin: float = math.inf
    min_sl_ratio: float = math.inf
    min_lambda_k: float = math.inf

    @property
    def passed(self):
        return (
            self.count > 0
            and self.min_margin > 0
            and self.min_h_margin > 0
        )

    def as_dict(self):
        def fin(x):
            return None if math.isinf(x) else x

        return {
            "which": self.which,
            "K3": self.K3,
            "k3": self.k3,
            "count": self.count,
            "skips": self.skips,
            "min_margin": fin(self.min_margin),
            "empirical_k3": fin(self.empirical_k3),
            "min_h_margin": fin(self.min_h_margin),
            "min_sl_ratio": fin(self.min_sl_ratio),
            "min_lambda_k": fin(self.min_lambda_k),
            "passed": self.passed,
        }


def _check_lemma_range(geom, spec, which):
    edge = math.comb(spec.n - 1, spec.m - 1)
    if which == "lemma53":
        if spec.k > edge:
            raise ConfigError(f"lemma53 needs k <= binom(n-1, m-1) = {edge}")
        return None
    if which == "lemma55":
        k0 = spec.k - edge
        if k0 < 1:
            raise ConfigError(f"lemma55 needs k > binom(n-1, m-1) = {edge}")
        if not _is_ball(geom):
            raise ConfigError("lemma55 verification requires curvature: ball only")
        kappa = np.full(spec.n - 1, 1.0 / geom.radius)
        ok, _ = mk0_convex_check(kappa, spec.m, k0)
        if not ok:
            raise ConfigError("boundary is not strictly convex at order (m, k0)")
        return k0
    raise ConfigError(f"unknown bound id {which!r}")


def verify_barrier_bound(u_hess, geom, params, spec, sample_points=1000,
                         which="lemma53", edge_exclusion=None):
    """Check that contracting the operator gradient against the barrier
    Hessian dominates the required multiple of (1 + trace) at collar points.

    ``u_hess`` maps a point to the n x n Hessian of the field under test.
    Also verifies that the barrier itself is admissible at each point and
    records the spectral slack of its m-sum spectrum.
    """
    _check_lemma_range(geom, spec, which)
    mu = params.collar(geom)
    if isinstance(sample_points, int):
        excl = edge_exclusion if edge_exclusion is not None else 0.0
        pts = collar_points(geom, sample_points, mu, edge_exclusion=excl)
    else:
        pts = np.asarray(sample_points, dtype=np.float64)
    report = BarrierReport(which=which, K3=params.K3, k3=params.k3)
    for idx, x in enumerate(pts):
        H = symfun.symmetrize(u_hess(x))
        ok, margin = lift.admissible(H, spec)
        if not ok:
            report.skips.append({"index": idx, "margin": float(margin)})
            continue
        F, trace = lift.gradient(H, spec)
        Dh = barrier_hessian(geom, params, x)
        value = float((F * Dh).sum())
        if which == "lemma53":
            bound = math.sqrt(params.K3) * (1.0 + trace)
        else:
            bound = params.k3 * (1.0 + trace)
        report.count += 1
        report.min_margin = min(report.min_margin, value - bound)
        report.empirical_k3 = min(report.empirical_k3, value / (1.0 + trace))
        lam = np.sort(lift.sum_spectrum(Dh, spec.m))[::-1]
        _, h_margin = symfun.in_cone(lam, spec.k)
        report.min_h_margin = min(report.min_h_margin, float(h_margin))
        report.min_lambda_k = min(report.min_lambda_k, float(lam[spec.k - 1]))
        s = symfun.elem_sym_all(lam, spec.k)
        ratios = [s[l] / params.K3**l for l in range(1, spec.k + 1)]
        report.min_sl_ratio = min(report.min_sl_ratio, float(min(ratios)))
    return report


def search_barrier_constant(u_hess, geom, spec, sample_points=400,
                            which="lemma53", k3=0.01, max_doublings=40):
    """Smallest power-of-two barrier constant whose bound check passes.

    The starting guess follows the square of (4 n max(S_k)^(1/k)) over
    (k min(S_k)) evaluated on collar samples of the field itself.
    """
    _check_lemma_range(geom, spec, which)
    probe = collar_points(geom, min(sample_points, 128), geom.mu0 * 0.999)
    vals = []
    for x in probe:
        H = symfun.symmetrize(u_hess(x))
        ok, _ = lift.admissible(H, spec)
        if ok:
            vals.append(lift.sk_of_hessian(H, spec))
    if not vals:
        raise ConfigError("field is nowhere admissible on the collar")
    vals = np.asarray(vals)
    guess = (4.0 * spec.n * vals.max() ** (1.0 / spec.k) / (spec.k * vals.min())) ** 2
    exponent = max(0, math.ceil(math.log2(max(guess, 1.0))))

    def passes(e):
        params = BarrierParams(K3=2.0**e, k3=k3)
        rep = verify_barrier_bound(
            u_hess, geom, params, spec, sample_points=sample_points, which=which
        )
        return rep.passed

    if passes(exponent):
        while exponent > 0 and passes(exponent - 1):
            exponent -= 1
    else:
        while not passes(exponent):
            exponent += 1
            if exponent - math.ceil(math.log2(max(guess, 1.0))) > max_doublings:
                raise ConfigError("no passing barrier constant found")
    return 2.0**exponent


def c0_diagnostic(u_values, boundary_mask, a_boundary, b_boundary, h, slack_const=50.0):
    """Post-solve checks: the solution stays below sup(b)/inf(a) up to the
    scheme's consistency slack, and its maximum sits on the boundary."""
    u_values = np.asarray(u_values, dtype=np.float64)
    boundary_mask = np.asarray(boundary_mask, dtype=bool)
    a_boundary = np.asarray(a_boundary, dtype=np.float64)
    b_boundary = np.asarray(b_boundary, dtype=np.float64)
    bound = float(b_boundary.max() / a_boundary.min())
    max_u = float(u_values.max())
    tol = slack_const * h * h
    boundary_max = float(u_values[boundary_mask].max())
    return {
        "bound": bound,
        "max_u": max_u,
        "margin": bound - max_u,
        "bound_ok": bool(bound - max_u >= -tol),
        "tolerance": tol,
        "max_on_boundary": bool(boundary_max >= max_u),
    }
