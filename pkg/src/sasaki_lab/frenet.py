"""
Generalized Frenet curvatures from a stack of curve derivatives.

Given the components of gamma', gamma'', ... with respect to a parameter
sigma along which the curve has constant speed v, the Gram-Schmidt
residuals E_1, E_2, ... of the derivatives satisfy

    |E_{i+1}| / |E_i| = v * k_i

so the geodesic curvatures come from norm ratios alone.
"""

from dataclasses import dataclass, field

import numpy as np

from .algebra import Kind
from .geodesics import closed_form_state, derivative_stack, generator_operator

# first curvature index that must vanish for each family
TAIL_START = {Kind.REAL: 3, Kind.COMPLEX: 6, Kind.QUATERNIONIC: 10}
# largest possible Frenet rank of the projected curve (dimension of the derivative span)
RANK_BOUND = {Kind.REAL: 3, Kind.COMPLEX: 6, Kind.QUATERNIONIC: 10}
# highest derivative order in the linear relation, and the orders it is fitted against
RELATION_ORDERS = {
    Kind.COMPLEX: (7, (5, 3, 1)),
    Kind.QUATERNIONIC: (11, (9, 7, 5, 3, 1)),
}


class DegenerateInput(ValueError):
    """The curve does not move (vertical geodesic); its Frenet data are undefined."""


@dataclass
class CurvatureProfile:
    speed: float
    curvatures: list = field(default_factory=list)
    frenet_rank: int = 1
    # every computed ratio, including those past the first sub-threshold one
    raw: list = field(default_factory=list)

    def k(self, i):
        """k_i with the convention that curvatures past the chain end are zero."""
        return self.curvatures[i - 1] if 1 <= i <= len(self.curvatures) else 0.0

    def computed(self, i):
        """Like ``k`` but the sub-threshold value that ended the chain is kept as computed."""
        if i == len(self.curvatures) + 1 and i <= len(self.raw):
            return self.raw[i - 1]
        return self.k(i)

    @property
    def first_zero_index(self):
        """Index of the first curvature flagged zero, or None if the chain never terminated."""
        if len(self.curvatures) < len(self.raw):
            return len(self.curvatures) + 1
        return None

    def to_json(self):
        return {
            "speed": self.speed,
            "curvatures": [float(k) for k in self.curvatures],
            "frenet_rank": self.frenet_rank,
        }


def gram_schmidt(vectors, passes=2):
    """Modified Gram-Schmidt with reorthogonalization; returns unnormalized residuals.

    Residual i is vector i minus its projection on the span of the earlier
    residuals. Zero residuals are kept (and skipped as projection
    directions) so the output lines up with the input.
    """
    out = []
    for v in vectors:
        w = np.array(v, dtype=float)
        for _ in range(passes):
            for q in out:
                qq = q @ q
                if qq > 0:
                    w = w - (q @ w) / qq * q
        out.append(w)
    return out


def curvature_profile(derivs, speed, tol_zero=1e-8):
    """Frenet curvatures of a constant-speed curve from ``[gamma', gamma'', ...]``."""
    if speed <= 0:
        raise DegenerateInput("speed must be positive")
    derivs = [np.asarray(d, dtype=float) for d in derivs]
    if np.linalg.norm(derivs[0]) == 0:
        raise DegenerateInput("gamma' vanishes: the projected curve is a point")
    E = gram_schmidt(derivs)
    norms = [float(np.linalg.norm(e)) for e in E]
    raw = []
    curvatures = []
    stopped = False
    for i in range(len(E) - 1):
        if norms[i] == 0:
            break
        k = norms[i + 1] / (norms[i] * speed)
        raw.append(k)
        if stopped:
            continue
        if k < tol_zero * max(1.0, raw[0]):
            stopped = True
        else:
            curvatures.append(k)
    return CurvatureProfile(
        speed=float(speed), curvatures=curvatures, frenet_rank=len(curvatures) + 1, raw=raw
    )


def scaled_derivatives(derivs, speed):
    """Derivatives with respect to arclength: order p divided by ``speed ** p``."""
    return [np.asarray(d, dtype=float) / speed ** (p + 1) for p, d in enumerate(derivs)]


@dataclass
class TailResult:
    passed: bool
    first_violation: int | None
    # largest tail curvature divided by max(1, k1)
    max_tail: float


def vanishing_tail_check(profile, kind, tol=1e-8):
    """Every computed k_i from the family's tail index on must be at most ``tol * max(1, k1)``."""
    start = TAIL_START[Kind(kind)]
    scale = max(1.0, profile.k(1))
    tail = [(i, profile.computed(i) / scale) for i in range(start, len(profile.raw) + 1)]
    bad = [i for i, k in tail if k > tol]
    return TailResult(
        passed=not bad,
        first_violation=bad[0] if bad else None,
        max_tail=max((k for _, k in tail), default=0.0),
    )


def orthogonal_residuals(derivs, tol=1e-8):
    """Relative Gram-Schmidt residual of each column against the accepted earlier ones.

    A column is accepted as a new direction when its residual exceeds
    ``tol`` (relative to the largest column norm).
    """
    derivs = [np.asarray(d, dtype=float) for d in derivs]
    largest = max(float(np.linalg.norm(d)) for d in derivs)
    if largest == 0:
        return [0.0] * len(derivs)
    basis, out = [], []
    for d in derivs:
        w = d.copy()
        for _ in range(2):
            for q in basis:
                w = w - (q @ w) * q
        nrm = float(np.linalg.norm(w))
        out.append(nrm / largest)
        if nrm > tol * largest:
            basis.append(w / nrm)
    return out


def span_rank(derivs, tol=1e-8):
    """Numerical rank of the derivative stack: residuals above ``tol * max column norm``."""
    return sum(r > tol for r in orthogonal_residuals(derivs, tol))


def rank_excess(derivs, bound, tol=1e-8):
    """The (bound+1)-th largest relative residual; ``<= tol`` iff ``span_rank <= bound``."""
    res = sorted(orthogonal_residuals(derivs, tol), reverse=True)
    return res[bound] if len(res) > bound else 0.0


@dataclass
class RelationResult:
    residual: float
    passed: bool
    coefficients: list


def linear_relation_check(derivs, kind, b_sq, c, tol):
    """Check the top-order linear relation among the derivatives of a projected geodesic.

    Real: gamma'''' + b^2 c^2 gamma'' = 0, relative to |gamma''|.
    Complex: gamma^(7) in span(gamma^(5), gamma^(3), gamma').
    Quaternionic: gamma^(11) in span(gamma^(9), ..., gamma^(3), gamma').
    ``derivs[0]`` is gamma'.
    """
    kind = Kind(kind)
    if kind is Kind.REAL:
        if len(derivs) < 4:
            raise ValueError("real relation needs derivatives up to order 4")
        d2, d4 = np.asarray(derivs[1]), np.asarray(derivs[3])
        scale = max(float(np.linalg.norm(d2)), np.finfo(float).tiny)
        res = float(np.linalg.norm(d4 + b_sq * c * c * d2)) / scale
        return RelationResult(residual=res, passed=res <= tol, coefficients=[-b_sq * c * c])
    top, lower = RELATION_ORDERS[kind]
    if len(derivs) < top:
        raise ValueError(f"{kind.value} relation needs derivatives up to order {top}")
    target = np.asarray(derivs[top - 1], dtype=float)
    M = np.stack([np.asarray(derivs[p - 1], dtype=float) for p in lower], axis=1)
    scale = np.linalg.norm(M, axis=0)
    scale[scale == 0] = 1.0
    sol, *_ = np.linalg.lstsq(M / scale, target, rcond=None)
    coeffs = sol / scale
    denom = max(float(np.linalg.norm(target)), np.finfo(float).tiny)
    res = float(np.linalg.norm(target - M @ coeffs)) / denom
    return RelationResult(residual=res, passed=res <= tol, coefficients=[float(a) for a in coeffs])


@dataclass
class ConstancyResult:
    passed: bool
    max_deviation: float
    ranks: list
    profiles: list
    derivative_norm_deviation: float


def constancy_check(spec, structures, bundle, init, sample_sigmas, tol=1e-9, count=None, tol_zero=1e-8):
    """Compare Frenet profiles of the projected curve at several parameter values.

    Each profile is built from the exact state at sigma, with the generator
    recomputed from that state. Deviations are index-wise, relative to
    ``max(1, k1)`` of the first profile. Also reports the largest relative
    spread of ``|gamma^(p)|`` across the samples.
    """
    if len(sample_sigmas) < 2:
        raise ValueError("need at least two sample points")
    if init.rho >= 1.0 or np.linalg.norm(init.u0) == 0:
        raise DegenerateInput("vertical geodesic: projected curve is a point")
    count = count or spec.dim
    speed = float(np.sqrt(1.0 - init.rho**2))
    profiles, norms = [], []
    for sigma in sample_sigmas:
        state = closed_form_state(spec, structures, bundle, init, sigma)
        A = generator_operator(spec, structures, state)
        derivs = derivative_stack(A, state.u, count)
        profiles.append(curvature_profile(derivs, speed, tol_zero))
        norms.append([float(np.linalg.norm(d)) for d in derivs])
    ref = profiles[0]
    scale = max(1.0, ref.k(1))
    width = max(len(p.curvatures) for p in profiles)
    dev = max(
        (abs(p.k(i) - ref.k(i)) / scale for p in profiles for i in range(1, width + 1)),
        default=0.0,
    )
    norms = np.array(norms)
    top = np.maximum(norms.max(axis=0), np.finfo(float).tiny)
    norm_dev = float(np.max((norms.max(axis=0) - norms.min(axis=0)) / top))
    ranks = [p.frenet_rank for p in profiles]
    return ConstancyResult(
        passed=dev <= tol and len(set(ranks)) == 1,
        max_deviation=float(dev),
        ranks=ranks,
        profiles=profiles,
        derivative_norm_deviation=norm_dev,
    )

