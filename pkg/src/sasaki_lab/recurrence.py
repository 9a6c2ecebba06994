"""
Powers of space-form curvature operators.

``operator_power`` is the brute-force oracle. The real case has a closed
form; for the complex and quaternionic families a power R^p is recovered
as a linear combination of a short fixed operator basis, with the
coefficients fitted per instance by least squares and certified by the
residual of the fit.
"""

from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    Kind,
    SpaceFormSpec,
    bivector_invariants,
    make_structures,
    relative_residual,
    sphere_type_operator,
)
from .report import TrialReport

# minimum p for which the span reduction is claimed
MIN_POWER = {Kind.COMPLEX: 3, Kind.QUATERNIONIC: 5}


@dataclass
class PowerReduction:
    power: int
    basis_labels: list
    coefficients: np.ndarray
    residual: float


def operator_power(A, p):
    """``A @ A @ ... @ A`` (p factors) by repeated multiplication; ``p = 0`` gives E."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"operator must be square, got shape {A.shape}")
    if p < 0:
        raise ValueError(f"power must be nonnegative, got {p}")
    out = np.eye(A.shape[0])
    for _ in range(p):
        out = out @ A
    return out


def real_power_closed_form(R, b_sq, c, p):
    """R^p of a real space-form curvature operator from R and R^2 alone.

    For ``p = 2s - 1`` this is ``(-b^2 c^2)^(s-1) R``; for ``p = 2s`` it is
    ``(-b^2 c^2)^(s-1) R^2``.
    """
    if p < 1:
        raise ValueError(f"closed form needs p >= 1, got {p}")
    s = (p + 1) // 2
    factor = (-b_sq * c * c) ** (s - 1)
    R = np.asarray(R, dtype=float)
    return factor * (R if p % 2 else R @ R)


def _labels(kind, parity):
    j = "J" if kind is Kind.COMPLEX else "Jscript"
    if kind is Kind.COMPLEX:
        return [f"{j}*R^2", "R", j] if parity == "odd" else ["R^2", f"{j}*R", "E"]
    if parity == "odd":
        return [f"{j}*R^4", "R^3", f"{j}*R^2", "R", j]
    return ["R^4", f"{j}*R^3", "R^2", f"{j}*R", "E"]


def reduction_basis(kind, R, Jop, parity):
    """Ordered operator basis of the span that contains R^p for the given parity.

    Complex, odd:        [J R^2, R, J]
    Complex, even:       [R^2, J R, E]
    Quaternionic, odd:   [Jscript R^4, R^3, Jscript R^2, R, Jscript]
    Quaternionic, even:  [R^4, Jscript R^3, R^2, Jscript R, E]
    """
    kind = Kind(kind)
    if kind is Kind.REAL:
        raise ValueError("real curvature operators use real_power_closed_form")
    if parity not in ("odd", "even"):
        raise ValueError(f"parity must be 'odd' or 'even', got {parity!r}")
    top = 2 if kind is Kind.COMPLEX else 4
    powers = [operator_power(R, k) for k in range(top + 1)]
    basis = []
    # descending powers, alternating between J*R^k and R^k
    odd = parity == "odd"
    for k in range(top, -1, -1):
        with_j = (k % 2 == 0) == odd
        basis.append(Jop @ powers[k] if with_j else powers[k])
    return basis


def reduce_power(kind, R, Jop, p, tol=1e-9):
    """Fit R^p against the parity-matched reduction basis.

    Coefficients come from the minimum-norm least-squares solution on the
    flattened operators, so a rank-deficient basis (e.g. m = 0) is fine;
    the relative residual is what certifies the reduction.
    """
    kind = Kind(kind)
    if kind is Kind.REAL:
        raise ValueError("real curvature operators use real_power_closed_form")
    if p < MIN_POWER[kind]:
        raise ValueError(f"{kind.value} reduction is valid for p >= {MIN_POWER[kind]}, got {p}")
    parity = "odd" if p % 2 else "even"
    basis = reduction_basis(kind, R, Jop, parity)
    target = operator_power(R, p)
    coeffs, recon = _fit(basis, target)
    return PowerReduction(
        power=p,
        basis_labels=_labels(kind, parity),
        coefficients=coeffs,
        residual=relative_residual(target, recon),
    )


def _fit(basis, target):
    M = np.stack([B.ravel() for B in basis], axis=1)
    # column scaling keeps the SVD cutoff meaningful when powers differ in size
    scale = np.linalg.norm(M, axis=0)
    scale[scale == 0] = 1.0
    sol, *_ = np.linalg.lstsq(M / scale, target.ravel(), rcond=None)
    coeffs = sol / scale
    return coeffs, (M @ coeffs).reshape(target.shape)


def reconstruct(basis, coefficients):
    return sum(a * B for a, B in zip(coefficients, basis))


@dataclass
class TRecurrenceResult:
    kind: Kind
    b_sq: float
    m_sq: float
    residuals: dict = field(default_factory=dict)

    def passing(self, tol):
        return [name for name, r in self.residuals.items() if r <= tol]


def t_operator(spec, structures, X, Y):
    """T = S + S_hat, the curvature operator with its structure term removed (scaled by 4/c)."""
    S = sphere_type_operator(X, Y)
    for J in structures.ops:
        S = S + sphere_type_operator(J @ X, J @ Y)
    return S


def t_recurrence_residuals(spec, structures, X, Y):
    """Residuals of the cubic (complex) or quintic (quaternionic) identity for T.

    Complex:       T^3 = (m^2 - b^2) T + 2 m J T^2
    Quaternionic:  T^5 = -2 (b^2 + m^2) T^3 - q T, where q is (b^2 - m^2)^2
                   ("squared") or (b^2 - m^2) ("unsquared").
    """
    kind = spec.kind
    if kind is Kind.REAL:
        raise ValueError("the T recurrence applies to complex and quaternionic forms")
    inv = bivector_invariants(spec, structures, X, Y)
    T = t_operator(spec, structures, X, Y)
    T2 = T @ T
    T3 = T2 @ T
    out = TRecurrenceResult(kind=kind, b_sq=inv.b_sq, m_sq=inv.m_sq)
    if kind is Kind.COMPLEX:
        rhs = (inv.m_sq - inv.b_sq) * T + 2.0 * inv.m * structures.J @ T2
        out.residuals["complex_cubic"] = relative_residual(T3, rhs)
        return out
    T5 = T3 @ T2
    d = inv.b_sq - inv.m_sq
    head = -2.0 * (inv.b_sq + inv.m_sq) * T3
    out.residuals["prop31_squared"] = relative_residual(T5, head - d * d * T)
    out.residuals["prop31_unsquared"] = relative_residual(T5, head - d * T)
    return out


def verify_T_recurrence(spec, structures, X, Y, tol=1e-10, trial_id=0, seed=0, variant=None):
    """Report the T recurrence for one bivector.

    Quaternionic reports always carry both readings of the last coefficient.
    If ``variant`` ("squared" or "unsquared") is given, only that one gates
    the pass flag; otherwise both do. The complex cubic is filed as
    ``lemma12`` since it is the step that yields that reduction.
    """
    res = t_recurrence_residuals(spec, structures, X, Y)
    report = TrialReport(
        trial_id=trial_id, kind=spec.kind.value, dim=spec.dim, curvature=spec.curvature, seed=seed
    )
    report.details["b_sq"] = res.b_sq
    report.details["m_sq"] = res.m_sq
    if spec.kind is Kind.COMPLEX:
        report.add("lemma12", res.residuals["complex_cubic"], tol)
        return report
    for name in ("squared", "unsquared"):
        report.add(f"prop31_{name}", res.residuals[f"prop31_{name}"], tol, variant in (None, name))
    return report


# X = 2 e1, Y = e5 in dimension 8: b^2 = 4, m = 0, so the two readings differ by 12 T
PROP31_INSTANCE = {"dim": 8, "X": {0: 2.0}, "Y": {4: 1.0}}


def resolve_prop31(tol=1e-10, reject=1e-2, curvature=1.0):
    """Decide which reading of the last recurrence coefficient is correct.

    Returns ``(variant, residuals)``; ``variant`` is None unless exactly one
    reading is within ``tol`` and the other is at least ``reject``.
    """
    N = PROP31_INSTANCE["dim"]
    spec = SpaceFormSpec(Kind.QUATERNIONIC, N, curvature)
    structures = make_structures(spec)
    X, Y = np.zeros(N), np.zeros(N)
    for i, v in PROP31_INSTANCE["X"].items():
        X[i] = v
    for i, v in PROP31_INSTANCE["Y"].items():
        Y[i] = v
    residuals = t_recurrence_residuals(spec, structures, X, Y).residuals
    sq, unsq = residuals["prop31_squared"], residuals["prop31_unsquared"]
    variant = None
    if sq <= tol and unsq >= reject:
        variant = "squared"
    elif unsq <= tol and sq >= reject:
        variant = "unsquared"
    return variant, residuals
