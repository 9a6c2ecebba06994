"""
Curvature operators of real, complex and quaternionic space forms.

Every tangent vector is a length-N component array in a fixed parallel
orthonormal frame, and every linear map is a dense N x N ``numpy`` array.
The complex and quaternionic structures are the standard block models:
J rotates the coordinate pairs (2k-1, 2k), and J1, J2, J3 act on each
4-block (1, i, j, k) as left multiplication by i, j, k.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .report import TrialReport


class DimensionError(ValueError):
    """Raised when a dimension is incompatible with the requested object."""


class Kind(str, Enum):
    REAL = "real"
    COMPLEX = "complex"
    QUATERNIONIC = "quaternionic"


@dataclass(frozen=True)
class SpaceFormSpec:
    """Which space form: family, real dimension and (nonzero) curvature."""

    kind: Kind
    dim: int
    curvature: float

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if int(self.dim) != self.dim or self.dim < 1:
            raise DimensionError(f"dimension must be a positive integer, got {self.dim}")
        if self.curvature == 0 or not np.isfinite(self.curvature):
            raise ValueError("curvature must be finite and nonzero")
        if self.kind is Kind.REAL and self.dim < 2:
            raise DimensionError("real space form needs dim >= 2")
        if self.kind is Kind.COMPLEX and self.dim % 2:
            raise DimensionError(f"complex space form needs even dim, got {self.dim}")
        if self.kind is Kind.QUATERNIONIC and self.dim % 4:
            raise DimensionError(f"quaternionic space form needs dim divisible by 4, got {self.dim}")


@dataclass(frozen=True)
class StructureSet:
    """Parallel structure operators: none, ``(J,)`` or ``(J1, J2, J3)``."""

    kind: Kind
    ops: tuple

    @property
    def J(self):
        if self.kind is not Kind.COMPLEX:
            raise AttributeError("J is only defined for complex structures")
        return self.ops[0]


@dataclass(frozen=True)
class BivectorInvariants:
    b_sq: float
    m: float = 0.0
    m1: float = 0.0
    m2: float = 0.0
    m3: float = 0.0
    m_sq: float = 0.0
    Jscript: np.ndarray | None = None


def make_complex_structure(N):
    """Standard complex structure: e_{2k-1} -> e_{2k}, e_{2k} -> -e_{2k-1}."""
    if N < 2 or N % 2:
        raise DimensionError(f"complex structure needs even N >= 2, got {N}")
    J = np.zeros((N, N))
    for k in range(0, N, 2):
        J[k + 1, k] = 1.0
        J[k, k + 1] = -1.0
    return J


# left multiplication by i, j, k on the basis (1, i, j, k); column = image of basis vector
_QI = np.array([[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]], dtype=float)
_QJ = np.array([[0, 0, -1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, -1, 0, 0]], dtype=float)
_QK = np.array([[0, 0, 0, -1], [0, 0, -1, 0], [0, 1, 0, 0], [1, 0, 0, 0]], dtype=float)


def make_quaternionic_structures(N):
    """Return ``(J1, J2, J3)`` acting blockwise as left multiplication by i, j, k."""
    if N < 4 or N % 4:
        raise DimensionError(f"quaternionic structure needs N divisible by 4, got {N}")
    eye = np.eye(N // 4)
    return tuple(np.kron(eye, q) for q in (_QI, _QJ, _QK))


def make_structures(spec):
    if spec.kind is Kind.REAL:
        ops = ()
    elif spec.kind is Kind.COMPLEX:
        ops = (make_complex_structure(spec.dim),)
    else:
        ops = make_quaternionic_structures(spec.dim)
    return StructureSet(spec.kind, ops)


def _check_vectors(N, *vectors):
    out = []
    for v in vectors:
        v = np.asarray(v, dtype=float)
        if v.shape != (N,):
            raise DimensionError(f"expected a vector of length {N}, got shape {v.shape}")
        out.append(v)
    return out


def sphere_type_operator(X, Y):
    """Matrix of ``Z -> <Y, Z> X - <X, Z> Y``."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape != Y.shape or X.ndim != 1:
        raise DimensionError(f"shape mismatch: {X.shape} vs {Y.shape}")
    return np.outer(X, Y) - np.outer(Y, X)


def _check_structures(spec, structures):
    if structures.kind is not spec.kind:
        raise ValueError(f"structures are {structures.kind.value}, space form is {spec.kind.value}")
    for op in structures.ops:
        if op.shape != (spec.dim, spec.dim):
            raise DimensionError(f"structure operator of shape {op.shape} for dim {spec.dim}")


def curvature_operator(spec, structures, X, Y):
    """Dense matrix of the curvature operator ``Z -> R(X, Y) Z`` of the space form.

    Real:          R = c S
    Complex:       R = c/4 (S + S_hat + 2 m J),           m = <X, J Y>
    Quaternionic:  R = c/4 (S + S1 + S2 + S3 + 2 Jscript), Jscript = sum m_i J_i
    """
    _check_structures(spec, structures)
    X, Y = _check_vectors(spec.dim, X, Y)
    c = spec.curvature
    S = sphere_type_operator(X, Y)
    if spec.kind is Kind.REAL:
        return c * S
    T = S.copy()
    extra = np.zeros_like(S)
    for J in structures.ops:
        T += sphere_type_operator(J @ X, J @ Y)
        extra += (X @ J @ Y) * J
    return 0.25 * c * (T + 2.0 * extra)


def bivector_invariants(spec, structures, X, Y):
    _check_structures(spec, structures)
    X, Y = _check_vectors(spec.dim, X, Y)
    b_sq = max((X @ X) * (Y @ Y) - (X @ Y) ** 2, 0.0)
    if spec.kind is Kind.REAL:
        return BivectorInvariants(b_sq=b_sq)
    if spec.kind is Kind.COMPLEX:
        m = float(X @ structures.J @ Y)
        return BivectorInvariants(b_sq=b_sq, m=m, m_sq=m * m, Jscript=m * structures.J)
    m1, m2, m3 = (float(X @ J @ Y) for J in structures.ops)
    Jscript = m1 * structures.ops[0] + m2 * structures.ops[1] + m3 * structures.ops[2]
    return BivectorInvariants(
        b_sq=b_sq, m1=m1, m2=m2, m3=m3, m_sq=m1 * m1 + m2 * m2 + m3 * m3, Jscript=Jscript
    )


def structure_operator(spec, structures, X, Y):
    """The operator commuting with R that drives the reductions: J (complex) or Jscript."""
    if spec.kind is Kind.COMPLEX:
        return structures.J
    if spec.kind is Kind.QUATERNIONIC:
        return bivector_invariants(spec, structures, X, Y).Jscript
    raise ValueError("real space forms carry no structure operator")


def relative_residual(lhs, rhs):
    """``|lhs - rhs|_F / max(1, |lhs|_F, |rhs|_F)``."""
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    scale = max(1.0, np.linalg.norm(lhs), np.linalg.norm(rhs))
    return float(np.linalg.norm(lhs - rhs) / scale)


def random_vector(rng, N):
    return rng.standard_normal(N)


def _sphere_family(structures, X, Y):
    S = sphere_type_operator(X, Y)
    return S, [sphere_type_operator(J @ X, J @ Y) for J in structures.ops]


def table16_entries(structures, X, Y):
    """``(label, row @ col, tabulated value)`` for the complex products of S, S_hat, J."""
    J = structures.J
    S, (Sh,) = _sphere_family(structures, X, Y)
    m = X @ J @ Y
    E = np.eye(len(X))
    b_sq = (X @ X) * (Y @ Y) - (X @ Y) ** 2
    T = S + Sh
    return [
        ("S*S", S @ S, S @ S),
        ("S*Sh", S @ Sh, m * J @ Sh),
        ("S*J", S @ J, J @ Sh),
        ("Sh*S", Sh @ S, m * J @ S),
        ("Sh*Sh", Sh @ Sh, Sh @ Sh),
        ("Sh*J", Sh @ J, J @ S),
        ("J*S", J @ S, J @ S),
        ("J*Sh", J @ Sh, J @ Sh),
        ("J*J", J @ J, -E),
        ("S^3", S @ S @ S, -b_sq * S),
        ("Sh^3", Sh @ Sh @ Sh, -b_sq * Sh),
        ("J*T-T*J", J @ T, T @ J),
    ]


def table20_entries(structures, X, Y):
    """``(label, row @ col, tabulated value)`` for the quaternionic products of S, S_i, J_i."""
    Js = structures.ops
    S, Ss = _sphere_family(structures, X, Y)
    m = [X @ J @ Y for J in Js]
    E = np.eye(len(X))
    b_sq = (X @ X) * (Y @ Y) - (X @ Y) ** 2
    # the index i' with J_i J_j = +-J_i'
    third = {(0, 1): 2, (1, 0): 2, (0, 2): 1, (2, 0): 1, (1, 2): 0, (2, 1): 0}
    ops = {"S": S, "S1": Ss[0], "S2": Ss[1], "S3": Ss[2], "J1": Js[0], "J2": Js[1], "J3": Js[2]}
    table = {}
    for i in range(3):
        table["S", f"S{i + 1}"] = m[i] * Js[i] @ Ss[i]
        table[f"S{i + 1}", "S"] = m[i] * Js[i] @ S
        table["S", f"J{i + 1}"] = Js[i] @ Ss[i]
        table[f"J{i + 1}", "S"] = Ss[i] @ Js[i]
        table[f"S{i + 1}", f"J{i + 1}"] = Js[i] @ S
        table[f"J{i + 1}", f"S{i + 1}"] = S @ Js[i]
        table[f"J{i + 1}", f"J{i + 1}"] = -E
        table[f"S{i + 1}", f"S{i + 1}"] = Ss[i] @ Ss[i]
    table["S", "S"] = S @ S
    for i in range(3):
        for j in range(3):
            if i == j:
                continue
            k = third[i, j]
            # S_i S_j = -m_k J_k S_j
            table[f"S{i + 1}", f"S{j + 1}"] = -m[k] * Js[k] @ Ss[j]
            # S_i J_j = J_j S_k,  J_j S_i = S_k J_j
            table[f"S{i + 1}", f"J{j + 1}"] = Js[j] @ Ss[k]
            table[f"J{j + 1}", f"S{i + 1}"] = Ss[k] @ Js[j]
            # J_i J_j = +J_k for cyclic (i, j), -J_k otherwise
            sign = 1.0 if (j - i) % 3 == 1 else -1.0
            table[f"J{i + 1}", f"J{j + 1}"] = sign * Js[k]
    entries = [(f"{r}*{c}", ops[r] @ ops[c], val) for (r, c), val in table.items()]
    Jscript = sum(mi * J for mi, J in zip(m, Js))
    T = S + sum(Ss)
    m_sq = sum(mi * mi for mi in m)
    entries += [(f"S{i + 1}^3", Ss[i] @ Ss[i] @ Ss[i], -b_sq * Ss[i]) for i in range(3)]
    entries += [
        ("S^3", S @ S @ S, -b_sq * S),
        ("Jscript^2", Jscript @ Jscript, -m_sq * E),
        ("T*Jscript-Jscript*T", T @ Jscript, Jscript @ T),
    ]
    return entries


def identities21_entries(structures, X, Y):
    """Auxiliary quaternionic products, keyed by label.

    The first identity is taken as ``S S_hat = S Jscript``; the form printed
    with ``S_hat S_hat`` on the left is evaluated separately by
    ``identities21_variants`` and does not hold.
    """
    Js = structures.ops
    S, Ss = _sphere_family(structures, X, Y)
    m = [X @ J @ Y for J in Js]
    Jc = sum(mi * J for mi, J in zip(m, Js))
    Sh = sum(Ss)
    Q = sum(A @ A for A in Ss)
    m_sq = sum(mi * mi for mi in m)
    b_sq = (X @ X) * (Y @ Y) - (X @ Y) ** 2
    return [
        ("S*Sh = S*Jc", S @ Sh, S @ Jc),
        ("Sh*S = Jc*S", Sh @ S, Jc @ S),
        ("S*Jc*S = -m^2 S", S @ Jc @ S, -m_sq * S),
        ("S*Sh*Jc = -m^2 S", S @ Sh @ Jc, -m_sq * S),
        ("S*Q = S^2*Jc", S @ Q, S @ S @ Jc),
        ("Sh*S^2 = Jc*S^2", Sh @ S @ S, Jc @ S @ S),
        ("Sh*S*Jc = Jc*S*Jc", Sh @ S @ Jc, Jc @ S @ Jc),
        ("Sh*Jc*S = Jc*S^2", Sh @ Jc @ S, Jc @ S @ S),
        ("Sh^2 = Q - Sh*Jc + Jc*S", Sh @ Sh, Q - Sh @ Jc + Jc @ S),
        ("Sh*Q = -b^2 Sh - Q*Jc + Jc*S^2", Sh @ Q, -b_sq * Sh - Q @ Jc + Jc @ S @ S),
    ]


def identities21_variants(structures, X, Y):
    """Residuals of competing readings of two auxiliary identities, for the record."""
    Js = structures.ops
    S, Ss = _sphere_family(structures, X, Y)
    m = [X @ J @ Y for J in Js]
    Jc = sum(mi * J for mi, J in zip(m, Js))
    Sh = sum(Ss)
    Q = sum(A @ A for A in Ss)
    b_sq = (X @ X) * (Y @ Y) - (X @ Y) ** 2
    return {
        "Sh*Sh = S*Jc": relative_residual(Sh @ Sh, S @ Jc),
        "S*Sh = S*Jc": relative_residual(S @ Sh, S @ Jc),
        "Sh*Q = -b^2 Sh - Q*Jc + Jc*S^2": relative_residual(Sh @ Q, -b_sq * Sh - Q @ Jc + Jc @ S @ S),
        "Sh*Q = -b^2 Sh + Q*Jc + Jc*S^2": relative_residual(Sh @ Q, -b_sq * Sh + Q @ Jc + Jc @ S @ S),
    }


def _max_by_label(entries, worst):
    for label, lhs, rhs in entries:
        worst[label] = max(worst.get(label, 0.0), relative_residual(lhs, rhs))


def verify_operator_tables(spec, structures, trials=100, tol=1e-10, seed=0, trial_id=0):
    """Check the product tables (and, for quaternionic forms, the auxiliary identities)
    on ``trials`` random bivectors. Returns one ``TrialReport`` with the worst residuals."""
    if spec.kind is Kind.REAL:
        raise ValueError("operator tables exist for complex and quaternionic forms only")
    _check_structures(spec, structures)
    rng = np.random.default_rng(seed)
    table_worst, ident_worst, variants = {}, {}, {}
    for _ in range(trials):
        X = random_vector(rng, spec.dim)
        Y = random_vector(rng, spec.dim)
        if spec.kind is Kind.COMPLEX:
            _max_by_label(table16_entries(structures, X, Y), table_worst)
        else:
            _max_by_label(table20_entries(structures, X, Y), table_worst)
            _max_by_label(identities21_entries(structures, X, Y), ident_worst)
            for k, v in identities21_variants(structures, X, Y).items():
                variants[k] = max(variants.get(k, 0.0), v)
    report = TrialReport(
        trial_id=trial_id, kind=spec.kind.value, dim=spec.dim, curvature=spec.curvature, seed=seed
    )
    name = "table16" if spec.kind is Kind.COMPLEX else "table20"
    report.add(name, max(table_worst.values()), tol)
    report.details[name] = table_worst
    if spec.kind is Kind.QUATERNIONIC:
        report.add("identities21", max(ident_worst.values()), tol)
        report.details["identities21"] = ident_worst
        report.details["identities21_variants"] = {
            k: {"residual": v, "holds": v <= tol} for k, v in variants.items()
        }
    return report
