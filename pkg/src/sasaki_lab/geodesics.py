"""
Projected geodesics of the Sasaki metric on TM and T1M over a space form.

Everything lives in an orthonormal frame parallel along the projected
curve. In that frame the geodesic system becomes the linear ODE

    u'   = R(eta, xi) u
    xi'  = eta
    eta' = 0            (TM)
    eta' = -rho^2 xi    (T1M)

with u the components of the curve velocity and (xi, eta) those of the
vector field and its covariant derivative. The bivector eta ^ xi is a
constant of motion, so the generator R(eta, xi) is a constant matrix and
the exact flow is a matrix exponential.
"""

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .algebra import (
    DimensionError,
    Kind,
    SpaceFormSpec,
    curvature_operator,
)


class BundleKind(str, Enum):
    TM = "tm"
    T1M = "t1m"


@dataclass(frozen=True)
class InitialData:
    u0: np.ndarray
    xi0: np.ndarray
    eta0: np.ndarray
    rho: float

    def to_json(self, spec, bundle):
        return {
            "kind": spec.kind.value,
            "bundle": BundleKind(bundle).value,
            "dim": spec.dim,
            "curvature": spec.curvature,
            "rho": self.rho,
            "u0": self.u0.tolist(),
            "xi0": self.xi0.tolist(),
            "eta0": self.eta0.tolist(),
        }

    @classmethod
    def from_json(cls, doc):
        """Return ``(spec, bundle, init)`` from a document written by ``to_json``."""
        spec = SpaceFormSpec(Kind(doc["kind"]), int(doc["dim"]), float(doc["curvature"]))
        bundle = BundleKind(doc["bundle"])
        init = cls(
            u0=np.asarray(doc["u0"], dtype=float),
            xi0=np.asarray(doc["xi0"], dtype=float),
            eta0=np.asarray(doc["eta0"], dtype=float),
            rho=float(doc["rho"]),
        )
        for name in ("u0", "xi0", "eta0"):
            if getattr(init, name).shape != (spec.dim,):
                raise DimensionError(f"{name} must have length {spec.dim}")
        return spec, bundle, init


def save_initial(path, spec, bundle, init):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(init.to_json(spec, bundle), fh, indent=2)


def load_initial(path):
    with open(path, encoding="utf-8") as fh:
        return InitialData.from_json(json.load(fh))


@dataclass(frozen=True)
class GeodesicState:
    sigma: float
    u: np.ndarray
    xi: np.ndarray
    eta: np.ndarray

    def as_vector(self):
        return np.concatenate([self.u, self.xi, self.eta])


def random_initial(spec, bundle, rho, seed):
    """Gaussian initial data with Sasaki unit speed ``|u0|^2 + |eta0|^2 = 1``.

    ``xi0`` is normalised to unit length for both bundles. For T1M ``eta0``
    is additionally projected orthogonal to ``xi0``.
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    bundle = BundleKind(bundle)
    rng = np.random.default_rng(seed)
    N = spec.dim
    u0 = rng.standard_normal(N)
    xi0 = rng.standard_normal(N)
    eta0 = rng.standard_normal(N)
    xi0 /= np.linalg.norm(xi0)
    if bundle is BundleKind.T1M:
        eta0 -= (eta0 @ xi0) * xi0
    eta0 *= rho / np.linalg.norm(eta0)
    u0 *= math.sqrt(max(1.0 - rho * rho, 0.0)) / np.linalg.norm(u0)
    return InitialData(u0=u0, xi0=xi0, eta0=eta0, rho=float(rho))


def initial_state(init):
    return GeodesicState(0.0, init.u0.copy(), init.xi0.copy(), init.eta0.copy())


def generator_operator(spec, structures, state):
    """``R(eta, xi)``, the constant matrix with ``u' = A u``."""
    return curvature_operator(spec, structures, state.eta, state.xi)


def derivative_stack(A, u, count):
    """``[u, A u, ..., A^(count-1) u]``: components of the first ``count`` curve derivatives."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    out = [np.asarray(u, dtype=float)]
    for _ in range(count - 1):
        out.append(A @ out[-1])
    return out


def expm(A, tol=1e-16):
    """Matrix exponential by scaling and squaring a truncated Taylor series."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    norm = np.linalg.norm(A, 1)
    squarings = max(0, int(math.ceil(math.log2(norm / 0.5)))) if norm > 0.5 else 0
    B = A / 2.0**squarings
    result = np.eye(n)
    term = np.eye(n)
    # |B| <= 1/2, so 0.5^k / k! falls under tol well before k = 30
    for k in range(1, 30):
        term = term @ B / k
        result = result + term
        if np.linalg.norm(term, 1) <= tol * np.linalg.norm(result, 1):
            break
    for _ in range(squarings):
        result = result @ result
    return result


def _rhs(spec, structures, bundle, rho_sq):
    def f(y):
        N = spec.dim
        u, xi, eta = y[:N], y[N : 2 * N], y[2 * N :]
        du = curvature_operator(spec, structures, eta, xi) @ u
        deta = np.zeros(N) if bundle is BundleKind.TM else -rho_sq * xi
        return np.concatenate([du, eta, deta])

    return f


def integrate_rk4(spec, structures, bundle, init, sigma_max=1.0, step=1e-3):
    """Classical RK4 on the full first-order system; no constraint projection.

    The generator is re-evaluated from the current (xi, eta) at every stage,
    so drift in the bivector shows up in the result rather than being hidden.
    Returns a list of ``GeodesicState`` from 0 to ``sigma_max``.
    """
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    if sigma_max < 0:
        raise ValueError(f"sigma_max must be nonnegative, got {sigma_max}")
    bundle = BundleKind(bundle)
    N = spec.dim
    n_steps = int(round(sigma_max / step))
    if not math.isclose(n_steps * step, sigma_max, rel_tol=1e-9, abs_tol=1e-12):
        raise ValueError("sigma_max must be an integer multiple of step")
    f = _rhs(spec, structures, bundle, init.rho**2)
    y = initial_state(init).as_vector()
    traj = [initial_state(init)]
    for i in range(1, n_steps + 1):
        k1 = f(y)
        k2 = f(y + 0.5 * step * k1)
        k3 = f(y + 0.5 * step * k2)
        k4 = f(y + step * k3)
        y = y + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        traj.append(GeodesicState(i * step, y[:N].copy(), y[N : 2 * N].copy(), y[2 * N :].copy()))
    return traj


def closed_form_state(spec, structures, bundle, init, sigma):
    bundle = BundleKind(bundle)
    if sigma == 0:
        return initial_state(init)
    rho = init.rho
    if bundle is BundleKind.TM or rho == 0:
        xi = init.xi0 + sigma * init.eta0
        eta = init.eta0.copy()
    else:
        cs, sn = math.cos(rho * sigma), math.sin(rho * sigma)
        xi = cs * init.xi0 + (sn / rho) * init.eta0
        eta = -rho * sn * init.xi0 + cs * init.eta0
    A = curvature_operator(spec, structures, init.eta0, init.xi0)
    u = expm(sigma * A) @ init.u0
    return GeodesicState(float(sigma), u, xi, eta)


def closed_form_trajectory(spec, structures, bundle, init, sigma_max=1.0, step=1e-3):
    n_steps = int(round(sigma_max / step))
    return [closed_form_state(spec, structures, bundle, init, i * step) for i in range(n_steps + 1)]


def state_invariants(spec, structures, state):
    """Quantities that are constant along an exact trajectory."""
    xi, eta, u = state.xi, state.eta, state.u
    out = {
        "speed_u": float(np.linalg.norm(u)),
        "speed_eta": float(np.linalg.norm(eta)),
        "unit_speed": float(u @ u + eta @ eta),
        "b_sq": float((eta @ eta) * (xi @ xi) - (eta @ xi) ** 2),
    }
    for i, J in enumerate(structures.ops, start=1):
        key = "m" if spec.kind is Kind.COMPLEX else f"m{i}"
        out[key] = float(eta @ J @ xi)
    return out


def conserved_quantities(spec, structures, trajectory):
    """Per-state invariants and their maximum deviation from the initial values."""
    if not trajectory:
        raise ValueError("empty trajectory")
    rows = [state_invariants(spec, structures, s) for s in trajectory]
    A0 = generator_operator(spec, structures, trajectory[0])
    deviation = {k: max(abs(r[k] - rows[0][k]) for r in rows) for k in rows[0]}
    deviation["generator"] = max(
        float(np.linalg.norm(generator_operator(spec, structures, s) - A0)) for s in trajectory
    )
    return {"values": rows, "max_deviation": deviation}


def max_state_error(traj_a, traj_b):
    return max(float(np.max(np.abs(a.as_vector() - b.as_vector()))) for a, b in zip(traj_a, traj_b))
