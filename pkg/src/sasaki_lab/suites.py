"""
Verification suites shared by the command line and the acceptance tests.

A suite turns a configuration and a seed into ``TrialReport`` objects.
Nothing here holds state between calls, so trials can be farmed out to
worker processes and merged in (cell, trial) order.
"""

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    Kind,
    SpaceFormSpec,
    bivector_invariants,
    curvature_operator,
    identities21_entries,
    identities21_variants,
    make_structures,
    relative_residual,
    structure_operator,
    table16_entries,
    table20_entries,
)
from .frenet import (
    RANK_BOUND,
    constancy_check,
    curvature_profile,
    linear_relation_check,
    rank_excess,
    span_rank,
    vanishing_tail_check,
)
from .geodesics import (
    BundleKind,
    closed_form_state,
    closed_form_trajectory,
    conserved_quantities,
    derivative_stack,
    generator_operator,
    initial_state,
    integrate_rk4,
    max_state_error,
    random_initial,
)
from .recurrence import (
    MIN_POWER,
    operator_power,
    real_power_closed_form,
    reduce_power,
    resolve_prop31,
    t_recurrence_residuals,
)
from .report import TrialReport, derive_seed

DEFAULT_TOLERANCES = {
    "table16": 1e-10,
    "table20": 1e-10,
    "identities21": 1e-10,
    "prop31_squared": 1e-10,
    "prop31_unsquared": 1e-10,
    "lemma11": 1e-10,
    "lemma12": 1e-9,
    "lemma13": 1e-9,
    "eq6": 1e-10,
    "eq10": 1e-9,
    "eq14": 1e-9,
    "vanishing_tail": 1e-8,
    "constancy": 1e-9,
    "rank_bound": 1e-8,
    "conservation": 1e-9,
    "ode_vs_closed_form": 1e-9,
}

MAX_POWER = 12
# derivative count used for the rank test
RANK_STACK = {Kind.REAL: 8, Kind.COMPLEX: 12, Kind.QUATERNIONIC: 14}
# curvatures k1..k_G expected to be nonzero for generic umbilical data
GENERIC_COUNT = {Kind.REAL: 2, Kind.COMPLEX: 5, Kind.QUATERNIONIC: 9}
GENERIC_THRESHOLD = 1e-6
GENERIC_FRACTION = 0.95
SAMPLE_SIGMAS = (0.0, 0.25, 0.5, 0.75, 1.0)
RELATION_CHECK = {Kind.REAL: "eq6", Kind.COMPLEX: "eq10", Kind.QUATERNIONIC: "eq14"}


def tolerances(overrides=None):
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(overrides or {})
    return tol


# -- operator and recurrence suite ------------------------------------------


def lemma_trial(spec, seed, trial_id=0, tol=None, prop31_variant="squared"):
    """All operator-level checks for one random bivector (X, Y)."""
    tol = tolerances(tol)
    structures = make_structures(spec)
    rng = np.random.default_rng(seed)
    X = rng.standard_normal(spec.dim)
    Y = rng.standard_normal(spec.dim)
    R = curvature_operator(spec, structures, X, Y)
    inv = bivector_invariants(spec, structures, X, Y)
    report = TrialReport(
        trial_id=trial_id, kind=spec.kind.value, dim=spec.dim, curvature=spec.curvature, seed=seed
    )
    report.details["b_sq"] = inv.b_sq
    report.details["m_sq"] = inv.m_sq

    if spec.kind is Kind.REAL:
        worst = max(
            relative_residual(
                real_power_closed_form(R, inv.b_sq, spec.curvature, p), operator_power(R, p)
            )
            for p in range(1, MAX_POWER + 1)
        )
        report.add("lemma11", worst, tol["lemma11"])
        return report

    Jop = structure_operator(spec, structures, X, Y)
    powers = range(MIN_POWER[spec.kind], (8 if spec.kind is Kind.COMPLEX else MAX_POWER) + 1)
    reductions = {p: reduce_power(spec.kind, R, Jop, p).residual for p in powers}
    t_res = t_recurrence_residuals(spec, structures, X, Y).residuals

    if spec.kind is Kind.COMPLEX:
        table = {lbl: relative_residual(a, b) for lbl, a, b in table16_entries(structures, X, Y)}
        report.add("table16", max(table.values()), tol["table16"])
        report.add("lemma12", max(max(reductions.values()), t_res["complex_cubic"]), tol["lemma12"])
        report.details["lemma12"] = {"reductions": reductions, "complex_cubic": t_res["complex_cubic"]}
        return report

    table = {lbl: relative_residual(a, b) for lbl, a, b in table20_entries(structures, X, Y)}
    ident = {lbl: relative_residual(a, b) for lbl, a, b in identities21_entries(structures, X, Y)}
    report.add("table20", max(table.values()), tol["table20"])
    report.add("identities21", max(ident.values()), tol["identities21"])
    report.details["identities21_variants"] = identities21_variants(structures, X, Y)
    for name in ("squared", "unsquared"):
        key = f"prop31_{name}"
        report.add(key, t_res[key], tol[key], asserted=(prop31_variant == name))
    report.details["prop31_variant"] = prop31_variant
    report.add("lemma13", max(reductions.values()), tol["lemma13"])
    report.details["lemma13"] = {"reductions": reductions}
    return report


def verify_lemmas(spec, trials, seed, tol=None):
    """Run ``lemma_trial`` ``trials`` times; also resolves the recurrence variant first."""
    tol = tolerances(tol)
    variant, residuals = resolve_prop31(tol["prop31_squared"])
    reports = [
        lemma_trial(spec, derive_seed(seed, 0, t), t, tol, variant or "squared")
        for t in range(trials)
    ]
    summary = {
        "prop31_resolution": {"variant": variant, "residuals": residuals},
        "all_pass": all(r.passed for r in reports) and variant is not None,
    }
    return reports, summary


# -- geodesic / Frenet suite --------------------------------------------------


def derivative_count(spec, max_derivative=None):
    return max_derivative or max(spec.dim, RANK_STACK[spec.kind], 11)


def geodesic_trial(
    spec,
    bundle,
    rho,
    seed,
    trial_id=0,
    tol=None,
    init=None,
    max_derivative=None,
    sample_sigmas=SAMPLE_SIGMAS,
):
    """Frenet analysis of one projected geodesic, computed on the exact flow."""
    tol = tolerances(tol)
    bundle = BundleKind(bundle)
    structures = make_structures(spec)
    if init is None:
        init = random_initial(spec, bundle, rho, seed)
    report = TrialReport(
        trial_id=trial_id,
        kind=spec.kind.value,
        dim=spec.dim,
        curvature=spec.curvature,
        seed=seed,
        bundle=bundle.value,
        rho=init.rho,
    )
    states = [closed_form_state(spec, structures, bundle, init, s) for s in sample_sigmas]
    cons = conserved_quantities(spec, structures, states)
    report.add("conservation", max(cons["max_deviation"].values()), tol["conservation"])
    report.details["conservation"] = cons["max_deviation"]

    speed = math.sqrt(max(1.0 - init.rho**2, 0.0))
    if speed == 0 or np.linalg.norm(init.u0) == 0:
        report.status = "degenerate"
        return report

    A = generator_operator(spec, structures, initial_state(init))
    count = derivative_count(spec, max_derivative)
    derivs = derivative_stack(A, init.u0, count)
    profile = curvature_profile(derivs[: spec.dim], speed, tol["vanishing_tail"])
    report.profile = profile.to_json()
    report.details["raw_curvatures"] = profile.raw
    report.details["first_zero_index"] = profile.first_zero_index

    tail = vanishing_tail_check(profile, spec.kind, tol["vanishing_tail"])
    report.add("vanishing_tail", tail.max_tail, tol["vanishing_tail"])

    stack = derivs[: RANK_STACK[spec.kind]]
    bound = RANK_BOUND[spec.kind]
    report.add("rank_bound", rank_excess(stack, bound, tol["rank_bound"]), tol["rank_bound"])
    report.details["rank"] = span_rank(stack, tol["rank_bound"])

    inv = bivector_invariants(spec, structures, init.eta0, init.xi0)
    rel = linear_relation_check(derivs, spec.kind, inv.b_sq, spec.curvature, 0.0)
    name = RELATION_CHECK[spec.kind]
    report.add(name, rel.residual, tol[name])
    report.details[name] = rel.coefficients

    const = constancy_check(
        spec, structures, bundle, init, list(sample_sigmas), tol["constancy"], spec.dim, tol["vanishing_tail"]
    )
    # a change of Frenet rank between samples is a hard failure
    residual = const.max_deviation if len(set(const.ranks)) == 1 else max(1.0, const.max_deviation)
    report.add("constancy", residual, tol["constancy"])
    report.details["derivative_norm_spread"] = const.derivative_norm_deviation

    g = GENERIC_COUNT[spec.kind]
    report.details["generic"] = all(profile.k(i) > GENERIC_THRESHOLD for i in range(1, g + 1))
    return report


# -- sweeps -------------------------------------------------------------------


class ConfigError(ValueError):
    pass


@dataclass
class SweepConfig:
    kinds: list
    dims: dict
    curvatures: list
    rhos: list
    bundles: list
    trials: int = 1
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    output: str | None = None
    jobs: int = 1

    @classmethod
    def from_json(cls, doc):
        if not isinstance(doc, dict):
            raise ConfigError("sweep config must be a JSON object")
        known = {"kinds", "dims", "curvatures", "rhos", "bundles", "trials", "seed", "tolerances", "output", "jobs"}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            kinds = [Kind(k) for k in doc["kinds"]]
            dims = doc["dims"]
            if isinstance(dims, list):
                dims = {k.value: list(dims) for k in kinds}
            dims = {Kind(k).value: [int(n) for n in v] for k, v in dims.items()}
            cfg = cls(
                kinds=kinds,
                dims=dims,
                curvatures=[float(c) for c in doc["curvatures"]],
                rhos=[float(r) for r in doc["rhos"]],
                bundles=[BundleKind(b) for b in doc["bundles"]],
                trials=int(doc.get("trials", 1)),
                seed=int(doc.get("seed", 0)),
                tolerances=dict(doc.get("tolerances", {})),
                output=doc.get("output"),
                jobs=int(doc.get("jobs", 1)),
            )
        except KeyError as exc:
            raise ConfigError(f"missing config key {exc}") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        cfg.validate()
        return cfg

    def validate(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ConfigError(f"unknown tolerance names: {sorted(unknown)}")
        for r in self.rhos:
            if not 0.0 <= r <= 1.0:
                raise ConfigError(f"rho must lie in [0, 1], got {r}")
        cells = self.cells()
        if not cells:
            raise ConfigError("the sweep has no cells")

    def cells(self):
        """Ordered list of (spec, bundle, rho); raises ConfigError on an invalid space form."""
        out = []
        for kind in self.kinds:
            for dim in self.dims.get(kind.value, []):
                for c in self.curvatures:
                    try:
                        spec = SpaceFormSpec(kind, dim, c)
                    except ValueError as exc:
                        raise ConfigError(str(exc)) from None
                    for bundle, rho in itertools.product(self.bundles, self.rhos):
                        out.append((spec, bundle, rho))
        return out


def _run_cell_trial(args):
    spec, bundle, rho, seed, trial_id, tol = args
    return geodesic_trial(spec, bundle, rho, seed, trial_id, tol)


def run_sweep(cfg):
    """Run every (cell, trial); returns ``(rows, aggregate)`` with rows in (cell, trial) order."""
    tol = tolerances(cfg.tolerances)
    jobs = []
    for ci, (spec, bundle, rho) in enumerate(cfg.cells()):
        for t in range(cfg.trials):
            jobs.append((ci, (spec, bundle, rho, derive_seed(cfg.seed, ci, t), t, tol)))
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            reports = list(pool.map(_run_cell_trial, [a for _, a in jobs], chunksize=16))
    else:
        reports = [_run_cell_trial(a) for _, a in jobs]
    rows = [(ci, r) for (ci, _), r in zip(jobs, reports)]
    return rows, aggregate(rows)


def aggregate(rows):
    max_res, failures = {}, {}
    generic = {}
    for _, r in rows:
        for c in r.checks:
            if not c.asserted:
                continue
            max_res[c.name] = max(max_res.get(c.name, 0.0), c.residual)
            failures[c.name] = failures.get(c.name, 0) + (not c.passed)
        if r.status == "ok" and r.rho is not None and 0.0 < r.rho < 1.0:
            hits, total = generic.get(r.kind, (0, 0))
            generic[r.kind] = (hits + bool(r.details.get("generic")), total + 1)
    fractions = {k: h / n for k, (h, n) in generic.items()}
    return {
        "trials": len(rows),
        "max_residual": max_res,
        "failures": failures,
        "generic_fraction": fractions,
        "generic_ok": all(f >= GENERIC_FRACTION for f in fractions.values()),
        "all_pass": all(r.passed for _, r in rows) and all(f >= GENERIC_FRACTION for f in fractions.values()),
    }


CSV_MAX_K = 12


def csv_header():
    return ["kind", "dim", "c", "rho", "bundle", "trial"] + [f"k{i}" for i in range(1, CSV_MAX_K + 1)] + [
        "first_zero_index",
        "all_pass",
    ]


def csv_row(report):
    ks = []
    n_computed = len(report.details.get("raw_curvatures", []))
    curv = (report.profile or {}).get("curvatures", [])
    for i in range(1, CSV_MAX_K + 1):
        if i <= len(curv):
            ks.append(repr(float(curv[i - 1])))
        elif i <= n_computed:
            ks.append("0.0")
        else:
            ks.append("")
    fz = report.details.get("first_zero_index")
    return [
        report.kind,
        str(report.dim),
        repr(float(report.curvature)),
        repr(float(report.rho)),
        report.bundle,
        str(report.trial_id),
        *ks,
        "" if fz is None else str(fz),
        "true" if report.passed else "false",
    ]


# -- integrator cross-check ---------------------------------------------------


def convergence_order(steps, errors):
    """Least-squares slope of log(error) against log(step)."""
    x = np.log(np.asarray(steps, dtype=float))
    y = np.log(np.asarray(errors, dtype=float))
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


# truncation error must clear roundoff by this much for an order estimate to mean anything
ORDER_FLOOR = 1e-12


def crosscheck(spec, bundle, rho, seed, sigma_max=1.0, steps=(1e-2, 5e-3, 2.5e-3), tol=None, init=None):
    """RK4 against the exact flow for each step size, with the observed order."""
    tol = tolerances(tol)
    bundle = BundleKind(bundle)
    structures = make_structures(spec)
    if init is None:
        init = random_initial(spec, bundle, rho, seed)
    rows = []
    for h in steps:
        rk = integrate_rk4(spec, structures, bundle, init, sigma_max, h)
        exact = closed_form_trajectory(spec, structures, bundle, init, sigma_max, h)
        cons = conserved_quantities(spec, structures, rk)["max_deviation"]
        rows.append({"step": h, "max_state_error": max_state_error(rk, exact), "conservation": cons})
    errors = [r["max_state_error"] for r in rows]
    resolvable = len(steps) >= 2 and min(errors) > ORDER_FLOOR
    order = convergence_order(steps, errors) if resolvable else None
    return {
        "kind": spec.kind.value,
        "dim": spec.dim,
        "curvature": spec.curvature,
        "bundle": bundle.value,
        "rho": init.rho,
        "seed": seed,
        "sigma_max": sigma_max,
        "steps": rows,
        "order": order,
        "order_resolvable": resolvable,
        "order_ok": (order is None) or (3.9 <= order <= 4.1),
    }
