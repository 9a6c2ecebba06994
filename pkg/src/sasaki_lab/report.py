"""Trial reports, the check-name registry, seeding and atomic file output."""

import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

CHECK_NAMES = (
    "table16",
    "table20",
    "identities21",
    "prop31_squared",
    "prop31_unsquared",
    "lemma11",
    "lemma12",
    "lemma13",
    "eq6",
    "eq10",
    "eq14",
    "vanishing_tail",
    "constancy",
    "rank_bound",
    "conservation",
    "ode_vs_closed_form",
)

OUTPUT_DIR_ENV = "SASAKI_LAB_OUTPUT_DIR"


@dataclass
class Check:
    """One named check. ``asserted=False`` checks are recorded but do not gate exit codes."""

    name: str
    residual: float
    tol: float
    asserted: bool = True

    def __post_init__(self):
        if self.name not in CHECK_NAMES:
            raise ValueError(f"unknown check name {self.name!r}")
        self.residual = float(self.residual)

    @property
    def passed(self):
        return bool(self.residual <= self.tol)

    def to_json(self):
        return {
            "name": self.name,
            "residual": self.residual,
            "tol": self.tol,
            "pass": self.passed,
            "asserted": self.asserted,
        }


@dataclass
class TrialReport:
    trial_id: int
    kind: str
    dim: int
    curvature: float
    seed: int
    bundle: str | None = None
    rho: float | None = None
    checks: list = field(default_factory=list)
    profile: dict | None = None
    status: str = "ok"
    details: dict = field(default_factory=dict)

    def add(self, name, residual, tol, asserted=True):
        self.checks.append(Check(name, residual, tol, asserted))

    @property
    def passed(self):
        return all(c.passed for c in self.checks if c.asserted)

    def check(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self):
        return {
            "trial_id": self.trial_id,
            "kind": self.kind,
            "bundle": self.bundle,
            "dim": self.dim,
            "curvature": self.curvature,
            "rho": self.rho,
            "seed": self.seed,
            "status": self.status,
            "pass": self.passed,
            "checks": [c.to_json() for c in self.checks],
            "profile": self.profile,
            "details": _plain(self.details),
        }


def derive_seed(master, *keys):
    """Stable 32-bit seed from the master seed and integer keys (cell, trial, ...)."""
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1)[0])


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def dumps(doc):
    return json.dumps(_plain(doc), indent=2, sort_keys=True, allow_nan=False) + "\n"


def atomic_write(path, text):
    """Write ``text`` to ``path`` via a temporary file in the same directory and a rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def resolve_output(path, default_name):
    """Explicit path wins; otherwise ``default_name`` in $SASAKI_LAB_OUTPUT_DIR (or the cwd)."""
    if path:
        return path
    return os.path.join(os.environ.get(OUTPUT_DIR_ENV, "."), default_name)
