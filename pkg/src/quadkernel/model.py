"""Model definitions, stability checks and JSON config ingestion.

Two families of models are handled:

* :class:`ContinuousModel` -- a reflected Brownian motion in the quadrant,
  given by its covariance ``sigma``, drift ``mu`` and reflection matrix
  ``refl`` (columns are the reflection directions on the two axes).
* :class:`DiscreteModel` -- a piecewise homogeneous nearest-neighbour walk on
  the quarter lattice with four families of jump probabilities.

Matrix entries follow ordinary row/column indexing: ``refl[i, j]`` is
``r_{i+1, j+1}`` and the reflection vector of axis ``k`` is ``refl[:, k]``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping

import jsonschema
import numpy as np

from .errors import ConfigError, ModelInvalidError

MARGINAL_TOL = 1e-12
FAMILY_SUM_TOL = 1e-12

Jump = tuple[int, int]


def _frozen(a, shape) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.shape != shape:
        raise ModelInvalidError(f"expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ModelInvalidError("non-finite entry")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ContinuousModel:
    sigma: np.ndarray
    mu: np.ndarray
    refl: np.ndarray = field(default_factory=lambda: np.eye(2))
    name: str = ""

    def __post_init__(self):
        sigma = _frozen(self.sigma, (2, 2))
        if abs(sigma[0, 1] - sigma[1, 0]) > 1e-12 * max(1.0, np.abs(sigma).max()):
            raise ModelInvalidError("sigma must be symmetric")
        if sigma[0, 0] <= 0 or np.linalg.det(sigma) <= 0:
            raise ModelInvalidError("sigma must be positive definite")
        refl = _frozen(self.refl, (2, 2))
        if np.any(np.all(refl == 0, axis=0)):
            raise ModelInvalidError("reflection columns must be nonzero")
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "mu", _frozen(self.mu, (2,)))
        object.__setattr__(self, "refl", refl)

    @property
    def s11(self) -> float:
        return float(self.sigma[0, 0])

    @property
    def s22(self) -> float:
        return float(self.sigma[1, 1])

    @property
    def s12(self) -> float:
        return float(self.sigma[0, 1])

    @property
    def orthogonal(self) -> bool:
        return bool(np.array_equal(self.refl, np.eye(2)))

    def swapped(self) -> "ContinuousModel":
        """The same process with the roles of the two coordinates exchanged."""
        p = np.array([[0.0, 1.0], [1.0, 0.0]])
        return ContinuousModel(p @ self.sigma @ p, self.mu[::-1], p @ self.refl @ p,
                               name=self.name + "~" if self.name else "")

    def to_dict(self) -> dict:
        return {"type": "continuous", "sigma": self.sigma.tolist(),
                "mu": self.mu.tolist(), "refl": self.refl.tolist()}

    def __repr__(self):
        tag = f"{self.name}: " if self.name else ""
        return (f"ContinuousModel({tag}sigma={self.sigma.tolist()}, "
                f"mu={self.mu.tolist()}, refl={self.refl.tolist()})")


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    condition_values: tuple[float, float, float, float, float]
    drift_sign: tuple[int, int]
    marginal: bool = False


def validate_continuous(model: ContinuousModel) -> StabilityReport:
    """Evaluate the five strict inequalities for existence of a stationary law.

    The conditions are ``r11 > 0``, ``r22 > 0``, ``det R > 0``,
    ``r22 mu1 - r12 mu2 < 0`` and ``r11 mu2 - r21 mu1 < 0``. Values within
    ``MARGINAL_TOL`` of zero set ``marginal`` and make the model unstable.
    """
    (r11, r12), (r21, r22) = model.refl
    m1, m2 = model.mu
    vals = (float(r11), float(r22), float(r11 * r22 - r12 * r21),
            float(r22 * m1 - r12 * m2), float(r11 * m2 - r21 * m1))
    signs = (1, 1, 1, -1, -1)
    marginal = any(abs(v) <= MARGINAL_TOL for v in vals)
    stable = not marginal and all(s * v > 0 for s, v in zip(signs, vals))
    return StabilityReport(stable, vals, (int(np.sign(m1)), int(np.sign(m2))), marginal)


# ---------------------------------------------------------------------------
# Discrete walks
# ---------------------------------------------------------------------------

FAMILIES = ("interior", "hwall", "vwall", "origin")


def _allowed(family: str, jump: Jump) -> bool:
    i, j = jump
    if not (-1 <= i <= 1 and -1 <= j <= 1):
        return False
    if family == "hwall":
        return j >= 0
    if family == "vwall":
        return i >= 0
    if family == "origin":
        return i >= 0 and j >= 0
    return True


def _reflect_family(interior: Mapping[Jump, float], family: str) -> dict[Jump, float]:
    # blocked jumps become a stay
    out: dict[Jump, float] = {}
    for jump, p in interior.items():
        key = jump if _allowed(family, jump) else (0, 0)
        out[key] = out.get(key, 0.0) + p
    return {k: v for k, v in out.items() if v != 0.0}


@dataclass(frozen=True)
class DiscreteModel:
    """Jump probabilities of a walk on the quarter lattice, stored sparsely.

    ``hwall`` holds the jumps from the horizontal axis ``{j = 0, i >= 1}``,
    ``vwall`` from the vertical axis ``{i = 0, j >= 1}``. Missing boundary
    families default to the interior law with blocked jumps turned into stays.
    """
    interior: Mapping[Jump, float]
    hwall: Mapping[Jump, float] | None = None
    vwall: Mapping[Jump, float] | None = None
    origin: Mapping[Jump, float] | None = None
    name: str = ""

    def __post_init__(self):
        inner = {tuple(k): float(v) for k, v in self.interior.items() if v != 0}
        object.__setattr__(self, "interior", inner)
        for fam in FAMILIES[1:]:
            given = getattr(self, fam)
            fam_map = (_reflect_family(inner, fam) if given is None
                       else {tuple(k): float(v) for k, v in given.items() if v != 0})
            object.__setattr__(self, fam, fam_map)

    def family(self, name: str) -> dict[Jump, float]:
        return getattr(self, name)

    def p(self, i: int, j: int) -> float:
        return self.interior.get((i, j), 0.0)

    @property
    def is_simple(self) -> bool:
        """No diagonal interior jumps."""
        return all(self.p(i, j) == 0 for i in (-1, 1) for j in (-1, 1))

    def drift(self) -> tuple[float, float]:
        return (sum(i * p for (i, _), p in self.interior.items()),
                sum(j * p for (_, j), p in self.interior.items()))

    def to_dict(self) -> dict:
        def enc(m):
            return {f"{i},{j}": v for (i, j), v in sorted(m.items())}
        return {"type": "discrete", **{f: enc(self.family(f)) for f in FAMILIES}}


@dataclass(frozen=True)
class DiscreteReport:
    sums: dict[str, float]
    drift: tuple[float, float]
    simple: bool


def validate_discrete(model: DiscreteModel) -> DiscreteReport:
    sums = {}
    for fam in FAMILIES:
        probs = model.family(fam)
        for jump, p in probs.items():
            if p < 0 or p > 1:
                raise ModelInvalidError(f"{fam}[{jump}] = {p} outside [0, 1]")
            if not _allowed(fam, jump):
                raise ModelInvalidError(f"{fam} jump {jump} leaves the quadrant")
        total = math.fsum(probs.values())
        if abs(total - 1.0) > FAMILY_SUM_TOL:
            raise ModelInvalidError(f"{fam} probabilities sum to {total!r}, not 1")
        sums[fam] = total
    return DiscreteReport(sums, model.drift(), model.is_simple)


# ---------------------------------------------------------------------------
# Reference models
# ---------------------------------------------------------------------------

def M1() -> ContinuousModel:
    return ContinuousModel(np.eye(2), [-1.0, -1.0], name="M1")


def M2() -> ContinuousModel:
    return ContinuousModel(np.eye(2), [-2.0, -1.0], name="M2")


def M3() -> ContinuousModel:
    return ContinuousModel([[1.0, -0.5], [-0.5, 1.0]], [-1.0, -1.0], name="M3")


def D1(**boundary) -> DiscreteModel:
    inner = {(1, 0): 0.1, (-1, 0): 0.4, (0, 1): 0.1, (0, -1): 0.4}
    return DiscreteModel(inner, name="D1", **boundary)


REFERENCE_MODELS = {"M1": M1, "M2": M2, "M3": M3, "D1": D1}


# ---------------------------------------------------------------------------
# Config ingestion
# ---------------------------------------------------------------------------

_NUM = {"type": "number"}
_VEC2 = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}
_MAT2 = {"type": "array", "items": _VEC2, "minItems": 2, "maxItems": 2}
_FAMILY = {"type": "object",
           "patternProperties": {r"^-?[01],-?[01]$": {"type": "number", "minimum": 0}},
           "additionalProperties": False}

SCHEMA = {
    "type": "object",
    "required": ["type"],
    "properties": {"type": {"enum": ["continuous", "discrete"]}},
    "allOf": [
        {"if": {"properties": {"type": {"const": "continuous"}}},
         "then": {"required": ["sigma", "mu"],
                  "properties": {"type": {}, "name": {"type": "string"},
                                 "sigma": _MAT2, "mu": _VEC2, "refl": _MAT2},
                  "additionalProperties": False}},
        {"if": {"properties": {"type": {"const": "discrete"}}},
         "then": {"required": ["interior"],
                  "properties": {"type": {}, "name": {"type": "string"},
                                 **{f: _FAMILY for f in FAMILIES}},
                  "additionalProperties": False}},
    ],
}


def _jump_key(s: str) -> Jump:
    i, j = s.split(",")
    return int(i), int(j)


def load_model(document: str | Mapping) -> ContinuousModel | DiscreteModel:
    """Build a validated model from JSON text (or an already decoded mapping).

    Raises :class:`ConfigError` on parse or schema problems; the error names
    the offending field path. Unstable continuous models are accepted (the
    report is available from :func:`validate_continuous`); a malformed
    discrete family is rejected.
    """
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"JSON parse error at line {exc.lineno} column {exc.colno}: {exc.msg}")
    else:
        doc = dict(document)
    if not isinstance(doc, dict):
        raise ConfigError("top level must be an object")
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = "/".join(str(p) for p in err.absolute_path)
        msg = err.message
        if err.validator == "required":
            missing = msg.split("'")[1]
            path = f"{path}/{missing}" if path else missing
        raise ConfigError(msg, path=path or "<root>")
    name = doc.get("name", "")
    try:
        if doc["type"] == "continuous":
            return ContinuousModel(doc["sigma"], doc["mu"], doc.get("refl", np.eye(2)), name=name)
        fams = {f: {_jump_key(k): v for k, v in doc[f].items()} for f in FAMILIES if f in doc}
        model = DiscreteModel(name=name, **fams)
        validate_discrete(model)
        return model
    except ModelInvalidError as exc:
        raise ConfigError(str(exc), path="<model>") from exc
