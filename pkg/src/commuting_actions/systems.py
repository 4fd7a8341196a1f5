"""Continuous Lagrangians, Hamiltonians, discrete Lagrangians and the catalog.

Configuration spaces are flat: R^n, optionally with some coordinates
periodic (period 2*pi). Continuous Lagrangians are fields over
``x = (q, qdot)`` and discrete Lagrangians fields over ``x = (q0, q1)``,
both of length ``2n`` on the last axis.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .errors import InvalidParameter, SpecParseError, UnknownSystem
from .numerics import DifferentiableScalarField

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ConfigSpace:
    dimension: int
    periodic: tuple[bool, ...] = ()

    def __post_init__(self):
        if self.dimension < 1:
            raise InvalidParameter("configuration space dimension must be >= 1")
        if not self.periodic:
            object.__setattr__(self, "periodic", (False,) * self.dimension)
        elif len(self.periodic) != self.dimension:
            raise InvalidParameter("periodic flags must match the dimension")

    @property
    def mask(self) -> np.ndarray:
        return np.array(self.periodic, dtype=bool)

    def wrap_difference(self, d: np.ndarray) -> np.ndarray:
        """Reduce periodic components of a difference to (-pi, pi]."""
        if not any(self.periodic):
            return d
        wrapped = d - TWO_PI * np.ceil((d - math.pi) / TWO_PI)
        return np.where(self.mask, wrapped, d)

    def lift(self, q_from: np.ndarray, q_to: np.ndarray) -> np.ndarray:
        """Representative of ``q_to`` nearest to ``q_from`` on the universal cover."""
        q_from = np.asarray(q_from, dtype=float)
        q_to = np.asarray(q_to, dtype=float)
        return q_from + self.wrap_difference(q_to - q_from)


@dataclass(frozen=True)
class LagrangianSystem:
    """A continuous Lagrangian ``L(q, qdot)``.

    ``max_time`` guards against conjugate points (the critical path stops
    being a minimizer); ``domain`` rejects points where the Legendre map
    degenerates; ``velocity_guess(q, p)`` seeds Legendre inversion.
    """

    space: ConfigSpace
    L: DifferentiableScalarField
    name: str = "lagrangian"
    max_time: float = math.inf
    domain: Callable[[np.ndarray, np.ndarray], bool] | None = None
    velocity_guess: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None

    @property
    def n(self) -> int:
        return self.space.dimension

    def in_domain(self, q, qdot) -> bool:
        if self.domain is None:
            return True
        return bool(self.domain(np.asarray(q, dtype=float), np.asarray(qdot, dtype=float)))

    def __call__(self, q, qdot) -> float:
        return self.L.eval(np.concatenate([np.atleast_1d(q), np.atleast_1d(qdot)]).astype(float))


@dataclass(frozen=True)
class HamiltonianSystem:
    space: ConfigSpace
    H: DifferentiableScalarField
    name: str = "hamiltonian"

    @property
    def n(self) -> int:
        return self.space.dimension

    def __call__(self, q, p) -> float:
        return self.H.eval(np.concatenate([np.atleast_1d(q), np.atleast_1d(p)]).astype(float))


@dataclass(frozen=True)
class DiscreteLagrangian:
    """A two-point function ``Lambda(q0, q1)`` generating a symplectic map."""

    space: ConfigSpace
    Lam: DifferentiableScalarField
    name: str = "discrete"

    @property
    def n(self) -> int:
        return self.space.dimension

    def __call__(self, q0, q1) -> float:
        return self.Lam.eval(np.concatenate([np.atleast_1d(q0), np.atleast_1d(q1)]).astype(float))

    def d_q0(self, q0, q1) -> np.ndarray:
        x = np.concatenate([np.atleast_1d(q0), np.atleast_1d(q1)]).astype(float)
        return self.Lam.gradient(x)[: self.n]

    def d_q1(self, q0, q1) -> np.ndarray:
        x = np.concatenate([np.atleast_1d(q0), np.atleast_1d(q1)]).astype(float)
        return self.Lam.gradient(x)[self.n :]

    def hessian_blocks(self, q0, q1) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(d2/dq0dq0, d2/dq0dq1, d2/dq1dq1)``."""
        x = np.concatenate([np.atleast_1d(q0), np.atleast_1d(q1)]).astype(float)
        h = self.Lam.hessian(x)
        n = self.n
        return h[:n, :n], h[:n, n:], h[n:, n:]


# ---------------------------------------------------------------------------
# builtin fields


def _split(x: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    return x[..., :n], x[..., n:]


def _block_diag(x: np.ndarray, n: int, top: np.ndarray, bottom: np.ndarray) -> np.ndarray:
    """Batch of diagonal 2n x 2n matrices with the given diagonal halves."""
    out = np.zeros(x.shape + (2 * n,))
    idx = np.arange(n)
    out[..., idx, idx] = top
    out[..., n + idx, n + idx] = bottom
    return out


def _quadratic_lagrangian(n: int, mass: float, stiffness: float) -> DifferentiableScalarField:
    """``L = mass/2 |qdot|^2 - stiffness/2 |q|^2``."""

    def func(x):
        q, v = _split(x, n)
        return 0.5 * mass * np.sum(v * v, axis=-1) - 0.5 * stiffness * np.sum(q * q, axis=-1)

    def grad(x):
        q, v = _split(x, n)
        return np.concatenate([-stiffness * q, mass * v], axis=-1)

    def hess(x):
        q, v = _split(x, n)
        return _block_diag(x, n, np.full(q.shape, -stiffness), np.full(v.shape, mass))

    return DifferentiableScalarField(2 * n, func, grad, hess)


QUARTIC_MIN_SPEED = 1e-3


def _quartic_kinetic(n: int) -> DifferentiableScalarField:
    """``L = 3/4 sum |qdot_i|^(4/3)`` so that ``p = qdot^(1/3)``."""

    def func(x):
        _, v = _split(x, n)
        return 0.75 * np.sum(np.abs(v) ** (4.0 / 3.0), axis=-1)

    def grad(x):
        q, v = _split(x, n)
        return np.concatenate([np.zeros_like(q), np.sign(v) * np.abs(v) ** (1.0 / 3.0)], axis=-1)

    def hess(x):
        q, v = _split(x, n)
        with np.errstate(divide="ignore"):
            vv = np.abs(v) ** (-2.0 / 3.0) / 3.0
        return _block_diag(x, n, np.zeros_like(q), vv)

    return DifferentiableScalarField(2 * n, func, grad, hess)


def _discrete_quadratic(space: ConfigSpace, h: float, kick: float = 0.0) -> DifferentiableScalarField:
    """``Lambda = |q1 - q0|^2 / (2h) + kick * sum cos(q1_i)``."""
    n = space.dimension

    def func(x):
        q0, q1 = _split(x, n)
        d = space.wrap_difference(q1 - q0)
        return np.sum(d * d, axis=-1) / (2.0 * h) + kick * np.sum(np.cos(q1), axis=-1)

    def grad(x):
        q0, q1 = _split(x, n)
        d = space.wrap_difference(q1 - q0)
        return np.concatenate([-d / h, d / h - kick * np.sin(q1)], axis=-1)

    def hess(x):
        _, q1 = _split(x, n)
        out = np.zeros(x.shape + (2 * n,))
        idx = np.arange(n)
        out[..., idx, idx] = 1.0 / h
        out[..., n + idx, n + idx] = 1.0 / h - kick * np.cos(q1)
        out[..., idx, n + idx] = -1.0 / h
        out[..., n + idx, idx] = -1.0 / h
        return out

    return DifferentiableScalarField(2 * n, func, grad, hess)


# ---------------------------------------------------------------------------
# polynomial fields


@dataclass(frozen=True)
class PolynomialField:
    """Sum of monomials ``coef * prod_i x_i^e_i`` with exact derivatives."""

    exponents: np.ndarray  # (terms, m) nonnegative integers
    coefficients: np.ndarray  # (terms,)

    @property
    def dimension(self) -> int:
        return self.exponents.shape[1]

    def _monomials(self, x: np.ndarray, exps: np.ndarray) -> np.ndarray:
        # exponents < 0 mark terms that vanish after differentiation
        safe = np.maximum(exps, 0)
        vals = np.prod(x[..., None, :] ** safe, axis=-1)
        return np.where(np.all(exps >= 0, axis=-1), vals, 0.0)

    def value(self, x):
        return self._monomials(x, self.exponents) @ self.coefficients

    def gradient(self, x):
        m = self.dimension
        out = np.empty(np.shape(x))
        for i in range(m):
            e = self.exponents.copy()
            factor = e[:, i].astype(float)
            e[:, i] -= 1
            out[..., i] = self._monomials(x, e) @ (self.coefficients * factor)
        return out

    def hessian(self, x):
        m = self.dimension
        out = np.empty(np.shape(x) + (m,))
        for i in range(m):
            for j in range(i, m):
                e = self.exponents.copy()
                factor = e[:, i].astype(float)
                e[:, i] -= 1
                factor = factor * e[:, j]
                e[:, j] -= 1
                val = self._monomials(x, e) @ (self.coefficients * factor)
                out[..., i, j] = val
                out[..., j, i] = val
        return out

    def field(self) -> DifferentiableScalarField:
        return DifferentiableScalarField(self.dimension, self.value, self.gradient, self.hessian)


_COEF_NAME = re.compile(r"^c(?:_\d+)+$")


def polynomial_from_params(params: dict[str, float], n: int) -> PolynomialField:
    """Build a polynomial in ``2n`` variables from ``c_<e1>_..._<e2n>`` parameters."""
    exps, coefs = [], []
    for key in sorted(params):
        if not _COEF_NAME.match(key):
            raise SpecParseError(f"field 'params.{key}': polynomial coefficients are named c_<e1>_..._<e{2 * n}>")
        e = [int(tok) for tok in key.split("_")[1:]]
        if len(e) != 2 * n:
            raise SpecParseError(f"field 'params.{key}': expected {2 * n} exponents for dimension {n}")
        exps.append(e)
        coefs.append(float(params[key]))
    if not exps:
        raise SpecParseError("field 'params': polynomial system needs at least one coefficient")
    return PolynomialField(np.array(exps, dtype=int), np.array(coefs, dtype=float))


# ---------------------------------------------------------------------------
# system specs and the catalog


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    discrete: bool
    defaults: dict[str, float]
    description: str


CATALOG: dict[str, CatalogEntry] = {
    e.name: e
    for e in (
        CatalogEntry("free_particle", False, {"mass": 1.0}, "L = mass/2 |qdot|^2"),
        CatalogEntry(
            "harmonic",
            False,
            {"mass": 1.0, "omega": 1.0},
            "L = mass/2 |qdot|^2 - mass omega^2/2 |q|^2 (times guarded below 0.9 pi/omega)",
        ),
        CatalogEntry("quartic_kinetic", False, {}, "L = 3/4 sum |qdot_i|^(4/3), domain |qdot_i| >= 1e-3"),
        CatalogEntry("discrete_quadratic", True, {"h": 1.0}, "Lambda = |q1 - q0|^2 / (2h)"),
        CatalogEntry(
            "discrete_kicked",
            True,
            {"h": 1.0, "K": 0.3},
            "Lambda = |q1 - q0|^2 / (2h) + K sum cos(q1_i)",
        ),
    )
}

POLYNOMIAL_NAMES = {"lagrangian": False, "discrete": True}
SPEC_FIELDS = ("kind", "name", "params", "dimension", "periodic")


@dataclass(frozen=True)
class SystemSpec:
    kind: str
    name: str
    params: dict[str, float] = field(default_factory=dict)
    dimension: int = 1
    periodic: tuple[bool, ...] = ()

    @property
    def is_discrete(self) -> bool:
        if self.kind == "builtin":
            return CATALOG[self.name].discrete
        return POLYNOMIAL_NAMES[self.name]

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "name": self.name,
            "params": {k: self.params[k] for k in sorted(self.params)},
            "dimension": self.dimension,
            "periodic": list(self.periodic) if self.periodic else [False] * self.dimension,
        }


def spec_from_dict(doc: Any) -> SystemSpec:
    """Validate a decoded spec document and apply defaults."""
    if not isinstance(doc, dict):
        raise SpecParseError("system spec must be a JSON object")
    unknown = sorted(set(doc) - set(SPEC_FIELDS))
    if unknown:
        raise SpecParseError(f"field '{unknown[0]}': unknown field (allowed: {', '.join(SPEC_FIELDS)})")
    for required in ("kind", "name"):
        if required not in doc:
            raise SpecParseError(f"field '{required}': missing")
    kind, name = doc["kind"], doc["name"]
    if kind not in ("builtin", "polynomial"):
        raise SpecParseError(f"field 'kind': expected 'builtin' or 'polynomial', got {kind!r}")
    if not isinstance(name, str):
        raise SpecParseError("field 'name': expected a string")

    dimension = doc.get("dimension", 1)
    if isinstance(dimension, bool) or not isinstance(dimension, int) or dimension < 1:
        raise SpecParseError(f"field 'dimension': expected a positive integer, got {dimension!r}")

    params = doc.get("params", {})
    if not isinstance(params, dict):
        raise SpecParseError("field 'params': expected an object of named reals")
    for key, val in params.items():
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
            raise SpecParseError(f"field 'params.{key}': expected a finite real, got {val!r}")
    params = {k: float(v) for k, v in params.items()}

    periodic = doc.get("periodic", [False] * dimension)
    if not isinstance(periodic, list) or not all(isinstance(b, bool) for b in periodic):
        raise SpecParseError("field 'periodic': expected an array of booleans")
    if len(periodic) != dimension:
        raise SpecParseError(f"field 'periodic': expected {dimension} entries, got {len(periodic)}")

    if kind == "builtin":
        if name not in CATALOG:
            raise UnknownSystem(f"field 'name': unknown builtin system {name!r}")
        defaults = CATALOG[name].defaults
        extra = sorted(set(params) - set(defaults))
        if extra:
            raise SpecParseError(f"field 'params.{extra[0]}': not a parameter of {name}")
        params = {**defaults, **params}
    else:
        if name not in POLYNOMIAL_NAMES:
            raise SpecParseError("field 'name': polynomial systems are named 'lagrangian' or 'discrete'")
        if any(periodic):
            raise SpecParseError("field 'periodic': polynomial systems live on R^n")
        polynomial_from_params(params, dimension)  # validates names
    return SystemSpec(kind, name, params, dimension, tuple(periodic))


def parse_system_spec(text: str) -> SystemSpec:
    """Parse a JSON system-spec document.

    >>> parse_system_spec('{"kind": "builtin", "name": "harmonic"}').params
    {'mass': 1.0, 'omega': 1.0}
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecParseError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return spec_from_dict(doc)


def _positive(params: dict[str, float], *names: str) -> None:
    for key in names:
        if not params[key] > 0:
            raise InvalidParameter(f"parameter {key} must be positive, got {params[key]!r}")


def catalog_lookup(spec: SystemSpec) -> LagrangianSystem | DiscreteLagrangian:
    """Build the system described by ``spec``."""
    n = spec.dimension
    space = ConfigSpace(n, tuple(spec.periodic))
    p = spec.params
    if spec.kind == "polynomial":
        poly = polynomial_from_params(p, n).field()
        if POLYNOMIAL_NAMES[spec.name]:
            return DiscreteLagrangian(space, poly, name="polynomial_discrete")
        return LagrangianSystem(space, poly, name="polynomial_lagrangian")

    if spec.name not in CATALOG:
        raise UnknownSystem(f"unknown builtin system {spec.name!r}")
    p = {**CATALOG[spec.name].defaults, **p}
    if spec.name == "free_particle":
        _positive(p, "mass")
        mass = p["mass"]
        return LagrangianSystem(
            space,
            _quadratic_lagrangian(n, mass, 0.0),
            name="free_particle",
            velocity_guess=lambda q, pm: pm / mass,
        )
    if spec.name == "harmonic":
        _positive(p, "mass", "omega")
        mass, omega = p["mass"], p["omega"]
        return LagrangianSystem(
            space,
            _quadratic_lagrangian(n, mass, mass * omega * omega),
            name="harmonic",
            max_time=0.9 * math.pi / omega,
            velocity_guess=lambda q, pm: pm / mass,
        )
    if spec.name == "quartic_kinetic":
        return LagrangianSystem(
            space,
            _quartic_kinetic(n),
            name="quartic_kinetic",
            domain=lambda q, v: bool(np.all(np.abs(v) >= QUARTIC_MIN_SPEED)),
            velocity_guess=lambda q, pm: np.asarray(pm, dtype=float).copy(),
        )
    if spec.name == "discrete_quadratic":
        _positive(p, "h")
        return DiscreteLagrangian(space, _discrete_quadratic(space, p["h"]), name="discrete_quadratic")
    if spec.name == "discrete_kicked":
        _positive(p, "h")
        return DiscreteLagrangian(space, _discrete_quadratic(space, p["h"], p["K"]), name="discrete_kicked")
    raise UnknownSystem(f"unknown builtin system {spec.name!r}")  # pragma: no cover


def builtin(name: str, dimension: int = 1, periodic: tuple[bool, ...] = (), **params: float):
    """Shorthand for ``catalog_lookup`` on a builtin system."""
    doc = {"kind": "builtin", "name": name, "params": params, "dimension": dimension}
    if periodic:
        doc["periodic"] = list(periodic)
    return catalog_lookup(spec_from_dict(doc))
