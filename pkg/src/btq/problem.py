"""Problem configuration: one JSON document describing field, algebra, order and prime.

Validation happens in two layers: pydantic checks the shape, then
:func:`build` checks the arithmetic (coprimality, splitting, discriminants)
before any tree computation starts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from .equiv import ArithmeticContext
from .field import (
    FieldError,
    IdealData,
    NumberField,
    PrimeIdeal,
    PrimeSite,
    field_by_label,
    principalize,
    site_from_root,
)
from .quatalg import (
    QuatOrder,
    QuaternionAlgebra,
    QuaternionError,
    algebra_from_discriminant,
    eichler_order,
    hilbert_symbol,
    maximal_order,
    order_from_basis,
    standard_order,
)


class ConfigError(ValueError):
    """Invalid problem description (exit code 2 on the command line)."""


Coords = list[Union[int, str]]


class FieldSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")
    label: str = ""
    poly: list[int]
    integral_basis: Optional[list[Coords]] = None
    disc: Optional[int] = None
    automorphisms: list[Coords] = []
    index_primes: list[dict] = []


class PrimeFactorSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")
    p: int
    gen: Coords
    exp: int = 1


class IdealSpec(BaseModel):
    """An ideal by generators or by explicit prime factors."""

    model_config = ConfigDict(extra="forbid")
    gens: Optional[list[Coords]] = None
    factors: Optional[list[PrimeFactorSpec]] = None


class AlgebraSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")
    a: Coords
    b: Coords


class OrderSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")
    kind: Literal["maximal", "level", "basis"] = "maximal"
    level: Optional[Union[int, IdealSpec]] = None
    basis: Optional[list[list[Coords]]] = None

    @model_validator(mode="after")
    def _consistent(self) -> "OrderSpec":
        if self.kind == "level" and self.level is None:
            raise ValueError("order kind 'level' needs a level")
        if self.kind == "basis" and not self.basis:
            raise ValueError("order kind 'basis' needs a basis")
        if self.kind != "level" and self.level is not None:
            raise ValueError("a level is only allowed with order kind 'level'")
        return self


class PrimeSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")
    p: int
    r: int
    d: Optional[int] = None
    delta: Optional[Coords] = None


class Options(BaseModel):
    model_config = ConfigDict(extra="forbid")
    max_genus: Optional[int] = None
    zeta_bound: int = 10**6
    seed: int = 0
    precision_cap: int = 64
    max_d: int = 12

    @field_validator("precision_cap")
    @classmethod
    def _cap(cls, v: int) -> int:
        if v < 8:
            raise ValueError("precision_cap must be at least 8")
        return v


class ProblemConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    field: Union[str, FieldSpec]
    algebra: Optional[AlgebraSpec] = None
    Nminus: Optional[Union[int, IdealSpec]] = None
    order: OrderSpec = OrderSpec()
    prime: PrimeSpec
    options: Options = Options()


def load_config(path: str | Path) -> ProblemConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(raw)


def parse_config(raw: Any) -> ProblemConfig:
    try:
        return ProblemConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------- resolution


def resolve_field(spec: Union[str, FieldSpec]) -> NumberField:
    try:
        if isinstance(spec, str):
            return field_by_label(spec)
        return NumberField.from_table_entry(spec.model_dump())
    except (FieldError, ValueError, KeyError, IndexError) as exc:
        raise ConfigError(f"invalid field: {exc}") from exc


def resolve_ideal(F: NumberField, spec: Union[int, IdealSpec, None]) -> IdealData:
    if spec is None:
        return IdealData.unit()
    if isinstance(spec, int):
        if spec < 1:
            raise ConfigError("ideal given by an integer must be positive")
        return F.ideal([F(spec)]).factor()
    if spec.factors is not None:
        facs = []
        for f in spec.factors:
            q = find_prime(F, f.p, F(f.gen))
            facs.append((q, f.exp))
        return IdealData.from_factors(F, facs)
    if spec.gens:
        return F.ideal([F(g) for g in spec.gens]).factor()
    raise ConfigError("ideal needs 'gens' or 'factors'")


def find_prime(F: NumberField, p: int, gen) -> PrimeIdeal:
    target = F.ideal([F(p), F(gen)])
    for q in F.primes_above(p):
        if q.ideal == target:
            return q
    raise ConfigError(f"({p}, {gen!r}) is not a prime ideal of the field")


@dataclass
class Problem:
    """Everything a tree computation needs, fully checked."""

    config: ProblemConfig
    field: NumberField
    algebra: QuaternionAlgebra
    N_minus: IdealData
    N_plus: IdealData
    order: QuatOrder
    site: PrimeSite
    context: ArithmeticContext

    def describe(self) -> dict:
        F = self.field
        return {
            "field": F.label or list(F.poly),
            "prime": self.site.to_json(),
            "Nminus": self.N_minus.to_json(),
            "Nplus": self.N_plus.to_json(),
            "algebra": {"a": self.algebra.a.to_json(), "b": self.algebra.b.to_json()},
        }


def build(cfg: ProblemConfig) -> Problem:
    F = resolve_field(cfg.field)
    try:
        N_minus = resolve_ideal(F, cfg.Nminus)
        N_plus = resolve_ideal(F, cfg.order.level) if cfg.order.kind == "level" else IdealData.unit()
        site = site_from_root(F, cfg.prime.p, cfg.prime.r)
    except FieldError as exc:
        raise ConfigError(str(exc)) from exc
    q = site.prime
    if N_minus.valuation(q) or N_plus.valuation(q):
        raise ConfigError("the prime must not divide the discriminant or the level")
    if not N_minus.coprime_to(N_plus):
        raise ConfigError("discriminant and level must be coprime")
    if not N_minus.is_squarefree():
        raise ConfigError("discriminant must be squarefree")
    try:
        if cfg.algebra is not None:
            B = QuaternionAlgebra(F, F(cfg.algebra.a), F(cfg.algebra.b))
            B = _integral_presentation(B)
            ram = IdealData.from_factors(F, [(r, 1) for r in B.ram_finite])
            if cfg.Nminus is not None and ram != N_minus:
                raise ConfigError(f"algebra ramifies at {ram}, not at the stated discriminant {N_minus}")
            N_minus = ram
        else:
            B = algebra_from_discriminant(F, N_minus)
    except QuaternionError as exc:
        raise ConfigError(str(exc)) from exc
    if not B.is_definite:
        raise ConfigError("algebra must be totally definite")
    if hilbert_symbol(B.a, B.b, q) != 1:
        raise ConfigError("algebra does not split at the prime")
    try:
        if cfg.order.kind == "basis":
            R = order_from_basis(B, cfg.order.basis)
            want = B.discriminant * N_plus
            if R.discriminant != want:
                raise ConfigError(f"supplied order has discriminant {R.discriminant}, expected {want}")
        else:
            Rmax = maximal_order(standard_order(B))
            R = eichler_order(Rmax, N_plus) if N_plus.factors else Rmax
    except QuaternionError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.prime.d is not None and cfg.prime.delta is not None:
        delta = F(cfg.prime.delta)
        if q.valuation(delta) != cfg.prime.d or abs(delta.norm()) != cfg.prime.p ** cfg.prime.d:
            raise ConfigError("delta does not generate the d-th power of the prime")
        site = site.with_generator(cfg.prime.d, delta)
    else:
        try:
            site = principalize(site, cfg.options.max_d)
        except FieldError as exc:
            raise ConfigError(str(exc)) from exc
    ctx = ArithmeticContext(R, site, N_cap=cfg.options.precision_cap)
    return Problem(cfg, F, B, N_minus, N_plus, R, site, ctx)


def _integral_presentation(B: QuaternionAlgebra) -> QuaternionAlgebra:
    a, b = B.a, B.b
    da, db = a.denominator(), b.denominator()
    if da == 1 and db == 1:
        return B
    return QuaternionAlgebra(B.field, a * da * da, b * db * db)
