"""Enumerate uniformization data (p, N-, N+) of bounded genus and compute their quotient graphs.

Pipeline per field: candidate data from the area bound, automorphism dedup,
then one fundamental domain per surviving datum with an early genus exit.
Rows go to a JSONL file in canonical candidate order; a summary JSON holds
the count matrix by (degree, genus).
"""

from __future__ import annotations

import json
import math
import multiprocessing
import time
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Iterable, Iterator, Optional

from pydantic import BaseModel, ConfigDict, field_validator

from .equiv import ArithmeticContext
from .field import (
    FieldError,
    IdealData,
    NumberField,
    PrimeIdeal,
    load_table,
    principalize,
    site_from_prime,
    table_entries,
    zeta2_lower,
    zeta2_upper,
)
from .fundom import LimitExceeded, fundamental_domain
from .quatalg import algebra_from_discriminant, eichler_order, maximal_order, standard_order

TWO_PI = 2 * math.pi
# relative slack for float evaluation of the transcendental factors
_EPS = 1e-12


# ---------------------------------------------------------------- bounds


def _volume_factor(F: NumberField) -> float:
    """d_F^(3/2) / (2 pi)^(2n)."""
    return F.disc ** 1.5 / TWO_PI ** (2 * F.n)


def C_F(F: NumberField, zeta_bound: int = 10**6) -> float:
    """(3/16) d_F^(3/2) zeta_F(2) / (2 pi)^(2n), rounded down."""
    return 3 / 16 * _volume_factor(F) * zeta2_lower(F, zeta_bound) * (1 - _EPS)


def area(F: NumberField, pN_minus: IdealData, N_plus: IdealData, zeta2: float) -> float:
    """4 / (2 pi)^(2n) d_F^(3/2) zeta2 Phi(p N-) Psi(N+)."""
    return 4 * _volume_factor(F) * zeta2 * float(pN_minus.phi() * N_plus.psi())


def area_bounds(F: NumberField, pN_minus: IdealData, N_plus: IdealData, zeta_bound: int = 10**6) -> tuple[float, float]:
    """Lower and upper bounds for the area, with zeta_F(2) enclosed by partial Euler products."""
    lo = area(F, pN_minus, N_plus, zeta2_lower(F, zeta_bound)) * (1 - _EPS)
    hi = area(F, pN_minus, N_plus, zeta2_upper(F, zeta_bound)) * (1 + _EPS)
    return lo, hi


def sz_bound(g: int) -> float:
    """Area bound 64/3 (g + 1) for a curve of genus g."""
    return 64 / 3 * (g + 1)


def passes_field_bound(F: NumberField, g_max: int) -> bool:
    """4 d_F^(3/2) / (2 pi)^(2n) < 64/3 (g+1), keeping values within rounding of the bound."""
    return 4 * _volume_factor(F) * (1 - _EPS) < sz_bound(g_max)


def field_candidates(g_max: int, entries: Iterable[dict], degrees: tuple[int, int] = (2, 2)) -> list[NumberField]:
    out = []
    for e in entries:
        n = len(e["poly"]) - 1
        if not degrees[0] <= n <= degrees[1]:
            continue
        # cheap pre-check from the stated discriminant before building the field
        if "disc" in e and 4 * abs(int(e["disc"])) ** 1.5 / TWO_PI ** (2 * n) * (1 - _EPS) >= sz_bound(g_max):
            continue
        F = NumberField.from_table_entry(e)
        if passes_field_bound(F, g_max):
            out.append(F)
    out.sort(key=lambda F: (F.n, F.disc, F.label))
    return out


def smallest_split_prime(F: NumberField, limit: int = 10**5) -> PrimeIdeal:
    """The degree-one unramified prime of least norm."""
    p = 2
    while p < limit:
        if all(p % k for k in range(2, math.isqrt(p) + 1)):
            for q in F.primes_above(p):
                if q.is_degree_one():
                    return q
        p += 1
    raise FieldError("no split prime below the search limit")


# ---------------------------------------------------------------- candidates


@dataclass(frozen=True)
class Candidate:
    field: NumberField
    prime: PrimeIdeal
    N_minus: IdealData
    N_plus: IdealData

    def key(self) -> str:
        return serialize_key(self.field.label, self.prime, self.N_minus, self.N_plus)


def _prime_ser(q: PrimeIdeal) -> list:
    return [q.norm, q.p, [list(r) for r in q.hnf]]


def _ideal_ser(I: IdealData) -> list:
    return [[_prime_ser(q), e] for q, e in I.factors]


def serialize_key(label: str, q: PrimeIdeal, N_minus: IdealData, N_plus: IdealData) -> str:
    return json.dumps([label, _prime_ser(q), _ideal_ser(N_minus), _ideal_ser(N_plus)], separators=(",", ":"))


@dataclass
class CandidateReport:
    candidates: list[Candidate]
    merged: int = 0
    incomplete: list[str] = dc_field(default_factory=list)


def candidate_data(F: NumberField, g_max: int, zeta_bound: int = 10**6) -> list[Candidate]:
    """All (p, N-, N+) for F whose area bound allows genus <= g_max, in canonical order."""
    if g_max < 0:
        raise ValueError("g_max must be nonnegative")
    C = C_F(F, zeta_bound)
    G = g_max + 1
    q0 = smallest_split_prime(F)
    bound_plus = G / (C * (q0.norm - 1))
    # Psi(N+) >= N(N+), so the norm bound below is only a superset
    plus_list = [I for I in _ideals_up_to(F, bound_plus) if float(I.psi()) < bound_plus]
    out: list[Candidate] = []
    for N_plus in plus_list:
        bound_p = G / (C * float(N_plus.psi()))
        for q in F.prime_ideals_up_to(math.floor(bound_p + 1)):
            if not q.is_degree_one() or N_plus.valuation(q) or q.norm - 1 > bound_p:
                continue
            bound_minus = G / (C * (q.norm - 1) * float(N_plus.psi()))
            excluded = set(N_plus.primes()) | {q}
            pool = [r for r in F.prime_ideals_up_to(math.floor(bound_minus + 1)) if r not in excluded and r.norm - 1 <= bound_minus]
            for N_minus in _squarefree_products(F, pool, bound_minus, F.n % 2):
                out.append(Candidate(F, q, N_minus, N_plus))
    out.sort(key=lambda c: c.key())
    return out


def _ideals_up_to(F: NumberField, X: float) -> list[IdealData]:
    from .field import enumerate_ideals

    return enumerate_ideals(F, math.floor(X)) if X >= 1 else []


def _squarefree_products(F: NumberField, pool: list[PrimeIdeal], bound: float, parity: int) -> Iterator[IdealData]:
    """Products of distinct primes from pool with prod (N - 1) <= bound and factor count = parity mod 2."""

    def rec(start: int, chosen: list[PrimeIdeal], phi: int) -> Iterator[list[PrimeIdeal]]:
        if len(chosen) % 2 == parity:
            yield chosen
        for j in range(start, len(pool)):
            nxt = phi * (pool[j].norm - 1)
            if nxt <= bound:
                yield from rec(j + 1, chosen + [pool[j]], nxt)

    for primes in rec(0, [], 1):
        yield IdealData.from_factors(F, [(r, 1) for r in primes])


def dedup(cands: list[Candidate]) -> tuple[list[Candidate], int]:
    """One representative (least key) per automorphism orbit; returns (kept, number merged away)."""
    best: dict[str, Candidate] = {}
    order: list[str] = []
    for c in cands:
        auts = c.field.auts
        keys = [c.key()]
        for s in auts:
            keys.append(serialize_key(c.field.label, s(c.prime), s(c.N_minus), s(c.N_plus)))
        canon = min(keys)
        if canon not in best:
            best[canon] = c
            order.append(canon)
        elif c.key() < best[canon].key():
            best[canon] = c
    kept = sorted(best.values(), key=lambda c: c.key())
    return kept, len(cands) - len(kept)


# ---------------------------------------------------------------- computation


class TabConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    degrees: tuple[int, int] = (2, 2)
    g_max: int = 3
    zeta_bound: int = 10**6
    field_table: Optional[str] = None
    labels: Optional[list[str]] = None
    output: str = "tabulation.jsonl"
    summary: Optional[str] = None
    resume: bool = False
    jobs: int = 1
    precision_cap: int = 64
    deterministic: bool = False

    @field_validator("g_max")
    @classmethod
    def _g(cls, v: int) -> int:
        if v < 0:
            raise ValueError("g_max must be nonnegative")
        return v

    @field_validator("jobs")
    @classmethod
    def _jobs(cls, v: int) -> int:
        if v < 1:
            raise ValueError("jobs must be at least 1")
        return v

    def summary_path(self) -> Path:
        return Path(self.summary) if self.summary else Path(self.output).with_suffix(".summary.json")


@dataclass
class Task:
    """Picklable description of one datum."""

    entry: dict
    key: str
    p: int
    hnf: tuple
    N_minus: list
    N_plus: list
    g_max: int
    zeta_bound: int
    precision_cap: int
    deterministic: bool


_WORKER_FIELDS: dict[str, NumberField] = {}
_WORKER_ORDERS: dict[tuple, object] = {}


def _field_of(entry: dict) -> NumberField:
    label = entry["label"]
    if label not in _WORKER_FIELDS:
        _WORKER_FIELDS[label] = NumberField.from_table_entry(entry)
    return _WORKER_FIELDS[label]


def _prime_from(F: NumberField, p: int, hnf) -> PrimeIdeal:
    want = tuple(tuple(r) for r in hnf)
    for q in F.primes_above(p):
        if q.hnf == want:
            return q
    raise FieldError(f"prime above {p} with hnf {hnf} not found")


def _ideal_from(F: NumberField, data: list) -> IdealData:
    return IdealData.from_factors(F, [(_prime_from(F, p, h), e) for p, h, e in data])


def _ideal_task(I: IdealData) -> list:
    return [(q.p, q.hnf, e) for q, e in I.factors]


def _maximal_for(F: NumberField, N_minus: IdealData):
    key = (F.label, tuple((q.p, q.hnf) for q in N_minus.primes()))
    if key not in _WORKER_ORDERS:
        if len(_WORKER_ORDERS) > 64:
            _WORKER_ORDERS.clear()
        B = algebra_from_discriminant(F, N_minus)
        _WORKER_ORDERS[key] = maximal_order(standard_order(B))
    return _WORKER_ORDERS[key]


def compute_datum(task: Task) -> dict:
    """One JSONL row.  Never raises: failures become status 'error'."""
    t0 = time.perf_counter()
    F = _field_of(task.entry)
    q = _prime_from(F, task.p, task.hnf)
    N_minus = _ideal_from(F, task.N_minus)
    N_plus = _ideal_from(F, task.N_plus)
    lo, hi = area_bounds(F, N_minus * IdealData.from_factors(F, [(q, 1)]), N_plus, task.zeta_bound)
    site = site_from_prime(q)
    row = {
        "key": task.key,
        "field": F.label,
        "degree": F.n,
        "prime": {"p": q.p, "r": site.r, "gen": q.gen.to_json()},
        "Nminus": N_minus.to_json(),
        "Nplus": N_plus.to_json(),
        "area": round((lo + hi) / 2, 9),
        "area_bounds": [lo, hi],
        "status": "done",
        "genus": None,
        "n_vertices": None,
        "n_edges": None,
        "order": None,
        "error": None,
        "flags": [] if F.auts or F.n == 1 else ["no automorphism data: dedup may overcount"],
    }
    try:
        Rmax = _maximal_for(F, N_minus)
        R = eichler_order(Rmax, N_plus) if N_plus.factors else Rmax
        row["order"] = R.to_json()
        site = principalize(site)
        ctx = ArithmeticContext(R, site, N_cap=task.precision_cap)
        G = fundamental_domain(ctx, max_genus=task.g_max)
        row.update(genus=G.genus, n_vertices=G.n_vertices, n_edges=G.n_edges)
        row["prime"]["delta"] = site.delta.to_json()
    except LimitExceeded as exc:
        row["status"] = "limit_exceeded"
        row["genus_at_least"] = exc.genus
    except Exception as exc:  # recorded in the row, never aborts the run
        row["status"] = "error"
        row["error"] = f"{type(exc).__name__}: {exc}"
    row["checks"] = check_row(row)
    row["time_ms"] = 0 if task.deterministic else round(1000 * (time.perf_counter() - t0), 1)
    return row


def check_row(row: dict) -> dict:
    """Area invariants for a computed genus: below the genus bound, and at least 2g - 2."""
    g = row.get("genus")
    if row.get("status") != "done" or g is None:
        return {}
    lo, hi = row["area_bounds"]
    return {
        "area_below_genus_bound": lo < sz_bound(g),
        "area_at_least_2g_minus_2": hi >= 2 * g - 2 - 0.01,
    }


def _entries(cfg: TabConfig) -> list[dict]:
    if cfg.field_table:
        p = Path(cfg.field_table)
        files = sorted(p.glob("*.json")) if p.is_dir() else [p]
        entries = [e for f in files for e in load_table(f)]
    else:
        entries = list(table_entries().values())
    if cfg.labels is not None:
        wanted = set(cfg.labels)
        entries = [e for e in entries if e["label"] in wanted]
    return entries


def plan(cfg: TabConfig) -> tuple[list[Task], dict]:
    """Tasks in canonical order, plus bookkeeping for the summary."""
    entries = {e["label"]: e for e in _entries(cfg)}
    info = {"fields": 0, "candidates": 0, "merged_orbits": 0, "incomplete_fields": []}
    tasks: list[Task] = []
    for F in field_candidates(cfg.g_max, entries.values(), tuple(cfg.degrees)):
        info["fields"] += 1
        try:
            cands = candidate_data(F, cfg.g_max, cfg.zeta_bound)
        except FieldError as exc:
            info["incomplete_fields"].append({"field": F.label, "reason": str(exc)})
            continue
        kept, merged = dedup(cands)
        info["candidates"] += len(kept)
        info["merged_orbits"] += merged
        for c in kept:
            tasks.append(
                Task(
                    entries[F.label],
                    c.key(),
                    c.prime.p,
                    c.prime.hnf,
                    _ideal_task(c.N_minus),
                    _ideal_task(c.N_plus),
                    cfg.g_max,
                    cfg.zeta_bound,
                    cfg.precision_cap,
                    cfg.deterministic,
                )
            )
    return tasks, info


def read_rows(path: Path) -> list[dict]:
    rows = []
    if path.exists():
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    try:
                        rows.append(json.loads(line))
                    except json.JSONDecodeError:
                        break  # a torn final line from an interrupted run
    return rows


def _dump(row: dict) -> str:
    return json.dumps(row, sort_keys=True, separators=(",", ":"))


def run_tabulation(cfg: TabConfig, progress=None) -> dict:
    """Compute every pending datum, append rows, write and return the summary."""
    out = Path(cfg.output)
    tasks, info = plan(cfg)
    done_rows = read_rows(out) if cfg.resume else []
    have = {r["key"] for r in done_rows}
    pending = [t for t in tasks if t.key not in have]
    out.parent.mkdir(parents=True, exist_ok=True)
    if cfg.resume and out.exists():
        # rewrite the intact prefix so a torn line never survives
        with open(out, "w") as fh:
            for r in done_rows:
                fh.write(_dump(r) + "\n")
    mode = "a" if cfg.resume else "w"
    with open(out, mode) as fh:
        if cfg.jobs > 1 and len(pending) > 1:
            with multiprocessing.Pool(cfg.jobs) as pool:
                results = pool.imap(compute_datum, pending)
                for k, row in enumerate(results):
                    fh.write(_dump(row) + "\n")
                    fh.flush()
                    if progress:
                        progress(k + 1, len(pending), row)
        else:
            for k, t in enumerate(pending):
                row = compute_datum(t)
                fh.write(_dump(row) + "\n")
                fh.flush()
                if progress:
                    progress(k + 1, len(pending), row)
    summary = summarize(read_rows(out), cfg, info)
    summary["computed"] = len(pending)
    sp = cfg.summary_path()
    sp.write_text(json.dumps({k: v for k, v in summary.items() if k != "computed"}, indent=1, sort_keys=True) + "\n")
    return summary


def summarize(rows: list[dict], cfg: TabConfig, info: dict) -> dict:
    lo, hi = cfg.degrees
    counts = {str(n): [0] * (cfg.g_max + 1) for n in range(lo, hi + 1)}
    status = {"done": 0, "limit_exceeded": 0, "error": 0}
    failed = []
    for r in rows:
        status[r["status"]] = status.get(r["status"], 0) + 1
        if r["status"] == "done" and r["genus"] is not None and r["genus"] <= cfg.g_max:
            counts.setdefault(str(r["degree"]), [0] * (cfg.g_max + 1))[r["genus"]] += 1
        if not all(r.get("checks", {}).values()):
            failed.append(r["key"])
    return {
        "g_max": cfg.g_max,
        "degrees": [lo, hi],
        "counts": counts,
        "status": status,
        "check_failures": failed,
        **info,
    }
