"""Named computations, their result rows and the claim each one checks.

Every scenario produces ResultRow records (scenario, t, p, j, lambda, source).
For cohomological scenarios ``lambda`` holds an integer dimension or rank; in
spectral-sequence rows ``p`` is the base degree and ``j = q + 1`` carries the
fiber degree q.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import flat, nilce, sheaf, superconn
from .complexes import cohomology_dims, spectral_pages

FIELDS = ("scenario", "t", "p", "j", "lambda", "source")


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    name: str
    kind: str
    models: tuple[str, ...] = ()
    t: tuple[float, ...] = ()
    p: tuple[int, ...] = ()
    k: int = 1
    claim: str = ""
    anchor: str = ""
    cutoff: float | None = None
    tol: float | None = None

    def __post_init__(self):
        if self.kind not in RUNNERS:
            raise ScenarioError(f"unknown scenario kind {self.kind!r}; known: {sorted(RUNNERS)}")
        if any(not (t > 0) for t in self.t):
            raise ScenarioError("t values must be positive")
        if self.k < 1:
            raise ScenarioError("k must be >= 1")
        if any(p < 0 for p in self.p):
            raise ScenarioError("degrees must be nonnegative")
        for m in self.models:
            _check_model(self.kind, m)

    def with_grid(self, t: Sequence[float] | None = None, p: Sequence[int] | None = None,
                  k: int | None = None, cutoff: float | None = None, tol: float | None = None) -> "Scenario":
        return Scenario(self.name, self.kind, self.models,
                        tuple(t) if t is not None else self.t,
                        tuple(p) if p is not None else self.p,
                        k if k is not None else self.k,
                        self.claim, self.anchor,
                        cutoff if cutoff is not None else self.cutoff,
                        tol if tol is not None else self.tol)


@dataclass(frozen=True)
class ResultRow:
    scenario: str
    t: float | None
    p: int
    j: int
    lam: float
    source: str

    def __post_init__(self):
        if self.j < 1:
            raise ScenarioError("row index j must be >= 1")
        if self.lam < -1e-8:
            raise ScenarioError(f"negative value {self.lam} in a result row")

    def as_dict(self) -> dict:
        return {"scenario": self.scenario, "t": self.t, "p": self.p, "j": self.j,
                "lambda": self.lam, "source": self.source}


@dataclass(frozen=True)
class ClaimResult:
    passed: bool
    detail: str


def _sort_rows(rows: Iterable[ResultRow]) -> list[ResultRow]:
    return sorted(rows, key=lambda r: (r.scenario, r.t if r.t is not None else -1.0, r.p, r.j, r.source))


# runners ---------------------------------------------------------------------
# each returns (rows, claim); an empty grid yields no rows and a vacuous claim

def _example4(s: Scenario):
    g6 = flat.hantzsche_wendt()
    c = flat.hodge_spectrum(g6, 1, 1, s.cutoff).lowest_positive()
    rows, scaled = [], []
    for t in s.t:
        m = flat.product_with_scaled_fiber(flat.BASE_LENGTH, g6, t)
        for p in s.p:
            vals = flat.hodge_spectrum(m, p, s.k, s.cutoff).values()[: s.k]
            for j, lam in enumerate(vals, 1):
                rows.append(ResultRow(s.name, t, p, j, float(lam), "flat-spectra"))
            if p == 2 and len(vals):
                scaled.append(float(vals[0]) * t * t)
    tol = s.tol if s.tol is not None else 1e-9
    if not rows:
        return rows, ClaimResult(True, "empty grid")
    dev = max((abs(v - c) / c for v in scaled), default=math.inf)
    return rows, ClaimResult(dev <= tol, f"C = {c:.12g}; max |lambda t^2 - C| / C = {dev:.3g} (tol {tol:g})")


def _betti_flat(s: Scenario):
    rows, bad = [], []
    for name in s.models:
        m = flat.manifold(name)
        spectral = []
        for p in range(m.dimension + 1):
            rep = flat.hodge_spectrum(m, p, 1, s.cutoff)
            spectral.append(rep.kernel_dim())
            rows.append(ResultRow(f"{s.name}[{name}]", None, p, 1, float(spectral[-1]), "flat-spectra"))
        rots = [np.rint(r).astype(int) for r, _ in m.group]
        f = nilce.generate_group(rots, m.dimension, name=name)
        exact_b = nilce.ce_betti(nilce.abelian(m.dimension), f)
        if list(spectral) != list(exact_b):
            bad.append(f"{name}: spectral {spectral} vs exact {exact_b}")
    return rows, ClaimResult(not bad, "; ".join(bad) or "zero modes match invariant cohomology")


def _maptorus(s: Scenario):
    rows, problems, firsts = [], [], {}
    tol = s.tol if s.tol is not None else 1e-8
    for name in s.models:
        phi = np.eye(2, dtype=int) if name == "maptorus-I" else -np.eye(2, dtype=int)
        for t in s.t:
            ts = superconn.torus_superconn(phi, flat.BASE_LENGTH, t)
            m = flat.manifold(f"{name}({t!r})")
            for p in s.p:
                fu, table = superconn.first_unmatched(ts, m, p)
                e_vals = superconn.circle_eigenvalues_below(ts, p, fu * (1 - 1e-9))
                prefix = [r for r in table.rows if r[1] is not None and r[1] < fu]
                if len(e_vals) != len(prefix) or table.max_rel_dev > tol:
                    problems.append(f"{name} t={t:g} p={p}: {len(e_vals)} vs {len(prefix)}, dev {table.max_rel_dev:.2g}")
                for j, lam in enumerate(e_vals, 1):
                    rows.append(ResultRow(f"{s.name}[{name}]", t, p, j, float(lam), "superconn"))
                rows.append(ResultRow(f"{s.name}[{name}]", t, p, len(e_vals) + 1, fu, "flat-spectra:first-unmatched"))
                firsts.setdefault((name, p), []).append((t, fu))
    for key, pts in firsts.items():
        scaled = [fu * t * t for t, fu in pts]
        c = float(np.mean(scaled))
        if any(abs(v - c) > 0.1 * c for v in scaled):
            problems.append(f"{key}: first unmatched * t^2 = {scaled}")
    return rows, ClaimResult(not problems, "; ".join(problems) or "all Delta^E eigenvalues matched; t^-2 scaling holds")


def _ex5(s: Scenario):
    rows, problems = [], []
    for name in s.models:
        sh = sheaf.sheaf_by_name(name)
        e2 = sheaf.interval_sheaf_e2(sh)
        for (p, q), v in sorted(e2.items()):
            rows.append(ResultRow(f"{s.name}[{name}]" if len(s.models) > 1 else s.name, None, p, q + 1, float(v), "sheaf-ss"))
        totals = sheaf.interval_totals(sh)
        f = sheaf.interval_filtered_complex(sh)
        if tuple(cohomology_dims(f.complex)) != totals or spectral_pages(f, 2).nonzero(2) != e2:
            problems.append(f"{name}: E2 totals disagree with the total complex")
        if name == "interval-ex5":
            if e2 != {(0, 0): 1, (1, 2): 1}:
                problems.append(f"E2 = {e2}")
            if totals != (1, 0, 0, 1):
                problems.append(f"totals = {totals}")
    return rows, ClaimResult(not problems, "; ".join(problems) or "E2^{0,0} = E2^{1,2} = 1, totals (1,0,0,1)")


def _z2(s: Scenario):
    z = superconn.interval_model(flat.BASE_LENGTH)
    tol = s.tol if s.tol is not None else 1e-9
    expected = {(0, 1): [0, 1, 4, 9], (0, -1): [1, 4, 9, 16], (1, 1): [1, 4, 9]}
    rows, problems = [], []
    for twist in (1, -1):
        label = f"{s.name}[{twist:+d}]"
        for p in s.p:
            vals = superconn.z2_basic_spectrum(z, p, s.k, twist).values()[: s.k]
            for j, lam in enumerate(vals, 1):
                rows.append(ResultRow(label, None, p, j, float(lam), "superconn"))
            want = expected.get((p, twist))
            if want:
                n = min(len(want), len(vals))
                if n == 0 or any(abs(a - b) > tol * max(1.0, b) for a, b in zip(vals[:n], want[:n])):
                    problems.append(f"twist {twist:+d}, p={p}: {list(vals[:n])} vs {want[:n]}")
    return rows, ClaimResult(not problems, "; ".join(problems) or "Neumann / Dirichlet interval spectra reproduced")


def _gysin(s: Scenario):
    rows, problems = [], []
    for name in s.models:
        x = sheaf.complex_by_name(name)
        sys = sheaf.LocalSystemZ2.trivial(x)
        cocycles = {"chi": sheaf.generator_cocycle(sys), "zero": sheaf.EulerCocycle.zero(sys)}
        for label, chi in cocycles.items():
            for p in s.p:
                rank = sheaf.euler_mult_rank(x, sys, chi, p)
                rows.append(ResultRow(f"{s.name}[{name},{label}]", None, p, 1, float(rank), "sheaf-ss"))
        if name == "s2-tetra":
            if not sheaf.tcor7_criterion(x, sys, cocycles["chi"], 1):
                problems.append("criterion false for the generator at p = 1")
            if sheaf.tcor7_criterion(x, sys, cocycles["chi"], 3):
                problems.append("criterion true for the generator at p = 3")
            if any(sheaf.tcor7_criterion(x, sys, cocycles["zero"], p) for p in range(5)):
                problems.append("criterion true for chi = 0")
    return rows, ClaimResult(not problems, "; ".join(problems) or "criterion true at p = 1, false at p = 3 and for chi = 0")


def _cor8(s: Scenario):
    rows, problems = [], []
    threshold = s.tol if s.tol is not None else 0.1
    for name in s.models:
        for t in s.t:
            m = flat.manifold(f"{name}({t!r})")
            vals = flat.hodge_spectrum(m, 0, max(s.k, 2), s.cutoff).values()[: max(s.k, 2)]
            for j, lam in enumerate(vals, 1):
                rows.append(ResultRow(f"{s.name}[{name}]", t, 0, j, float(lam), "flat-spectra"))
            if vals[1] <= threshold:
                problems.append(f"{name} t={t:g}: lambda_2 = {vals[1]:.4g}")
    return rows, ClaimResult(not problems, "; ".join(problems) or f"second function eigenvalue > {threshold:g} everywhere")


RUNNERS: dict[str, Callable] = {
    "example4": _example4,
    "betti-flat": _betti_flat,
    "maptorus": _maptorus,
    "ex5": _ex5,
    "z2": _z2,
    "gysin": _gysin,
    "cor8": _cor8,
}

_MODEL_CHECKS = {
    "betti-flat": lambda m: flat.manifold(m),
    "maptorus": lambda m: flat.manifold(f"{m}(1)"),
    "ex5": lambda m: sheaf.sheaf_by_name(m),
    "gysin": lambda m: sheaf.complex_by_name(m),
    "cor8": lambda m: flat.manifold(f"{m}(1)"),
}


def _check_model(kind: str, model: str) -> None:
    check = _MODEL_CHECKS.get(kind)
    if check is None:
        return
    try:
        check(model)
    except KeyError as exc:
        raise ScenarioError(f"unknown model {model!r} for {kind} scenarios") from exc


SCENARIOS: dict[str, Scenario] = {s.name: s for s in (
    Scenario("example4-scan", "example4", ("s1xg6",), (1.0, 0.5, 0.25), (2,), 1,
             "lambda_min(Delta_2) t^2 equals lambda_min(Delta_1 on G6), rel 1e-9",
             "lowest 2-form eigenvalue of S^1 x tG6 equals C t^-2, C the lowest 1-form eigenvalue of G6"),
    Scenario("betti-flat", "betti-flat", ("t2", "t3", "klein", "g6"), (), (), 1,
             "zero-mode multiplicities equal invariant Lie algebra cohomology",
             "G6 has the rational homology of a 3-sphere"),
    Scenario("maptorus-compare", "maptorus", ("maptorus-I", "maptorus-minusI"), (1.0, 0.25), (0, 1, 2, 3), 1,
             "Delta^E eigenvalues equal manifold eigenvalues below the first fiber mode; that mode scales as t^-2",
             "small manifold eigenvalues are eps-close to superconnection eigenvalues below the fiber gap"),
    Scenario("ex5-e2", "ex5", ("interval-ex5",), (), (), 1,
             "E2 nonzero exactly at (0,0) and (1,2); totals (1,0,0,1)",
             "torus-fiber collapse of S^3 to an interval: E2 lives at (0,0) and (1,2)"),
    Scenario("z2-interval", "z2", (), (), (0,), 4,
             "twist +1 gives {0,1,4,9}, twist -1 gives {1,4,9,16}",
             "Z2 quotient of a circle: invariant forms give absolute, anti-invariant give relative conditions"),
    Scenario("gysin-hopf", "gysin", ("s2-tetra",), (), (0, 1, 2, 3, 4), 1,
             "multiplication by the Euler class detects p = 1 only",
             "codimension-one criterion: M_chi on H^{p-1} or H^{p-2}"),
    Scenario("cor8-functions", "cor8", ("s1xg6", "maptorus-I", "maptorus-minusI"), (1.0, 0.5, 0.25), (0,), 2,
             "second function eigenvalue stays above 0.1",
             "no small positive eigenvalues on functions"),
)}


def get_scenario(name: str) -> Scenario:
    try:
        return SCENARIOS[name]
    except KeyError:
        raise ScenarioError(f"unknown scenario {name!r}; known: {', '.join(sorted(SCENARIOS))}") from None


def load_scenario(path: str | Path) -> Scenario:
    """JSON object with the Scenario field names; lists become tuples."""
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict):
        raise ScenarioError("scenario file must hold a JSON object")
    unknown = set(data) - set(Scenario.__dataclass_fields__)
    if unknown:
        raise ScenarioError(f"unknown scenario fields: {sorted(unknown)}")
    for key in ("models", "t", "p"):
        if key in data:
            data[key] = tuple(data[key])
    try:
        return Scenario(**data)
    except TypeError as exc:
        raise ScenarioError(str(exc)) from None


def evaluate(s: Scenario) -> tuple[list[ResultRow], ClaimResult]:
    rows, claim = RUNNERS[s.kind](s)
    return _sort_rows(rows), claim


def run_scenario(s: Scenario) -> list[ResultRow]:
    return evaluate(s)[0]


# serialization ----------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def rows_to_csv(rows: Sequence[ResultRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIELDS)
    for r in rows:
        w.writerow([r.scenario, _fmt(r.t), r.p, r.j, _fmt(float(r.lam)), r.source])
    return buf.getvalue()


def rows_to_json(rows: Sequence[ResultRow]) -> str:
    return json.dumps([r.as_dict() for r in rows], indent=1) + "\n"


def emit(rows: Sequence[ResultRow], fmt: str = "csv", path: str | Path | None = None) -> str:
    if fmt not in ("csv", "json"):
        raise ScenarioError(f"unknown format {fmt!r}")
    text = rows_to_csv(rows) if fmt == "csv" else rows_to_json(rows)
    if path is not None:
        Path(path).write_text(text)
    return text


def _row_from(d: dict) -> ResultRow:
    t = d["t"]
    t = None if t in ("", None) else float(t)
    return ResultRow(d["scenario"], t, int(d["p"]), int(d["j"]), float(d["lambda"]), d["source"])


def read_rows(text: str, fmt: str = "csv") -> list[ResultRow]:
    if fmt == "json":
        return [_row_from(d) for d in json.loads(text)]
    return [_row_from(d) for d in csv.DictReader(io.StringIO(text))]
