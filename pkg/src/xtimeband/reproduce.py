"""Re-run the published tables and compare them with the embedded fixtures.

Each table id maps to a function returning a :class:`Report`: one
:class:`Check` per compared quantity. Quantitative checks decide the verdict;
qualitative ones are printed for inspection only.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .bispectral import check_combina_identity
from .commutant import (JACOBI_PERLINE_BASIS, check_jacobi_differential_commutant, fit_perline_combination,
                        jacobi_perline_operands, solve_banded_commutant)
from .families import FamilySpec
from .spectra import cross_gram, eigh
from .timeband import compare_hermite_table, compute_gram, load_fixtures

HIGH = 256


@dataclass(frozen=True)
class Check:
    name: str
    observed: object
    expected: object
    deviation: float
    tol: float
    quantitative: bool = True

    @property
    def passed(self) -> bool:
        return self.deviation <= self.tol

    def line(self) -> str:
        tag = ("PASS" if self.passed else "FAIL") if self.quantitative else "INFO"
        return f"{tag}  {self.name}: observed {_fmt(self.observed)}, expected {_fmt(self.expected)}, " \
               f"deviation {self.deviation:.3g} (tol {self.tol:.3g})"


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


@dataclass
class Report:
    table: str
    checks: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def add(self, *args, **kwargs) -> Check:
        c = Check(*args, **kwargs)
        self.checks.append(c)
        return c

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.quantitative)

    def lines(self) -> list:
        out = [f"== {self.table}"]
        out += [c.line() for c in self.checks]
        out += [f"NOTE  {n}" for n in self.notes]
        out.append(f"{'PASS' if self.passed else 'FAIL'}  {self.table}")
        return out


# ---------------------------------------------------------------------------
# fixture helpers


def _sym():
    import sympy as sp
    return sp, sp.Symbol("T")


def fixture_value(expr: str, T=None) -> float:
    sp, Ts = _sym()
    e = sp.sympify(expr)
    if T is not None:
        e = e.subs(Ts, sp.Rational(str(Fraction(T))))
    return float(sp.N(e, 30))


def fixture_matrix(key: str, T=None) -> np.ndarray:
    table = load_fixtures()[key]
    n = table["size"]
    A = np.zeros((n, n))
    for k, e in table["entries"].items():
        i, j = map(int, k.split(","))
        A[i, j] = A[j, i] = fixture_value(e, T)
    return A


def fixture_normalization(key: str, T=None) -> dict:
    """Solver keywords (0-based) for the normalization a fixture uses."""
    norm = load_fixtures()[key]["normalization"]
    i, j = norm["unit_entry"]
    return {"zero_diagonal": norm["zero_diagonal"] - 1, "unit_entry": (i - 1, j - 1),
            "unit_value": fixture_value(norm["unit_value"], T)}


FAMILIES = {
    "hermite": lambda fx: FamilySpec.xhermite(),
    "jacobi": lambda fx: FamilySpec.xjacobi(fx["alpha"], fx["beta"]),
    "laguerre": lambda fx: FamilySpec.xlaguerre(fx["alpha"]),
}
BANDWIDTH = {"hermite": 3, "jacobi": 2, "laguerre": 2}


@lru_cache(maxsize=None)
def _pipeline(name: str):
    """High-precision M and L, double-precision M, and their decompositions for one fixture."""
    fx = load_fixtures()[f"{name}_eigs"]
    fam = FAMILIES[name](fx)
    T = Fraction(fx["T"])
    M = compute_gram(fam, fx["N"], T, HIGH, 1e-40)
    Md = compute_gram(fam, fx["N"], T)
    res = solve_banded_commutant(M, BANDWIDTH[name], **fixture_normalization(f"{name}_eigs", T))
    L_double = res.L.astype_float()
    return {"fam": fam, "T": T, "M": M, "M_double": Md, "commutant": res,
            "L_dec": eigh(L_double), "M_dec": eigh(M), "Md_dec": eigh(Md)}


def _rel(a, b) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


# ---------------------------------------------------------------------------
# tables


def hermite_M7() -> Report:
    rep = Report("hermite-M7")
    fam = FamilySpec.xhermite()
    for T in (Fraction(1, 2), Fraction(1, 3), Fraction(2), Fraction(5)):
        g = compute_gram(fam, 7, T, HIGH, 1e-14)
        cmp = compare_hermite_table(g)
        rep.add(f"T={T} max |computed - closed form|", cmp.max_discrepancy, 0.0, cmp.max_discrepancy, 1e-10)
        for m, n, dev in cmp.suspects:
            rep.notes.append(f"T={T}: table entry ({m + 1},{n + 1}) off by {dev:.3g}; quarantined as a suspected misprint")
    return rep


def _compare_matrix(rep: Report, key: str, L, T, tol=1e-6):
    P = fixture_matrix(key, T)
    L = np.array(L, dtype=float)
    scale = np.abs(P).max()
    n = P.shape[0]
    for i in range(n):
        for j in range(i, n):
            if P[i, j] == 0 and abs(L[i, j]) <= tol * scale:
                continue
            dev = abs(L[i, j] - P[i, j]) / max(abs(P[i, j]), scale * 1e-3)
            rep.add(f"T={T} L[{i + 1},{j + 1}]", float(L[i, j]), float(P[i, j]), dev, tol)


def _solve_for_table(key: str, fam: FamilySpec, T, w: int):
    M = compute_gram(fam, 7, T, HIGH, 1e-40)
    return solve_banded_commutant(M, w, **fixture_normalization(key, T))


def hermite_L7() -> Report:
    rep = Report("hermite-L7")
    res = _solve_for_table("hermite_L_7", FamilySpec.xhermite(), Fraction(5), 3)
    _compare_matrix(rep, "hermite_L_7", res.L.to_dense(), Fraction(5))
    rep.notes.append(f"commutator residual {res.commutator_residual:.3g}, nullspace dimension {res.nullspace_dim}")
    return rep


def _eig_checks(rep: Report, name: str, tol_rel=5e-4):
    fx = load_fixtures()[f"{name}_eigs"]
    p = _pipeline(name)
    ref = sorted(fx["L"])
    for k, (o, e) in enumerate(zip(p["L_dec"].eigenvalues, ref)):
        rep.add(f"L eigenvalue {k + 1}", float(o), float(e), _rel(float(o), e), tol_rel)
    return p, fx


def hermite_eigs() -> Report:
    rep = Report("hermite-eigs")
    p, fx = _eig_checks(rep, "hermite")
    for k, (o, e) in enumerate(zip(p["M_dec"].eigenvalues, sorted(fx["M"]))):
        rep.add(f"M eigenvalue {k + 1}", float(o), e, abs(float(o) - e), 1e-5)
    return rep


def jacobi_L7() -> Report:
    rep = Report("jacobi-L7")
    fx = load_fixtures()["jacobi_L_7"]
    T = Fraction(fx["T"])
    res = _solve_for_table("jacobi_L_7", FamilySpec.xjacobi(fx["alpha"], fx["beta"]), T, 2)
    _compare_matrix(rep, "jacobi_L_7", res.L.to_dense(), T)
    return rep


def jacobi_gammas() -> Report:
    rep = Report("jacobi-gammas")
    fx = load_fixtures()["jacobi_gammas"]
    T, N = Fraction(fx["T"]), fx["N"]
    res = _solve_for_table("jacobi_L_7", FamilySpec.xjacobi(fx["alpha"], fx["beta"]), T, 2)
    B, lam = jacobi_perline_operands(N, fx["alpha"], fx["beta"], HIGH)
    fit = fit_perline_combination(res.L, B, lam, JACOBI_PERLINE_BASIS)
    rep.add("fit residual", fit.fit_residual, 0.0, fit.fit_residual, 1e-9)
    for k, (g, e) in enumerate(zip(fit.gamma, fx["values"])):
        ev = fixture_value(e)
        rep.add(f"gamma_{k + 1}", float(g), ev, _rel(float(g), ev), 1e-8)
    return rep


def jacobi_eigs() -> Report:
    rep = Report("jacobi-eigs")
    p, fx = _eig_checks(rep, "jacobi")
    for k, (o, e) in enumerate(zip(p["M_dec"].eigenvalues, sorted(fx["M"]))):
        rep.add(f"M eigenvalue {k + 1}", float(o), e, abs(float(o) - e), 1e-4)
    over = [float(v) for v in p["Md_dec"].eigenvalues if float(v) > 1 + 1e-12]
    rep.notes.append(f"double-precision M eigenvalues above 1: {over or 'none'}")
    return rep


def laguerre_L7() -> Report:
    rep = Report("laguerre-L7")
    fx = load_fixtures()["laguerre_L_7"]
    for T in (Fraction(1, 2), Fraction(2)):
        res = _solve_for_table("laguerre_L_7", FamilySpec.xlaguerre(fx["alpha"]), T, 2)
        _compare_matrix(rep, "laguerre_L_7", res.L.to_dense(), T)
    return rep


def laguerre_eigs() -> Report:
    rep = Report("laguerre-eigs")
    p, fx = _eig_checks(rep, "laguerre")
    ours = sorted(p["M_dec"].eigenvalues, key=lambda v: -abs(v))
    for k, e in enumerate(fx["M"]):
        o = float(ours[k])
        if abs(e) > 1e-15:
            rep.add(f"M eigenvalue {k + 1}", o, e, _rel(o, e), 1e-3)
        else:
            rep.add(f"M eigenvalue {k + 1} (below double resolution)", o, e, abs(o), 1e-15, quantitative=False)
    return rep


def _cross_gram_report(name: str) -> Report:
    rep = Report(f"cross-gram-{name}")
    fx = load_fixtures()[f"cross_gram_{name}"]
    p = _pipeline(name)
    ours = np.abs(cross_gram(p["L_dec"], p["Md_dec"]).matrix)
    published = np.abs(np.array(fx["matrix"]))
    n = published.shape[1]
    order = list(range(n)) if fx["column_order"] == "ascending" else list(range(n))[::-1]
    published = published[:, order]                      # reorder columns to ascending eigenvalues
    cols = [order.index(c - 1) for c in fx["well_conditioned_columns"]]
    for c in cols:
        dev = float(np.max(np.abs(ours[:, c] - published[:, c])))
        rep.add(f"|column| for M eigenvalue {c + 1} (ascending)", ours[:, c].round(6).tolist(),
                published[:, c].round(6).tolist(), dev, 1e-3)
    rest = [c for c in range(n) if c not in cols]
    if rest:
        dev = float(np.max(np.abs(ours[:, rest] - published[:, rest])))
        rep.add("ill-conditioned columns (not reproducible across eigensolvers)", "", "", dev, 1e-3,
                quantitative=False)
    true_cg = np.abs(cross_gram(p["L_dec"], p["M_dec"]).matrix)
    perm = float(np.max(np.abs(true_cg - np.round(true_cg))))
    rep.add("L eigenvectors vs high-precision M eigenvectors: distance from a permutation", perm, 0.0, perm, 1e-6)
    return rep


def combina() -> Report:
    rep = Report("combina")
    worst, count = Fraction(0), 0
    for N in range(1, 51):
        r = check_combina_identity(N)
        worst = max(worst, abs(r.defect))
        count += r.entries_checked
    rep.add("exact defect over N = 1..50", str(worst), "0", float(worst), 0.0)
    rep.notes.append(f"{count} band entries checked in rational arithmetic")
    return rep


def dk_check() -> Report:
    rep = Report("dk-check")
    rng = random.Random(20240101)
    pts = [(rng.uniform(-0.95, 0.95), rng.uniform(-0.95, 0.95)) for _ in range(20)]
    for N in (5, 8):
        r = check_jacobi_differential_commutant(N, pts)
        rep.add(f"N={N} max relative |D_x K - D_y K|", r.max_residual, 0.0, r.max_residual, 1e-8)
        lit = check_jacobi_differential_commutant(N, pts, literal=True)
        rep.add(f"N={N} with the printed first coefficient", lit.max_residual, 0.0, lit.max_residual, 1e-8,
                quantitative=False)
    return rep


TABLES = {
    "hermite-M7": hermite_M7,
    "hermite-L7": hermite_L7,
    "hermite-eigs": hermite_eigs,
    "jacobi-L7": jacobi_L7,
    "jacobi-gammas": jacobi_gammas,
    "jacobi-eigs": jacobi_eigs,
    "laguerre-L7": laguerre_L7,
    "laguerre-eigs": laguerre_eigs,
    "cross-gram-hermite": lambda: _cross_gram_report("hermite"),
    "cross-gram-jacobi": lambda: _cross_gram_report("jacobi"),
    "cross-gram-laguerre": lambda: _cross_gram_report("laguerre"),
    "combina": combina,
    "dk-check": dk_check,
}


def reproduce(table: str) -> Report:
    try:
        fn = TABLES[table]
    except KeyError:
        raise KeyError(f"unknown table id {table!r}; choose from {', '.join(TABLES)}") from None
    return fn()
