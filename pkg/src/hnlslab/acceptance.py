"""The twelve acceptance criteria as runnable functions.

Each ``criterion_<i>(seed, reduced)`` returns a :class:`CriterionResult`.
``reduced=True`` caps N and sample counts; ``accept_all`` chooses it when
the time budget cannot hold the full run.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import oracles, propagator, solver, strichartz
from .lattice import (DomainSpec, PhysicalField, SpectralField, critical_index, forward_transform,
                      l2_norm, project_leq, sobolev_norm)

log = logging.getLogger(__name__)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    runtime: float = 0.0
    reduced: bool = False
    skipped: bool = False

    def line(self) -> str:
        status = "SKIP" if self.skipped else ("PASS" if self.passed else "FAIL")
        tag = " [reduced]" if self.reduced else ""
        return f"[{status}] {self.number:2d} {self.name}{tag} ({self.runtime:.1f}s)"

    def to_dict(self) -> dict:
        return {"number": self.number, "name": self.name, "passed": self.passed,
                "details": self.details, "runtime": self.runtime,
                "reduced": self.reduced, "skipped": self.skipped}


def _spread(values) -> float:
    v = np.asarray(values, float)
    return float(v.max() / v.min())


def _log_uniform_tau(rng, N, size):
    mag = np.exp(rng.uniform(math.log(1e-2), math.log((4.0 * N) ** 2), size))
    return mag * rng.choice([-1.0, 1.0], size)


# ---------------------------------------------------------------------------


def criterion_1(seed: int = 0, reduced: bool = False) -> CriterionResult:
    """Closed-form measures agree with rejection Monte Carlo."""
    count = 50 if reduced else 200
    n_top = 3 if reduced else 4
    rng = oracles.make_rng(seed, 101)
    worst_z, imprecise, bad = 0.0, 0, []
    kinds = {"B_N": 0, "A_N_hyperbolic": 0, "level_shell": 0}
    for i in range(count):
        for kind in kinds:
            N = int(2 ** rng.integers(0, n_top + 1))
            c = float(rng.uniform(0.5, 2.0))
            s = int(rng.integers(0, 2 ** 63))
            if kind == "B_N":
                r = oracles.mes_B_N(float(rng.uniform(-(2 * N) ** 2, (2 * N) ** 2)),
                                    int(rng.integers(-4 * N, 4 * N + 1)), c, N, seed=s)
            elif kind == "A_N_hyperbolic":
                r = oracles.mes_A_N_hyperbolic(float(rng.uniform(-(2 * N) ** 2, (2 * N) ** 2)),
                                               float(rng.uniform(-2 * N, 2 * N)),
                                               int(rng.integers(-4 * N, 4 * N + 1)), c, N, seed=s)
            else:
                spec = oracles.ShellSpec(int(rng.integers(0, 21)),
                                         (float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1))),
                                         float(rng.uniform(-5, 5)), N)
                r = oracles.mes_level_shell(spec, seed=s)
            worst_z = max(worst_z, r.z_score)
            if not r.precise:
                imprecise += 1
            if not r.consistent:
                bad.append(r.row())
            kinds[kind] += 1
    return CriterionResult(1, "oracle consistency", not bad and imprecise == 0,
                           {"tuples_per_kind": count, "worst_z": worst_z,
                            "imprecise": imprecise, "inconsistent": bad[:5]})


def _measure_law(number, name, fn, seed, reduced):
    Ns = [4, 16, 64, 256] if reduced else [4, 16, 64, 256, 1024, 4096]
    per_n = {}
    for N in Ns:
        rng = oracles.make_rng(seed, 100 + number, N)
        per_n[N] = max(fn(rng, N) for _ in range(200)) / math.log(2 * N)
    spread = _spread(list(per_n.values()))
    return CriterionResult(number, name, spread < 3.0, {"max_over_log2N": per_n, "spread": spread})


def criterion_2(seed: int = 0, reduced: bool = False) -> CriterionResult:
    """max mes_B_N / log 2N varies by less than a factor 3 across N."""
    def one(rng, N):
        tau = float(_log_uniform_tau(rng, N, 1)[0])
        n = int(rng.integers(-2 * N, 2 * N + 1))
        return oracles.mes_B_N(tau, n, 1.0, N, mc=False).exact
    return _measure_law(2, "B_N measure law", one, seed, reduced)


def criterion_3(seed: int = 0, reduced: bool = False) -> CriterionResult:
    """Same gate for the hyperbolic set A_N."""
    def one(rng, N):
        tau = float(_log_uniform_tau(rng, N, 1)[0])
        xi = float(rng.uniform(-2 * N, 2 * N))
        n = int(rng.integers(-4 * N, 4 * N + 1))
        return oracles.mes_A_N_hyperbolic(tau, xi, n, 1.0, N, mc=False).exact
    return _measure_law(3, "A_N hyperbolic measure law", one, seed, reduced)


def criterion_4(seed: int = 0, reduced: bool = False) -> CriterionResult:
    """Parabolic measure: reduction route equals the direct sublevel route."""
    rng = oracles.make_rng(seed, 104)
    worst = 0.0
    for _ in range(100):
        N = int(2 ** rng.integers(0, 7))
        tau = float(rng.uniform(-(4 * N) ** 2, (4 * N) ** 2))
        xi = float(rng.uniform(-2 * N, 2 * N))
        n = int(rng.integers(-4 * N, 4 * N + 1))
        c = float(rng.uniform(0.25, 4.0))
        a = oracles.parabolic_reduced(tau, xi, n, c, N)
        b = oracles.parabolic_direct(tau, xi, n, c, N)
        worst = max(worst, abs(a - b) / max(abs(a), 1.0))
    return CriterionResult(4, "parabolic reduction identity", worst <= 1e-12, {"max_rel_diff": worst})


def criterion_5(seed: int = 0, reduced: bool = False) -> CriterionResult:
    """Fitted dispersive constants C1, C2 stable within a factor 2 across N."""
    Ns = [8, 16] if reduced else [8, 16, 32, 64]
    c1, c2 = {}, {}
    for N in Ns:
        t_long = np.geomspace(1e-4, 1.0, 60)
        t_short = np.geomspace(1.0 / N ** 2, 1.0 / N, 40)
        scan = propagator.dispersive_bound_scan(N, np.union1d(t_long, t_short))
        c1[N] = scan["C1"]
        lo = 1.0 / N ** 2 * (1 - 1e-12)
        c2[N] = max(r["ratio2"] for r in scan["rows"] if lo <= r["t"] <= 1.0 / N * (1 + 1e-12))
    s1, s2 = _spread(list(c1.values())), _spread(list(c2.values()))
    return CriterionResult(5, "kernel decay constants", s1 < 2.0 and s2 < 2.0,
                           {"C1": c1, "C2": c2, "C1_spread": s1, "C2_spread": s2})


def criterion_6(seed: int = 0, reduced: bool = False) -> CriterionResult:
    """Co-area identity: pi for A >= 0, 0 below, thickened form identically pi."""
    exact = all(oracles.coarea_delta_mass(a) == math.pi for a in (0.0, 1.0, 10.0))
    negative = all(oracles.coarea_delta_mass(a) == 0.0 for a in (-1e-9, -1.0, -10.0))
    thick = all(oracles.coarea_thickened(a, e) == math.pi
                for a in (0.0, 0.5, 1.0, 10.0, 1e6) for e in (1e-9, 1e-3, 0.1, 1.0))
    return CriterionResult(6, "co-area identity", exact and negative and thick,
                           {"delta_mass": exact, "negative_levels": negative, "thickened": thick})


def criterion_7(seed: int = 0, reduced: bool = False) -> CriterionResult:
    """schur_shell_sum / (log 2N)^2 within a factor 3 across N, per instance."""
    Ns = [8, 16, 32, 64] if reduced else [8, 16, 32, 64, 128, 256, 512]
    count = 10 if reduced else 50
    rng = oracles.make_rng(seed, 107)
    spreads, worst = [], None
    for i in range(count):
        a = float(rng.uniform(0.0, 20.0))
        r, rp = (float(v) for v in rng.uniform(-5.0, 5.0, 2))
        c, cp = (float(v) for v in rng.choice([0.0, 0.5], 2))
        ratios = [oracles.schur_shell_sum(oracles.SchurInstance(a, r, rp, c, cp, N)) / math.log(2 * N) ** 2
                  for N in Ns]
        sp = _spread(ratios)
        spreads.append(sp)
        if worst is None or sp > worst["spread"]:
            worst = {"a": a, "r": r, "r_prime": rp, "c": c, "c_prime": cp, "ratios": ratios, "spread": sp}
    return CriterionResult(7, "Schur shell bound", max(spreads) < 3.0,
                           {"instances": count, "N": Ns, "max_spread": max(spreads), "worst": worst})


def criterion_8(seed: int = 0, reduced: bool = False) -> CriterionResult:
    """Local Strichartz constants scale like N^{1 - 4/p} (p = 6, 8) and stay flat at p = 4."""
    Ns = [4, 8, 16] if reduced else [4, 8, 16, 32, 64]
    members = 16 if reduced else 64
    gates = {4: (-math.inf, 0.10), 6: (1 / 3 - 0.10, 1 / 3 + 0.10), 8: (0.40, 0.60)}
    details, ok = {}, True
    for p, (lo, hi) in gates.items():
        sup, fam_fits = {}, {}
        for fam in strichartz.FAMILIES:
            ens = strichartz.EnsembleSpec(fam, members, seed)
            vals = {N: strichartz.local_constant(N, p, ens).constant for N in Ns}
            fam_fits[fam] = strichartz.fit_scaling(vals.items()).exponent
            for N, v in vals.items():
                sup[N] = max(sup.get(N, 0.0), v)
        fit = strichartz.fit_scaling(sup.items())
        passed = lo <= fit.exponent <= hi
        ok = ok and passed
        details[f"p={p}"] = {"exponent": fit.exponent, "r_squared": fit.r_squared, "sup": sup,
                             "family_exponents": fam_fits, "gate": [lo, hi], "passed": passed}
    return CriterionResult(8, "local Strichartz scaling", ok, details)


def _global_members(N, members, seed):
    for fam in strichartz.FAMILIES:
        count = 1 if fam == "x_flat" else members  # x_flat members coincide after normalization
        for m in strichartz.EnsembleSpec(fam, count, seed).members(N):
            yield fam, m


def criterion_9(seed: int = 0, reduced: bool = False) -> CriterionResult:
    """Global mixed norms: (inf, 4) ~ N, (4, 8) ~ N^eps, Gaussian-window cross-check."""
    Ns = [4, 8, 16] if reduced else [4, 8, 16, 32, 64]
    members = 2 if reduced else 16
    gamma = 8
    sup_inf, sup_48, j_ratio = {}, {}, []
    for N in Ns:
        for fam, m in _global_members(N, members, seed):
            a = strichartz.global_mixed_norm(m, math.inf, 4, gamma, N=N)
            b = strichartz.global_mixed_norm(m, 4, 8, gamma, N=N)
            _, script_j = strichartz.gaussian_window_profile(m, N, gamma)
            sup_inf[N] = max(sup_inf.get(N, 0.0), a)
            sup_48[N] = max(sup_48.get(N, 0.0), b)
            j_ratio.append(script_j ** 0.125 / b)
    f_inf = strichartz.fit_scaling(sup_inf.items())
    f_48 = strichartz.fit_scaling(sup_48.items())
    jr = (min(j_ratio), max(j_ratio))
    ok_inf = 0.85 <= f_inf.exponent <= 1.15
    ok_48 = f_48.exponent <= 0.15
    ok_j = jr[0] >= 0.25 and jr[1] <= 4.0
    return CriterionResult(9, "global Strichartz estimates", ok_inf and ok_48 and ok_j,
                           {"gamma": gamma, "members_per_family": members,
                            "inf_4": {"exponent": f_inf.exponent, "sup": sup_inf, "passed": ok_inf},
                            "4_8": {"exponent": f_48.exponent, "sup": sup_48, "passed": ok_48},
                            "J_ratio_range": jr, "J_passed": ok_j})


def criterion_10(seed: int = 0, reduced: bool = False) -> CriterionResult:
    """The improved L^4 ratio stays bounded over all families and N."""
    Ns = [4, 8, 16] if reduced else [4, 8, 16, 32, 64]
    members = 16 if reduced else 64
    sup, argmax = {}, {}
    for N in Ns:
        for fam in strichartz.FAMILIES:
            for m in strichartz.EnsembleSpec(fam, members, seed).members(N):
                r = strichartz.improved_bound_ratio(m, N)
                if r > sup.get(N, 0.0):
                    sup[N], argmax[N] = r, (fam, m.member_id)
    fit = strichartz.fit_scaling(sup.items())
    const = max(sup.values())
    return CriterionResult(10, "improved L4 bound", fit.exponent <= 0.10,
                           {"constant": const, "sup": sup, "argmax": argmax, "exponent": fit.exponent})


def _solver_data(dom: DomainSpec, amp: float) -> SpectralField:
    x = dom.x_grid()[:, None]
    y = dom.y_grid()[None, :]
    u = amp * np.exp(-x ** 2 / 2) * (1 + 0.5 * np.cos(2 * np.pi * y)) * np.exp(0.3j * x)
    return forward_transform(PhysicalField(dom, u))


def criterion_11(seed: int = 0, reduced: bool = False) -> CriterionResult:
    """Conservation, second-order convergence and time reversibility of the splitting."""
    dom = DomainSpec(16.0, 128, 16, 2)
    u0 = _solver_data(dom, 0.15)
    details, ok = {}, True
    for k in ((1,) if reduced else (1, 2)):
        cfg = solver.SolveConfig(k, 1, 1e-3, 1.0, dom)
        tr = solver.integrate(u0, cfg, stride=50)
        dr = tr.drifts()
        back = solver.integrate(tr.states[-1], solver.SolveConfig(k, 1, -1e-3, -1.0, dom),
                                stride=10 ** 9, monitors=False).states[-1]
        rev = l2_norm(back - u0) / l2_norm(u0)

        def final(dt):
            return solver.integrate(u0, solver.SolveConfig(k, 1, dt, 1.0, dom),
                                    stride=10 ** 9, monitors=False).states[-1]

        ref = final(2.5e-4)
        e1, e2 = l2_norm(final(2e-3) - ref), l2_norm(final(1e-3) - ref)
        ratio = e1 / e2
        passed = (dr["mass_drift"] <= 1e-8 and dr["hamiltonian_drift"] <= 1e-6
                  and 3.2 <= ratio <= 4.8 and rev <= 1e-9)
        ok = ok and passed
        details[f"k={k}"] = dict(dr, halving_ratio=ratio, reversal=rev, passed=passed)
    details["amplitude"] = 0.15
    return CriterionResult(11, "solver physics", ok, details)


def _small_data(k: int, dom: DomainSpec, size: float = 1e-2) -> SpectralField:
    xi = dom.xi()[:, None]
    kk = dom.k_index()[None, :]
    c = np.exp(-xi ** 2 / (2 * 0.2 ** 2)) * (np.abs(kk) <= 1) * np.exp(-6j * np.pi * xi)
    F = project_leq(SpectralField(dom, c.astype(complex)), 1)
    return F.with_coeffs(F.coeffs * (size / sobolev_norm(F, critical_index(k))))


def picard_contraction(u0: SpectralField, cfg, horizon: float = 1.0, iters: int = 4):
    """Contraction factor of the Picard map near u0.

    The max of consecutive residual ratios (only those above roundoff) and
    Lipschitz quotients against w0 in {1.5 u0, 0.5 u0, i u0}.
    Returns (factor, trace, ratios, quotients).
    """
    size = sobolev_norm(u0, critical_index(cfg.k))
    pt = solver.picard_iterate(u0, horizon, iters, cfg)
    floor = 1e-12 * size  # residual ratios below this level only measure roundoff
    ratios = [r1 / r0 for r0, r1 in zip(pt.residuals, pt.residuals[1:]) if r0 > floor]
    lips = [solver.picard_lipschitz(u0, u0.with_coeffs(f * u0.coeffs), horizon, cfg)
            for f in (1.5, 0.5, 1j)]
    return max(ratios + lips), pt, ratios, lips


def criterion_12(seed: int = 0, reduced: bool = False) -> CriterionResult:
    """Picard contraction and scattering Cauchy gate for small critical data."""
    dom = DomainSpec(1024.0, 4096, 4, 1)
    details, ok = {}, True
    for k in ((2,) if reduced else (2, 3)):
        s = critical_index(k)
        u0 = _small_data(k, dom)
        size = sobolev_norm(u0, s)
        cfg = solver.SolveConfig(k, 1, 0.01, 40.0, dom)
        contraction, pt, ratios, lips = picard_contraction(u0, cfg, 1.0, 4)
        tr = solver.integrate(u0, cfg, stride=100)
        sc = solver.scattering_profile(tr, s, times=np.arange(20.0, 41.0, 1.0))
        cauchy = sc.sup_diff(20.0, 40.0) / size
        passed = contraction <= 0.5 and not pt.diverged and cauchy <= 1e-3
        ok = ok and passed
        details[f"k={k}"] = {"data_norm": size, "picard_residuals": pt.residuals,
                             "residual_ratios": ratios, "lipschitz": lips,
                             "contraction": contraction, "cauchy_over_norm": cauchy, "passed": passed}
    return CriterionResult(12, "well-posedness dynamics", ok, details)


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 13)}

# rough full / reduced wall times in seconds on one core
COST = {1: (90, 25), 2: (15, 5), 3: (15, 5), 4: (2, 2), 5: (120, 15), 6: (1, 1),
        7: (100, 10), 8: (150, 10), 9: (500, 20), 10: (60, 5), 11: (45, 20), 12: (280, 140)}


def run_criterion(i: int, seed: int = 0, reduced: bool = False) -> CriterionResult:
    t0 = time.perf_counter()
    res = CRITERIA[i](seed=seed, reduced=reduced)
    res.runtime = time.perf_counter() - t0
    res.reduced = reduced
    log.info(res.line())
    return res


def plan(budget_min: float, which=None) -> dict:
    """Which criteria run reduced: the most expensive ones are cut until the estimate fits."""
    which = sorted(which or CRITERIA)
    budget = 60.0 * budget_min
    reduced = {i: False for i in which}
    total = sum(COST[i][0] for i in which)
    for i in sorted(which, key=lambda j: COST[j][0] - COST[j][1], reverse=True):
        if total <= budget:
            break
        reduced[i] = True
        total -= COST[i][0] - COST[i][1]
    return reduced


def accept_all(budget_min: float = 30.0, seed: int = 0, which=None) -> dict:
    """Run the criteria within a wall-time budget.

    Returns ``{"results": [...], "partial": bool, "reduced": [...]}``; a
    criterion is skipped (and the summary flagged partial) once the budget
    is exhausted.
    """
    reduced = plan(budget_min, which)
    deadline = time.perf_counter() + 60.0 * budget_min
    results, partial = [], any(reduced.values())
    for i in sorted(reduced):
        if time.perf_counter() > deadline:
            results.append(CriterionResult(i, CRITERIA[i].__doc__.splitlines()[0], False, skipped=True))
            partial = True
            continue
        results.append(run_criterion(i, seed, reduced[i]))
    return {"results": results, "partial": partial,
            "reduced": [i for i, r in reduced.items() if r], "budget_min": budget_min, "seed": seed}
