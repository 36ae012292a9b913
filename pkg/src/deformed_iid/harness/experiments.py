"""Experiment definitions.

Each experiment provides

* ``units(cfg)``: number of independent units (trials) to dispatch,
* ``trial(cfg, i)``: a dict of recorded numbers for unit ``i``; keys starting
  with an underscore hold arrays used in aggregation but not serialized,
* ``criteria(cfg, records)``: (extra summary, pass/fail list) computed only
  from the recorded numbers,
* ``artifacts(cfg, records)``: files to write next to the report.

Unit ``i`` draws all its randomness from ``Seed(cfg.seed, channel * 2**32 + i)``
so results do not depend on scheduling.
"""

from __future__ import annotations

import functools
import math
from typing import Callable

import numpy as np

from .. import algorithms as alg
from .. import concentration as conc
from ..bounds import alignment_limit, theorem_query_budget, two_side_target
from ..ensembles import (DeformedSpec, EntryLaw, Field, Seed, _draw_entries, _haar_frame, build_planted,
                         sample_cginoe, sample_goe, sample_sphere)
from ..errors import DeformedIIDError
from ..query_model import (QueryLedger, QueryOracle, ThresholdSchedule, append_output_query, ledger_dump,
                           overlap_bound, projected_two_side_responses, reveal_source, tau_k)
from ..spectral import (alignment, circular_law_stats, detect_outliers, eigen, outlier_roots_via_resolvent,
                        phase_aligned_distance, spectral_gap)
from .io import csv_text, eigenvalue_rows, json_text, svg_scatter_text

CHANNEL = 2**32


def trial_seed(cfg, i: int, channel: int = 0) -> Seed:
    return Seed(int(cfg.seed), channel * CHANNEL + int(i))


def criterion(name: str, value, lo=None, hi=None, detail: str = "") -> dict:
    ok = value is not None and isinstance(value, (int, float)) and math.isfinite(value)
    if ok and lo is not None:
        ok = value >= lo
    if ok and hi is not None:
        ok = value <= hi
    return {"name": name, "value": None if value is None else float(value),
            "lo": None if lo is None else float(lo), "hi": None if hi is None else float(hi),
            "passed": bool(ok), "detail": detail}


def ok_records(records: list[dict]) -> list[dict]:
    return [r for r in records if r.get("status") == "ok"]


def column(records: list[dict], key: str) -> np.ndarray:
    return np.array([r[key] for r in records if r.get(key) is not None], dtype=float)


def _mean(x: np.ndarray):
    return float(np.mean(x)) if x.size else None


def _max(x: np.ndarray):
    return float(np.max(x)) if x.size else None


def _min(x: np.ndarray):
    return float(np.min(x)) if x.size else None


def binomial_slack(p: float, n: int) -> float:
    """p + 3 sqrt(p(1-p)/n), the allowed violation frequency at level p."""
    return p + 3.0 * math.sqrt(p * (1.0 - p) / n) if n else 1.0


# ---------------------------------------------------------------- esd

def esd_trial(cfg, i):
    spec = DeformedSpec(d=cfg.d, lambdas=cfg.lambdas, shape="hermitian-spike", entry_law=cfg.entry_law,
                        seed=trial_seed(cfg, i))
    s = eigen(build_planted(spec).matrix)
    st = circular_law_stats(s, cfg.r)
    return {"radial_ks": st.radial_ks, "angular_ks": st.angular_ks, "bulk_count": st.bulk_count,
            "outlier_count": st.outlier_count, "clipped_count": st.clipped_count,
            "abs_lambda_next": float(abs(s.eigenvalues[cfg.r])), "_eigenvalues": s.eigenvalues}


def esd_criteria(cfg, records):
    thr = cfg.options["ks_threshold"]
    return {}, [
        criterion("max_radial_ks", _max(column(records, "radial_ks")), hi=thr),
        criterion("max_angular_ks", _max(column(records, "angular_ks")), hi=thr),
    ]


def esd_artifacts(cfg, records):
    first = next((r for r in records if "_eigenvalues" in r), None)
    if first is None:
        return []
    z = first["_eigenvalues"]
    return [("esd_eigenvalues.csv", csv_text(["re", "im"], eigenvalue_rows(z))),
            ("esd_scatter.svg", svg_scatter_text(z))]


# ---------------------------------------------------------------- outliers

def outliers_trial(cfg, i):
    opt = cfg.options
    spec = DeformedSpec(d=cfg.d, lambdas=cfg.lambdas, shape="hermitian-spike", entry_law=cfg.entry_law,
                        seed=trial_seed(cfg, i))
    s = eigen(build_planted(spec).matrix)
    out, _ = detect_outliers(s, opt["epsilon"])
    rec = {"n_outliers": int(out.size), "abs_lambda_next": float(abs(s.eigenvalues[cfg.r]))}
    for j in range(cfg.r):
        rec[f"lambda_{j + 1}_re"] = float(s.eigenvalues[j].real)
        rec[f"lambda_{j + 1}_im"] = float(s.eigenvalues[j].imag)
    if i < opt["resolvent_trials"]:
        rec.update(_resolvent_crosscheck(cfg, i))
    return rec


def _resolvent_crosscheck(cfg, i):
    opt = cfg.options
    spec = DeformedSpec(d=opt["resolvent_d"], lambdas=cfg.lambdas, shape="hermitian-spike",
                        entry_law=cfg.entry_law, seed=trial_seed(cfg, i, 1))
    inst = build_planted(spec)
    try:
        roots = outlier_roots_via_resolvent(inst, opt["resolvent_epsilon"])
        found, _ = detect_outliers(eigen(inst.matrix), 2.0 * opt["resolvent_epsilon"])
    except DeformedIIDError as exc:
        return {"resolvent_max_diff": None, "resolvent_error": f"{type(exc).__name__}: {exc}"}
    if found.size != roots.size:
        return {"resolvent_max_diff": None,
                "resolvent_error": f"{found.size} eigensolver outliers against {roots.size} roots"}
    diff = max(float(np.min(np.abs(found - z))) for z in roots)
    return {"resolvent_max_diff": diff}


def outliers_criteria(cfg, records):
    opt = cfg.options
    tol = opt["location_tolerance"]
    crit = []
    for j, lam in enumerate(cfg.lambdas, start=1):
        crit.append(criterion(f"mean_lambda_{j}", _mean(column(records, f"lambda_{j}_re")),
                              lo=lam - tol, hi=lam + tol))
    lo, hi = opt["bulk_edge_interval"]
    crit.append(criterion("mean_abs_lambda_next", _mean(column(records, "abs_lambda_next")), lo=lo, hi=hi))
    counts = column(records, "n_outliers")
    crit.append(criterion("fraction_with_r_outliers",
                          float(np.mean(counts == cfg.r)) if counts.size else None, lo=1.0))
    checked = [r for r in records if "resolvent_max_diff" in r]
    if opt["resolvent_trials"] > 0:
        diffs = [r["resolvent_max_diff"] for r in checked]
        worst = None if (not diffs or any(x is None for x in diffs)) else max(diffs)
        crit.append(criterion("resolvent_root_max_diff", worst, hi=opt["root_tolerance"],
                              detail=f"{len(checked)} trials cross-checked at d={opt['resolvent_d']}"))
    return {}, crit


# ---------------------------------------------------------------- alignment

def alignment_trial(cfg, i):
    opt = cfg.options
    spec = DeformedSpec(d=cfg.d, lambdas=cfg.lambdas[:1], shape="one-side-rank1", entry_law=cfg.entry_law,
                        seed=trial_seed(cfg, i))
    inst = build_planted(spec)
    s = eigen(inst.matrix)
    rep = alignment(inst, s)
    rec = {"overlap_sq": float(rep.overlaps[0, 0]), "phase_aligned_distance": rep.phase_aligned_distance,
           "raw_distance": rep.raw_distance, "lambda_1_re": float(s.eigenvalues[0].real),
           "gap": spectral_gap(s)}
    if i < opt["multi_trials"]:
        spec2 = DeformedSpec(d=opt["multi_d"], lambdas=tuple(opt["multi_lambdas"]), shape="hermitian-spike",
                             entry_law=cfg.entry_law, seed=trial_seed(cfg, i, 1))
        inst2 = build_planted(spec2)
        rep2 = alignment(inst2, eigen(inst2.matrix))
        for j, w in enumerate(rep2.weighted_sums, start=1):
            rec[f"multi_weighted_sum_{j}"] = float(w)
    return rec


def alignment_criteria(cfg, records):
    opt = cfg.options
    lam = cfg.lambdas[0]
    limit = alignment_limit(lam) ** 2
    tol = opt["overlap_tolerance"]
    crit = [criterion("mean_overlap_sq", _mean(column(records, "overlap_sq")), lo=limit - tol, hi=limit + tol,
                      detail=f"limit {limit:.6f}"),
            criterion("mean_gap", _mean(column(records, "gap")), lo=(1 - 1 / lam) - 0.05, hi=(1 - 1 / lam) + 0.05)]
    if opt["multi_trials"] > 0:
        for j, (lj, tj) in enumerate(zip(opt["multi_lambdas"], opt["multi_tolerances"]), start=1):
            target = lj * lj - 1.0
            crit.append(criterion(f"mean_weighted_sum_{j}", _mean(column(records, f"multi_weighted_sum_{j}")),
                                  lo=target - tj, hi=target + tj, detail=f"target {target:g}"))
    return {"overlap_limit": limit}, crit


# ---------------------------------------------------------------- power

def _power_gaps(cfg):
    return [cfg.gap] if cfg.gap is not None else list(cfg.options["gaps"])


def power_trial(cfg, i):
    opt = cfg.options
    eps = opt["epsilon"]
    d = cfg.d
    v0 = alg.random_start(d, trial_seed(cfg, i))
    e1 = np.zeros(d)
    e1[0] = 1.0
    rec = {}
    stop = lambda t, v: phase_aligned_distance(v, e1) <= eps  # noqa: E731
    for j, g in enumerate(_power_gaps(cfg)):
        bound = alg.power_method_iteration_bound(1.0, d, eps, g)
        res = alg.power_method(alg.example1(d, g), v0, max_iters=int(math.ceil(10 * bound)), stop=stop)
        rec[f"iterations_{j}"] = res.iterations
        rec[f"converged_{j}"] = bool(res.stopped_early)
        rec[f"bound_{j}"] = bound
    theta = opt["example2_theta"]
    g0 = _power_gaps(cfg)[0]
    A2 = alg.example2(theta, g0)
    sig = alg.example2_sigma(theta)
    v1 = sig[:, 0] / np.linalg.norm(sig[:, 0])
    kappa = alg.example2_condition_number(theta)
    bound2 = alg.power_method_iteration_bound(kappa, 2, eps, g0)
    res2 = alg.power_method(A2, alg.random_start(2, trial_seed(cfg, i, 1)), max_iters=int(math.ceil(10 * bound2)),
                            stop=lambda t, v: phase_aligned_distance(v, v1) <= eps)
    rec.update({"ex2_iterations": res2.iterations, "ex2_bound": bound2, "ex2_kappa": kappa,
                "ex2_converged": bool(res2.stopped_early)})
    return rec


def power_criteria(cfg, records):
    opt = cfg.options
    factor = opt["bound_factor"]
    gaps = _power_gaps(cfg)
    crit = []
    extra = {}
    means = []
    for j, g in enumerate(gaps):
        it = column(records, f"iterations_{j}")
        bound = alg.power_method_iteration_bound(1.0, cfg.d, opt["epsilon"], g)
        means.append(_mean(it))
        extra[f"gap_{j}"] = {"gap": g, "bound": bound, "mean_iterations": _mean(it)}
        conv = column(records, f"converged_{j}")
        crit.append(criterion(f"all_converged_gap_{g:g}", float(np.mean(conv)) if conv.size else None, lo=1.0))
        crit.append(criterion(f"min_iterations_over_bound_gap_{g:g}", _min(it / bound) if it.size else None,
                              lo=1.0 / factor))
        crit.append(criterion(f"max_iterations_over_bound_gap_{g:g}", _max(it / bound) if it.size else None,
                              hi=factor))
    lo, hi = opt["ratio_interval"]
    for j in range(1, len(gaps)):
        ratio = means[j] / means[j - 1] if means[j] is not None and means[j - 1] else None
        crit.append(criterion(f"iteration_ratio_gap_{gaps[j - 1]:g}_to_{gaps[j]:g}", ratio, lo=lo, hi=hi))
    ex2 = column(records, "ex2_iterations") / column(records, "ex2_bound") if records else np.zeros(0)
    crit.append(criterion("example2_max_iterations_over_bound", _max(ex2), hi=1.0,
                          detail=f"theta={opt['example2_theta']:.6f}"))
    return extra, crit


# ---------------------------------------------------------------- querybound

def querybound_trial(cfg, i):
    k_max = int(cfg.options["k_max"])
    lam = 1.0 / (1.0 - cfg.gap)
    sched = ThresholdSchedule.from_gap(cfg.gap, cfg.delta, cfg.d)
    spec = DeformedSpec(d=cfg.d, lambdas=(lam,), shape="one-side-rank1", entry_law=cfg.entry_law,
                        seed=trial_seed(cfg, i))
    inst = build_planted(spec)
    bounds = [overlap_bound(sched, k) for k in range(1, k_max + 1)]

    pm_oracle = QueryOracle(inst, budget=k_max)
    res = alg.power_method(pm_oracle, alg.random_start(cfg.d, trial_seed(cfg, i, 1)), max_iters=k_max)
    u = reveal_source(pm_oracle).truth
    pm_ledger = pm_oracle.ledger
    pm_phi = [pm_ledger.potential(u, k) for k in range(1, k_max + 1)]
    pm_out = append_output_query(pm_ledger, res.iterate).potential(u)

    bl_oracle = QueryOracle(inst, budget=k_max)
    vhat = alg.random_query_baseline(bl_oracle, k_max, trial_seed(cfg, i, 2))
    bl_ledger = bl_oracle.ledger
    bl_phi = [bl_ledger.potential(u, k) for k in range(1, k_max + 1)]
    bl_out = append_output_query(bl_ledger, vhat).potential(u)

    rec = {
        "pm_violation": bool(any(p > b for p, b in zip(pm_phi, bounds))),
        "bl_violation": bool(any(p > b for p, b in zip(bl_phi, bounds))),
        "pm_phi": pm_phi, "bl_phi": bl_phi,
        "pm_final_phi": pm_phi[-1], "bl_final_phi": bl_phi[-1],
        "pm_output_phi": pm_out, "bl_output_phi": bl_out,
        "pm_output_overlap_sq": float(abs(np.vdot(u, res.iterate)) ** 2),
        "bl_output_overlap_sq": float(abs(np.vdot(u, vhat)) ** 2),
        "pm_residuals": list(res.residual_history),
        "queries_used": pm_oracle.count + bl_oracle.count,
    }
    if i == 0:
        rec["_ledger_dump"] = ledger_dump(pm_ledger, u, sched)
    return rec


def querybound_criteria(cfg, records):
    n = len(records)
    allowed = binomial_slack(cfg.delta, n)
    k_max = int(cfg.options["k_max"])
    sched = ThresholdSchedule.from_gap(cfg.gap, cfg.delta, cfg.d)
    extra = {"bound_k": [overlap_bound(sched, k) for k in range(1, k_max + 1)],
             "tau_k": [tau_k(sched, k) for k in range(1, k_max + 1)]}
    for tag in ("pm", "bl"):
        phis = np.array([r[f"{tag}_phi"] for r in records], dtype=float)
        if phis.size:
            extra[f"{tag}_mean_phi_k"] = phis.mean(axis=0).tolist()
    crit = []
    for tag, label in (("pm", "power_method"), ("bl", "random_baseline")):
        v = column(records, f"{tag}_violation")
        crit.append(criterion(f"{label}_violation_fraction", float(np.mean(v)) if v.size else None, hi=allowed,
                              detail=f"delta={cfg.delta}, trials={n}"))
    return extra, crit


def querybound_artifacts(cfg, records):
    first = next((r for r in records if r.get("trial") == 0 and r.get("status") == "ok"), None)
    if first is None:
        return []
    sched = ThresholdSchedule.from_gap(cfg.gap, cfg.delta, cfg.d)
    rows = [(k, phi, tau_k(sched, k), overlap_bound(sched, k), first["pm_residuals"][k - 1])
            for k, phi in enumerate(first["pm_phi"], start=1)]
    out = [("querybound_trajectory.csv", csv_text(["k", "phi", "tau_k", "bound_k", "residual"], rows))]
    if "_ledger_dump" in first:
        out.append(("querybound_ledger.json", json_text(first["_ledger_dump"])))
    return out


# ---------------------------------------------------------------- twoside

@functools.lru_cache(maxsize=8)
def _twoside_setup(seed: int, d: int, lam: float, history: int, law: str):
    rng = Seed(seed, 3 * CHANNEL).generator()
    Q = _haar_frame(rng, d, history + 1, Field.REAL)
    u_l = sample_sphere(d, Field.REAL, rng)
    u_r = sample_sphere(d, Field.REAL, rng)
    M0 = _draw_entries(rng, (d, d), EntryLaw(law)) / math.sqrt(d) + lam * np.outer(u_l, u_r)
    ledger = QueryLedger(d, "two-side")
    for j in range(history):
        q = Q[:, j]
        ledger.record(q, M0 @ q, M0.T @ q)
    return ledger, Q[:, history].copy(), u_l, u_r


def twoside_trial(cfg, i):
    d = cfg.d
    lam = float(cfg.lambdas[0])
    ledger, v, u_l, u_r = _twoside_setup(int(cfg.seed), d, lam, int(cfg.options["history"]), cfg.entry_law)
    G = _draw_entries(trial_seed(cfg, i).generator(), (d, d), EntryLaw(cfg.entry_law)) / math.sqrt(d)
    M = G + lam * np.outer(u_l, u_r)
    wt, zt = projected_two_side_responses(ledger, v, M)
    plus, minus = wt + zt, wt - zt
    rec = {"plus_norm_sq": float(plus @ plus), "minus_norm_sq": float(minus @ minus),
           "_plus": plus, "_minus": minus}
    if i < cfg.options["overlap_trials"]:
        rec.update(_twoside_overlap(cfg, i))
    return rec


def _twoside_overlap(cfg, i):
    lam = float(cfg.lambdas[0])
    spec = DeformedSpec(d=cfg.d, lambdas=(lam,), shape="two-side-rank1", entry_law=cfg.entry_law,
                        seed=trial_seed(cfg, i, 1))
    inst = build_planted(spec)
    T = theorem_query_budget(cfg.d, two_side=True, lam=lam)
    oracle = QueryOracle(inst, mode="two-side", budget=T)
    rng = trial_seed(cfg, i, 2).generator()
    v = sample_sphere(cfg.d, Field.REAL, rng)
    vl, vr = sample_sphere(cfg.d, Field.REAL, rng), sample_sphere(cfg.d, Field.REAL, rng)
    for _ in range(T):
        w, z = oracle.query(v)
        vl, vr = w / np.linalg.norm(w), z / np.linalg.norm(z)
        v = vr
    u_l, u_r = reveal_source(oracle).truth
    total = float(abs(np.vdot(vl, u_l)) ** 2 + abs(np.vdot(vr, u_r)) ** 2)
    return {"overlap_sum": total, "overlap_reached": bool(total >= two_side_target(lam)), "overlap_budget": T}


def twoside_criteria(cfg, records):
    d = cfg.d
    lam = float(cfg.lambdas[0])
    ledger, v, u_l, u_r = _twoside_setup(int(cfg.seed), d, lam, int(cfg.options["history"]), cfg.entry_law)
    plus = np.array([r["_plus"] for r in records])
    minus = np.array([r["_minus"] for r in records])
    n = plus.shape[0]
    extra, crit = {}, []
    if n >= 2:
        V = np.asarray(ledger.basis)
        P = np.eye(d) - V @ V.T
        target = (2.0 / d) * P @ (np.eye(d) + np.outer(v, v)) @ P
        cov = np.cov(plus, rowvar=False)
        rel = float(np.linalg.norm(cov - target, 2) / np.linalg.norm(target, 2))
        xc = plus - plus.mean(axis=0)
        yc = minus - minus.mean(axis=0)
        cross = xc.T @ yc / (n - 1)
        limit = cfg.options["cross_sigma"] / math.sqrt(n) * (2.0 / d)
        worst = float(np.abs(cross).max())
        expected_mean = lam * P @ (u_l * (u_r @ v) + u_r * (u_l @ v))
        mean_err = plus.mean(axis=0) - expected_mean
        extra = {"covariance_rel_error": rel, "cross_cov_max_abs": worst, "cross_cov_limit": limit,
                 "cross_cov_max_in_sigma": worst / (limit / cfg.options["cross_sigma"]),
                 "cross_cov_entries_over_limit": int(np.count_nonzero(np.abs(cross) > limit)),
                 "mean_max_abs_error_in_se": float(np.max(np.abs(mean_err)) / math.sqrt(4.0 / d / n))}
        crit.append(criterion("covariance_rel_op_error", rel, hi=cfg.options["covariance_tolerance"],
                              detail=f"draws={n}, d={d}"))
        crit.append(criterion("cross_covariance_max_abs", worst, hi=limit,
                              detail=f"{extra['cross_cov_entries_over_limit']} of {d * d} entries over the limit"))
    reached = column(records, "overlap_reached")
    if reached.size:
        crit.append(criterion("two_side_target_reached_fraction", float(np.mean(reached)),
                              hi=binomial_slack(cfg.delta, reached.size),
                              detail=f"target {two_side_target(lam):g}, budget {int(records[0]['overlap_budget'])}"))
    return extra, crit


# ---------------------------------------------------------------- concentration

HW_ORDER = ("real-stiefel", "complex-matrix", "complex-stiefel-r1", "complex-stiefel-general",
            "general-case-real", "general-case-complex")
CONC_TESTS = ("entropy-tail", *HW_ORDER, "cross-moment", "uWu-moment", "gaussian-ratio", "resolvent-norm")


def _hw_matrix(variant: str, d: int, seed: Seed) -> np.ndarray:
    if variant == "real-stiefel":
        return sample_goe(d, seed)
    if variant.startswith("general-case"):
        return sample_cginoe(d, seed)
    X = sample_cginoe(d, seed)
    return (X + X.conj().T) / math.sqrt(2.0)


def concentration_units(cfg):
    return len(CONC_TESTS) if cfg.trials > 0 else 0


def concentration_trial(cfg, i):
    opt = cfg.options
    name = CONC_TESTS[i]
    seed = trial_seed(cfg, i)
    if name == "entropy-tail":
        k = int(opt["entropy_k"])
        V = _haar_frame(seed.generator(1), cfg.d, 2 * k, Field.REAL)
        rep = conc.entropy_tail_empirical(cfg.d, V, opt["entropy_tau"], int(opt["entropy_draws"]), seed)
        return {"subtest": name, **_tail_fields(rep)}
    if name in HW_ORDER:
        A = _hw_matrix(name, cfg.d, trial_seed(cfg, i, 1))
        rep = conc.hw_empirical(A, int(opt["hw_r"]), name, opt["hw_t"], cfg.trials, seed)
        return {"subtest": name, **_tail_fields(rep)}
    if name == "cross-moment":
        means, ses = conc.moment_cross_table(opt["moment_d"], int(opt["moment_k_max"]), cfg.entry_law,
                                             int(opt["moment_trials"]), seed)
        return {"subtest": name, "means_re": means.real.tolist(), "means_im": means.imag.tolist(),
                "stderr": ses.tolist(), "draws": int(opt["moment_trials"])}
    if name == "uWu-moment":
        reps = conc.moment_uWu_table(opt["moment_d"], int(opt["moment_k_max"]), int(opt["moment_trials"]), seed)
        return {"subtest": name, "means": [float(r.mean) for r in reps], "stderr": [r.stderr for r in reps],
                "bounds": [r.bound for r in reps], "draws": int(opt["moment_trials"])}
    if name == "gaussian-ratio":
        mu = np.array([1.0, 0.0, 0.0])
        rep = conc.gaussian_ratio_empirical(mu, np.eye(3), 1.0, int(opt["ratio_samples"]), seed)
        return {"subtest": name, "estimate": float(rep.mean), "stderr": rep.stderr, "closed_form": rep.target,
                "draws": rep.trials}
    if name == "resolvent-norm":
        lam = opt["resolvent_lambda"]
        norms = [conc.resolvent_norm_check(lam, int(opt["resolvent_d"]), Seed(int(cfg.seed), i * CHANNEL + j))[0]
                 for j in range(int(opt["resolvent_trials"]))]
        bound, proof_bound = conc.resolvent_bounds(lam)
        return {"subtest": name, "norms": norms, "bound": bound, "proof_bound": proof_bound,
                "draws": len(norms)}
    raise ValueError(name)


def _tail_fields(rep: conc.TailTestReport) -> dict:
    d = rep.to_dict()
    return {"variant": d["variant"], "params": d["params"], "bound": d["bound"], "frequency": d["frequency"],
            "draws": d["trials"], "interval": d["interval"], "interval_lo": d["interval"][0],
            "interval_hi": d["interval"][1]}


def concentration_criteria(cfg, records):
    opt = cfg.options
    crit = []
    for r in records:
        name = r["subtest"]
        if "frequency" in r:
            width = r["interval_hi"] - r["interval_lo"]
            crit.append(criterion(f"{name}_frequency", r["frequency"], hi=r["bound"] + width,
                                  detail=f"bound {r['bound']:.6g}, draws {r['draws']}"))
        elif name == "cross-moment":
            m = np.array(r["means_re"]) + 1j * np.array(r["means_im"])
            eye = np.eye(m.shape[0])
            dev = np.abs(m - eye)
            crit.append(criterion("cross_moment_diagonal_max_dev", float(np.max(np.diag(dev))),
                                  hi=opt["moment_tolerance"]))
            crit.append(criterion("cross_moment_offdiagonal_max_abs", float(np.max(dev[~eye.astype(bool)])),
                                  hi=opt["moment_tolerance"]))
        elif name == "uWu-moment":
            for k, (m, se, b) in enumerate(zip(r["means"], r["stderr"], r["bounds"]), start=1):
                crit.append(criterion(f"uWu_moment_k{k}", m, hi=b + 2 * conc.Z95 * se, detail=f"bound {b:.6g}"))
        elif name == "gaussian-ratio":
            rel = abs(r["estimate"] - r["closed_form"]) / r["closed_form"]
            crit.append(criterion("gaussian_ratio_rel_error", rel, hi=opt["ratio_tolerance"]))
        elif name == "resolvent-norm":
            crit.append(criterion("resolvent_norm_max", max(r["norms"]) if r["norms"] else None,
                                  hi=opt["resolvent_cap"], detail=f"stated bound {r['bound']:g}"))
    return {}, crit


# ---------------------------------------------------------------- registry

class Experiment:
    def __init__(self, trial: Callable, criteria: Callable, artifacts: Callable | None = None,
                 units: Callable | None = None):
        self.trial = trial
        self.criteria = criteria
        self.artifacts = artifacts or (lambda cfg, records: [])
        self.units = units or (lambda cfg: int(cfg.trials))


REGISTRY = {
    "esd": Experiment(esd_trial, esd_criteria, esd_artifacts),
    "outliers": Experiment(outliers_trial, outliers_criteria),
    "alignment": Experiment(alignment_trial, alignment_criteria),
    "power": Experiment(power_trial, power_criteria),
    "querybound": Experiment(querybound_trial, querybound_criteria, querybound_artifacts),
    "twoside": Experiment(twoside_trial, twoside_criteria),
    "concentration": Experiment(concentration_trial, concentration_criteria, units=concentration_units),
}
