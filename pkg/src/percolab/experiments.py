"""Experiment runners: one function per service command, each mapping a
validated request to a report dict plus named tables.

All randomness inside a runner derives from the request's master seed;
rerunning the same request reproduces identical table bodies byte for
byte.  The resolved bond density (p = "auto" goes through estimate_pc)
is echoed in the report so manifests pin it.
"""

from __future__ import annotations

import functools
import math
import time
from fractions import Fraction

import numpy as np

from . import cluster_stats as cs
from . import compare, diagrams, genfunc, ise, tree_oracle
from . import schemas
from .errors import InvalidArgumentError
from .schemas import RunResponse, Table


@functools.lru_cache(maxsize=32)
def _cached_pc(d: int, radius: int, samples_per_probe: int, tol: float,
               seed: int) -> float:
    return diagrams.estimate_pc(d, radius, samples_per_probe, tol, seed)


def resolve_p(p, d: int, seed: int) -> tuple:
    """Resolve 'auto' to the estimated critical density (cached)."""
    if p == "auto":
        return _cached_pc(d, 16, 60_000, 2e-3, seed), True
    return float(p), False


def _fmt(x):
    if isinstance(x, float):
        return float(f"{x:.12g}")
    return x


def _response(command, config, report, tables, t0) -> RunResponse:
    tables = {k: Table(header=h, rows=[[_fmt(v) for v in row] for row in r])
              for k, (h, r) in tables.items()}
    return RunResponse(command=command, config=config, report=report,
                       tables=tables, wall_time_s=time.time() - t0)


def run_sizes(req: schemas.SizesRequest) -> RunResponse:
    t0 = time.time()
    p, auto = resolve_p(req.p, req.d, req.seed)
    h = cs.estimate_size_pmf(p, req.d, req.samples, req.cap, req.seed)
    rows = [[int(n), int(h.counts[n]), h.counts[n] / h.total,
             math.sqrt(h.counts[n]) / h.total] for n in h.sizes]
    dyadic = [[lo, hi, c, c / (h.total * (hi - lo))]
              for lo, hi, c in cs.dyadic_bins(h, 1, req.cap)]
    report = {"p": p, "p_auto": auto, "total": h.total,
              "truncated": h.truncated_count, "cap": h.cap}
    try:
        fit = cs.fit_power_law(h, req.fit_min, req.fit_max)
        report["fit"] = {"exponent": fit.exponent, "stderr": fit.stderr,
                         "n_range": list(fit.n_range), "nbins": fit.nbins}
    except Exception as e:  # fit is best-effort in the runner
        report["fit_error"] = str(e)
    tables = {"sizes": (["n", "count", "pmf", "stderr"], rows),
              "dyadic": (["bin_lo", "bin_hi", "count", "density"], dyadic)}
    return _response("sizes", req.model_dump(), report, tables, t0)


def _k_grid(req: schemas.QnRequest) -> np.ndarray:
    return np.sqrt(np.linspace(0.0, req.k2_max, req.k_points))


def run_qn(req: schemas.QnRequest, want_compare: bool) -> RunResponse:
    t0 = time.time()
    p, auto = resolve_p(req.p, req.d, req.seed)
    run = cs.run_windowed(p, req.d, req.n, req.window, req.samples, req.seed,
                          target_accepted=req.target_accepted,
                          max_sites_per_cluster=req.max_sites_per_cluster)
    ks = _k_grid(req)
    rep = compare.compare_qn_to_ise(run, req.n, ks, nboot=req.nboot,
                                    seed=req.seed)
    rows = [[r.k, r.k * r.k, r.empirical, r.stderr] +
            ([r.target, r.empirical - r.target] if want_compare else [])
            for r in rep.rows]
    header = ["k", "k2", "qn_hat", "stderr"] + \
        (["a2_ise", "diff"] if want_compare else [])
    report = {"p": p, "p_auto": auto, "accepted": rep.accepted,
              "attempts": run.attempts, "D": rep.D,
              "m2_axis_scaled": run.second_moment_scaled()}
    if want_compare:
        report["sup_distance"] = rep.sup_distance
        report["sup_stderr"] = rep.sup_stderr
    name = "compare_qn" if want_compare else "qn_profile"
    return _response(name, req.model_dump(), report,
                     {"profile": (header, rows)}, t0)


def run_q3(req: schemas.Q3Request, want_compare: bool) -> RunResponse:
    t0 = time.time()
    p, auto = resolve_p(req.p, req.d, req.seed)
    ks = sorted(set(float(k) for k in req.k_values))
    if req.scale_d is not None:
        D = req.scale_d
        kapp = np.unique(np.array(ks) / (D * req.n ** 0.25))
        run = cs.run_windowed(p, req.d, req.n, req.window, req.samples,
                              req.seed, target_accepted=req.target_accepted,
                              kappas=kapp, want_cloud=False)
    else:
        # two-pass: fit D from this run's exact moments, then transform
        run = cs.run_windowed(p, req.d, req.n, req.window, req.samples,
                              req.seed, target_accepted=req.target_accepted,
                              want_cloud=False)
        D = compare.fit_scale_d(run.second_moment_scaled())
        kapp = np.unique(np.array(ks) / (D * req.n ** 0.25))
        run = cs.run_windowed(p, req.d, req.n, req.window, req.samples,
                              req.seed, target_accepted=req.target_accepted,
                              kappas=kapp, want_cloud=False)
    rep = compare.compare_q3_to_ise(run, D, ks, nboot=req.nboot,
                                    seed=req.seed)
    header = ["k", "l", "mode", "q3_hat", "stderr"] + \
        (["a3_ise", "diff"] if want_compare else [])
    rows = [[r.k, r.l, r.mode, r.empirical, r.stderr] +
            ([r.target, r.empirical - r.target] if want_compare else [])
            for r in rep.rows]
    report = {"p": p, "p_auto": auto, "accepted": rep.accepted,
              "attempts": run.attempts, "D": D,
              "max_asymmetry": rep.max_asymmetry}
    if want_compare:
        report["sup_distance"] = rep.sup_distance
        report["sup_stderr"] = rep.sup_stderr
    name = "compare_q3" if want_compare else "q3_profile"
    return _response(name, req.model_dump(), report,
                     {"grid": (header, rows)}, t0)


def _parse_grid(spec: str) -> np.ndarray:
    try:
        lo, step, hi = (float(x) for x in spec.split(":"))
    except ValueError as e:
        raise InvalidArgumentError(f"bad grid spec {spec!r}: {e}") from None
    if step <= 0 or hi < lo:
        raise InvalidArgumentError(f"bad grid spec {spec!r}")
    return np.arange(lo, hi + 0.5 * step, step)


def run_ise(req: schemas.IseRequest) -> RunResponse:
    t0 = time.time()
    params = ise.IseParams(abs_tol=req.abs_tol)
    tables = {}
    if req.a2_k2_grid:
        grid = _parse_grid(req.a2_k2_grid)
        tables["a2"] = (["k2", "a2_fourier", "a2_closed_form"],
                        [[float(k2), ise.a2_fourier(float(k2), params),
                          ise.a2_fourier_closed(float(k2))] for k2 in grid])
    if req.a3_k_values:
        rows = []
        for k, l, mode in compare.three_point_grid(req.a3_k_values):
            args = compare._mode_args(k, l, mode)
            rows.append([k, l, mode, *args, ise.a3_fourier(*args, params)])
        tables["a3"] = (["k", "l", "mode", "kl2", "k2", "l2", "a3_fourier"],
                        rows)
    return _response("ise", req.model_dump(),
                     {"abs_tol": req.abs_tol}, tables, t0)


def run_coeff(req: schemas.CoeffRequest) -> RunResponse:
    t0 = time.time()
    b = genfunc.BranchMainTerm(C=req.C, D=req.D, k2=req.k2)
    rows = []
    for n in req.n_list:
        contour = genfunc.main_term_coeff_contour(b, int(n))
        series = float(genfunc.main_term_series(b, int(n))[int(n)])
        val = genfunc.main_term_coeff(b, int(n))  # raises on disagreement
        rows.append([int(n), val, contour, series,
                     abs(contour - series) / max(abs(series), 1e-300),
                     val * math.sqrt(8 * math.pi * n) / req.C])
    tables = {"main_term": (["n", "coeff", "contour", "series", "rel_diff",
                             "normalized"], rows)}
    report = {"C": req.C, "D": req.D, "k2": req.k2}
    if req.series_coeffs:
        f = genfunc.PowerSeries(np.asarray(req.series_coeffs, dtype=float))
        nrm = [[r, genfunc.series_norm(f, r)]
               for r in (0.25, 0.5, req.radius, 1.0)]
        rt = [[n, float(genfunc.coeff_by_contour(f, n, req.radius).real),
               float(f.coeffs[n])]
              for n in range(min(f.coeffs.size, 12))]
        tables["series_norms"] = (["r", "norm"], nrm)
        tables["series_roundtrip"] = (["n", "contour", "stored"], rt)
    return _response("coeff", req.model_dump(), report, tables, t0)


def run_lemmas(req: schemas.LemmasRequest) -> RunResponse:
    t0 = time.time()
    tay = genfunc.verify_taylor_eps_random(req.instances, req.seed)
    bb = genfunc.branch_lower_bound_check(req.instances, req.seed)
    rows = [["taylor_eps_random", req.instances, tay.max_ratio, 1.0, "pass"],
            ["branch_lower_bound", req.instances, bb.min_slack, 0.0, "pass"]]
    f_geo = genfunc.PowerSeries(np.ones(300))
    tr = genfunc.verify_transfer(f_geo, 1.0, 1.0)
    rows.append(["transfer_geometric", 300, tr.c_prime,
                 tr.empirical_exponent, "report"])
    f_sq = genfunc.PowerSeries(genfunc.binomial_sqrt_coeffs(300, 0.5))
    fd = genfunc.verify_fd2step(f_sq, 1.0, 0.5, 0.3)
    rows.append(["fd2step_sqrt", 300, fd.m2, fd.m1, "report"])
    tables = {"harness": (["harness", "instances", "statistic", "bound",
                           "status"], rows)}
    report = {"taylor_max_ratio": tay.max_ratio,
              "branch_min_slack": bb.min_slack}
    return _response("lemmas", req.model_dump(), report, tables, t0)


def run_diagrams(req: schemas.DiagramsRequest) -> RunResponse:
    t0 = time.time()
    report: dict = {"action": req.action}
    tables = {}
    if req.action == "triangle":
        p, auto = resolve_p(req.p, req.d, req.seed)
        p *= req.p_fraction
        est = diagrams.triangle_mc(p, req.d, req.samples, req.cap, req.seed)
        report.update({"p": p, "p_auto": auto, "value": est.value,
                       "stderr": est.stderr, "discarded": est.discarded})
        tables["triangle"] = (["p", "value", "stderr", "samples"],
                              [[p, est.value, est.stderr, est.samples]])
    elif req.action == "irbound":
        est = diagrams.triangle_irbound(req.d, req.c, req.samples, req.seed)
        report.update({"c": req.c, "value": est.value, "stderr": est.stderr})
        tables["irbound"] = (["d", "c", "value", "stderr"],
                             [[req.d, req.c, est.value, est.stderr]])
    elif req.action in ("square", "msquare"):
        zs = [1.0 - 2.0 ** -j for j in req.z_exponents]
        pairs = diagrams.square_scaling(req.d, zs, req.samples, req.seed)
        rows = [[z, 1.0 - z, e.value, e.stderr] for z, e in pairs]
        slope, se = diagrams.fit_loglog_slope([1 - z for z, _ in pairs],
                                              [e.value for _, e in pairs])
        report.update({"slope": slope, "slope_stderr": se})
        tables["square"] = (["z", "one_minus_z", "value", "stderr"], rows)
        if req.action == "msquare":
            p, auto = resolve_p(req.p, req.d, req.seed)
            h = cs.estimate_size_pmf(p, req.d, req.sizes_samples, req.cap,
                                     req.seed)
            mrows = [[z, 1.0 - z, cs.magnetization(h, z),
                      cs.magnetization(h, z) * e.value] for z, e in pairs]
            ms, mse = diagrams.fit_loglog_slope(
                [r[1] for r in mrows], [r[3] for r in mrows])
            report.update({"p": p, "p_auto": auto, "product_slope": ms,
                           "product_slope_stderr": mse})
            tables["msquare"] = (["z", "one_minus_z", "magnetization",
                                  "product"], mrows)
    return _response("diagrams", req.model_dump(), report, tables, t0)


def run_pc(req: schemas.PcRequest) -> RunResponse:
    t0 = time.time()
    est = diagrams.estimate_pc_detailed(req.d, req.radius,
                                        req.samples_per_probe, req.tol,
                                        req.seed)
    rows = [[pr.radius, pr.p, pr.n, *pr.reached, pr.delta, pr.delta_se]
            for pr in est.probes]
    report = {"p_hat": est.p_hat, "series": est.series,
              "two_d_p": 2 * req.d * est.p_hat,
              "per_scale": {str(k): v for k, v in est.per_scale.items()}}
    tables = {"probes": (["radius", "p", "samples", "reached_r",
                          "reached_2r", "reached_4r", "delta", "delta_se"],
                         rows)}
    return _response("pc", req.model_dump(), report, tables, t0)


def run_tree(req: schemas.TreeRequest) -> RunResponse:
    t0 = time.time()
    if req.law == "binomial":
        law = tree_oracle.OffspringLaw.binomial(req.m,
                                                Fraction(req.q_num, req.q_den))
    else:
        law = tree_oracle.OffspringLaw.poisson(req.lam)
    ns = np.unique(np.geomspace(req.n_min, req.n_max,
                                req.table_points).astype(int))
    pm = tree_oracle.pmf_table(law, ns)
    rows = [[int(n), float(v), float(n ** 1.5 * v)] for n, v in zip(ns, pm)]
    report = {"law": req.law, "mean": law.mean}
    if law.is_critical():
        rep = tree_oracle.verify_delta_two(law, (req.n_min, req.n_max))
        report["fit"] = {"exponent": rep.fit.exponent,
                         "stderr": rep.fit.stderr}
        report["limit_constant"] = rep.limit_constant
    tables = {"pmf": (["n", "pmf", "n32_pmf"], rows)}
    return _response("tree", req.model_dump(), report, tables, t0)
