"""Verification suites behind `maxindep verify`; each returns (metrics, tolerances, pass)."""
from __future__ import annotations

import math

import numpy as np


def painleve_identity(cfg=None):
    from . import painleve as pv
    t = np.linspace(-6.0, 5.0, 221)
    hm = pv.hastings_mcleod_solution()
    Q = pv.q_function()
    gap = float(np.max(np.abs(hm(t) - Q(t))))
    dlog = hm.derivative()(t) / hm(t)
    ds = pv.GridFunction(Q.grid, Q.delta_sigma)(t)
    dgap = float(np.max(np.abs(dlog - ds)))
    tol = {"max_abs_q_minus_Q": 1e-5, "max_abs_logderiv_gap": 1e-5}
    m = {"max_abs_q_minus_Q": gap, "max_abs_logderiv_gap": dgap}
    return m, tol, gap <= 1e-5 and dgap <= 1e-5


def borodin_okounkov(cfg=None):
    from . import schur
    worst_t, worst_f = 0.0, 0.0
    for xi in (0.5, 1.0, 4.0):
        st = schur.opuc_from_weight(schur.Plancherel(xi))
        w = schur.Plancherel(xi)
        for N in range(11):
            p = schur.popl_max_cdf(xi, N, st)
            worst_t = max(worst_t, abs(p - schur.toeplitz_max_cdf(w, N)))
            worst_f = max(worst_f, abs(schur.toeplitz_max_cdf(w, N) - schur.popl_fredholm_cdf(xi, N)))
    m = {"opuc_vs_toeplitz": worst_t, "toeplitz_vs_fredholm": worst_f}
    tol = {"opuc_vs_toeplitz": 1e-10, "toeplitz_vs_fredholm": 1e-8}
    return m, tol, worst_t <= 1e-10 and worst_f <= 1e-8


def bessel_airy_limit(cfg=None):
    from . import airy_flow as af
    X = np.linspace(-2.0, 2.0, 9)
    errs = [af.bessel_airy_limit_error(N, -1.0, X[:, None], X[None, :]) for N in (50, 100, 200)]
    kap = max(float(np.max(np.abs(af.prolate_flow(N, 0.0, 6).eigenvalues + af.kappa(N, np.arange(6)))))
              for N in (1, 2, 5, 10))
    tri = max(af.prolate_flow(N, c, 6).tridiagonality for N in (1, 5) for c in (0.0, 3.0, 10.0))
    decreasing = bool(errs[0] > errs[1] > errs[2])
    m = {"limit_errors_N50_100_200": errs, "kappa_error": kap, "tridiagonality": tri, "decreasing": decreasing}
    tol = {"kappa_error": 1e-10, "tridiagonality": 1e-10}
    return m, tol, decreasing and kap <= 1e-10 and tri <= 1e-10


def kpz_kernel(cfg=None):
    from . import airy_flow as af
    from .fredholm import airy_kernel
    x = np.linspace(0.0, 4.0, 9)
    worst = 0.0
    for t in (0.5, 1.0, 10.0):
        p = af.KpzParams(t)
        for s in (-2.0, 0.0, 2.0):
            a = af.kpz_kernel_values(x, x, s, p)
            b = af.randomized_airy_kernel(x, x, s, p)
            worst = max(worst, float(np.max(np.abs(a - b))))
    p = af.KpzParams(1e6)
    lim = float(np.max(np.abs(af.kpz_kernel_values(x, x, 0.0, p) - airy_kernel(x[:, None], x[None, :]))))
    m = {"randomized_identity": worst, "step_limit_t1e6": lim}
    tol = {"randomized_identity": 1e-8, "step_limit_t1e6": 1e-4}
    return m, tol, worst <= 1e-8 and lim <= 1e-4


def fuchs(cfg=None):
    from . import airy_flow as af
    from . import schur
    cont = 0.0
    for fam in ("airy", "kpz"):
        for var in ("fixed", "varying", "mixed"):
            for k, s in ((1, -1.0), (2, 0.5)):
                cont = max(cont, af.fuchs_check(fam, var, k, s).relative_residual)
    disc = schur.discrete_fuchs_check(1.0, range(6))
    dv = max(r.varying for r in disc)
    df = max(r.fixed for r in disc)
    r1 = max(r.rank_one for r in disc)
    m = {"continuous_max_relative": cont, "discrete_varying": dv, "discrete_fixed": df, "rank_one": r1}
    tol = {"continuous_max_relative": 1e-4, "discrete_varying": 1e-6, "discrete_fixed": 1e-6, "rank_one": 1e-12}
    return m, tol, cont <= 1e-4 and dv <= 1e-6 and df <= 1e-6 and r1 <= 1e-12


def chen_stein(cfg=None):
    from . import ortho
    from .sampler import chen_stein_probabilities
    N = 50
    worst_slack, ok = math.inf, True
    rows = []
    for tt in (-2.0, -1.0, 0.0, 1.0, 2.0):
        x = 2.0 * math.sqrt(N) + tt * N ** (-1.0 / 6.0)
        p = [1.0 - float(ortho.w_cdf(k, x)) for k in range(N)]
        rep = chen_stein_probabilities(p)
        ok &= rep.holds
        worst_slack = min(worst_slack, rep.bound - abs(rep.exact - rep.poisson))
        rows.append([tt, rep.exact, rep.poisson, rep.bound])
    return {"points": rows, "min_slack": worst_slack}, {"min_slack": 0.0}, bool(ok)


def rescaling(cfg=None):
    from . import ortho, painleve as pv
    hm = pv.hastings_mcleod_solution()
    m, ok = {}, True
    for y, c in ((0.0, 0.0), (1.0, 1.0)):
        errs = []
        for n in (20, 40, 80):
            ce = ortho.effective_shift(n, c)
            errs.append(abs(ortho.rescaled_density(n, c, y) - float(hm(y + ce)) ** 2))
        m[f"y={y:g},c={c:g}"] = errs
        ok &= errs[0] > errs[1] > errs[2]
    return m, {"monotone_decrease": True}, bool(ok)


SUITES = {
    "painleve-identity": painleve_identity,
    "borodin-okounkov": borodin_okounkov,
    "bessel-airy-limit": bessel_airy_limit,
    "kpz-kernel": kpz_kernel,
    "fuchs": fuchs,
    "chen-stein": chen_stein,
    "rescaling": rescaling,
}
