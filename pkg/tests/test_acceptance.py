"""Acceptance criteria at pinned tolerances.

Each test prints one ``[PASS]``/``[FAIL]`` line (collected again in the
terminal summary) and then asserts. Supplementary checks, marked ``S``,
document behaviour behind criteria that fail as stated.

Run alone with ``pytest -m acceptance -s``.
"""
import math

import numpy as np
import pytest

from mrwtest.calibrate import calibrate
from mrwtest.mctest import TestConfig, mc_band, run_test
from mrwtest.scaling import empirical_zeta, ghe_many, theoretical_h, theoretical_zeta
from mrwtest.synth import (
    LogGamma,
    LogNormal,
    MrwParams,
    StudentT,
    omega_autocovariance,
    simulate_fbm,
    simulate_mrw,
    simulate_omega,
    simulate_switching_mrw,
)
from mrwtest.timeseries import ReturnSeries

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]

# H(q) theory table: {(q, lambda): printed value}
THEORY_TABLE = {
    (1, 0.2): 0.52, (1, 0.25): 0.53, (1, 0.3): 0.54,
    (2, 0.2): 0.50, (2, 0.25): 0.50, (2, 0.3): 0.50,
    (3, 0.2): 0.48, (3, 0.25): 0.47, (3, 0.3): 0.45,
}

# GHE quantiles {2.5, 50, 97.5}% for q = 1, 2, 3 on simulated MRW paths
GHE_QUANTILES = {
    (0.2, 1250): [(0.4782, 0.5110, 0.5427), (0.4592, 0.4986, 0.5381), (0.4326, 0.4838, 0.5421)],
    (0.2, 2500): [(0.4768, 0.5101, 0.5450), (0.4562, 0.4965, 0.5407), (0.4284, 0.4807, 0.5454)],
    (0.25, 1250): [(0.4844, 0.5167, 0.5502), (0.4527, 0.4976, 0.5415), (0.4029, 0.4739, 0.5488)],
    (0.25, 2500): [(0.4843, 0.5180, 0.5517), (0.4530, 0.4988, 0.5428), (0.4038, 0.4774, 0.5479)],
    (0.3, 1250): [(0.4900, 0.5249, 0.5616), (0.4374, 0.4962, 0.5571), (0.3642, None, 0.5597)],
    (0.3, 2500): [(0.4878, 0.5253, 0.5626), (0.4398, 0.4968, 0.5558), (0.3743, 0.4653, 0.5609)],
}
# (None marks the misprinted median, excluded as a target)

# calibrated (lambda, T, sigma) and the reported Delta H^w(1, 2) band per stock
STOCKS = {
    "Boeing": (0.1228, 1260, 1.0651, (-0.0205, 0.0039, 0.0265)),
    "Microsoft": (0.1342, 739, 0.021, (-0.03341, 0.01067, 0.04675)),
    "PNC": (0.1418, 28201, 0.025, (-0.03191, 0.0098, 0.0349)),
    "Sara Lee": (0.1335, 3746, 0.019, (-0.03381, 0.00948, 0.04524)),
    "Rowan": (0.2046, 1080, 0.7992, (-0.0215, 0.0066, 0.0296)),
    "IBM": (0.2363, 816, 1.7811, (-0.0214, 0.0068, 0.0310)),
    "Wells Fargo": (0.3010, 631, 0.5923, (-0.0237, 0.0134, 0.0433)),
    "American Express": (0.1340, 1520, 0.8356, (-0.0212, 0.0125, 0.0429)),
    "General Motors": (0.1727, 440, 1.0291, (-0.0211, 0.0063, 0.0278)),
    "Citigroup": (0.2196, 568, 6.4585, (-0.0202, 0.0146, 0.0458)),
    "JPMorgan": (0.2950, 534, 0.9792, (-0.0219, 0.0097, 0.0356)),
    "Dominion": (0.1738, 754, 0.013, (-0.0317, 0.01372, 0.05411)),
    "Morgan Stanley": (0.2528, 538, 1.1185, (-0.0221, 0.0079, 0.0333)),
}

N_SIMS = 1000
SAMPLE_DAYS = 4480  # daily returns in the 1995-2012 sample


def ghe_quantiles(lam, T, n, n_paths=N_SIMS, seed=0):
    p = MrwParams(lam, float(T))
    h = np.array([[e.h for e in ghe_many(simulate_mrw(p, n, (seed, i)).increments, [1, 2, 3])]
                  for i in range(n_paths)])
    return np.quantile(h, [0.025, 0.5, 0.975], axis=0).T  # rows q, columns quantile


def compare_table(n, tol_q12, tol_q3):
    worst, misses = 0.0, []
    for (lam, T), rows in GHE_QUANTILES.items():
        got = ghe_quantiles(lam, T, n)
        for qi, row in enumerate(rows):
            tol = tol_q3 if qi == 2 else tol_q12
            for k, target in enumerate(row):
                if target is None:
                    continue
                dev = abs(got[qi, k] - target)
                worst = max(worst, dev / tol)
                if dev > tol:
                    misses.append(f"lam={lam},T={T},H({qi + 1})[{k}] {got[qi, k]:.4f} vs {target}")
    return worst, misses


# --- 1 ---------------------------------------------------------------------

def test_c1_theoretical_spectrum(acceptance):
    cells = all(abs(theoretical_h(q, lam) - v) <= 0.005 + 1e-12 for (q, lam), v in THEORY_TABLE.items())
    zeta2 = all(theoretical_zeta(2, lam) == 1.0 for lam in np.linspace(0, 0.47, 48))
    diff = max(abs(theoretical_h(1, lam) - theoretical_h(3, lam) - lam ** 2) for lam in (0.1, 0.2, 0.3))
    ok = cells and zeta2 and diff < 1e-15
    acceptance("C1 theory table / zeta(2)=1 / H(1)-H(3)=lambda^2", ok,
               f"9 cells to 2dp={cells}, zeta(2)==1 exactly={zeta2}, max |H1-H3-lam^2|={diff:.1e}")
    assert ok


# --- 2 ---------------------------------------------------------------------

def test_c2_ghe_quantile_table(acceptance):
    worst, misses = compare_table(1250, 0.01, 0.02)
    ok = not misses
    acceptance("C2 GHE quantile table, 1000 paths of 1250", ok,
               f"{len(misses)}/53 quantiles outside +/-0.01 (q=1,2) / +/-0.02 (q=3); "
               f"worst {worst:.2f}x tolerance; e.g. {misses[:2]}")
    assert ok, misses


def test_c2_supplement_sample_length(acceptance):
    worst, misses = compare_table(SAMPLE_DAYS, 0.01, 0.02)
    ok = not misses
    acceptance("C2-S same table at the 4480-day sample length", ok,
               f"{len(misses)}/53 outside tolerance; worst {worst:.2f}x tolerance")
    assert ok, misses


# --- 3 ---------------------------------------------------------------------

def test_c3_h_versus_lambda(acceptance):
    lams = np.linspace(0.01, 0.3, 10)
    devs = []
    for lam in lams:
        p = MrwParams(float(lam), 1250.0)
        h = np.array([[e.h for e in ghe_many(simulate_mrw(p, 1250, (3, i)).increments, [1, 3])]
                      for i in range(200)])
        devs.append(h.mean(axis=0) - [theoretical_h(1, lam), theoretical_h(3, lam)])
    devs = np.array(devs)
    bad = [f"lam={lam:.3f}: dH1={d[0]:+.4f}, dH3={d[1]:+.4f}" for lam, d in zip(lams, devs)
           if np.any(np.abs(d) > 0.01)]
    ok = not bad
    acceptance("C3 ensemble mean H(1), H(3) within 0.01 of theory, lambda in [0.01, 0.3]", ok,
               f"max |dev| H(1)={np.abs(devs[:, 0]).max():.4f}, H(3)={np.abs(devs[:, 1]).max():.4f}; "
               f"failing {bad}")
    assert ok, bad


def test_c3_supplement_fine_increments(acceptance):
    # 16 sub-steps per day aggregated to daily returns, 16384 days; H(1) carries the C3 failure,
    # H(3) is reported only (its 40-path standard error is comparable to the tolerance)
    devs, ses = {}, {}
    for lam in (0.2, 0.3):
        p = MrwParams(lam, 1250.0, dt=1 / 16)
        h = np.array([[e.h for e in ghe_many(simulate_mrw(p, 16 * 2 ** 14, (4, i)).increments
                                             .reshape(-1, 16).sum(axis=1), [1, 3])]
                      for i in range(40)])
        devs[lam] = h.mean(axis=0) - [theoretical_h(1, lam), theoretical_h(3, lam)]
        ses[lam] = h.std(axis=0, ddof=1) / math.sqrt(h.shape[0])
    ok = all(abs(d[0]) <= 0.01 for d in devs.values())
    acceptance("C3-S fine increments (dt=1/16, 16384 days): mean H(1) within 0.01", ok,
               ", ".join(f"lam={k}: dH1={v[0]:+.4f} (se {ses[k][0]:.4f}), dH3={v[1]:+.4f} (se {ses[k][1]:.4f})"
                         for k, v in devs.items()))
    assert ok


# --- 4 ---------------------------------------------------------------------

QS = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0]


def test_c4_scaling_functions(acceptance):
    fbm = empirical_zeta(simulate_fbm(0.75, 2 ** 15, seed=0).increments, QS)
    slope = np.polyfit(fbm.qs, fbm.zetas, 1)[0]
    fbm_ok = abs(slope - 0.75) <= 0.03

    mrw = empirical_zeta(simulate_mrw(MrwParams(0.25, 1250.0), 2 ** 16, seed=0).increments, QS)
    theory = theoretical_zeta(np.array(QS), 0.25)
    concave = bool(np.all(np.diff(mrw.zetas, 2) < 0))
    within = np.abs(mrw.zetas - theory) <= 2 * mrw.errors
    ok = fbm_ok and concave and bool(within.all())
    acceptance("C4 fBm linear slope 0.75+/-0.03; MRW(0.25) zeta concave and on the parabola within fit error", ok,
               f"fBm slope={slope:.4f}; MRW concave={concave}, |zeta-theory|="
               f"{np.round(np.abs(mrw.zetas - theory), 4).tolist()} vs 2*err={np.round(2 * mrw.errors, 4).tolist()}")
    assert ok


def test_c4_supplement_fine_increments(acceptance):
    p = MrwParams(0.25, 1250.0, dt=1 / 16)
    zetas = np.array([
        empirical_zeta(simulate_mrw(p, 16 * 2 ** 16, seed=s).increments.reshape(-1, 16).sum(axis=1), QS).zetas
        for s in range(3)
    ])
    dev = zetas.mean(axis=0) - theoretical_zeta(np.array(QS), 0.25)
    ok = bool(np.all(np.abs(dev) <= 0.01))
    acceptance("C4-S fine increments (dt=1/16, 65536 days): mean zeta within 0.01 of the parabola", ok,
               f"dev={np.round(dev, 4).tolist()}")
    assert ok


# --- 5 ---------------------------------------------------------------------

def test_c5_calibration_round_trip(acceptance):
    out = {}
    for lam in (0.15, 0.25):
        p = MrwParams(lam, 1250.0)
        res = [calibrate(simulate_mrw(p, 2 ** 16, seed=(5, s)).increments).params for s in range(100)]
        out[lam] = (np.mean([r.intermittency for r in res]), np.median([r.integral_scale for r in res]))
    ok = all(abs(m - lam) <= 0.05 and 1250 / 3 <= t <= 1250 * 3 for lam, (m, t) in out.items())
    acceptance("C5 calibration round trip (100 seeds, n=65536)", ok,
               ", ".join(f"lam={k}: mean lam_hat={m:.4f}, median T_hat={t:.0f}" for k, (m, t) in out.items()))
    assert ok


# --- 6 ---------------------------------------------------------------------

def test_c6_bands_insensitive_to_integral_scale(acceptance):
    bands = {T: mc_band(MrwParams(0.2, float(T)), N_SIMS, 1250, seed=0) for T in (200, 400, 1000, 2000)}
    q = np.array([[b.q025, b.q50, b.q975] for b in bands.values()])
    spread = q.max(axis=0) - q.min(axis=0)
    ok = bool(np.all(spread <= 0.005))
    acceptance("C6 Delta H bands at lambda=0.2 agree across T in {200, 400, 1000, 2000} within 0.005", ok,
               f"max pairwise difference per quantile={np.round(spread, 4).tolist()}")
    assert ok


# --- 7 ---------------------------------------------------------------------

def test_c7_null_self_consistency(acceptance):
    p = MrwParams(0.2, 1250.0)
    pct = [
        run_test(ReturnSeries(simulate_mrw(p, SAMPLE_DAYS, seed=(7, r)).increments),
                 config=TestConfig(seed=1000 + r)).exceedance_pct
        for r in range(50)
    ]
    mean = float(np.mean(pct))
    ok = 2.0 <= mean <= 10.0
    acceptance("C7 null self-consistency: mean exceedance over 50 replications in [2, 10]%", ok,
               f"mean={mean:.2f}% (sd {np.std(pct, ddof=1):.2f}, median {np.median(pct):.1f})")
    assert ok


# --- 8, 9 ------------------------------------------------------------------

@pytest.fixture(scope="module")
def stock_bands():
    variants = {"lognormal": LogNormal(), "student-t": StudentT(4), "log-gamma": LogGamma(1, 1)}
    return {
        name: {v: mc_band(MrwParams(lam, float(T), sigma, variant=var), N_SIMS, 1250, seed=0)
               for v, var in variants.items()}
        for name, (lam, T, sigma, _) in STOCKS.items()
    }


def test_c8_student_t_median_shift(acceptance, stock_bands):
    ln = np.array([b["lognormal"].q50 for b in stock_bands.values()])
    st = np.array([b["student-t"].q50 for b in stock_bands.values()])
    per_row = bool(np.all(st > ln))
    med_st, med_ln = float(np.median(st)), float(np.median(ln))
    ok = per_row and abs(med_st - 0.04) <= 0.01 and abs(med_ln - 0.015) <= 0.01
    acceptance("C8 Student-t q50 above log-normal q50; medians near 0.04 and 0.015 (+/-0.01)", ok,
               f"t>lognormal on {int(np.sum(st > ln))}/13 rows; median q50 t={med_st:.4f}, lognormal={med_ln:.4f}")
    assert ok


def test_c9_log_gamma_q975_dispersion(acceptance, stock_bands):
    def iqr(v):
        a = np.array([b[v].q975 for b in stock_bands.values()])
        return float(np.subtract(*np.percentile(a, [75, 25])))

    iqrs = {v: iqr(v) for v in ("lognormal", "student-t", "log-gamma")}
    ok = iqrs["log-gamma"] > max(iqrs["lognormal"], iqrs["student-t"])
    acceptance("C9 log-gamma q975 IQR across the 13 parameter sets exceeds log-normal and Student-t", ok,
               ", ".join(f"{k}={v:.4f}" for k, v in iqrs.items()))
    assert ok


def test_supplement_boeing_band(acceptance, stock_bands):
    b = stock_bands["Boeing"]["lognormal"]
    target = STOCKS["Boeing"][3]
    dev = np.abs(np.array([b.q025, b.q50, b.q975]) - target)
    ok = bool(np.all(dev <= 0.005))
    acceptance("S Boeing log-normal band within 0.005 of the reported quantiles", ok,
               f"band=({b.q025:.4f}, {b.q50:.4f}, {b.q975:.4f}) vs {target}")
    assert ok


# --- 10 --------------------------------------------------------------------

def test_c10_switching_alternative(acceptance):
    half = SAMPLE_DAYS // 2
    pct = []
    for r in range(20):
        segs = [(MrwParams(0.1, 1250.0), half), (MrwParams(0.35, 1250.0), half)]
        x = simulate_switching_mrw(segs, seed=(10, r)).increments
        pct.append(run_test(ReturnSeries(x), config=TestConfig(seed=2000 + r)).exceedance_pct)
    mean = float(np.mean(pct))
    ok = mean > 20.0
    acceptance("C10 lambda switching 0.1->0.35: exceedance > 20% against calibrated log-normal null", ok,
               f"mean over 20 series={mean:.2f}% (sd {np.std(pct, ddof=1):.2f}, min {min(pct):.1f}, max {max(pct):.1f})")
    assert ok


# --- 11 --------------------------------------------------------------------

LAGS = (0, 1, 2, 5, 10, 20, 40, 63)


def summary_stats(x, mu):
    """Per-sample statistics compared between the two samplers."""
    d = x - mu
    cols = [x.mean(axis=1)]
    cols += [np.mean(d[:, h:] * d[:, : d.shape[1] - h], axis=1) for h in LAGS]
    cols.append(np.mean(d ** 4, axis=1))
    return np.column_stack(cols)


@pytest.mark.parametrize("T", [1250.0, 40.0])
def test_c11_circulant_matches_dense_factorisation(acceptance, T):
    n, reps = 64, 100_000
    p = MrwParams(0.2, T)
    mu = -p.log_vol_variance
    fft = np.array([simulate_omega(p, n, seed=(11, s)).values for s in range(reps)])

    cov = omega_autocovariance(p, np.abs(np.subtract.outer(np.arange(n), np.arange(n))))
    chol = np.linalg.cholesky(cov + 1e-13 * np.eye(n))
    dense = mu + np.random.default_rng(1111).standard_normal((reps, n)) @ chol.T

    a, b = summary_stats(fft, mu), summary_stats(dense, mu)
    z = (a.mean(0) - b.mean(0)) / np.sqrt(a.var(0, ddof=1) / reps + b.var(0, ddof=1) / reps)
    moments_ok = bool(np.all(np.abs(z) <= 3))

    # entrywise covariance against the exact matrix, Bonferroni level for 2080 entries
    d = fft - mu
    sample_cov = d.T @ d / reps
    se = np.sqrt((cov ** 2 + np.outer(np.diag(cov), np.diag(cov))) / reps)
    entry_z = np.abs(sample_cov - cov) / se
    entry_ok = bool(entry_z.max() <= 4.6)
    ok = moments_ok and entry_ok
    acceptance(f"C11 circulant vs dense Cholesky ensembles, n=64, T={T:g}", ok,
               f"two-sample |z| max={np.abs(z).max():.2f} over {z.size} moments (3 sigma); "
               f"entrywise covariance |z| max={entry_z.max():.2f} (limit 4.6)")
    assert ok
