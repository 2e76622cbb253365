"""Acceptance checks, one test per criterion; each prints a PASS/FAIL line."""

from __future__ import annotations

import math
import time
from pathlib import Path

import mpmath
import numpy as np

from tangle import bifurcation as bf
from tangle import kernels as kn
from tangle import rescale
from tangle.cli import main
from tangle.errors import OutOfNeighbourhood, PoleProximity, TangleError
from tangle.model import ModelConfig, Perturbation, time_one_flow
from tangle.return_map import ReturnMap, TOL_FP

CFG = ModelConfig()


def _theta_mp(k: int, mu2: float) -> float:
    """``nu_k^2 + mu2`` summed in 50-digit arithmetic."""
    with mpmath.workdps(50):
        m = mpmath.mpf(mu2)
        if m == 0:
            v = 1 / mpmath.mpf(k)
        elif m < 0:
            s = mpmath.sqrt(-m)
            v = s / mpmath.tanh(k * s)
        else:
            t = mpmath.sqrt(m)
            v = t / mpmath.tan(k * t)
        return float(v * v + m)


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


# -- 1 ---------------------------------------------------------------------


def test_criterion_1_kernel_identities(report):
    t0 = time.perf_counter()
    mu2s = np.concatenate([np.linspace(-0.05, 0.05, 201), [-1e-10, 1e-10, -2e-9, 2e-9]])
    worst_id = worst_tab = 0.0
    skipped = 0
    for k in range(1, 201):
        for mu2 in mu2s:
            mu2 = float(mu2)
            try:
                v = kn.nu(k, mu2)
                th = kn.theta(k, mu2)
                tab = kn.theta_table(k, mu2)
            except PoleProximity:
                # only allowed within the pole neighbourhood
                assert mu2 > 0 and min(abs(k * math.sqrt(mu2) - j * math.pi) for j in range(1, 60)) < kn.TAU_SING
                skipped += 1
                continue
            worst_tab = max(worst_tab, _rel(th, tab))
            if k % 10 == 1 and abs(mu2 * 1e4 - round(mu2 * 1e4)) < 1e-9:
                worst_id = max(worst_id, _rel(th, _theta_mp(k, mu2)))

    # literal bound |nu(k, +-1e-10) - 1/k| <= 1e-6/k
    literal_bad = [
        k for k in range(1, 201) for s in (-1.0, 1.0) if abs(kn.nu(k, s * 1e-10) - 1.0 / k) > 1e-6 / k
    ]
    # jump of the evaluator across the series / closed-form switch
    jump = 0.0
    for k in range(1, 201):
        for s in (-1.0, 1.0):
            inside = kn.nu(k, s * kn.TAU_REGIME * (1 - 1e-9))
            outside = kn.nu(k, s * kn.TAU_REGIME * (1 + 1e-9))
            jump = max(jump, abs(inside - outside) * k)
    # the exact function already breaks the literal bound: nu - 1/k ~ -k mu2 / 3
    with mpmath.workdps(50):
        exact_dev = float(abs(mpmath.sqrt(mpmath.mpf(1e-10)) / mpmath.tan(200 * mpmath.sqrt(mpmath.mpf(1e-10))) - mpmath.mpf(1) / 200) * 200)
    dt = time.perf_counter() - t0
    ok = worst_id <= 1e-10 and worst_tab <= 1e-10 and jump <= 1e-6 and not literal_bad and dt < 1.0
    detail = (
        f"identity {worst_id:.1e}, table {worst_tab:.1e}, {skipped} pole skips, "
        f"switch jump*k {jump:.1e}, literal continuity violated for k in "
        f"{sorted(set(literal_bad))[:1]}..{sorted(set(literal_bad))[-1:]} ({len(set(literal_bad))} values); exact k|nu - 1/k| at k=200, mu2=1e-10 is {exact_dev:.2e} > 1e-6"
    )
    report(1, ok, detail, dt)
    assert ok, detail


# -- 2 ---------------------------------------------------------------------


def _forward_last_k(mu2: float, eps: float, y_minus: float, n: int = 2001) -> int:
    y = np.linspace(-eps, eps, n)
    alive = np.ones(n, dtype=bool)
    last = 0
    k = 0
    while alive.any():
        k += 1
        with np.errstate(over="ignore", invalid="ignore"):
            # escaped points overflow; they are already masked out
            y = mu2 + y + y * y
        alive &= y <= y_minus + eps
        if np.any(alive & (y >= y_minus - eps)):
            last = k
    return last


def test_criterion_2_escape_time(report):
    t0 = time.perf_counter()
    rows = []
    for m in range(40, 201, 20):
        mu2 = (math.pi / m) ** 2
        rows.append((m, kn.k_star(mu2, 0.1), _forward_last_k(mu2, 0.1, CFG.y_minus)))
    dt = time.perf_counter() - t0
    ok = all(abs(a - b) <= 2 for _, a, b in rows) and dt < 1.0
    detail = "m:k_star/oracle " + " ".join(f"{m}:{a}/{b}" for m, a, b in rows)
    report(2, ok, detail, dt)
    assert ok, detail


# -- 3 ---------------------------------------------------------------------


def test_criterion_3_inversion_oracle(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240603)
    worst, done, rejected = 0.0, 0, 0
    while done < 500:
        k = int(rng.integers(1, 101))
        mu2 = float(rng.uniform(-1e-3, 1e-3))
        yk = CFG.y_minus + float(rng.uniform(-CFG.eps, CFG.eps))
        try:
            ref = kn.backward_iterate(yk, k, mu2)
            got = kn.y0_of_yk(yk, k, mu2, delta_k=kn.delta_k_oracle(yk, k, mu2))
        except (OutOfNeighbourhood, PoleProximity):
            rejected += 1
            continue
        worst = max(worst, abs(got - ref))
        done += 1
    dt = time.perf_counter() - t0
    ok = worst <= 1e-8 and dt < 5.0
    detail = f"max |y0 - backward| = {worst:.2e} over 500 cases ({rejected} draws rejected)"
    report(3, ok, detail, dt)
    assert ok, detail


# -- 4 ---------------------------------------------------------------------

KAPPA, GAMMA = 0.5, 0.3


def _perturbed() -> ModelConfig:
    p = Perturbation(
        t0_y=lambda y, cfg: KAPPA * y**4,
        t0_y_prime=lambda y, cfg: 4.0 * KAPPA * y**3,
        t1_y=lambda x, u, cfg: GAMMA * u**3,
    )
    return ModelConfig(perturbation=p)


def _truth(mu1: float, mu2: float, d: float) -> tuple[str, int]:
    if mu2 > 0:
        return "I", 0
    above = mu1 > math.sqrt(-mu2)
    separated = above if d > 0 else not above
    return ("II", 0) if separated else ("III", 2)


def test_criterion_4_homoclinic_curve(report):
    t0 = time.perf_counter()
    mu2s = -np.geomspace(1e-6, 1e-2, 40)
    exact_dev = 0.0
    for sign in ("+", "-"):
        lh = bf.trace_L_h(mu2s, CFG.with_d_sign(sign))
        exact_dev = max(exact_dev, max(abs(m1 - math.sqrt(-m2)) for m1, m2 in lh.samples))

    lh_p = bf.trace_L_h(mu2s, _perturbed())
    ratios = np.array([abs(m1 - math.sqrt(-m2)) / (-m2) ** 1.5 for m1, m2 in lh_p.samples])
    a2 = np.array([-m2 for _, m2 in lh_p.samples])
    C = float(ratios.max())
    # fit on |mu2| >= 1e-4, then predict the small-|mu2| points
    C_large = float(ratios[a2 >= 1e-4].max())
    fit_ok = bool(np.all(ratios[a2 < 1e-4] <= 1.5 * C_large))

    g1 = np.linspace(-0.004, 0.004, 50)
    g2 = np.linspace(-2e-5, 2e-5, 50)
    wrong, checked, counts = 0, 0, {"II": set(), "III": set()}
    for sign in ("+", "-"):
        cfg = CFG.with_d_sign(sign)
        for mu2 in g2:
            for mu1 in g1:
                mu1, mu2 = float(mu1), float(mu2)
                if mu2 < 0 and abs(mu1 - math.sqrt(-mu2)) <= bf.TOL_CURVE:
                    continue
                tag = bf.classify_domain(mu1, mu2, cfg)
                want = _truth(mu1, mu2, cfg.d)
                checked += 1
                if tag.tag != want[0] or tag.count != want[1]:
                    wrong += 1
                if tag.tag in counts:
                    counts[tag.tag].add(tag.count)
    dt = time.perf_counter() - t0
    ok = exact_dev <= bf.TOL_CURVE and fit_ok and wrong == 0 and counts == {"II": {0}, "III": {2}} and dt < 30
    detail = (
        f"exact dev {exact_dev:.1e}; perturbed C = {C:.4f} (kappa/2 = {KAPPA / 2}), "
        f"fit from |mu2|>=1e-4 holds below: {fit_ok}; grid {checked} points, "
        f"{wrong} misclassified, counts II {sorted(counts['II'])} III {sorted(counts['III'])}"
    )
    report(4, ok, detail, dt)
    assert ok, detail


# -- 5 ---------------------------------------------------------------------

KS = (20, 30, 40, 50)


def _width_ratios(cfg: ModelConfig, windows) -> list[float]:
    out = []
    for k in KS:
        plus, minus = windows[k]
        w = abs(plus.mu1_at()[0.0] - minus.mu1_at()[0.0])
        th = kn.theta(k, 0.0)
        out.append(w / (abs(cfg.d) * th**2 / cfg.y_minus**4))
    return out


def test_criterion_5_stability_windows(report):
    t0 = time.perf_counter()
    cfg = ModelConfig(perturbation=time_one_flow())
    grid = [-1e-4, -5e-5, 0.0, 5e-5, 1e-4]
    windows = bf.trace_windows(KS, grid, cfg)
    ratios = _width_ratios(cfg, windows)
    in_band = all(0.7 <= r <= 1.3 for r in ratios)
    gaps = [abs(r - 1.0) for r in ratios]
    monotone = all(b < a for a, b in zip(gaps, gaps[1:]))

    sinks, not_sinks = 0, 0
    for k in KS:
        plus, minus = windows[k]
        pm, mm = plus.mu1_at(), minus.mu1_at()
        for mu2 in sorted(set(pm) & set(mm)):
            fr = bf._base_frame(k, mu2, cfg)
            for mu1 in np.linspace(pm[mu2], mm[mu2], 7)[1:-1]:
                fm = rescale.at_mu1(fr, float(mu1))
                Y = (-1.0 + math.sqrt(1.0 + 4.0 * fm.M)) / 2.0
                _, rec = rescale.rescaled_fixed_point(fm, np.append(cfg.b * Y, Y))
                img = ReturnMap(k, fm.cfg).apply(rec.point)
                res = float(np.max(np.abs(img.as_vector() - rec.point.as_vector())))
                if rec.classification == "sink" and res <= TOL_FP:
                    sinks += 1
                else:
                    not_sinks += 1

    overlaps = 0
    for mu2 in grid:
        iv = []
        for k in KS:
            pm, mm = windows[k][0].mu1_at(), windows[k][1].mu1_at()
            if mu2 in pm and mu2 in mm:
                iv.append(sorted((pm[mu2], mm[mu2])))
        iv.sort()
        overlaps += sum(1 for a, b in zip(iv, iv[1:]) if b[0] <= a[1])

    # the k=20 window of the quadratic map lies past mu1 = eps/2, so locate it directly
    quad = []
    for k in KS:
        p, m = bf.window_interval(k, 0.0, CFG)
        quad.append(abs(p.mu1 - m.mu1) / (abs(CFG.d) * kn.theta(k, 0.0) ** 2 / CFG.y_minus**4))
    dt = time.perf_counter() - t0
    ok = in_band and monotone and not_sinks == 0 and sinks > 0 and overlaps == 0 and dt < 120
    detail = (
        "time-one-flow centre map: ratios " + ", ".join(f"{r:.3f}" for r in ratios)
        + f"; {sinks} interior sinks, {not_sinks} failures, {overlaps} overlaps"
        + "; quadratic centre map (informational): " + ", ".join(f"{r:.3f}" for r in quad)
    )
    report(5, ok, detail, dt)
    assert ok, detail


# -- 6 ---------------------------------------------------------------------


def test_criterion_6_accumulation(report):
    t0 = time.perf_counter()
    dist = bf.delta_k_accumulation(KS, CFG)
    dt = time.perf_counter() - t0
    ok = all(np.isfinite(dist)) and all(b < a for a, b in zip(dist, dist[1:])) and dt < 60
    detail = "sup distances " + ", ".join(f"k={k}: {d:.5f}" for k, d in zip(KS, dist))
    report(6, ok, detail, dt)
    assert ok, detail


# -- 7 ---------------------------------------------------------------------


def test_criterion_7_rescaling(report):
    t0 = time.perf_counter()
    r = {k: rescale.rescaling_residual(k, 0.0, CFG, Ms=(0.0,)) for k in (20, 40, 50, 60)}
    sn, pd = rescale.parabola_endpoints(50, 0.0, CFG)
    dt = time.perf_counter() - t0
    ok = r[50] < 0.05 and r[60] < 0.05 and r[40] < r[20] and abs(sn + 0.25) <= 0.02 and abs(pd - 0.75) <= 0.02 and dt < 60
    detail = (
        "r_k " + ", ".join(f"{k}: {v:.4f}" for k, v in r.items())
        + f"; endpoints M_SN = {sn:.5f}, M_PD = {pd:.5f}"
    )
    report(7, ok, detail, dt)
    assert ok, detail


# -- 8 ---------------------------------------------------------------------


def _longest_accumulating_run(found: list[bf.SliceInterval], target: float) -> list[bf.SliceInterval]:
    best: list[bf.SliceInterval] = []
    run: list[bf.SliceInterval] = []
    for iv in sorted(found, key=lambda s: s.k):
        ok = (
            run
            and iv.k == run[-1].k + 1
            and abs(iv.mid - target) < abs(run[-1].mid - target)
            and iv.hi < run[-1].lo
            and iv.lo > target
        )
        run = run + [iv] if ok else [iv]
        if len(run) > len(best):
            best = run
    return best


def test_criterion_8_cascades(report):
    t0 = time.perf_counter()
    neg, _ = bf.slice_intervals(-1e-4, CFG, 10, 80)
    run = _longest_accumulating_run(neg, 0.01)

    coarse, _ = bf.slice_intervals(1e-4, CFG, 1, 400, n_check=3)
    fine, _ = bf.slice_intervals(1e-4, CFG, 1, 600, n_check=7)
    k_last = max(iv.k for iv in fine) if fine else 0
    dt = time.perf_counter() - t0
    ok = len(run) >= 5 and len(coarse) == len(fine) and k_last < 400 and dt < 120
    detail = (
        f"mu2=-1e-4: run of {len(run)} consecutive windows k={run[0].k}..{run[-1].k}, "
        f"mids {run[0].mid:.5f} -> {run[-1].mid:.5f} (target 0.01); "
        f"mu2=+1e-4: {len(coarse)} windows (k<=400, 3 checks) vs {len(fine)} (k<=600, 7 checks), last k {k_last}"
    )
    report(8, ok, detail, dt)
    assert ok, detail


# -- 9 ---------------------------------------------------------------------


def test_criterion_9_determinism(report, tmp_path: Path):
    t0 = time.perf_counter()
    a, b = tmp_path / "w1", tmp_path / "w2"
    assert main(["diagram", "--out", str(a), "--workers", "1"]) == 0
    assert main(["diagram", "--out", str(b), "--workers", "2"]) == 0
    ca, cb = (a / "diagram.csv").read_bytes(), (b / "diagram.csv").read_bytes()
    dt = time.perf_counter() - t0
    ok = ca == cb and len(ca.splitlines()) > 2 and dt < 120
    detail = f"diagram.csv {len(ca)} bytes, {len(ca.splitlines()) - 1} rows, identical: {ca == cb}"
    report(9, ok, detail, dt)
    assert ok, detail
