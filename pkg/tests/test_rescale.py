from __future__ import annotations

import math

import numpy as np
import pytest

from tangle import kernels as kn
from tangle import rescale
from tangle.errors import MissedWindow, OutsideRD
from tangle.model import ModelConfig, time_one_flow
from tangle.return_map import ReturnMap

CFG = ModelConfig()


def test_frame_fields():
    fr = rescale.frame(40, CFG)
    assert abs(fr.alpha) < 1
    assert fr.S_k == pytest.approx(CFG.eps / abs(fr.alpha))
    assert fr.theta == pytest.approx(kn.theta(40, 0.0))
    assert fr.alpha_nominal == pytest.approx(-fr.theta / CFG.y_minus**2)
    assert fr.rho == pytest.approx(fr.alpha / fr.alpha_nominal - 1)
    assert set(fr.to_dict()) >= {"alpha", "M", "psi1", "psi2", "rho"}


def test_flow_member_has_small_rho():
    r = [rescale.frame(k, ModelConfig(perturbation=time_one_flow())).rho for k in (20, 40, 80)]
    assert all(abs(b) < abs(a) for a, b in zip(r, r[1:]))
    assert abs(r[-1]) < 0.05


def test_M_is_affine_in_mu1():
    fr = rescale.frame(30, CFG)
    for mu1 in (0.02, 0.03, 0.045):
        moved = rescale.at_mu1(fr, mu1)
        direct = rescale.frame(30, CFG.with_mu(mu1=mu1))
        assert moved.M == pytest.approx(direct.M, rel=1e-8, abs=1e-8)
        assert fr.mu1_for(direct.M) == pytest.approx(mu1, rel=1e-10)


@pytest.mark.parametrize("M", [-0.2, 0.0, 0.5])
def test_frame_at_M(M):
    fr = rescale.frame_at_M(50, CFG.with_mu(mu2=-1e-4), M)
    assert fr.M == pytest.approx(M, abs=1e-10)
    assert rescale.mu1_for_M(50, -1e-4, M, CFG) == pytest.approx(fr.cfg.mu1)


def test_residual_decreases_with_k():
    r = [rescale.rescaling_residual(k, 0.0, CFG, Ms=(0.0,)) for k in (20, 40, 60)]
    assert r[0] > r[1] > r[2]
    assert r[2] < 0.01


def test_rescaled_map_is_near_parabola():
    fr = rescale.frame_at_M(60, CFG, 0.3)
    for X, Y in [(0.0, 0.0), (0.5, -1.0), (-0.3, 0.8)]:
        Xb, Yb = rescale.rescaled_apply(fr, X, Y)
        assert abs(Yb - (fr.M - Y * Y)) < 0.02
        assert abs(Xb[0] - CFG.b[0] * Y) < 0.02


def test_roundtrip_coordinates():
    fr = rescale.frame(40, CFG)
    s = fr.to_local(0.2, -0.4)
    X, Y = fr.from_local(s)
    assert X[0] == pytest.approx(0.2, abs=1e-9)
    assert Y == pytest.approx(-0.4, abs=1e-9)


def test_parabola_analyze():
    pa = rescale.parabola_analyze(0.0)
    assert pa.fixed_points == [-1.0, 0.0] and pa.window == "stable"
    assert rescale.parabola_analyze(-0.3).fixed_points == []
    assert rescale.parabola_analyze(-0.25).fixed_points == [-0.5]
    assert rescale.parabola_analyze(0.75).window == "period_doubled"
    assert rescale.parabola_analyze(0.75).multipliers[1] == pytest.approx(-1.0)


def test_predict_mu1_is_leading_order():
    gaps = []
    for k in (20, 40, 80):
        nu = kn.nu(k, 0.0)
        exact = rescale.mu1_for_M(k, 0.0, 0.25, CFG)
        assert rescale.predict_mu1(k, 0.0, 0.25, CFG) == pytest.approx(nu - 0.25 * kn.theta(k, 0.0) ** 2)
        gaps.append(abs(exact - rescale.predict_mu1(k, 0.0, 0.25, CFG)) / nu)
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[-1] < 0.05


def test_rescaled_newton_matches_local_newton():
    fr = rescale.frame_at_M(25, CFG, 0.25)
    Y = (-1.0 + math.sqrt(2.0)) / 2.0
    z, rec = rescale.rescaled_fixed_point(fr, np.array([CFG.b[0] * Y, Y]))
    ref = ReturnMap(25, fr.cfg).find_fixed_point(fr.to_local(z[:1], z[1]))
    assert rec.point.y == pytest.approx(ref.point.y, abs=1e-12)
    assert rec.leading.real == pytest.approx(ref.leading.real, abs=1e-6)


def test_parabola_endpoints_k50():
    sn, pd = rescale.parabola_endpoints(50, 0.0, CFG)
    assert abs(sn + 0.25) < 0.02 and abs(pd - 0.75) < 0.02


def test_frame_errors():
    with pytest.raises(OutsideRD):
        rescale.frame(2, CFG)
    with pytest.raises(MissedWindow):
        rescale.frame(10, CFG.with_mu(mu2=-0.01))
    with pytest.raises(OutsideRD):
        rescale.predict_mu1(2, 0.0, 0.0, CFG)
