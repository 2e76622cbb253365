from __future__ import annotations

import json
import math
import xml.etree.ElementTree as ET

import pytest

from tangle import rescale
from tangle._parallel import pmap, resolve_workers
from tangle.bifurcation import BifurcationCurve
from tangle.export import curves_csv, diagram_svg, dumps, fmt, rows_csv
from tangle.model import ModelConfig
from tangle.sweep import OUTCOMES, outcome_for, sweep_grid

CFG = ModelConfig()


def test_outcomes_across_the_window():
    fr = rescale.frame(30, CFG)
    assert outcome_for(fr, fr.mu1_for(0.25)) == "sink"
    assert outcome_for(fr, fr.mu1_for(1.5)) == "saddle"
    assert outcome_for(fr, fr.mu1_for(-1.0)) == "none"


def test_sweep_grid_shape_and_order():
    cells = sweep_grid(CFG, (0.03, 0.04), (-1e-4, 1e-4), 3, 2, [29, 30])
    assert [(c.i, c.j) for c in cells] == [(i, j) for j in range(2) for i in range(3)]
    for c in cells:
        assert set(c.outcomes) == {29, 30}
        assert all(o in OUTCOMES for o in c.outcomes.values())
    assert cells[0].domain in ("II", "III") and cells[-1].domain == "I"
    with pytest.raises(ValueError):
        sweep_grid(CFG, (0, 1), (0, 1), 1, 2, [30])


def test_sweep_marks_sinks_in_window():
    fr = rescale.frame(30, CFG.with_mu(mu2=-1e-4))
    mu1 = fr.mu1_for(0.25)
    cells = sweep_grid(CFG, (mu1, mu1 + 1e-9), (-1e-4, -1e-4 + 1e-12), 2, 2, [30])
    assert cells[0].sink_ks == [30]


def test_fmt():
    assert fmt(None) == "" and fmt(True) == "true" and fmt(3) == "3"
    assert float(fmt(0.1 + 0.2)) == 0.1 + 0.2
    assert fmt("x") == "x"


def test_csv_roundtrip_exact():
    c = BifurcationCurve("LkPlus", 7, [(1 / 3, -1e-4), (math.pi, 0.0)], [1e-9, 0.0])
    lines = curves_csv([c]).splitlines()
    assert lines[0] == "curve_type,k,mu1,mu2,residual"
    assert float(lines[1].split(",")[2]) == 1 / 3
    assert rows_csv(("a",), [(None,)]) == "a\n\n"


def test_dumps_sorted_and_handles_inf():
    doc = json.loads(dumps({"b": math.inf, "a": [0.1]}))
    assert doc == {"a": [0.1], "b": "inf"}
    assert dumps({"b": 1, "a": 2}).index('"a"') < dumps({"b": 1, "a": 2}).index('"b"')


def test_svg_is_well_formed():
    curves = [
        BifurcationCurve("Lplus", None, [(-0.05, 0.0), (0.05, 0.0)], [0, 0]),
        BifurcationCurve("LkPlus", 30, [(0.036, -1e-4), (0.035, 1e-4)], [0, 0]),
        BifurcationCurve("LkMinus", 30, [(0.0359, -1e-4), (0.0349, 1e-4)], [0, 0]),
    ]
    svg = diagram_svg(curves, (-0.05, 0.05), (-0.01, 0.01), title="t")
    root = ET.fromstring(svg.split("\n", 1)[1])
    ns = "{http://www.w3.org/2000/svg}"
    assert root.tag == ns + "svg"
    assert len(root.findall(f".//{ns}polyline")) == 3
    assert len(root.findall(f".//{ns}polygon")) == 1


def _square(x):
    return x * x


def test_pmap_preserves_order(monkeypatch):
    monkeypatch.delenv("TANGLE_WORKERS", raising=False)
    assert pmap(_square, range(10), 1) == pmap(_square, range(10), 2) == [i * i for i in range(10)]
    assert resolve_workers(None) == 1
    monkeypatch.setenv("TANGLE_WORKERS", "3")
    assert resolve_workers(1) == 3
    with pytest.raises(ValueError):
        monkeypatch.setenv("TANGLE_WORKERS", "0")
        resolve_workers(1)
