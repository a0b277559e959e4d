import csv
import io
import json

import numpy as np
import pytest

from azumaya.errors import ShapeError, ValidationError
from azumaya.expr import parse
from azumaya.spectral import GridSpec, MatrixFamily, defects, family_apply, sample_family, samples_to_csv, wall_detect

EX41 = MatrixFamily.parse(1, [[["x1", "1"], ["0", "-x1"]]])
CONST = MatrixFamily.parse(1, [[["1", "0"], ["0", "2"]]])
SHEAR = MatrixFamily.parse(1, [[["0", "x1"], ["0", "0"]]])
DIAG = MatrixFamily.parse(1, [[["x1", "0"], ["0", "-x1"]]])
GRID41 = GridSpec(((-1.0, 1.0, 41),))


def test_example_family_samples():
    samples = sample_family(EX41, GRID41)
    assert len(samples) == 41 and all(s.ok for s in samples)
    for s in samples:
        x = s.point[0]
        if s.index == (20,):
            assert x == 0.0
            assert s.s == 1 and s.nilpotencies == (2,)
            assert s.spectrum.points[0].lam == (0.0,)
        else:
            assert s.s == 2 and s.nilpotencies == (1, 1)
            assert sorted(p.lam[0] for p in s.spectrum.points) == pytest.approx(sorted([x, -x]))


def test_constant_family_is_constant():
    samples = sample_family(CONST, GRID41)
    first = [(p.lam, p.rank, p.nilpotency) for p in samples[0].spectrum.points]
    for s in samples:
        assert [(p.lam, p.rank, p.nilpotency) for p in s.spectrum.points] == first
    assert wall_detect(samples, GRID41) == []


def test_shear_family():
    samples = sample_family(SHEAR, GRID41)
    for s in samples:
        assert s.s == 1 and s.spectrum.points[0].lam == (0.0,)
        assert s.nilpotencies == ((1,) if s.point[0] == 0 else (2,))


def test_walls_bracket_zero():
    walls = wall_detect(sample_family(EX41, GRID41), GRID41)
    assert [(w.a, w.b) for w in walls] == [((19,), (20,)), ((20,), (21,))]
    assert all("s" in w.changed and "nilpotency" in w.changed for w in walls)
    assert walls[0].before == {"s": 2, "nilpotency": [1, 1]}
    assert walls[0].after == {"s": 1, "nilpotency": [2]}


def test_diagonal_collision_walls():
    walls = wall_detect(sample_family(DIAG, GRID41), GRID41)
    assert [(w.a, w.b) for w in walls] == [((19,), (20,)), ((20,), (21,))]
    assert [(w.before["s"], w.after["s"]) for w in walls] == [(2, 1), (1, 2)]
    assert all("s" in w.changed for w in walls)


def test_fiber_finiteness():
    fam = MatrixFamily.parse(1, [[["x1", "1", "0"], ["0", "x1^2", "0"], ["0", "0", "1"]]])
    grid = GridSpec(((-1.5, 1.5, 31),))
    for s in sample_family(fam, grid):
        assert 1 <= s.s <= fam.r
        assert sum(p.rank for p in s.spectrum.points) == fam.r


def test_defective_points_are_reported_not_fatal():
    rot = MatrixFamily.parse(1, [[["1", "-x1"], ["x1", "1"]]])
    grid = GridSpec(((-1.0, 1.0, 5),))
    samples = sample_family(rot, grid)
    bad = defects(samples)
    assert [d["point"] for d in bad] == [[-1.0], [-0.5], [0.5], [1.0]]
    assert "HypothesisError" in bad[0]["error"]
    assert samples[2].ok


def test_family_apply_exp_removable_value():
    grid = GridSpec(((-1.0, 1.0, 401),))
    res = family_apply(parse("exp(y1)", 1), EX41, grid, entry=(0, 1))
    for s, F in zip(res.samples, res.values):
        x = s.point[0]
        want = 1.0 if x == 0 else (np.exp(x) - np.exp(-x)) / (2 * x)
        assert F[0, 1] == pytest.approx(want, rel=1e-9)
    assert res.report.passed
    assert res.report.max_jump <= 3 * res.report.median_away


def test_family_apply_coordinate():
    grid = GridSpec(((-1.0, 1.0, 21),))
    res = family_apply(parse("y1", 1), EX41, grid)
    for s, F in zip(res.samples, res.values):
        assert np.allclose(F, EX41.matrices_at(s.point)[0], rtol=0, atol=1e-14)


def test_family_apply_square():
    grid = GridSpec(((-1.0, 1.0, 21),))
    res = family_apply(parse("y1*y1", 1), EX41, grid)
    for s, F in zip(res.samples, res.values):
        assert np.allclose(F, s.point[0] ** 2 * np.eye(2), rtol=0, atol=1e-14)


def test_frame_jumps_while_values_stay_continuous():
    grid = GridSpec(((-1.0, 1.0, 401),))
    res = family_apply(parse("exp(y1)", 1), EX41, grid)
    rep = res.report
    # spectral projectors blow up next to x = 0 and collapse to the identity at it
    assert rep.frame_jump_wall > 1e4 * max(rep.frame_median_away, 1e-6)
    assert rep.max_wall_jump <= 3 * rep.median_away
    assert rep.passed


def test_grid_refinement_halves_jumps():
    f = parse("exp(y1)", 1)
    coarse = family_apply(f, EX41, GridSpec(((-1.0, 1.0, 201),))).report.max_jump
    fine = family_apply(f, EX41, GridSpec(((-1.0, 1.0, 401),))).report.max_jump
    assert fine <= 0.5 * coarse * (1 + 1e-2)


def test_two_dimensional_base():
    fam = MatrixFamily.parse(2, [[["x1", "x2"], ["0", "-x1"]], [["x2", "0"], ["0", "x2"]]])
    grid = GridSpec.parse("x1:-1:1:11,x2:-1:1:5")
    samples = sample_family(fam, grid)
    assert len(samples) == 55 and all(s.ok for s in samples)
    walls = wall_detect(samples, grid)
    assert {w.axis for w in walls} == {0, 1}
    res = family_apply(parse("exp(y1)*cos(y2)", 2), fam, grid, samples=samples)
    assert all(v is not None for v in res.values)


def test_grid_parse_and_validation():
    g = GridSpec.parse("x1:-1:1:5")
    assert g.shape == (5,) and g.steps == (0.5,)
    assert GridSpec.parse("1:0:2:3").point((2,)) == (2.0,)
    for bad in ["x1:0:1", "x2:0:1:3", "x1:1:0:3", "x1:0:1:1", "x1:a:1:3", ""]:
        with pytest.raises(ValidationError):
            GridSpec.parse(bad)


def test_grid_dimension_mismatch():
    with pytest.raises(ShapeError):
        sample_family(EX41, GridSpec.parse("x1:0:1:3,x2:0:1:3"))


def test_family_json_round_trip():
    data = json.loads(json.dumps(EX41.to_json()))
    assert data == {"base_dim": 1, "n": 1, "r": 2, "matrices": [[["x1", "1.0"], ["0.0", "-x1"]]]}
    assert MatrixFamily.from_json(data) == EX41


def test_family_json_errors():
    with pytest.raises(ValidationError):
        MatrixFamily.from_json({"matrices": []})
    with pytest.raises(ShapeError):
        MatrixFamily.from_json({"base_dim": 1, "r": 3, "matrices": [[["x1", "1"], ["0", "x1"]]]})
    with pytest.raises(ValidationError):
        MatrixFamily.parse(1, [[["x2", "0"], ["0", "1"]]])


def test_csv_layout():
    samples = sample_family(EX41, GridSpec(((-1.0, 1.0, 3),)))
    rows = list(csv.reader(io.StringIO(samples_to_csv(samples, EX41))))
    assert rows[0] == ["x1", "s", "cond", "projector_norm", "defect",
                       "q1_y1", "rank1", "nilpotency1", "q2_y1", "rank2", "nilpotency2"]
    assert rows[2][:2] == ["0", "1"] and rows[2][5:8] == ["0", "2", "2"] and rows[2][8:] == ["", "", ""]
    assert float(rows[1][5]) == -1.0
    assert all(len(r) == len(rows[0]) for r in rows)
