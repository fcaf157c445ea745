import json

import numpy as np
import pytest

from wignerctx import io as fio
from wignerctx.measurement import born_quadrature_pdf_oracle
from wignerctx.qcompile import compile_measurement
from wignerctx.states import make_cat, tensor, two_mode_squeezed_vacuum, make_fock
from wignerctx.wigner import GridSpec, wigner_grid


@pytest.mark.parametrize("state", [
    two_mode_squeezed_vacuum(0.3),
    tensor(make_fock([1], 3), make_fock([0], 2)),
    make_cat(1.0, "odd", 12),
])
def test_state_round_trip(tmp_path, state):
    path = tmp_path / "s.json"
    fio.save_state(path, state)
    back = fio.load_state(path)
    assert type(back) is type(state)
    if hasattr(state, "cov"):
        np.testing.assert_array_equal(back.cov, state.cov)
    else:
        assert back.cutoffs == state.cutoffs
        np.testing.assert_array_equal(back.matrix, state.matrix)


@pytest.mark.parametrize("body", [
    {},
    {"type": "banana"},
    {"type": "gaussian", "modes": 2, "mean": [0, 0], "cov": [[0.5, 0], [0, 0.5]]},
    {"type": "fock", "cutoffs": [2]},
])
def test_malformed_state_files(tmp_path, body):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(body))
    with pytest.raises(fio.FormatError):
        fio.load_state(path)


def test_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(fio.FormatError):
        fio.load_json(path)


def test_plan_round_trip():
    plan = compile_measurement([1.0, 5.0, 2.0, 0.0])
    back = fio.plan_from_dict(json.loads(fio.dumps(fio.plan_to_dict(plan))))
    assert back == plan


def test_pdf_csv_round_trip(tmp_path):
    pdf = born_quadrature_pdf_oracle(make_cat(1.0, "even", 20), [1.0, 0.5], np.linspace(-6, 6, 31))
    path = tmp_path / "p.csv"
    fio.write_atomic(path, fio.pdf_csv(pdf))
    back = fio.read_pdf_csv(path)
    np.testing.assert_array_equal(back.masses, pdf.masses)
    np.testing.assert_array_equal(back.edges, pdf.edges)


def test_wigner_csv_layout():
    spec = GridSpec(((-1, 1, 3), (-2, 2, 2)))
    text = fio.wigner_csv(wigner_grid(make_fock([0], 3), spec, check_coverage=False))
    lines = text.splitlines()
    assert lines[0] == "axis_1,axis_2,W"
    assert len(lines) == 7
    assert lines[1].startswith("-1,-2,")


def test_atomic_write_leaves_nothing_on_failure(tmp_path, monkeypatch):
    target = tmp_path / "out.txt"

    def boom(src, dst):
        raise OSError("disk full")

    monkeypatch.setattr(fio.os, "replace", boom)
    with pytest.raises(OSError):
        fio.write_atomic(target, "data")
    assert list(tmp_path.iterdir()) == []


def test_atomic_write_replaces(tmp_path):
    target = tmp_path / "out.txt"
    target.write_text("old")
    fio.write_atomic(target, "new")
    assert target.read_text() == "new"
