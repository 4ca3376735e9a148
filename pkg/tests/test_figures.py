import numpy as np
import pytest

from chanbound import figures, measures, qla, theories
from chanbound.figures import FigureSpec

T_STATE = np.array([1, np.exp(1j * np.pi / 4)]) / np.sqrt(2)


def test_fig2a_tight_at_p04():
    t = figures.make_figure(FigureSpec("2a", (0.4,)))
    _, rob, wt, ns = t.rows[0]
    assert rob == pytest.approx(0.3, abs=1e-6)
    assert wt == pytest.approx(0.3, abs=1e-6)
    assert ns == pytest.approx(0.3, abs=1e-5)


def test_fig2_bounds_below_achievable_error():
    for fig in ("2b", "2c"):
        t = figures.make_figure(FigureSpec(fig, (0.2, 0.5)))
        for _, rob, wt, ns in t.rows:
            assert rob <= ns + 1e-6
            assert wt is None or wt <= ns + 1e-6


def test_fig3b_noiseless_t_inputs():
    t = figures.make_figure(FigureSpec("3b", (0.0,)))
    _, rob, wt, prev = t.rows[0]
    assert wt is None and prev is None  # pure input: no free component, no full rank
    tt = qla.DensityOperator.pure(qla.kron(T_STATE, T_STATE, T_STATE))
    r = measures.robustness(tt, theories.stab_states(3)).value
    assert rob == pytest.approx(1 - 9 / 16 * r, abs=1e-7)
    assert rob == pytest.approx(0.1, abs=0.01)
    assert t.to_csv().splitlines()[1].endswith(",,")


def test_fig3b_weight_beats_previous_for_noisy_inputs():
    t = figures.make_figure(FigureSpec("3b", (0.2,)))
    _, _, wt, prev = t.rows[0]
    assert wt > prev


def test_fig3a_ranges():
    t = figures.make_figure(FigureSpec("3a", (0.0, 0.5, 1.0)))
    assert t.header == ["p", "robustness_bound", "weight_bound"]
    for row in t.rows:
        assert all(v is None or 0.0 <= v <= 1.0 for v in row[1:])


def test_fig4a_copy_floor_exceeds_three():
    t = figures.make_figure(FigureSpec("4a", (0.09,), param=0.0))
    assert t.rows[0][1] > 3


def test_fig4b_columns():
    t = figures.make_figure(FigureSpec("4b", (1e-3, 0.1)))
    assert t.header == ["eps", "robustness_copies", "weight_copies", "previous_copies"]
    small, large = t.rows
    assert small[2] >= large[2] and small[3] >= large[3]


def test_csv_is_deterministic():
    spec = FigureSpec("4b", figures.default_grid("4b", 5))
    a = figures.make_figure(spec).to_csv()
    b = figures.make_figure(spec).to_csv()
    assert a == b
    assert a.splitlines()[0] == "eps,robustness_copies,weight_copies,previous_copies"
    assert len(a.splitlines()) == 6


def test_write_csv(tmp_path):
    t = figures.Table(["x", "y"], [[0.5, None]])
    path = tmp_path / "out.csv"
    figures.write_csv(t, path)
    assert path.read_text() == "x,y\n0.5,\n"


def test_default_grids():
    g = figures.default_grid("4a")
    assert len(g) == 25 and 0 < min(g) and max(g) == pytest.approx(0.4)
    assert np.all(np.diff(np.log(g)) > 0)
    g = figures.default_grid("2a", 11)
    assert g[0] == 0.0 and g[-1] == 1.0 and len(g) == 11


def test_invalid_specs():
    with pytest.raises(ValueError):
        FigureSpec("9z", (0.1,))
    with pytest.raises(ValueError):
        FigureSpec("2a", (1.5,))
    with pytest.raises(ValueError):
        FigureSpec("4a", (0.0,))
