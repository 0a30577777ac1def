import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mapod.data import (
    ConditionalUniform,
    DataError,
    Gaussian,
    InputSet,
    InputSpec,
    Schema,
    SchemaError,
    SimulationDataset,
    SpecError,
    Uniform,
    derive_defect_size,
    load_dataset,
    write_dataset,
)


def pipe_inputs():
    return InputSet([
        InputSpec("E", Gaussian(10.0, 0.3)),
        InputSpec("h1", Uniform(1, 5)),
        InputSpec("h2", Uniform(1, 5)),
        InputSpec("P1", Uniform(0.1, 0.5), "size"),
        InputSpec("P2", Uniform(0.1, 0.5)),
        InputSpec("ebav1", ConditionalUniform("P1", 0.5, 3.0)),
        InputSpec("ebav2", ConditionalUniform("P2", 0.5, 3.0)),
    ])


def test_minimal_csv(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("E,P1,ProjY\n10,0.2,5\n10.5,0.3,6\n9.8,0.4,7\n")
    ds = load_dataset(p, Schema(inputs=("E", "P1")))
    assert len(ds) == 3
    np.testing.assert_array_equal(ds.column("P1"), [0.2, 0.3, 0.4])
    np.testing.assert_array_equal(ds.response, [5, 6, 7])


def test_missing_response_column(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("E,P1\n10,0.2\n10.5,0.3\n9.8,0.4\n")
    with pytest.raises(SchemaError, match="ProjY"):
        load_dataset(p, Schema(inputs=("E", "P1")))


def test_bad_cell_reports_position(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("E,P1,ProjY\n10,0.2,5\n10.5,abc,6\n9.8,0.4,7\n")
    with pytest.raises((SchemaError, DataError), match="P1"):
        load_dataset(p, Schema(inputs=("E", "P1")))


def test_roundtrip_with_absent_values(tmp_path):
    rng = np.random.default_rng(0)
    x = rng.uniform(0.1, 0.5, (20, 7))
    fc = np.where(np.arange(20) % 2 == 0, 1, 2)
    x[fc == 1, 2] = np.nan
    x[fc == 1, 4] = np.nan
    x[fc == 1, 6] = np.nan
    ds = SimulationDataset(("E", "h1", "h2", "P1", "P2", "ebav1", "ebav2"), x,
                           rng.lognormal(3, 1, 20), fc)
    p = tmp_path / "rt.csv"
    write_dataset(ds, p)
    back = load_dataset(p, Schema(flaw_count="i_P2"))
    np.testing.assert_array_equal(np.isnan(back.rows), np.isnan(ds.rows))
    np.testing.assert_allclose(back.rows, ds.rows, rtol=1e-12, equal_nan=True)
    np.testing.assert_allclose(back.response, ds.response, rtol=1e-12)
    np.testing.assert_array_equal(back.flaw_count, fc)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=3, max_size=30))
def test_roundtrip_is_lossless(tmp_path_factory, values):
    ds = SimulationDataset(("P1",), np.array(values)[:, None], np.array(values))
    p = tmp_path_factory.mktemp("rt") / "d.csv"
    write_dataset(ds, p)
    back = load_dataset(p, Schema(inputs=("P1",)))
    np.testing.assert_array_equal(back.rows, ds.rows)


def test_defect_size_rules():
    x = np.array([[0.2, 0.4], [0.3, np.nan], [0.25, 0.25]])
    ds = SimulationDataset(("P1", "P2"), x, None, np.array([2, 1, 2]))
    np.testing.assert_array_equal(derive_defect_size(ds), [0.4, 0.3, 0.25])


def test_defect_size_one_flaw_ignores_second_depth():
    ds = SimulationDataset(("P1", "P2"), np.array([[0.2, 0.4], [0.3, 0.1], [0.1, 0.2]]),
                           None, np.array([1, 1, 2]))
    np.testing.assert_array_equal(derive_defect_size(ds), [0.2, 0.3, 0.2])


def test_two_flaw_row_missing_depth_is_an_error():
    ds = SimulationDataset(("P1", "P2"), np.array([[0.2, np.nan], [0.3, 0.1], [0.1, 0.2]]),
                           None, np.array([2, 2, 2]))
    with pytest.raises(DataError):
        derive_defect_size(ds)


@settings(max_examples=30, deadline=None)
@given(st.permutations(list(range(8))))
def test_defect_size_permutation_equivariant(perm):
    rng = np.random.default_rng(1)
    x = rng.uniform(0.1, 0.5, (8, 2))
    fc = np.array([1, 2] * 4)
    ds = SimulationDataset(("P1", "P2"), x, None, fc)
    dsp = SimulationDataset(("P1", "P2"), x[perm], None, fc[perm])
    np.testing.assert_array_equal(derive_defect_size(dsp), derive_defect_size(ds)[perm])


def test_laws_validate():
    with pytest.raises(SpecError):
        Gaussian(0, 0)
    with pytest.raises(SpecError):
        Uniform(1, 1)


def test_conditional_interval_must_be_nonempty():
    with pytest.raises(SpecError):
        InputSet([InputSpec("P1", Uniform(0.1, 0.5), "size"),
                  InputSpec("ebav1", ConditionalUniform("P1", 0.5, 0.3))])


def test_conditional_source_must_come_first():
    with pytest.raises(SpecError):
        InputSet([InputSpec("ebav1", ConditionalUniform("P1", 0.5, 3.0)),
                  InputSpec("P1", Uniform(0.1, 0.5), "size")])


def test_conditional_median():
    specs = InputSet([InputSpec("P1", Uniform(0.4, 0.6), "size"),
                      InputSpec("e", ConditionalUniform("P1", 0.0, 1.0))])
    x = specs.from_unit(np.array([[0.5, 0.5]]))
    assert x[0, 0] == pytest.approx(0.5)
    assert x[0, 1] == pytest.approx(0.25)


def test_independent_parameterization_roundtrip():
    specs = pipe_inputs()
    rng = np.random.default_rng(2)
    u = rng.random((50, 7))
    x = specs.from_unit(u)
    np.testing.assert_allclose(specs.to_independent(x)[:, 5:], u[:, 5:], atol=1e-12)
    np.testing.assert_allclose(specs.to_unit(x), u, atol=1e-9)
    assert specs.independent_parameterization().independent
    assert not specs.independent


def test_exactly_one_size_input():
    specs = InputSet([InputSpec("x", Uniform(0, 1)), InputSpec("y", Uniform(0, 1))])
    with pytest.raises(SpecError):
        specs.size_index


def test_dataset_is_read_only():
    ds = SimulationDataset(("a",), np.zeros((3, 1)), np.ones(3))
    with pytest.raises(ValueError):
        ds.rows[0, 0] = 1.0
