import numpy as np
import pytest

from priordag import DISCRETE, Dataset, VariableMeta


def test_variable_meta_requires_categories_for_discrete():
    with pytest.raises(ValueError):
        VariableMeta(name="x", kind=DISCRETE)
    with pytest.raises(ValueError):
        VariableMeta(name="x", kind=DISCRETE, categories=())


def test_variable_meta_rejects_unknown_kind_and_empty_name():
    with pytest.raises(ValueError):
        VariableMeta(name="x", kind="fuzzy")
    with pytest.raises(ValueError):
        VariableMeta(name="")


def test_continuous_cannot_carry_categories():
    with pytest.raises(ValueError):
        VariableMeta(name="x", categories=("a", "b"))


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        Dataset(np.zeros((5, 2)), (VariableMeta("a"),))


def test_duplicate_names_rejected():
    with pytest.raises(ValueError):
        Dataset(np.zeros((5, 2)), (VariableMeta("a"), VariableMeta("a")))


def test_discrete_codes_validated():
    meta = (VariableMeta("c", kind=DISCRETE, categories=("lo", "hi")),)
    Dataset(np.array([[0.0], [1.0]]), meta)
    with pytest.raises(ValueError):
        Dataset(np.array([[0.0], [2.0]]), meta)  # out of range
    with pytest.raises(ValueError):
        Dataset(np.array([[0.5], [1.0]]), meta)  # not an integer code


def test_values_are_immutable():
    data = Dataset(np.zeros((3, 1)), (VariableMeta("a"),))
    with pytest.raises(ValueError):
        data.values[0, 0] = 1.0


def test_codes_accessor():
    meta = (VariableMeta("c", kind=DISCRETE, categories=("x", "y", "z")),
            VariableMeta("u"))
    data = Dataset(np.array([[2.0, 0.1], [0.0, -0.5]]), meta)
    assert data.codes(0).tolist() == [2, 0]
    with pytest.raises(ValueError):
        data.codes(1)
    assert not data.all_discrete()
