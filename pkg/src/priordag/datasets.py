"""Observation tables and variable metadata."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["CONTINUOUS", "DISCRETE", "VariableMeta", "Dataset"]

CONTINUOUS = "continuous"
DISCRETE = "discrete"


@dataclass(frozen=True)
class VariableMeta:
    """Name and kind of one observed variable.

    Discrete variables carry their category labels; values in a dataset
    column are stored as integer codes into that label list.
    """

    name: str
    kind: str = CONTINUOUS
    categories: tuple | None = None

    def __post_init__(self):
        if not self.name:
            raise ValueError("variable name must be nonempty")
        if self.kind not in (CONTINUOUS, DISCRETE):
            raise ValueError(f"unknown variable kind {self.kind!r}")
        if self.kind == DISCRETE:
            if not self.categories:
                raise ValueError(f"discrete variable {self.name!r} needs categories")
            object.__setattr__(self, "categories", tuple(self.categories))
        elif self.categories is not None:
            raise ValueError(f"continuous variable {self.name!r} cannot have categories")

    @property
    def n_categories(self) -> int:
        return len(self.categories) if self.categories else 0


@dataclass(frozen=True)
class Dataset:
    """An n x d observation matrix plus per-column metadata.

    Discrete columns hold integer category codes (as floats, for a uniform
    value matrix); continuous columns hold raw measurements.  Immutable.
    """

    values: np.ndarray
    variables: tuple

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError(f"values must be 2-D, got shape {v.shape}")
        variables = tuple(self.variables)
        if v.shape[1] != len(variables):
            raise ValueError(
                f"values have {v.shape[1]} columns but {len(variables)} variables declared"
            )
        if v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError("dataset must have at least one row and one column")
        names = [m.name for m in variables]
        if len(set(names)) != len(names):
            raise ValueError("variable names must be unique")
        for j, meta in enumerate(variables):
            if meta.kind == DISCRETE:
                col = v[:, j]
                if not np.all(col == np.floor(col)):
                    raise ValueError(f"discrete column {meta.name!r} has non-integer codes")
                if col.min() < 0 or col.max() >= meta.n_categories:
                    raise ValueError(
                        f"discrete column {meta.name!r} has codes outside its "
                        f"{meta.n_categories} declared categories"
                    )
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "variables", variables)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def names(self) -> list:
        return [m.name for m in self.variables]

    def column(self, j: int) -> np.ndarray:
        return self.values[:, j]

    def all_discrete(self) -> bool:
        return all(m.kind == DISCRETE for m in self.variables)

    def codes(self, j: int) -> np.ndarray:
        """Integer category codes of a discrete column."""
        if self.variables[j].kind != DISCRETE:
            raise ValueError(f"column {self.variables[j].name!r} is not discrete")
        return self.values[:, j].astype(int)
