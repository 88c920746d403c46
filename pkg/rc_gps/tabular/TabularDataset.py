import logging
from collections import OrderedDict
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from rc_gps.exceptions import InvalidDataError, SchemaError
from rc_gps.tabular.ColumnRole import ColumnRole

logger = logging.getLogger(__name__)

RolesLike = Mapping[Union[str, ColumnRole], Union[str, Sequence[str]]]


class TabularDataset:
    """
    An immutable, column-named numeric table together with the roles its columns play in an analysis.

    Roles are stored as ``role -> ordered column names``; a column may carry several roles (e.g. a covariate that is
    both a confounder and a calibration covariate). Single-column roles (outcome, exposures, offset, region id,
    weight) hold at most one column.

    Args:
        columns: mapping from column name to a 1-d numeric vector; all vectors must have the same length
        roles: mapping from :class:`ColumnRole` (or its string value) to a column name or a list of column names
        validate: check the role invariants (finite role columns, integer categories). Defaults to True.

    Example:
        ::

            from rc_gps.tabular import ColumnRole, TabularDataset

            dataset = TabularDataset(
                {"y": [1.0, 2.0, 3.0], "w": [0.5, 0.1, 0.3], "c1": [1.0, 0.0, 1.0]},
                roles={"outcome": "y", "error_prone_exposure": "w", "confounder": ["c1"]},
            )
            dataset.role_matrix(ColumnRole.CONFOUNDER).shape
            # => (3, 1)
    """

    def __init__(
        self, columns: Mapping[str, Iterable[float]], roles: Optional[RolesLike] = None, validate: bool = True
    ):
        self._columns: "OrderedDict[str, np.ndarray]" = OrderedDict()
        n_rows = None
        for name, values in columns.items():
            array = np.array(values, dtype=float, copy=True)
            if array.ndim != 1:
                raise SchemaError(f"Column {name!r} must be one-dimensional, got shape {array.shape}", column=name)
            if n_rows is None:
                n_rows = array.size
            elif array.size != n_rows:
                raise SchemaError(
                    f"Column {name!r} has {array.size} rows, expected {n_rows} like the preceding columns", column=name
                )
            array.flags.writeable = False
            self._columns[str(name)] = array
        self._n_rows = n_rows or 0
        self._roles = self._normalize_roles(roles or {})
        if validate:
            self._validate()

    def _normalize_roles(self, roles: RolesLike) -> Dict[ColumnRole, Tuple[str, ...]]:
        normalized = {}
        for role, names in roles.items():
            role = ColumnRole(role)
            if names is None:
                continue
            if isinstance(names, str):
                names = (names,)
            names = tuple(str(name) for name in names)
            if not role.is_multi_column and len(names) > 1:
                raise SchemaError(f"Role {role.value!r} takes a single column, got {list(names)}")
            for name in names:
                if name not in self._columns:
                    raise SchemaError(f"Column {name!r} (role {role.value!r}) not found in dataset", column=name)
            if names:
                normalized[role] = names
        return normalized

    def _validate(self) -> None:
        for role, names in self._roles.items():
            for name in names:
                values = self._columns[name]
                bad = np.flatnonzero(~np.isfinite(values))
                if bad.size:
                    raise InvalidDataError(
                        f"Column {name!r} (role {role.value!r}) has a non-finite value in row {bad[0] + 1}"
                    )
                if role == ColumnRole.CATEGORICAL_EXPOSURE:
                    bad = np.flatnonzero((values != np.round(values)) | (values < 1))
                    if bad.size:
                        raise InvalidDataError(
                            f"Categorical column {name!r} must hold integers 1..n, got {values[bad[0]]!r} "
                            f"in row {bad[0] + 1}"
                        )
                if role == ColumnRole.OFFSET and np.any(values <= 0):
                    raise InvalidDataError(f"Offset column {name!r} must hold positive person-time values")
                if role == ColumnRole.WEIGHT and np.any(values < 0):
                    raise InvalidDataError(f"Weight column {name!r} must hold nonnegative observation weights")

    @property
    def n_rows(self) -> int:
        return self._n_rows

    def __len__(self) -> int:
        return self._n_rows

    @property
    def column_names(self) -> List[str]:
        return list(self._columns.keys())

    @property
    def roles(self) -> Dict[ColumnRole, Tuple[str, ...]]:
        return dict(self._roles)

    def __contains__(self, name: str) -> bool:
        return name in self._columns

    def column(self, name: str) -> np.ndarray:
        try:
            return self._columns[name]
        except KeyError:
            raise SchemaError(f"Column {name!r} not found in dataset", column=name) from None

    def has_role(self, role: Union[str, ColumnRole]) -> bool:
        return ColumnRole(role) in self._roles

    def role_columns(self, role: Union[str, ColumnRole]) -> Tuple[str, ...]:
        return self._roles.get(ColumnRole(role), ())

    def role_column(self, role: Union[str, ColumnRole]) -> str:
        role = ColumnRole(role)
        names = self._roles.get(role)
        if not names:
            raise SchemaError(f"Dataset has no column with role {role.value!r}")
        return names[0]

    def role_values(self, role: Union[str, ColumnRole]) -> np.ndarray:
        return self._columns[self.role_column(role)]

    def role_matrix(self, role: Union[str, ColumnRole]) -> np.ndarray:
        names = self.role_columns(role)
        if not names:
            return np.zeros((self._n_rows, 0))
        return np.column_stack([self._columns[name] for name in names])

    def matrix(self, names: Sequence[str]) -> np.ndarray:
        if len(names) == 0:
            return np.zeros((self._n_rows, 0))
        return np.column_stack([self.column(name) for name in names])

    def with_column(
        self, name: str, values: Iterable[float], role: Optional[Union[str, ColumnRole]] = None
    ) -> "TabularDataset":
        """Returns a copy with ``name`` added (or replaced); single-column roles are reassigned to ``name``."""
        columns = OrderedDict(self._columns)
        columns[name] = values
        roles = dict(self._roles)
        if role is not None:
            role = ColumnRole(role)
            if role.is_multi_column:
                roles[role] = tuple(n for n in roles.get(role, ()) if n != name) + (name,)
            else:
                roles[role] = (name,)
        return TabularDataset(columns, roles)

    def select_roles(self, roles: Iterable[Union[str, ColumnRole]]) -> "TabularDataset":
        """Returns a copy restricted to the columns carrying one of ``roles`` (other roles are dropped)."""
        roles = [ColumnRole(role) for role in roles]
        keep = {role: self._roles[role] for role in roles if role in self._roles}
        names = {name for columns in keep.values() for name in columns}
        columns = OrderedDict((name, values) for name, values in self._columns.items() if name in names)
        return TabularDataset(columns, keep, False)

    def subset(self, indices: Iterable[int]) -> "TabularDataset":
        """Returns the rows at ``indices`` (in that order; repeats allowed)."""
        indices = np.asarray(indices, dtype=int)
        return TabularDataset({name: values[indices] for name, values in self._columns.items()}, self._roles, False)

    def to_dict(self) -> Dict[str, np.ndarray]:
        return OrderedDict(self._columns)

    def __repr__(self) -> str:
        roles = {role.value: list(names) for role, names in self._roles.items()}
        return f"TabularDataset(n_rows={self._n_rows}, columns={self.column_names}, roles={roles})"
