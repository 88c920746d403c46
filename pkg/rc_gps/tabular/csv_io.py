import csv
import logging
import math
import os
from typing import List, Optional

from rc_gps.exceptions import ParseError
from rc_gps.tabular.TabularDataset import RolesLike, TabularDataset
from rc_gps.util import write_csv_rows

logger = logging.getLogger(__name__)


def read_csv(path: str, roles: Optional[RolesLike] = None, delimiter: str = ",") -> TabularDataset:
    """
    Reads a numeric CSV file with a header row into a :class:`TabularDataset`.

    Every body cell must parse as a finite float; missing values (empty cells, ``NA``, ``nan``) are rejected
    rather than imputed. Blank lines are skipped. Row numbers in errors are 1-based and count the header.

    Args:
        path: the CSV file
        roles: optional role mapping, see :class:`TabularDataset`
        delimiter: field delimiter. Defaults to ",".

    Returns:
        TabularDataset: the table

    Raises:
        ParseError: on a missing header, duplicate header names, ragged rows or non-numeric cells
    """
    with open(path, newline="", encoding="utf-8") as fIn:
        reader = csv.reader(fIn, delimiter=delimiter)
        header = None
        for header in reader:
            if header:
                break
        if not header:
            raise ParseError("File is empty, expected a header row", path=path, row=1)

        header = [name.strip() for name in header]
        seen = set()
        for name in header:
            if name == "":
                raise ParseError("Empty column name in header", path=path, row=1)
            if name in seen:
                raise ParseError("Duplicate column name in header", path=path, row=1, column=name)
            seen.add(name)

        values: List[List[float]] = [[] for _ in header]
        for row in reader:
            if not row:
                continue
            row_number = reader.line_num
            if len(row) != len(header):
                raise ParseError(f"Expected {len(header)} fields, found {len(row)}", path=path, row=row_number)
            for idx, cell in enumerate(row):
                try:
                    value = float(cell)
                except ValueError:
                    raise ParseError(f"Non-numeric value {cell!r}", path=path, row=row_number, column=header[idx])
                if not math.isfinite(value):
                    raise ParseError(
                        f"Missing or non-finite value {cell!r}", path=path, row=row_number, column=header[idx]
                    )
                values[idx].append(value)

    logger.debug(f"Read {len(values[0])} rows and {len(header)} columns from {path}")
    return TabularDataset(dict(zip(header, values)), roles)


def write_csv(dataset: TabularDataset, path: str) -> None:
    """Writes ``dataset`` to ``path`` with a header row. Floats are written with their shortest round-trip repr."""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    names = dataset.column_names
    columns = [dataset.column(name) for name in names]
    write_csv_rows(path, names, zip(*columns))
