import csv
import math
from enum import Enum
from typing import Any, Iterable, List, Mapping, Optional, TextIO

from ..constants import SCHEMA_VERSION
from ..errors import ArgumentError


class DataType(Enum):
    integer = "integer"
    real = "real"
    text = "text"
    boolean = "boolean"


class Column:
    """A typed column of a result table

    Parameters
    ----------
    name : str
        The header name
    datatype : DataType
        How values are rendered
    nullable : Optional bool
        Whether the column may be left empty.
        Defaults to False
    """

    def __init__(self, name: str, datatype: DataType, nullable: Optional[bool] = False):
        self.name = name
        self.datatype = datatype
        self.nullable = nullable

    def __repr__(self) -> str:
        return f"Column({self.name!r}, {self.datatype.value})"

    def text(self, value: Any) -> str:
        """Renders a value for CSV output

        Reals use ``repr`` so that the text round-trips exactly and two identical runs
        give byte-identical files.
        """

        if value is None:
            if not self.nullable:
                raise ArgumentError(self.name, value, "column is not nullable")
            return ""

        if self.datatype is DataType.integer:
            return str(int(value))
        if self.datatype is DataType.real:
            return repr(float(value))
        if self.datatype is DataType.boolean:
            return "true" if value else "false"
        return str(value)

    def json(self, value: Any) -> Any:
        """Renders a value for JSON output; non-finite reals become their text form"""

        if value is None:
            return None
        if self.datatype is DataType.integer:
            return int(value)
        if self.datatype is DataType.real:
            value = float(value)
            return value if math.isfinite(value) else repr(value)
        if self.datatype is DataType.boolean:
            return bool(value)
        return str(value)


class Table:
    """Helper class to declare the schema of a result file"""

    def __init__(self, name: str):
        self._name = name
        self._columns: List[Column] = []

    @property
    def name(self) -> str:
        return self._name

    @property
    def columns(self) -> List[Column]:
        return list(self._columns)

    @property
    def header(self) -> str:
        return ",".join(column.name for column in self._columns)

    def add_column(self, name: str, datatype: DataType, nullable: Optional[bool] = False) -> "Table":
        if any(column.name == name for column in self._columns):
            raise ValueError(f"Column \"{name}\" already exists in table {self._name}")

        self._columns.append(Column(name, datatype, nullable))
        return self

    def extended(self, name: str, *columns: Column) -> "Table":
        """Returns a copy of this table with extra trailing columns"""

        table = Table(name)
        for column in [*self._columns, *columns]:
            table.add_column(column.name, column.datatype, column.nullable)
        return table

    def row(self, record: Mapping[str, Any]) -> List[str]:
        return [column.text(record.get(column.name)) for column in self._columns]

    def write_csv(self, records: Iterable[Mapping[str, Any]], stream: TextIO):
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow([column.name for column in self._columns])
        for record in records:
            writer.writerow(self.row(record))

    def to_json(self, records: Iterable[Mapping[str, Any]]) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "table": self._name,
            "columns": [{"name": c.name, "type": c.datatype.value} for c in self._columns],
            "rows": [{c.name: c.json(record.get(c.name)) for c in self._columns} for record in records],
        }


COV_TABLE = (
    Table("cov_table")
    .add_column("u", DataType.real)
    .add_column("log_cov", DataType.real)
    .add_column("cov_sign", DataType.integer)
    .add_column("window_alpha", DataType.real)
    .add_column("window_beta", DataType.real)
    .add_column("quad_err", DataType.real)
    .add_column("tail_budget", DataType.real)
    .add_column("regime", DataType.text)
)

LPP_TABLE = (
    Table("lpp")
    .add_column("estimand", DataType.text)
    .add_column("N", DataType.integer)
    .add_column("u", DataType.real)
    .add_column("mean", DataType.real)
    .add_column("stderr", DataType.real)
    .add_column("n_samples", DataType.integer)
    .add_column("seed", DataType.integer)
)

LPP_INTERVAL_TABLE = LPP_TABLE.extended("lpp_interval", Column("lo", DataType.real), Column("hi", DataType.real))

LPP_CROSS_TABLE = LPP_TABLE.extended("lpp_cross_check", Column("rhs", DataType.real), Column("within_tolerance", DataType.boolean))
