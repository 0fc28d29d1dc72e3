"""Table schemas and records: the bijection between database records and
basis indices.

A record packs its fields into ``n`` bits; the first declared field occupies
the most significant bits, mirroring the register's qubit order.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import SchemaError


@dataclass(frozen=True)
class Record:
    """Per-field unsigned values, in schema field order."""

    values: tuple[int, ...]

    def __repr__(self) -> str:
        return f"Record{self.values}"


@dataclass(frozen=True)
class TableSchema:
    """Named fixed-width unsigned fields; ``num_bits`` is the data-qubit count."""

    name: str
    fields: tuple[tuple[str, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple((str(n), int(w)) for n, w in self.fields))
        names = [n for n, _ in self.fields]
        if not names:
            raise SchemaError("a table needs at least one field")
        if len(set(names)) != len(names):
            raise SchemaError(f"duplicate field names in table {self.name!r}")
        for field_name, width in self.fields:
            if width < 1:
                raise SchemaError(f"field {field_name!r} must be at least 1 bit wide")

    @property
    def num_bits(self) -> int:
        return sum(w for _, w in self.fields)

    @property
    def field_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.fields)

    def width_of(self, field: str) -> int:
        for field_name, width in self.fields:
            if field_name == field:
                return width
        raise SchemaError(f"unknown field {field!r} in table {self.name!r}")

    def offset_of(self, field: str) -> int:
        """Bit offset of the field's most significant bit, counted from the
        register's most significant end."""
        offset = 0
        for field_name, width in self.fields:
            if field_name == field:
                return offset
            offset += width
        raise SchemaError(f"unknown field {field!r} in table {self.name!r}")

    def record(self, **values: int) -> Record:
        """Build a record from keyword field values; omitted fields are 0."""
        known = dict(self.fields)
        for field_name in values:
            if field_name not in known:
                raise SchemaError(f"unknown field {field_name!r} in table {self.name!r}")
        packed = []
        for field_name, width in self.fields:
            value = int(values.get(field_name, 0))
            if value < 0 or value >= 1 << width:
                raise SchemaError(
                    f"value {value} does not fit field {field_name!r} of width {width}"
                )
            packed.append(value)
        return Record(tuple(packed))

    def encode(self, record: Record) -> int:
        """Record -> basis index of the data register."""
        if len(record.values) != len(self.fields):
            raise SchemaError("record arity does not match schema")
        index = 0
        for value, (field_name, width) in zip(record.values, self.fields):
            if value < 0 or value >= 1 << width:
                raise SchemaError(
                    f"value {value} does not fit field {field_name!r} of width {width}"
                )
            index = (index << width) | value
        return index

    def decode(self, index: int) -> Record:
        """Basis index of the data register -> record."""
        n = self.num_bits
        if index < 0 or index >= 1 << n:
            raise SchemaError(f"index {index} out of range for {n} data bits")
        values = []
        remaining = index
        for _, width in reversed(self.fields):
            values.append(remaining & ((1 << width) - 1))
            remaining >>= width
        return Record(tuple(reversed(values)))

    def as_dict(self, record: Record) -> dict[str, int]:
        return {name: value for (name, _), value in zip(self.fields, record.values)}

    def value_of(self, record: Record, field: str) -> int:
        for (field_name, _), value in zip(self.fields, record.values):
            if field_name == field:
                return value
        raise SchemaError(f"unknown field {field!r} in table {self.name!r}")
