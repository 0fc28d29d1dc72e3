"""WHERE predicates compiled to reversible circuits.

A predicate becomes a truth table over the data bits, the table becomes an
XOR-of-AND-monomials form via the positive-polarity binary Moebius transform
over GF(2), and each monomial becomes one multi-controlled NOT onto a target
qubit.  Oracles apply ``|x, y> -> |x, y XOR f(x)>`` either through that gate
list or through a direct per-component bit flip driven by the table.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import SchemaError
from .gates import CnotGate
from .schema import Record, TableSchema
from .statevec import StateVector

MAX_TABLE_VARS = 20
GATE_PATH_MAX_VARS = 16

_OPS = {
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
}


class BoolExpr:
    """Predicate tree: comparisons and boolean variables combined with
    AND/OR/NOT, plus constants."""

    __slots__ = ()


@dataclass(frozen=True)
class Comparison(BoolExpr):
    field: str
    op: str
    literal: int

    def __post_init__(self):
        if self.op not in _OPS:
            raise ValueError(f"unknown comparison operator {self.op!r}")


@dataclass(frozen=True)
class Var(BoolExpr):
    """Bare boolean variable: true when the named field is nonzero."""

    name: str


@dataclass(frozen=True)
class And(BoolExpr):
    left: BoolExpr
    right: BoolExpr


@dataclass(frozen=True)
class Or(BoolExpr):
    left: BoolExpr
    right: BoolExpr


@dataclass(frozen=True)
class Not(BoolExpr):
    expr: BoolExpr


@dataclass(frozen=True)
class Const(BoolExpr):
    value: int


@dataclass(frozen=True, eq=False)
class TruthTable:
    """Function values over all ``2^num_vars`` variable assignments.

    Entry ``bits[i]`` is f at the assignment whose binary expansion is ``i``
    with variable 0 as the most significant bit.
    """

    num_vars: int
    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=bool)
        if bits.shape != (1 << self.num_vars,):
            raise ValueError(
                f"table of {bits.size} entries does not match {self.num_vars} variables"
            )
        bits.flags.writeable = False
        object.__setattr__(self, "bits", bits)


@dataclass(frozen=True)
class ReedMullerForm:
    """XOR of AND-monomials; each monomial is a set of variable indices and
    the empty monomial is the constant-1 term."""

    monomials: frozenset[frozenset[int]]

    def __post_init__(self):
        object.__setattr__(
            self, "monomials", frozenset(frozenset(m) for m in self.monomials)
        )


def validate_expr(expr: BoolExpr, schema: TableSchema) -> None:
    """Check field references and literal widths against the schema."""
    if isinstance(expr, Comparison):
        width = schema.width_of(expr.field)
        if expr.literal < 0 or expr.literal >= 1 << width:
            raise SchemaError(
                f"literal {expr.literal} does not fit field {expr.field!r} of width {width}"
            )
    elif isinstance(expr, Var):
        schema.width_of(expr.name)
    elif isinstance(expr, (And, Or)):
        validate_expr(expr.left, schema)
        validate_expr(expr.right, schema)
    elif isinstance(expr, Not):
        validate_expr(expr.expr, schema)
    elif isinstance(expr, Const):
        if expr.value not in (0, 1):
            raise ValueError("constant must be 0 or 1")
    else:
        raise TypeError(f"not a BoolExpr: {expr!r}")


def eval_expr(expr: BoolExpr, record: Record, schema: TableSchema) -> int:
    """Classical evaluation on a single record; comparisons are unsigned."""
    if isinstance(expr, Comparison):
        return int(_OPS[expr.op](schema.value_of(record, expr.field), expr.literal))
    if isinstance(expr, Var):
        return int(schema.value_of(record, expr.name) != 0)
    if isinstance(expr, And):
        return eval_expr(expr.left, record, schema) & eval_expr(expr.right, record, schema)
    if isinstance(expr, Or):
        return eval_expr(expr.left, record, schema) | eval_expr(expr.right, record, schema)
    if isinstance(expr, Not):
        return 1 - eval_expr(expr.expr, record, schema)
    if isinstance(expr, Const):
        return int(expr.value)
    raise TypeError(f"not a BoolExpr: {expr!r}")


def _eval_vectorized(expr: BoolExpr, schema: TableSchema, indices: np.ndarray) -> np.ndarray:
    n = schema.num_bits
    if isinstance(expr, (Comparison, Var)):
        field = expr.field if isinstance(expr, Comparison) else expr.name
        width = schema.width_of(field)
        shift = n - schema.offset_of(field) - width
        values = (indices >> shift) & ((1 << width) - 1)
        if isinstance(expr, Var):
            return values != 0
        return _OPS[expr.op](values, expr.literal)
    if isinstance(expr, And):
        return _eval_vectorized(expr.left, schema, indices) & _eval_vectorized(
            expr.right, schema, indices
        )
    if isinstance(expr, Or):
        return _eval_vectorized(expr.left, schema, indices) | _eval_vectorized(
            expr.right, schema, indices
        )
    if isinstance(expr, Not):
        return ~_eval_vectorized(expr.expr, schema, indices)
    if isinstance(expr, Const):
        return np.full(indices.shape, bool(expr.value))
    raise TypeError(f"not a BoolExpr: {expr!r}")


def truth_table(expr: BoolExpr, schema: TableSchema) -> TruthTable:
    """Materialize the predicate over every record of the schema."""
    n = schema.num_bits
    if n > MAX_TABLE_VARS:
        raise SchemaError(f"{n} data bits exceed the {MAX_TABLE_VARS}-bit table bound")
    validate_expr(expr, schema)
    indices = np.arange(1 << n, dtype=np.int64)
    return TruthTable(n, _eval_vectorized(expr, schema, indices))


def to_reed_muller(table: TruthTable) -> ReedMullerForm:
    """Positive-polarity binary Moebius transform over GF(2).

    An in-place butterfly: after processing every variable, entry ``mask``
    holds the coefficient of the monomial of the variables in ``mask``.
    """
    coeffs = table.bits.astype(np.uint8).copy()
    for level in range(table.num_vars):
        coeffs = coeffs.reshape(-1, 2, 1 << level)
        coeffs[:, 1, :] ^= coeffs[:, 0, :]
    coeffs = coeffs.reshape(-1)
    v = table.num_vars
    monomials = []
    for mask in np.nonzero(coeffs)[0]:
        monomials.append(frozenset(j for j in range(v) if (int(mask) >> (v - 1 - j)) & 1))
    return ReedMullerForm(frozenset(monomials))


def compile_to_cnots(
    form: ReedMullerForm,
    var_qubits: Union[Sequence[int], Mapping[int, int]],
    target: int,
) -> list[CnotGate]:
    """One multi-controlled NOT per monomial, onto a fixed target qubit.

    Gate order is irrelevant to the computed function (XOR commutes); gates
    are emitted largest monomial first for determinism.
    """
    if isinstance(var_qubits, Mapping):
        lookup = dict(var_qubits)
    else:
        lookup = {j: q for j, q in enumerate(var_qubits)}
    if target in lookup.values():
        raise ValueError(f"target qubit {target} collides with a variable qubit")
    ordered = sorted(form.monomials, key=lambda m: (-len(m), sorted(m)))
    return [CnotGate(frozenset(lookup[j] for j in monomial), target) for monomial in ordered]


def apply_oracle(
    state: StateVector,
    oracle: Union[TruthTable, Sequence[CnotGate]],
    data_qubits: Sequence[int],
    target: int,
    neg_controls: Sequence[int] = (),
) -> StateVector:
    """XOR the predicate of the data qubits into the target qubit.

    Data qubits are left untouched; the target may be in any state.  With a
    truth table the flip is done directly per component, which stays O(2^m)
    regardless of the predicate; a gate list is replayed gate by gate.
    ``neg_controls`` further restricts the flip to components where those
    qubits are 0 (used to keep a backup safe inviolate).
    """
    data_qubits = list(data_qubits)
    overlap = set(data_qubits) & ({target} | set(neg_controls))
    if overlap or target in neg_controls:
        raise ValueError("data qubits, target and controls must be disjoint")
    if not isinstance(oracle, TruthTable):
        if neg_controls:
            oracle = _gates_to_table(oracle, data_qubits, target)
        else:
            for gate in oracle:
                state.apply_cnot(gate)
            return state
    m = state.num_qubits
    v = oracle.num_vars
    if len(data_qubits) != v:
        raise ValueError(f"{len(data_qubits)} data qubits for a {v}-variable table")
    indices = np.arange(state.amps.size, dtype=np.int64)
    contiguous = v > 0 and data_qubits == list(range(data_qubits[0], data_qubits[0] + v))
    if contiguous:
        shift = m - data_qubits[0] - v
        local = (indices >> shift) & ((1 << v) - 1)
    else:
        local = np.zeros_like(indices)
        for j, q in enumerate(data_qubits):
            local |= ((indices >> (m - 1 - q)) & 1) << (v - 1 - j)
    flip = oracle.bits[local]
    for q in neg_controls:
        flip &= (indices >> (m - 1 - q)) & 1 == 0
    target_bit = 1 << (m - 1 - target)
    low = indices[flip & ((indices & target_bit) == 0)]
    high = low | target_bit
    tmp = state.amps[low].copy()
    state.amps[low] = state.amps[high]
    state.amps[high] = tmp
    return state


def _gates_to_table(gates: Sequence[CnotGate], data_qubits: Sequence[int], target: int) -> TruthTable:
    """Classical replay of a fixed-target gate list over all assignments."""
    v = len(data_qubits)
    position = {q: j for j, q in enumerate(data_qubits)}
    assignments = np.arange(1 << v, dtype=np.int64)
    acc = np.zeros(1 << v, dtype=bool)
    for gate in gates:
        if gate.target != target:
            raise ValueError("gate list targets more than one qubit")
        term = np.ones(1 << v, dtype=bool)
        for q in gate.controls:
            term &= (assignments >> (v - 1 - position[q])) & 1 == 1
        acc ^= term
    return TruthTable(v, acc)
