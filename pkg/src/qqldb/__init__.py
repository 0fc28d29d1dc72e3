"""qqldb: a quantum database engine.

Records are basis states of a simulated register; INSERT, UPDATE, DELETE,
SELECT-and-apply, BACKUP and RESTORE are realised as reversible circuits
(oracles, controlled gates, partial diffusion) plus post-selective
measurement, driven by a small SQL-like query language and a shell.
"""

from .boolcirc import (
    And,
    BoolExpr,
    Comparison,
    Const,
    Not,
    Or,
    ReedMullerForm,
    TruthTable,
    Var,
    apply_oracle,
    compile_to_cnots,
    eval_expr,
    to_reed_muller,
    truth_table,
)
from .cli import Session, SessionConfig, main, repl_loop, run_script
from .diffusion import DiffusionParams, apply_partial_diffusion, dense_partial_diffusion
from .errors import (
    CapacityError,
    CompileError,
    ImpossibleOutcomeError,
    QqlError,
    QqlSyntaxError,
    SchemaError,
    SessionFormatError,
    ValidationError,
)
from .gates import (
    CnotGate,
    GateMatrix,
    HADAMARD,
    NOT,
    cnot_dense,
    controlled_lift,
    identity,
    is_unitary,
    permutation_gate,
    standard_gate,
    tensor_gates,
)
from .qdb import ApplyGate, ApplySwap, QdbState, create_db
from .qlang import parse_text, render_command, render_expr, tokenize
from .schema import Record, TableSchema
from .statevec import StateVector, Xorshift64Star, new_zero_state, tensor_states

__version__ = "0.1.0"
