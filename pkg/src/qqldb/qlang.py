"""Lexer, parser and command compiler for the textual query language.

Grammar (statements end with ';'; keywords are case-insensitive, identifiers
case-sensitive; '--' starts a line comment):

    create   := "CREATE" "TABLE" ident "(" field {"," field} ")" ["TEMP" int]
    field    := ident ":" int
    insert   := "INSERT" ("ALL" int | "SEQ" int | "VALUES" rec {"," rec})
    update   := "UPDATE" "SET" rec "TO" rec {"," rec "TO" rec}
    delete   := "DELETE" "WHERE" expr ["AMPLIFY" int]
    select   := "SELECT" ident "WHERE" expr
    apply    := "APPLY" gatespec "WHEN" whenexpr
    gatespec := ("NOT" | "H") "@" ident ["BIT" int] | "SWAP" rec "TO" rec
    backup   := "BACKUP" "WHERE" expr
    restore  := "RESTORE" ["PURGE"]
    measure  := "MEASURE" int ["SEED" int]
    show     := "SHOW" ["FULL"]   save := "SAVE" string   load := "LOAD" string
    rec      := ket-literal | "(" ident "=" int {"," ident "=" int} ")"
    expr     := or-chain of and-chains of ["NOT"] atoms
    atom     := ident op int | int | "(" expr ")"        (whenexpr also: ident)
    op       := ">" | ">=" | "<" | "<=" | "=" | "!="

Parenthesised sub-expressions and bare 0/1 atoms are accepted as a superset
of the minimal grammar so that every predicate the engine can hold renders
back to parseable text.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

from .boolcirc import And, BoolExpr, Comparison, Const, Not, Or, Var
from .errors import CompileError, QqlSyntaxError, SchemaError
from .gates import HADAMARD, NOT as NOT_GATE
from .qdb import ApplyGate, ApplySwap, QdbState
from .schema import TableSchema

KEYWORDS = {
    "CREATE", "TABLE", "TEMP", "INSERT", "ALL", "SEQ", "VALUES", "UPDATE",
    "SET", "TO", "DELETE", "WHERE", "AMPLIFY", "SELECT", "APPLY", "WHEN",
    "BACKUP", "RESTORE", "PURGE", "MEASURE", "SEED", "SHOW", "FULL", "SAVE",
    "LOAD", "AND", "OR", "NOT", "BIT", "SWAP", "H",
}

_COMPARISON_OPS = (">=", "<=", "!=", ">", "<", "=")


@dataclass(frozen=True)
class Token:
    kind: str  # keyword | ident | int | ket | op | punct | string | eof
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    """Deterministic token stream; errors carry line:column."""
    tokens: list[Token] = []
    line, column = 1, 1
    i = 0
    length = len(text)

    def error(message: str):
        raise QqlSyntaxError(message, line, column)

    while i < length:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            column = 1
            continue
        if ch in " \t\r":
            i += 1
            column += 1
            continue
        if text.startswith("--", i):
            while i < length and text[i] != "\n":
                i += 1
            continue
        start_col = column
        if ch.isalpha() or ch == "_":
            j = i
            while j < length and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = "keyword" if word.upper() in KEYWORDS else "ident"
            word_text = word.upper() if kind == "keyword" else word
            tokens.append(Token(kind, word_text, line, start_col))
            column += j - i
            i = j
            continue
        if ch.isdigit():
            j = i
            while j < length and text[j].isdigit():
                j += 1
            tokens.append(Token("int", text[i:j], line, start_col))
            column += j - i
            i = j
            continue
        if ch == "|":
            j = i + 1
            while j < length and text[j] in "01":
                j += 1
            if j == i + 1 or j >= length or text[j] != ">":
                error("malformed ket literal; expected |b...b> with bits 0/1")
            tokens.append(Token("ket", text[i : j + 1], line, start_col))
            column += j + 1 - i
            i = j + 1
            continue
        if ch == '"':
            j = i + 1
            while j < length and text[j] != '"':
                if text[j] == "\n":
                    error("unterminated string literal")
                j += 1
            if j >= length:
                error("unterminated string literal")
            tokens.append(Token("string", text[i + 1 : j], line, start_col))
            column += j + 1 - i
            i = j + 1
            continue
        matched = False
        for op in _COMPARISON_OPS:
            if text.startswith(op, i):
                tokens.append(Token("op", op, line, start_col))
                column += len(op)
                i += len(op)
                matched = True
                break
        if matched:
            continue
        if ch in "(),:;@":
            tokens.append(Token("punct", ch, line, start_col))
            column += 1
            i += 1
            continue
        error(f"illegal character {ch!r}")
    tokens.append(Token("eof", "", line, column))
    return tokens


# ---------------------------------------------------------------------- AST


@dataclass(frozen=True)
class KetRec:
    bits: str  # e.g. "011"


@dataclass(frozen=True)
class FieldRec:
    assignments: tuple[tuple[str, int], ...]


RecSpec = Union[KetRec, FieldRec]


@dataclass(frozen=True)
class BitGate:
    gate: str  # "NOT" | "H"
    field: str
    bit: Optional[int]


@dataclass(frozen=True)
class SwapGate:
    rec_a: RecSpec
    rec_b: RecSpec


GateSpec = Union[BitGate, SwapGate]


@dataclass(frozen=True)
class CreateTable:
    name: str
    fields: tuple[tuple[str, int], ...]
    temp: Optional[int]


@dataclass(frozen=True)
class InsertAll:
    r: int


@dataclass(frozen=True)
class InsertSeq:
    k: int


@dataclass(frozen=True)
class InsertValues:
    records: tuple[RecSpec, ...]


@dataclass(frozen=True)
class Update:
    pairs: tuple[tuple[RecSpec, RecSpec], ...]


@dataclass(frozen=True)
class Delete:
    expr: BoolExpr
    amplify: int = 0


@dataclass(frozen=True)
class Select:
    name: str
    expr: BoolExpr


@dataclass(frozen=True)
class Apply:
    gate: GateSpec
    when: BoolExpr


@dataclass(frozen=True)
class Backup:
    expr: BoolExpr


@dataclass(frozen=True)
class Restore:
    purge: bool = False


@dataclass(frozen=True)
class Measure:
    shots: int
    seed: Optional[int] = None


@dataclass(frozen=True)
class Show:
    full: bool = False


@dataclass(frozen=True)
class Save:
    path: str


@dataclass(frozen=True)
class Load:
    path: str


Command = Union[
    CreateTable, InsertAll, InsertSeq, InsertValues, Update, Delete, Select,
    Apply, Backup, Restore, Measure, Show, Save, Load,
]


# ------------------------------------------------------------------- parser


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def fail(self, expected: str):
        token = self.peek()
        shown = token.text or "end of input"
        raise QqlSyntaxError(f"expected {expected}, found {shown!r}", token.line, token.column)

    def accept_keyword(self, word: str) -> bool:
        token = self.peek()
        if token.kind == "keyword" and token.text == word:
            self.advance()
            return True
        return False

    def expect_keyword(self, word: str) -> Token:
        if self.peek().kind == "keyword" and self.peek().text == word:
            return self.advance()
        self.fail(f"keyword {word}")

    def expect(self, kind: str, text: str | None = None) -> Token:
        token = self.peek()
        if token.kind == kind and (text is None or token.text == text):
            return self.advance()
        self.fail(text or kind)

    def expect_int(self) -> int:
        return int(self.expect("int").text)

    def expect_ident(self) -> str:
        return self.expect("ident").text

    # statements ---------------------------------------------------------

    def parse_script(self) -> list[Command]:
        commands = []
        while self.peek().kind != "eof":
            commands.append(self.parse_statement())
            self.expect("punct", ";")
        return commands

    def parse_statement(self) -> Command:
        token = self.peek()
        if token.kind != "keyword":
            self.fail("a statement keyword")
        handlers: dict[str, Callable[[], Command]] = {
            "CREATE": self._create,
            "INSERT": self._insert,
            "UPDATE": self._update,
            "DELETE": self._delete,
            "SELECT": self._select,
            "APPLY": self._apply,
            "BACKUP": self._backup,
            "RESTORE": self._restore,
            "MEASURE": self._measure,
            "SHOW": self._show,
            "SAVE": self._save,
            "LOAD": self._load,
        }
        handler = handlers.get(token.text)
        if handler is None:
            self.fail("a statement keyword")
        self.advance()
        return handler()

    def _create(self) -> Command:
        self.expect_keyword("TABLE")
        name = self.expect_ident()
        self.expect("punct", "(")
        fields = [self._field()]
        while self.peek().kind == "punct" and self.peek().text == ",":
            self.advance()
            fields.append(self._field())
        self.expect("punct", ")")
        temp = self.expect_int() if self.accept_keyword("TEMP") else None
        return CreateTable(name, tuple(fields), temp)

    def _field(self) -> tuple[str, int]:
        name = self.expect_ident()
        self.expect("punct", ":")
        return (name, self.expect_int())

    def _insert(self) -> Command:
        if self.accept_keyword("ALL"):
            return InsertAll(self.expect_int())
        if self.accept_keyword("SEQ"):
            return InsertSeq(self.expect_int())
        self.expect_keyword("VALUES")
        records = [self._rec()]
        while self.peek().kind == "punct" and self.peek().text == ",":
            self.advance()
            records.append(self._rec())
        return InsertValues(tuple(records))

    def _rec(self) -> RecSpec:
        token = self.peek()
        if token.kind == "ket":
            self.advance()
            return KetRec(token.text[1:-1])
        if token.kind == "punct" and token.text == "(":
            self.advance()
            assignments = [self._assignment()]
            while self.peek().kind == "punct" and self.peek().text == ",":
                self.advance()
                assignments.append(self._assignment())
            self.expect("punct", ")")
            return FieldRec(tuple(assignments))
        self.fail("a record (ket literal or field tuple)")

    def _assignment(self) -> tuple[str, int]:
        name = self.expect_ident()
        self.expect("op", "=")
        return (name, self.expect_int())

    def _update(self) -> Command:
        self.expect_keyword("SET")
        pairs = [self._pair()]
        while self.peek().kind == "punct" and self.peek().text == ",":
            self.advance()
            pairs.append(self._pair())
        return Update(tuple(pairs))

    def _pair(self) -> tuple[RecSpec, RecSpec]:
        src = self._rec()
        self.expect_keyword("TO")
        return (src, self._rec())

    def _delete(self) -> Command:
        self.expect_keyword("WHERE")
        expr = self.parse_expr(bare_vars=False)
        amplify = self.expect_int() if self.accept_keyword("AMPLIFY") else 0
        return Delete(expr, amplify)

    def _select(self) -> Command:
        name = self.expect_ident()
        self.expect_keyword("WHERE")
        return Select(name, self.parse_expr(bare_vars=False))

    def _apply(self) -> Command:
        gate = self._gatespec()
        self.expect_keyword("WHEN")
        return Apply(gate, self.parse_expr(bare_vars=True))

    def _gatespec(self) -> GateSpec:
        if self.accept_keyword("SWAP"):
            rec_a = self._rec()
            self.expect_keyword("TO")
            return SwapGate(rec_a, self._rec())
        token = self.peek()
        if token.kind == "keyword" and token.text in ("NOT", "H"):
            self.advance()
            self.expect("punct", "@")
            field = self.expect_ident()
            bit = self.expect_int() if self.accept_keyword("BIT") else None
            return BitGate(token.text, field, bit)
        self.fail("a gate spec (NOT, H or SWAP)")

    def _backup(self) -> Command:
        self.expect_keyword("WHERE")
        return Backup(self.parse_expr(bare_vars=False))

    def _restore(self) -> Command:
        return Restore(self.accept_keyword("PURGE"))

    def _measure(self) -> Command:
        shots = self.expect_int()
        seed = self.expect_int() if self.accept_keyword("SEED") else None
        return Measure(shots, seed)

    def _show(self) -> Command:
        return Show(self.accept_keyword("FULL"))

    def _save(self) -> Command:
        return Save(self.expect("string").text)

    def _load(self) -> Command:
        return Load(self.expect("string").text)

    # expressions --------------------------------------------------------

    def parse_expr(self, bare_vars: bool) -> BoolExpr:
        expr = self._and_chain(bare_vars)
        while self.accept_keyword("OR"):
            expr = Or(expr, self._and_chain(bare_vars))
        return expr

    def _and_chain(self, bare_vars: bool) -> BoolExpr:
        expr = self._unary(bare_vars)
        while self.accept_keyword("AND"):
            expr = And(expr, self._unary(bare_vars))
        return expr

    def _unary(self, bare_vars: bool) -> BoolExpr:
        if self.accept_keyword("NOT"):
            return Not(self._atom(bare_vars))
        return self._atom(bare_vars)

    def _atom(self, bare_vars: bool) -> BoolExpr:
        token = self.peek()
        if token.kind == "punct" and token.text == "(":
            self.advance()
            expr = self.parse_expr(bare_vars)
            self.expect("punct", ")")
            return expr
        if token.kind == "int":
            self.advance()
            return Const(1 if int(token.text) else 0)
        if token.kind == "ident":
            self.advance()
            nxt = self.peek()
            if nxt.kind == "op":
                self.advance()
                return Comparison(token.text, nxt.text, self.expect_int())
            if bare_vars:
                return Var(token.text)
            self.fail("a comparison operator")
        self.fail("a comparison" + (" or select name" if bare_vars else ""))


def parse(tokens: list[Token]) -> list[Command]:
    return _Parser(tokens).parse_script()


def parse_text(text: str) -> list[Command]:
    return parse(tokenize(text))


def parse_predicate(text: str) -> BoolExpr:
    """Parse a lone predicate (used by the session-file loader)."""
    parser = _Parser(tokenize(text))
    expr = parser.parse_expr(bare_vars=True)
    if parser.peek().kind != "eof":
        parser.fail("end of predicate")
    return expr


# ----------------------------------------------------------------- rendering


def render_expr(expr: BoolExpr, _parent: str = "or") -> str:
    if isinstance(expr, Comparison):
        return f"{expr.field} {expr.op} {expr.literal}"
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Const):
        return str(expr.value)
    if isinstance(expr, Not):
        inner = render_expr(expr.expr, "not")
        if isinstance(expr.expr, (And, Or, Not)):
            inner = f"({inner})"
        return f"NOT {inner}"
    if isinstance(expr, And):
        body = f"{render_expr(expr.left, 'and')} AND {render_expr(expr.right, 'and_r')}"
        if _parent in ("not", "and_r"):
            return f"({body})"
        return body
    if isinstance(expr, Or):
        body = f"{render_expr(expr.left, 'or')} OR {render_expr(expr.right, 'or_r')}"
        if _parent in ("not", "and", "and_r", "or_r"):
            return f"({body})"
        return body
    raise TypeError(f"not a BoolExpr: {expr!r}")


def _render_rec(rec: RecSpec) -> str:
    if isinstance(rec, KetRec):
        return f"|{rec.bits}>"
    inner = ", ".join(f"{name} = {value}" for name, value in rec.assignments)
    return f"({inner})"


def render_command(command: Command) -> str:
    """Canonical text form; re-parsing yields an identical command."""
    if isinstance(command, CreateTable):
        fields = ", ".join(f"{n}:{w}" for n, w in command.fields)
        tail = f" TEMP {command.temp}" if command.temp is not None else ""
        return f"CREATE TABLE {command.name} ({fields}){tail};"
    if isinstance(command, InsertAll):
        return f"INSERT ALL {command.r};"
    if isinstance(command, InsertSeq):
        return f"INSERT SEQ {command.k};"
    if isinstance(command, InsertValues):
        return "INSERT VALUES " + ", ".join(_render_rec(r) for r in command.records) + ";"
    if isinstance(command, Update):
        pairs = ", ".join(f"{_render_rec(a)} TO {_render_rec(b)}" for a, b in command.pairs)
        return f"UPDATE SET {pairs};"
    if isinstance(command, Delete):
        tail = f" AMPLIFY {command.amplify}" if command.amplify else ""
        return f"DELETE WHERE {render_expr(command.expr)}{tail};"
    if isinstance(command, Select):
        return f"SELECT {command.name} WHERE {render_expr(command.expr)};"
    if isinstance(command, Apply):
        if isinstance(command.gate, BitGate):
            bit = f" BIT {command.gate.bit}" if command.gate.bit is not None else ""
            gate = f"{command.gate.gate} @ {command.gate.field}{bit}"
        else:
            gate = f"SWAP {_render_rec(command.gate.rec_a)} TO {_render_rec(command.gate.rec_b)}"
        return f"APPLY {gate} WHEN {render_expr(command.when)};"
    if isinstance(command, Backup):
        return f"BACKUP WHERE {render_expr(command.expr)};"
    if isinstance(command, Restore):
        return "RESTORE PURGE;" if command.purge else "RESTORE;"
    if isinstance(command, Measure):
        tail = f" SEED {command.seed}" if command.seed is not None else ""
        return f"MEASURE {command.shots}{tail};"
    if isinstance(command, Show):
        return "SHOW FULL;" if command.full else "SHOW;"
    if isinstance(command, Save):
        return f'SAVE "{command.path}";'
    if isinstance(command, Load):
        return f'LOAD "{command.path}";'
    raise TypeError(f"not a Command: {command!r}")


# ----------------------------------------------------------------- compiler


def _collect_vars(expr: BoolExpr, into: set[str]) -> None:
    if isinstance(expr, Var):
        into.add(expr.name)
    elif isinstance(expr, Comparison):
        into.add(expr.field)
    elif isinstance(expr, (And, Or)):
        _collect_vars(expr.left, into)
        _collect_vars(expr.right, into)
    elif isinstance(expr, Not):
        _collect_vars(expr.expr, into)


def _need_db(session) -> QdbState:
    if session.db is None:
        raise CompileError("no table is open; run CREATE TABLE first")
    return session.db


def _resolve_record(rec: RecSpec, schema: TableSchema) -> int:
    if isinstance(rec, KetRec):
        if len(rec.bits) != schema.num_bits:
            raise CompileError(
                f"ket of {len(rec.bits)} bits does not match the {schema.num_bits}-bit schema"
            )
        return int(rec.bits, 2)
    try:
        return schema.encode(schema.record(**dict(rec.assignments)))
    except SchemaError as exc:
        raise CompileError(str(exc)) from exc


def _validated(expr: BoolExpr, schema: TableSchema) -> BoolExpr:
    from .boolcirc import validate_expr

    try:
        validate_expr(expr, schema)
    except SchemaError as exc:
        raise CompileError(str(exc)) from exc
    return expr


def compile_command(command: Command, session) -> Callable[[], str]:
    """Bind a parsed command against the session: schema checks happen here,
    engine work happens when the returned action runs."""
    if isinstance(command, CreateTable):
        if session.db is not None:
            raise CompileError("a table is already open in this session")
        try:
            schema = TableSchema(command.name, command.fields)
        except SchemaError as exc:
            raise CompileError(str(exc)) from exc
        temp = command.temp if command.temp is not None else 3

        def run_create() -> str:
            session.open_table(schema, temp)
            return (
                f"ok: table {schema.name} ({schema.num_bits} data + {temp} temp qubits)"
            )

        return run_create

    if isinstance(command, (Save, Load)):
        path = command.path
        if isinstance(command, Save):
            return lambda: session.save_session(path)
        return lambda: session.load_session(path)

    db = _need_db(session)
    schema = db.schema

    if isinstance(command, InsertAll):
        return lambda: _fmt_insert(db.insert_bulk(command.r), f"bulk {1 << command.r}")
    if isinstance(command, InsertSeq):
        return lambda: _fmt_insert(db.insert_sequential(command.k), f"sequential to {command.k}")
    if isinstance(command, InsertValues):
        indices = [_resolve_record(r, schema) for r in command.records]
        return lambda: _fmt_insert(db.insert_values(indices), f"{len(indices)} values")
    if isinstance(command, Update):
        pairs = [
            (_resolve_record(a, schema), _resolve_record(b, schema)) for a, b in command.pairs
        ]
        return lambda: _fmt_update(db.update(pairs), len(pairs))
    if isinstance(command, Delete):
        expr = _validated(command.expr, schema)

        def run_delete() -> str:
            probability = db.delete(expr, command.amplify)
            return f"deleted; outcome probability {probability:.6f}"

        return run_delete
    if isinstance(command, Select):
        expr = _validated(command.expr, schema)
        name = command.name
        if name in session.selects:
            raise CompileError(f"select name {name!r} is already in use")

        def run_select() -> str:
            qubit = db.select(expr)
            session.selects[name] = qubit
            return f"selected {name} on flag qubit {qubit}"

        return run_select
    if isinstance(command, Apply):
        names: set[str] = set()
        _collect_vars(command.when, names)
        missing = sorted(n for n in names if n not in session.selects)
        if missing:
            raise CompileError(f"unknown select name(s): {', '.join(missing)}")
        if not names:
            raise CompileError("WHEN clause references no select flags")
        flags = {name: session.selects[name] for name in sorted(names)}
        if isinstance(command.gate, BitGate):
            try:
                width = schema.width_of(command.gate.field)
            except SchemaError as exc:
                raise CompileError(str(exc)) from exc
            bit = command.gate.bit if command.gate.bit is not None else 0
            if bit < 0 or bit >= width:
                raise CompileError(
                    f"bit {bit} out of range for field {command.gate.field!r} of width {width}"
                )
            target = schema.offset_of(command.gate.field) + (width - 1 - bit)
            gate = NOT_GATE if command.gate.gate == "NOT" else HADAMARD
            operation = ApplyGate(gate, (target,))
        else:
            operation = ApplySwap(
                _resolve_record(command.gate.rec_a, schema),
                _resolve_record(command.gate.rec_b, schema),
            )
        when = command.when

        def run_apply() -> str:
            db.apply_where(flags, when, operation)
            session.selects = {
                nm: q
                for nm, q in session.selects.items()
                if q in db.temp_alloc and db.temp_alloc[q].purpose == "select"
            }
            return f"applied on flags {', '.join(sorted(flags))}"

        return run_apply
    if isinstance(command, Backup):
        expr = _validated(command.expr, schema)

        def run_backup() -> str:
            db.backup(expr)
            key = db.safe_key
            return f"backup active: {key.matches} records protected (safe qubit {key.qubit})"

        return run_backup
    if isinstance(command, Restore):
        def run_restore() -> str:
            probability = db.restore(command.purge)
            if probability is None:
                return "restored; safe key still active"
            return f"restored and purged; outcome probability {probability:.6f}"

        return run_restore
    if isinstance(command, Measure):
        def run_measure() -> str:
            seed = command.seed if command.seed is not None else session.next_measure_seed()
            histogram = db.measure_records(command.shots, seed)
            return session.render_histogram(histogram, command.shots)

        return run_measure
    if isinstance(command, Show):
        return lambda: session.render_state(db.show_state(), command.full)
    raise CompileError(f"unsupported command {command!r}")


def _fmt_insert(db: QdbState, what: str) -> str:
    return f"ok: insert {what}; support size {len(db.support())}"


def _fmt_update(db: QdbState, pair_count: int) -> str:
    return f"ok: updated {pair_count} pair(s)"
