"""OpenQASM 2.0 subset reader and writer.

Supported: the version header, ``include "qelib1.inc"``, any number of
``qreg``/``creg`` declarations (flattened to global indices in declaration
order), the gates ``id x sx h rz rx cx``, ``measure``, ``reset`` and
``barrier``. Whole-register operands broadcast as in the language.
Everything else (gate definitions, ``opaque``, ``if``, ``u1``/``u2``/``u3``)
is rejected with :attr:`ErrorKind.UNSUPPORTED_STATEMENT`.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass

from .circuit import Circuit, Gate, Instruction

__all__ = ["ErrorKind", "ParseError", "parse_qasm", "parse_angle", "emit_qasm", "read_qasm_file"]


class ErrorKind(str, enum.Enum):
    SYNTAX = "SYNTAX"
    UNSUPPORTED_STATEMENT = "UNSUPPORTED_STATEMENT"
    UNDECLARED_REGISTER = "UNDECLARED_REGISTER"
    INDEX_RANGE = "INDEX_RANGE"
    BAD_ANGLE_EXPR = "BAD_ANGLE_EXPR"


class ParseError(ValueError):
    def __init__(self, kind: ErrorKind, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {kind.value}: {message}")
        self.kind = kind
        self.message = message
        self.line = line
        self.column = column


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n\f\v]+)
  | (?P<comment>//[^\n]*)
  | (?P<real>(?:\d+\.\d*|\.\d+)(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+)
  | (?P<int>\d+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"[^"\n]*")
  | (?P<arrow>->)
  | (?P<eq>==)
  | (?P<sym>[;,()\[\]{}+\-*/^])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(src: str) -> list[_Tok]:
    toks = []
    pos, line, line_start = 0, 1, 0
    n = len(src)
    while pos < n:
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ParseError(ErrorKind.SYNTAX, f"unexpected character {src[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        if kind not in ("ws", "comment"):
            toks.append(_Tok(kind, text, line, pos - line_start + 1))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


_GATES = {"id": Gate.I, "x": Gate.X, "sx": Gate.SX, "h": Gate.H, "rz": Gate.RZ, "rx": Gate.RX, "cx": Gate.CX}
_MAX_NESTING = 64
MAX_REGISTER_SIZE = 1 << 16


def _small_int(text: str) -> int:
    # long digit strings would trip int()'s conversion limit; they are out of range anyway
    return int(text) if len(text) <= 9 else 10**9
_UNSUPPORTED = {"gate", "opaque", "if", "U", "CX", "u", "u0", "u1", "u2", "u3", "p"}


class _Parser:
    def __init__(self, toks: list[_Tok]):
        self.toks = toks
        self.i = 0
        self.qregs: dict[str, tuple[int, int]] = {}
        self.cregs: dict[str, tuple[int, int]] = {}
        self.nq = 0
        self.nc = 0
        self.insts: list[Instruction] = []
        self.nesting = 0

    # token helpers
    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, kind: ErrorKind, message: str, tok: _Tok | None = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(kind, message, tok.line, tok.col)

    def advance(self) -> _Tok:
        tok = self.tok
        if tok.kind != "eof":
            self.i += 1
        return tok

    def accept(self, text: str) -> bool:
        if self.tok.text == text and self.tok.kind not in ("string", "eof"):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> _Tok:
        if self.tok.text != text or self.tok.kind == "string":
            found = self.tok.text or "end of input"
            raise self.error(ErrorKind.SYNTAX, f"expected {text!r}, found {found!r}")
        return self.advance()

    def expect_kind(self, kind: str, what: str) -> _Tok:
        if self.tok.kind != kind:
            found = self.tok.text or "end of input"
            raise self.error(ErrorKind.SYNTAX, f"expected {what}, found {found!r}")
        return self.advance()

    # grammar
    def program(self) -> None:
        if self.tok.text == "OPENQASM":
            start = self.advance()
            version = self.advance()
            if version.kind not in ("real", "int"):
                raise self.error(ErrorKind.SYNTAX, "expected a version number", version)
            if version.text not in ("2.0", "2"):
                raise self.error(ErrorKind.UNSUPPORTED_STATEMENT, f"OPENQASM {version.text} is not supported", start)
            self.expect(";")
        while self.tok.kind != "eof":
            self.statement()

    def statement(self) -> None:
        tok = self.tok
        if tok.kind != "id":
            raise self.error(ErrorKind.SYNTAX, f"unexpected {tok.text!r} at start of statement")
        word = tok.text
        if word == "OPENQASM":
            raise self.error(ErrorKind.SYNTAX, "version header must come first")
        if word == "include":
            self.advance()
            path = self.expect_kind("string", "a quoted file name")
            if path.text != '"qelib1.inc"':
                raise self.error(ErrorKind.UNSUPPORTED_STATEMENT, f"include {path.text} is not supported", tok)
            self.expect(";")
        elif word in ("qreg", "creg"):
            self.declaration()
        elif word in _GATES:
            self.gate()
        elif word == "measure":
            self.measure()
        elif word == "reset":
            self.advance()
            for (q,) in self.broadcast([self.operand(quantum=True)]):
                self.insts.append(Instruction(Gate.RESET, (q,)))
            self.expect(";")
        elif word == "barrier":
            self.advance()
            qubits = self.operand_list(quantum=True)
            for group in qubits:
                for q in group:
                    self.insts.append(Instruction(Gate.BARRIER, (q,)))
            self.expect(";")
        elif word in _UNSUPPORTED:
            raise self.error(ErrorKind.UNSUPPORTED_STATEMENT, f"'{word}' statements are not supported")
        else:
            raise self.error(ErrorKind.UNSUPPORTED_STATEMENT, f"unknown gate or statement '{word}'")

    def declaration(self) -> None:
        kw = self.advance()
        name = self.expect_kind("id", "a register name")
        self.expect("[")
        size_tok = self.expect_kind("int", "a register size")
        size = _small_int(size_tok.text)
        if not 1 <= size <= MAX_REGISTER_SIZE:
            raise self.error(ErrorKind.INDEX_RANGE, f"register size must be in [1, {MAX_REGISTER_SIZE}]", size_tok)
        self.expect("]")
        self.expect(";")
        if name.text in self.qregs or name.text in self.cregs:
            raise self.error(ErrorKind.SYNTAX, f"register '{name.text}' declared twice", name)
        if kw.text == "qreg":
            self.qregs[name.text] = (self.nq, size)
            self.nq += size
        else:
            self.cregs[name.text] = (self.nc, size)
            self.nc += size

    def operand(self, quantum: bool) -> list[int]:
        """Global indices named by ``reg`` or ``reg[i]``."""
        name = self.expect_kind("id", "a register operand")
        regs = self.qregs if quantum else self.cregs
        if name.text not in regs:
            other = self.cregs if quantum else self.qregs
            what = "quantum" if quantum else "classical"
            if name.text in other:
                raise self.error(ErrorKind.SYNTAX, f"'{name.text}' is not a {what} register", name)
            raise self.error(ErrorKind.UNDECLARED_REGISTER, f"undeclared {what} register '{name.text}'", name)
        offset, size = regs[name.text]
        if not self.accept("["):
            return list(range(offset, offset + size))
        idx_tok = self.expect_kind("int", "an index")
        idx = _small_int(idx_tok.text)
        if idx >= size:
            raise self.error(ErrorKind.INDEX_RANGE, f"index {idx} out of range for '{name.text}[{size}]'", idx_tok)
        self.expect("]")
        return [offset + idx]

    def operand_list(self, quantum: bool) -> list[list[int]]:
        ops = [self.operand(quantum)]
        while self.accept(","):
            ops.append(self.operand(quantum))
        return ops

    def broadcast(self, ops: list[list[int]]) -> list[tuple[int, ...]]:
        sizes = {len(o) for o in ops if len(o) > 1}
        if len(sizes) > 1:
            raise self.error(ErrorKind.SYNTAX, "register operands of different sizes")
        width = sizes.pop() if sizes else 1
        return [tuple(o[k] if len(o) > 1 else o[0] for o in ops) for k in range(width)]

    def gate(self) -> None:
        name = self.advance()
        kind = _GATES[name.text]
        angle = None
        if kind.is_parametric:
            self.expect("(")
            angle_tok = self.tok
            angle = self.expr()
            self.expect(")")
            if not math.isfinite(angle):
                raise self.error(ErrorKind.BAD_ANGLE_EXPR, "angle is not finite", angle_tok)
        elif self.tok.text == "(":
            raise self.error(ErrorKind.SYNTAX, f"gate '{name.text}' takes no parameters")
        ops = self.operand_list(quantum=True)
        if len(ops) != kind.num_qubits:
            raise self.error(
                ErrorKind.SYNTAX, f"gate '{name.text}' takes {kind.num_qubits} operand(s), got {len(ops)}", name
            )
        for qubits in self.broadcast(ops):
            if len(set(qubits)) != len(qubits):
                raise self.error(ErrorKind.SYNTAX, f"repeated qubit operand in '{name.text}'", name)
            self.insts.append(Instruction(kind, qubits, (), angle))
        self.expect(";")

    def measure(self) -> None:
        self.advance()
        q = self.operand(quantum=True)
        self.expect("->")
        c = self.operand(quantum=False)
        if len(q) != len(c):
            raise self.error(ErrorKind.SYNTAX, "measure operands have different sizes")
        for qi, ci in zip(q, c):
            self.insts.append(Instruction(Gate.MEASURE, (qi,), (ci,)))
        self.expect(";")

    # angle expressions: sums of products of signed atoms
    def expr(self) -> float:
        value = self.term()
        while self.tok.text in ("+", "-") and self.tok.kind == "sym":
            op = self.advance().text
            rhs = self.term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def term(self) -> float:
        value = self.unary()
        while self.tok.text in ("*", "/") and self.tok.kind == "sym":
            op_tok = self.advance()
            rhs = self.unary()
            if op_tok.text == "*":
                value *= rhs
            elif rhs == 0:
                raise self.error(ErrorKind.BAD_ANGLE_EXPR, "division by zero", op_tok)
            else:
                value /= rhs
        return value

    def unary(self) -> float:
        sign = 1.0
        while self.tok.kind == "sym" and self.tok.text in ("-", "+"):
            if self.advance().text == "-":
                sign = -sign
        return sign * self.atom()

    def atom(self) -> float:
        tok = self.tok
        if tok.kind in ("int", "real"):
            self.advance()
            value = float(tok.text) if len(tok.text) <= 400 else math.inf
            if not math.isfinite(value):
                raise self.error(ErrorKind.BAD_ANGLE_EXPR, f"literal {tok.text} overflows", tok)
            return value
        if tok.kind == "id" and tok.text == "pi":
            self.advance()
            return math.pi
        if tok.text == "(" and tok.kind == "sym":
            if self.nesting >= _MAX_NESTING:
                raise self.error(ErrorKind.BAD_ANGLE_EXPR, "angle expression nested too deeply")
            self.advance()
            self.nesting += 1
            value = self.expr()
            self.nesting -= 1
            self.expect(")")
            return value
        found = tok.text or "end of input"
        raise self.error(ErrorKind.BAD_ANGLE_EXPR, f"unexpected {found!r} in angle expression")


def parse_qasm(source: str | bytes, name: str = "circuit") -> Circuit:
    """Parse OpenQASM 2.0 text into a :class:`Circuit`.

    Raises :class:`ParseError` for anything outside the supported subset.
    """
    if isinstance(source, (bytes, bytearray)):
        try:
            source = bytes(source).decode("utf-8")
        except UnicodeDecodeError as exc:
            head = bytes(source[: exc.start])
            line = head.count(b"\n") + 1
            col = exc.start - (head.rfind(b"\n") + 1) + 1
            raise ParseError(ErrorKind.SYNTAX, "input is not valid UTF-8", line, col) from None
    if source.startswith("\ufeff"):
        source = source[1:]
    p = _Parser(_tokenize(source))
    p.program()
    if p.nq == 0:
        raise ParseError(ErrorKind.SYNTAX, "no quantum register declared", p.tok.line, p.tok.col)
    return Circuit(p.nq, p.nc, p.insts, name)


def read_qasm_file(path) -> Circuit:
    from pathlib import Path

    path = Path(path)
    return parse_qasm(path.read_bytes(), name=path.stem)


def _fmt_angle(angle: float) -> str:
    return f"{angle:.17g}"


def emit_qasm(c: Circuit) -> str:
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{c.num_qubits}];"]
    if c.num_clbits:
        lines.append(f"creg c[{c.num_clbits}];")
    for inst in c.instructions:
        qs = ",".join(f"q[{q}]" for q in inst.qubits)
        if inst.kind is Gate.MEASURE:
            lines.append(f"measure {qs} -> c[{inst.clbits[0]}];")
        elif inst.kind.is_parametric:
            lines.append(f"{inst.kind.value}({_fmt_angle(inst.angle)}) {qs};")
        else:
            lines.append(f"{inst.kind.value} {qs};")
    return "\n".join(lines) + "\n"


def parse_angle(text: str) -> float:
    """Evaluate a standalone angle expression such as ``3*pi/4``."""
    toks = _tokenize(str(text))
    p = _Parser(toks)
    value = p.expr()
    if p.tok.kind != "eof":
        raise p.error(ErrorKind.BAD_ANGLE_EXPR, f"trailing {p.tok.text!r} in angle expression")
    if not math.isfinite(value):
        raise ParseError(ErrorKind.BAD_ANGLE_EXPR, "angle is not finite", 1, 1)
    return value
