"""OpenQASM reader and writer for the supported subset.

Reads OpenQASM 2.0 (``qreg``/``creg``, ``measure a -> b``, ``if (c == v)`` on
width-1 registers) and the OpenQASM 3.0 equivalents (``qubit[n]``/``bit[n]``,
``b = measure a``, ``if (c[k] == v)``, ``ctrl @``/``negctrl @`` modifiers).
Always writes the 3.0 form. Registers are flattened to global indices in
declaration order. See ``docs/qasm-subset.md`` for the grammar.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction

from .circuit import (
    Circuit, ClassicControlled, Control, Gate, Measure, PiFraction, Reset, Unitary, validate,
)


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int
    start: int
    end: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


@dataclass(frozen=True)
class ParseError:
    span: SourceSpan
    message: str
    kind: str  # lex | syntax | semantic | unsupported

    def __str__(self) -> str:
        return f"{self.span}: {self.kind} error: {self.message}"


class QasmError(ValueError):
    """Raised by :func:`parse`; ``errors`` holds every diagnostic found."""

    def __init__(self, errors: list[ParseError]):
        self.errors = errors
        super().__init__("\n".join(str(e) for e in errors))


@dataclass(frozen=True)
class Token:
    kind: str  # id, num, str, sym, pragma, eof
    text: str
    span: SourceSpan


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<pragma>\#?pragma\b[^\n]*)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<id>[A-Za-z_π][A-Za-z0-9_]*|\$\d+)
  | (?P<str>"[^"\n]*")
  | (?P<sym>->|==|!=|<=|>=|&&|\|\||\+\+|[;,()\[\]{}=+\-*/^@:!<>.~&|%])
""", re.VERBOSE | re.DOTALL)


class _Abort(Exception):
    def __init__(self, error: ParseError):
        self.error = error


def _lex(text: str) -> tuple[list[Token], list[ParseError]]:
    tokens, errors = [], []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            span = SourceSpan(line, pos - line_start + 1, pos, pos + 1)
            errors.append(ParseError(span, f"unexpected character {text[pos]!r}", "lex"))
            pos += 1
            continue
        kind = m.lastgroup
        span = SourceSpan(line, pos - line_start + 1, pos, m.end())
        chunk = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, chunk, span))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rfind("\n") + 1
        pos = m.end()
    end = len(text)
    tokens.append(Token("eof", "", SourceSpan(line, end - line_start + 1, end, end)))
    return tokens, errors


# name -> (base gate, number of leading control args, number of params)
_GATES = {
    "x": ("x", 0, 0), "y": ("y", 0, 0), "z": ("z", 0, 0), "h": ("h", 0, 0),
    "s": ("s", 0, 0), "sdg": ("sdg", 0, 0), "t": ("t", 0, 0), "tdg": ("tdg", 0, 0),
    "sx": ("sx", 0, 0), "p": ("p", 0, 1), "phase": ("p", 0, 1), "u1": ("p", 0, 1),
    "rx": ("rx", 0, 1), "ry": ("ry", 0, 1), "rz": ("rz", 0, 1),
    "u": ("u", 0, 3), "U": ("u", 0, 3), "u3": ("u", 0, 3), "u2": ("u2", 0, 2),
    "swap": ("swap", 0, 0),
    "cx": ("x", 1, 0), "CX": ("x", 1, 0), "cnot": ("x", 1, 0), "cy": ("y", 1, 0),
    "cz": ("z", 1, 0), "ch": ("h", 1, 0), "cp": ("p", 1, 1), "cphase": ("p", 1, 1),
    "cu1": ("p", 1, 1), "crx": ("rx", 1, 1), "cry": ("ry", 1, 1), "crz": ("rz", 1, 1),
    "cu3": ("u", 1, 3), "ccx": ("x", 2, 0), "toffoli": ("x", 2, 0), "cswap": ("swap", 1, 0),
}
_NOOP_GATES = {"id", "i"}
_UNSUPPORTED = {
    "for", "while", "def", "gate", "opaque", "defcal", "cal", "box", "let", "const", "input",
    "output", "int", "uint", "float", "angle", "bool", "duration", "stretch", "extern",
    "return", "break", "continue", "switch", "else", "delay", "gphase", "inv", "pow", "array",
    "complex", "end",
}
_CONSTANTS = {"pi": math.pi, "π": math.pi, "tau": math.tau, "τ": math.tau, "euler": math.e}
_FUNCS = {"sin": math.sin, "cos": math.cos, "tan": math.tan, "exp": math.exp,
          "ln": math.log, "sqrt": math.sqrt, "arcsin": math.asin, "arccos": math.acos,
          "arctan": math.atan}


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.i = 0
        self.errors: list[ParseError] = []
        self.qregs: dict[str, tuple[int, int]] = {}
        self.cregs: dict[str, tuple[int, int]] = {}
        self.nq = 0
        self.nc = 0
        self.ops: list = []
        self.name: str | None = None
        self.output_order: tuple[int, ...] | None = None
        self.order_span: SourceSpan | None = None

    # -- token helpers -------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def advance(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def fail(self, message: str, kind: str = "syntax", tok: Token | None = None):
        raise _Abort(ParseError((tok or self.tok).span, message, kind))

    def check(self, text: str) -> bool:
        return self.tok.kind in ("sym", "id") and self.tok.text == text

    def accept(self, text: str) -> bool:
        if self.check(text):
            self.advance()
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.check(text):
            found = self.tok.text or "end of input"
            self.fail(f"expected {text!r}, found {found!r}")
        return self.advance()

    def ident(self) -> Token:
        if self.tok.kind != "id":
            self.fail(f"expected identifier, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    def integer(self) -> int:
        t = self.tok
        if t.kind != "num" or not t.text.isdigit():
            self.fail(f"expected integer, found {t.text or 'end of input'!r}")
        self.advance()
        return int(t.text)

    def recover(self) -> None:
        depth = 0
        while self.tok.kind != "eof":
            t = self.advance()
            if t.text == "{":
                depth += 1
            elif t.text == "}":
                depth -= 1
                if depth <= 0:
                    return
            elif t.text == ";" and depth == 0:
                return

    # -- program -------------------------------------------------------
    def program(self) -> None:
        if self.check("OPENQASM"):
            self.statement_guarded(self.header)
        while self.tok.kind != "eof":
            self.statement_guarded(self.statement)

    def statement_guarded(self, fn) -> None:
        start = self.i
        try:
            fn()
        except _Abort as exc:
            self.errors.append(exc.error)
            if self.i == start or self.toks[self.i - 1].text not in (";", "}"):
                self.recover()

    def header(self) -> None:
        self.advance()
        t = self.tok
        if t.kind != "num":
            self.fail("expected version number")
        self.advance()
        if t.text.split(".")[0] not in ("2", "3"):
            self.fail(f"unsupported OpenQASM version {t.text}", "unsupported", t)
        self.expect(";")

    def statement(self) -> None:
        t = self.tok
        if t.kind == "pragma":
            self.advance()
            self.pragma(t)
            return
        if t.kind != "id":
            self.fail(f"unexpected {t.text or 'end of input'!r}")
        word = t.text
        if word == "OPENQASM":
            self.fail("version header must come first")
        if word in _UNSUPPORTED:
            self.fail(f"'{word}' is not supported", "unsupported")
        if word == "include":
            self.advance()
            if self.tok.kind != "str":
                self.fail("expected file name string")
            self.advance()
            self.expect(";")
            return
        if word in ("qreg", "creg"):
            self.advance()
            name = self.ident()
            size = 1
            if self.accept("["):
                size = self.integer()
                self.expect("]")
            self.expect(";")
            self.declare(word == "qreg", name, size)
            return
        if word in ("qubit", "bit") and (self.peek_text(1) == "[" or self.peek_kind(1) == "id"):
            self.advance()
            size = 1
            if self.accept("["):
                size = self.integer()
                self.expect("]")
            name = self.ident()
            if self.check("="):
                self.fail("initialised declarations are not supported", "unsupported")
            self.expect(";")
            self.declare(word == "qubit", name, size)
            return
        if word == "barrier":
            self.advance()
            while not self.check(";") and self.tok.kind != "eof":
                self.advance()
            self.expect(";")
            return
        if word == "if":
            self.conditional()
            return
        if word == "measure":
            self.advance()
            qs = self.qarg()
            self.expect("->")
            cs = self.carg()
            self.expect(";")
            self.emit_measures(qs, cs, t)
            return
        if word == "reset":
            self.advance()
            qs = self.qarg()
            self.expect(";")
            self.ops.extend(Reset(q) for q in qs)
            return
        if word in self.cregs and self.peek_text(1) in ("[", "="):
            cs = self.carg()
            self.expect("=")
            if not self.check("measure"):
                self.fail("classical assignments are not supported", "unsupported")
            self.advance()
            qs = self.qarg()
            self.expect(";")
            self.emit_measures(qs, cs, t)
            return
        self.ops.extend(self.gate_call())

    def peek_text(self, k: int) -> str:
        j = min(self.i + k, len(self.toks) - 1)
        return self.toks[j].text

    def peek_kind(self, k: int) -> str:
        j = min(self.i + k, len(self.toks) - 1)
        return self.toks[j].kind

    def pragma(self, t: Token) -> None:
        words = t.text.lstrip("#").split()
        if len(words) >= 3 and words[1] == "dyneq":
            if words[2] == "name":
                self.name = " ".join(words[3:])
            elif words[2] == "output_order":
                try:
                    self.output_order = tuple(int(w) for w in words[3:])
                except ValueError:
                    self.fail("output_order expects integers", "syntax", t)
                self.order_span = t.span
        # other pragmas carry no semantics here

    def declare(self, quantum: bool, name_tok: Token, size: int) -> None:
        name = name_tok.text
        if name in self.qregs or name in self.cregs:
            self.fail(f"register {name!r} redeclared", "semantic", name_tok)
        if size < 1:
            self.fail(f"register {name!r} must have positive size", "semantic", name_tok)
        if quantum:
            self.qregs[name] = (self.nq, size)
            self.nq += size
        else:
            self.cregs[name] = (self.nc, size)
            self.nc += size

    def _reg_arg(self, regs: dict, what: str) -> list[int]:
        name = self.ident()
        if name.text not in regs:
            self.fail(f"unknown {what} register {name.text!r}", "semantic", name)
        offset, size = regs[name.text]
        if self.accept("["):
            idx_tok = self.tok
            idx = self.integer()
            if self.check(":") or self.check(","):
                self.fail("register slices are not supported", "unsupported")
            self.expect("]")
            if idx >= size:
                self.fail(f"index {idx} out of range for {what} register {name.text!r} of size {size}",
                          "semantic", idx_tok)
            return [offset + idx]
        return list(range(offset, offset + size))

    def qarg(self) -> list[int]:
        return self._reg_arg(self.qregs, "quantum")

    def carg(self) -> list[int]:
        return self._reg_arg(self.cregs, "classical")

    def emit_measures(self, qs: list[int], cs: list[int], t: Token) -> None:
        if len(qs) != len(cs):
            self.fail(f"measure size mismatch: {len(qs)} qubit(s) into {len(cs)} bit(s)", "semantic", t)
        self.ops.extend(Measure(q, c) for q, c in zip(qs, cs))

    # -- expressions ---------------------------------------------------
    def expr(self) -> float:
        v = self.term()
        while self.check("+") or self.check("-"):
            op = self.advance().text
            rhs = self.term()
            v = v + rhs if op == "+" else v - rhs
        return v

    def term(self) -> float:
        v = self.unary()
        while self.check("*") or self.check("/"):
            op = self.advance().text
            tok = self.tok
            rhs = self.unary()
            if op == "/" and rhs == 0:
                self.fail("division by zero", "semantic", tok)
            v = v * rhs if op == "*" else v / rhs
        return v

    def unary(self) -> float:
        if self.accept("-"):
            return -self.unary()
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self) -> float:
        base = self.atom()
        if self.accept("^"):
            return base ** self.unary()
        return base

    def atom(self) -> float:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return float(t.text)
        if t.kind == "id":
            self.advance()
            if t.text in _CONSTANTS:
                return _CONSTANTS[t.text]
            if t.text in _FUNCS:
                self.expect("(")
                v = self.expr()
                self.expect(")")
                return _FUNCS[t.text](v)
            self.fail(f"unknown identifier {t.text!r} in expression", "unsupported", t)
        if self.accept("("):
            v = self.expr()
            self.expect(")")
            return v
        self.fail(f"expected expression, found {t.text or 'end of input'!r}")

    # -- gates ---------------------------------------------------------
    def gate_call(self) -> list:
        controls: list[bool] = []
        while self.tok.text in ("ctrl", "negctrl") and self.peek_text(1) in ("@", "("):
            positive = self.advance().text == "ctrl"
            k = 1
            if self.accept("("):
                k = self.integer()
                self.expect(")")
            self.expect("@")
            controls.extend([positive] * k)
        name_tok = self.ident()
        name = name_tok.text
        if name in _UNSUPPORTED:
            self.fail(f"'{name}' is not supported", "unsupported", name_tok)
        params = []
        if self.accept("("):
            if not self.check(")"):
                params.append(self.expr())
                while self.accept(","):
                    params.append(self.expr())
            self.expect(")")
        args = [self.qarg()]
        while self.accept(","):
            args.append(self.qarg())
        self.expect(";")
        if name in _NOOP_GATES:
            return []
        if name not in _GATES:
            self.fail(f"unknown gate {name!r}", "semantic", name_tok)
        base, builtin_ctrls, nparams = _GATES[name]
        if len(params) != nparams:
            self.fail(f"gate {name!r} takes {nparams} parameter(s), got {len(params)}", "semantic", name_tok)
        if base == "u2":
            base, params = "u", [math.pi / 2, params[0], params[1]]
        controls = controls + [True] * builtin_ctrls
        ntargets = 2 if base == "swap" else 1
        if len(args) != len(controls) + ntargets:
            self.fail(f"gate {name!r} expects {len(controls) + ntargets} qubit argument(s), got {len(args)}",
                      "semantic", name_tok)
        width = {len(a) for a in args if len(a) > 1}
        if len(width) > 1:
            self.fail("register arguments of different sizes", "semantic", name_tok)
        reps = width.pop() if width else 1
        gate = Gate(base, tuple(params))
        out = []
        for r in range(reps):
            qs = [a[r] if len(a) > 1 else a[0] for a in args]
            ctrl = tuple(Control(q, pos) for q, pos in zip(qs, controls))
            op = Unitary(gate, tuple(qs[len(controls):]), ctrl)
            if len(set(qs)) != len(qs):
                self.fail("qubit appears twice in one operation", "semantic", name_tok)
            out.append(op)
        return out

    def conditional(self) -> None:
        self.advance()
        self.expect("(")
        negate = self.accept("!")
        reg = self.ident()
        if reg.text not in self.cregs:
            self.fail(f"unknown classical register {reg.text!r}", "semantic", reg)
        offset, size = self.cregs[reg.text]
        if self.accept("["):
            idx_tok = self.tok
            idx = self.integer()
            self.expect("]")
            if idx >= size:
                self.fail(f"index {idx} out of range for classical register {reg.text!r}", "semantic", idx_tok)
            clbit = offset + idx
        else:
            if size != 1:
                self.fail(f"condition on multi-bit register {reg.text!r} is not supported", "unsupported", reg)
            clbit = offset
        value = 1
        if not negate and self.accept("=="):
            vt = self.tok
            value = self.integer()
            if value not in (0, 1):
                self.fail("single-bit condition must compare with 0 or 1", "unsupported", vt)
        elif not negate and not self.check(")"):
            self.fail("only equality conditions are supported", "unsupported")
        if negate:
            value = 0
        self.expect(")")
        inner: list = []
        if self.accept("{"):
            while not self.check("}"):
                if self.tok.kind == "eof":
                    self.fail("unterminated block")
                inner.extend(self.conditional_body())
            self.expect("}")
        else:
            inner.extend(self.conditional_body())
        self.ops.extend(ClassicControlled(op, clbit, value) for op in inner)

    def conditional_body(self) -> list:
        t = self.tok
        if t.text in ("measure", "reset", "if", "barrier") or t.text in self.cregs:
            self.fail(f"'{t.text}' inside a conditional is not supported", "unsupported")
        return self.gate_call()


def parse(text: str) -> Circuit:
    """Parse OpenQASM source into a validated :class:`Circuit`; raises :class:`QasmError`."""
    tokens, errors = _lex(text)
    p = _Parser(tokens)
    p.program()
    errors = errors + p.errors
    if not errors:
        if p.name is not None:
            name = p.name
        else:
            regs = [f"{n}={o}..{o + s - 1}" for n, (o, s) in p.qregs.items()]
            cregs = [f"{n}={o}..{o + s - 1}" for n, (o, s) in p.cregs.items()]
            name = "qasm[" + ",".join(regs) + (";" + ",".join(cregs) if cregs else "") + "]"
        circuit = Circuit(p.nq, p.nc, tuple(p.ops), name, p.output_order)
        eof = tokens[-1].span
        for v in validate(circuit):
            span = p.order_span if (v.op_index is None and p.order_span) else SourceSpan(1, 1, 0, eof.end)
            errors.append(ParseError(span, str(v), "semantic"))
        if not errors:
            return circuit
    raise QasmError(sorted(errors, key=lambda e: e.span.start))


_CTRL_NAMES = {
    ("x", 1): "cx", ("y", 1): "cy", ("z", 1): "cz", ("h", 1): "ch", ("p", 1): "cp",
    ("rx", 1): "crx", ("ry", 1): "cry", ("rz", 1): "crz", ("x", 2): "ccx", ("swap", 1): "cswap",
}


def _fmt_param(p) -> str:
    if isinstance(p, PiFraction):
        return str(p)
    x = float(p)
    # write "k*pi/d" when that text evaluates back to exactly the same float
    guess = PiFraction(Fraction(x / math.pi).limit_denominator(4096))
    return str(guess) if float(guess) == x else repr(x)


def _unitary_lines(op: Unitary) -> list[str]:
    gate = op.gate
    params = f"({', '.join(_fmt_param(p) for p in gate.params)})" if gate.params else ""
    qubits = [c.qubit for c in op.controls] + list(op.targets)
    args = ", ".join(f"q[{q}]" for q in qubits)
    k = len(op.controls)
    if k == 0:
        head = gate.name
    elif (gate.name, k) in _CTRL_NAMES:
        head = _CTRL_NAMES[(gate.name, k)]
    else:
        head = ("ctrl @ " if k == 1 else f"ctrl({k}) @ ") + gate.name
    line = f"{head}{params} {args};"
    flips = [f"x q[{c.qubit}];" for c in op.controls if not c.positive]
    return flips + [line] + flips


def serialize(circuit: Circuit) -> str:
    """Emit the OpenQASM 3.0 form of ``circuit`` (negative controls become X-conjugations)."""
    lines = ["OPENQASM 3.0;", 'include "stdgates.inc";']
    name = " ".join(circuit.name.split())
    if name:
        lines.append(f"pragma dyneq name {name}")
    if circuit.output_order is not None and not circuit.has_default_output_order:
        lines.append("pragma dyneq output_order " + " ".join(str(c) for c in circuit.output_order))
    if circuit.num_qubits:
        lines.append(f"qubit[{circuit.num_qubits}] q;")
    if circuit.num_clbits:
        lines.append(f"bit[{circuit.num_clbits}] c;")
    for op in circuit.ops:
        if isinstance(op, Unitary):
            lines.extend(_unitary_lines(op))
        elif isinstance(op, Measure):
            lines.append(f"c[{op.clbit}] = measure q[{op.qubit}];")
        elif isinstance(op, Reset):
            lines.append(f"reset q[{op.qubit}];")
        elif isinstance(op, ClassicControlled):
            body = _unitary_lines(op.inner)
            cond = f"if (c[{op.clbit}] == {op.value})"
            if len(body) == 1:
                lines.append(f"{cond} {body[0]}")
            else:
                lines.append(cond + " { " + " ".join(body) + " }")
        else:  # pragma: no cover
            raise TypeError(type(op))
    return "\n".join(lines) + "\n"
