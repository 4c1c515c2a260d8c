"""Frontend for MCL, a small C-like concurrent language.

MCL programs are single files with global declarations followed by
``void`` functions.  One of the functions must be ``main``.  The language
is deliberately tiny: one numeric type (32-bit signed int), global scalars
and arrays, mutexes, structured control flow, and a handful of builtin
statement forms for threading, nondeterminism, heap handles, and checks.

Grammar (EBNF)::

    program  := { decl | func }
    decl     := "int" IDENT [ "[" INT "]" ] ";" | "mutex" IDENT ";"
    func     := "void" IDENT "(" [ "int" IDENT ] ")" block
    block    := "{" { stmt } "}"
    stmt     := IDENT ["[" expr "]"] "=" expr ";"
              | "int" IDENT ["=" expr] ";"
              | "if" "(" expr ")" block [ "else" block ]
              | "while" "(" expr ")" block
              | "lock" "(" IDENT ")" ";" | "unlock" "(" IDENT ")" ";"
              | IDENT "=" "thread_create" "(" IDENT [ "," expr ] ")" ";"
              | "thread_join" "(" IDENT ")" ";"
              | IDENT "=" "nondet" "(" ")" ";"
              | IDENT "=" "alloc" "(" expr ")" ";" | "free" "(" IDENT ")" ";"
              | "assert" "(" expr ")" ";" | "assume" "(" expr ")" ";"
              | "reach_error" "(" ")" ";"
    expr     := int expressions over + - * / % == != < <= > >= && || !
                with C precedence, parentheses, int literals, variables,
                and single-index reads ``IDENT [ expr ]``

Comments run from ``//`` to end of line.  Files use the ``.mcl`` extension.

Semantics fixed here (the interpreter and checkers rely on them):

* all variables are 32-bit signed two's-complement ints, zero-initialized;
* ``thread_create`` returns an opaque thread id stored in an int variable,
  and at most 64 threads may be live at once;
* indexing a declared array accesses that array; indexing any other int
  variable treats its value as a heap handle obtained from ``alloc``;
* there are no calls and no recursion — a cycle in the thread-create
  graph is rejected at resolve time.

Parsing is deterministic and pure; every AST node carries a
:class:`SourceLoc`, and :func:`pretty_print` emits canonical text that
reparses to a structurally identical tree.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union


# ---------------------------------------------------------------------------
# Locations and errors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SourceLoc:
    """1-based line/column position in the source file."""

    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


class LangError(Exception):
    """Base class for frontend failures; carries the offending location."""

    def __init__(self, loc: SourceLoc, message: str):
        super().__init__(f"{loc}: {message}")
        self.loc = loc
        self.message = message


class ParseError(LangError):
    """Malformed input (lexical or syntactic)."""


class ResolveError(LangError):
    """An identifier use that does not resolve to a prior declaration."""

    def __init__(self, loc: SourceLoc, name: str, message: str | None = None):
        super().__init__(loc, message or f"undeclared identifier '{name}'")
        self.name = name


class KindError(LangError):
    """A name used at the wrong kind (mutex where int expected, etc.)."""


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

# Expressions

@dataclass(frozen=True)
class IntLit:
    value: int
    loc: SourceLoc


@dataclass(frozen=True)
class VarRef:
    name: str
    loc: SourceLoc


@dataclass(frozen=True)
class IndexRef:
    """``name[index]`` — array element or heap-handle cell read."""

    name: str
    index: "Expr"
    loc: SourceLoc


@dataclass(frozen=True)
class Unary:
    op: str  # '-' or '!'
    operand: "Expr"
    loc: SourceLoc


@dataclass(frozen=True)
class Binary:
    op: str
    lhs: "Expr"
    rhs: "Expr"
    loc: SourceLoc


Expr = Union[IntLit, VarRef, IndexRef, Unary, Binary]

# Statements

@dataclass(frozen=True)
class Assign:
    target: str
    index: Optional[Expr]  # None for scalar targets
    value: Expr
    loc: SourceLoc


@dataclass(frozen=True)
class LocalDecl:
    name: str
    init: Optional[Expr]
    loc: SourceLoc


@dataclass(frozen=True)
class If:
    cond: Expr
    then_body: tuple
    else_body: Optional[tuple]
    loc: SourceLoc


@dataclass(frozen=True)
class While:
    cond: Expr
    body: tuple
    loc: SourceLoc


@dataclass(frozen=True)
class Lock:
    mutex: str
    loc: SourceLoc


@dataclass(frozen=True)
class Unlock:
    mutex: str
    loc: SourceLoc


@dataclass(frozen=True)
class ThreadCreate:
    target: str
    func: str
    arg: Optional[Expr]
    loc: SourceLoc


@dataclass(frozen=True)
class ThreadJoin:
    var: str
    loc: SourceLoc


@dataclass(frozen=True)
class NondetAssign:
    target: str
    loc: SourceLoc


@dataclass(frozen=True)
class AllocAssign:
    target: str
    size: Expr
    loc: SourceLoc


@dataclass(frozen=True)
class Free:
    var: str
    loc: SourceLoc


@dataclass(frozen=True)
class AssertStmt:
    cond: Expr
    loc: SourceLoc


@dataclass(frozen=True)
class AssumeStmt:
    cond: Expr
    loc: SourceLoc


@dataclass(frozen=True)
class ReachErrorStmt:
    loc: SourceLoc


Stmt = Union[
    Assign, LocalDecl, If, While, Lock, Unlock, ThreadCreate, ThreadJoin,
    NondetAssign, AllocAssign, Free, AssertStmt, AssumeStmt, ReachErrorStmt,
]

# Top level

@dataclass(frozen=True)
class GlobalInt:
    name: str
    size: Optional[int]  # None for scalars, array length otherwise
    loc: SourceLoc


@dataclass(frozen=True)
class GlobalMutex:
    name: str
    loc: SourceLoc


@dataclass(frozen=True)
class Function:
    name: str
    param: Optional[str]
    body: tuple
    loc: SourceLoc
    locals_: tuple = field(default=())  # filled in by the resolver


@dataclass(frozen=True)
class Ast:
    globals_: tuple  # GlobalInt | GlobalMutex, in file order
    functions: tuple  # Function, in file order

    @property
    def main(self) -> Function:
        for f in self.functions:
            if f.name == "main":
                return f
        raise LookupError("no main function")

    def function(self, name: str) -> Function:
        for f in self.functions:
            if f.name == name:
                return f
        raise LookupError(name)


@dataclass(frozen=True)
class SourceProgram:
    """Raw MCL source text plus the path it came from (for reports)."""

    path: str
    text: str


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

KEYWORDS = {
    "int", "mutex", "void", "if", "else", "while", "lock", "unlock",
    "thread_create", "thread_join", "nondet", "alloc", "free",
    "assert", "assume", "reach_error",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>&&|\|\||==|!=|<=|>=|[-+*/%<>!=;,(){}\[\]])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # 'num', 'ident', 'kw', 'op', 'eof'
    text: str
    loc: SourceLoc


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(SourceLoc(line, col), f"unexpected character {text[pos]!r}")
        loc = SourceLoc(line, col)
        if m.lastgroup == "nl":
            line += 1
            col = 1
        else:
            col += m.end() - m.start()
            if m.lastgroup == "num":
                tokens.append(Token("num", m.group(), loc))
            elif m.lastgroup == "ident":
                kind = "kw" if m.group() in KEYWORDS else "ident"
                tokens.append(Token(kind, m.group(), loc))
            elif m.lastgroup == "op":
                tokens.append(Token("op", m.group(), loc))
        pos = m.end()
    tokens.append(Token("eof", "", SourceLoc(line, col)))
    return tokens


# ---------------------------------------------------------------------------
# Parser (recursive descent)
# ---------------------------------------------------------------------------

# Binary operator precedence, loosest first.  Matches C.
_BINOP_LEVELS = [
    ("||",),
    ("&&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("+", "-"),
    ("*", "/", "%"),
]

INT_MAX = 2**31 - 1
INT_MIN = -(2**31)


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    # -- token helpers --

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def expect(self, text: str) -> Token:
        t = self.peek()
        if t.text != text or t.kind == "eof":
            raise ParseError(t.loc, f"expected '{text}', found {t.text!r}" if t.text else f"expected '{text}', found end of file")
        return self.advance()

    def expect_ident(self) -> Token:
        t = self.peek()
        if t.kind != "ident":
            raise ParseError(t.loc, f"expected identifier, found {t.text!r}")
        return self.advance()

    def at(self, text: str) -> bool:
        return self.peek().text == text

    # -- grammar --

    def program(self) -> Ast:
        globals_: list = []
        functions: list[Function] = []
        while self.peek().kind != "eof":
            t = self.peek()
            if t.text == "void":
                functions.append(self.function())
            elif t.text == "int":
                globals_.append(self.global_int())
            elif t.text == "mutex":
                globals_.append(self.global_mutex())
            else:
                raise ParseError(t.loc, f"expected declaration or function, found {t.text!r}")
        return Ast(tuple(globals_), tuple(functions))

    def global_int(self) -> GlobalInt:
        kw = self.expect("int")
        name = self.expect_ident()
        size = None
        if self.at("["):
            self.advance()
            n = self.peek()
            if n.kind != "num":
                raise ParseError(n.loc, "array size must be an integer literal")
            self.advance()
            size = int(n.text)
            if size <= 0:
                raise ParseError(n.loc, "array size must be positive")
            self.expect("]")
        self.expect(";")
        return GlobalInt(name.text, size, kw.loc)

    def global_mutex(self) -> GlobalMutex:
        kw = self.expect("mutex")
        name = self.expect_ident()
        self.expect(";")
        return GlobalMutex(name.text, kw.loc)

    def function(self) -> Function:
        kw = self.expect("void")
        name = self.expect_ident()
        self.expect("(")
        param = None
        if self.at("int"):
            self.advance()
            param = self.expect_ident().text
        self.expect(")")
        body = self.block()
        return Function(name.text, param, body, kw.loc)

    def block(self) -> tuple:
        self.expect("{")
        stmts: list[Stmt] = []
        while not self.at("}"):
            if self.peek().kind == "eof":
                raise ParseError(self.peek().loc, "unterminated block")
            stmts.append(self.statement())
        self.expect("}")
        return tuple(stmts)

    def statement(self) -> Stmt:
        t = self.peek()
        if t.text == "int":
            self.advance()
            name = self.expect_ident()
            init = None
            if self.at("="):
                self.advance()
                init = self.expr()
            self.expect(";")
            return LocalDecl(name.text, init, t.loc)
        if t.text == "if":
            self.advance()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            then_body = self.block()
            else_body = None
            if self.at("else"):
                self.advance()
                else_body = self.block()
            return If(cond, then_body, else_body, t.loc)
        if t.text == "while":
            self.advance()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            body = self.block()
            return While(cond, body, t.loc)
        if t.text in ("lock", "unlock"):
            self.advance()
            self.expect("(")
            name = self.expect_ident()
            self.expect(")")
            self.expect(";")
            return (Lock if t.text == "lock" else Unlock)(name.text, t.loc)
        if t.text == "thread_join":
            self.advance()
            self.expect("(")
            name = self.expect_ident()
            self.expect(")")
            self.expect(";")
            return ThreadJoin(name.text, t.loc)
        if t.text == "free":
            self.advance()
            self.expect("(")
            name = self.expect_ident()
            self.expect(")")
            self.expect(";")
            return Free(name.text, t.loc)
        if t.text in ("assert", "assume"):
            self.advance()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            self.expect(";")
            return (AssertStmt if t.text == "assert" else AssumeStmt)(cond, t.loc)
        if t.text == "reach_error":
            self.advance()
            self.expect("(")
            self.expect(")")
            self.expect(";")
            return ReachErrorStmt(t.loc)
        if t.kind == "ident":
            return self.assignment()
        raise ParseError(t.loc, f"expected statement, found {t.text!r}")

    def assignment(self) -> Stmt:
        name = self.expect_ident()
        index = None
        if self.at("["):
            self.advance()
            index = self.expr()
            self.expect("]")
        self.expect("=")
        t = self.peek()
        if index is None and t.text == "thread_create":
            self.advance()
            self.expect("(")
            func = self.expect_ident()
            arg = None
            if self.at(","):
                self.advance()
                arg = self.expr()
            self.expect(")")
            self.expect(";")
            return ThreadCreate(name.text, func.text, arg, name.loc)
        if index is None and t.text == "nondet":
            self.advance()
            self.expect("(")
            self.expect(")")
            self.expect(";")
            return NondetAssign(name.text, name.loc)
        if index is None and t.text == "alloc":
            self.advance()
            self.expect("(")
            size = self.expr()
            self.expect(")")
            self.expect(";")
            return AllocAssign(name.text, size, name.loc)
        value = self.expr()
        self.expect(";")
        return Assign(name.text, index, value, name.loc)

    # expressions

    def expr(self) -> Expr:
        return self._binary(0)

    def _binary(self, level: int) -> Expr:
        if level == len(_BINOP_LEVELS):
            return self._unary()
        lhs = self._binary(level + 1)
        ops = _BINOP_LEVELS[level]
        while self.peek().text in ops and self.peek().kind == "op":
            op = self.advance()
            rhs = self._binary(level + 1)
            lhs = Binary(op.text, lhs, rhs, op.loc)
        return lhs

    def _unary(self) -> Expr:
        t = self.peek()
        if t.text in ("-", "!") and t.kind == "op":
            self.advance()
            return Unary(t.text, self._unary(), t.loc)
        return self._primary()

    def _primary(self) -> Expr:
        t = self.peek()
        if t.kind == "num":
            self.advance()
            value = int(t.text)
            if value > INT_MAX:
                raise ParseError(t.loc, f"integer literal {value} out of 32-bit range")
            return IntLit(value, t.loc)
        if t.kind == "ident":
            self.advance()
            if self.at("["):
                self.advance()
                index = self.expr()
                self.expect("]")
                return IndexRef(t.text, index, t.loc)
            return VarRef(t.text, t.loc)
        if t.text == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        raise ParseError(t.loc, f"expected expression, found {t.text!r}")


# ---------------------------------------------------------------------------
# Resolver / kind checker
# ---------------------------------------------------------------------------

# Name kinds in scope maps
_K_INT = "int"
_K_ARRAY = "array"
_K_MUTEX = "mutex"


def _resolve(ast: Ast) -> Ast:
    """Check declarations, identifier uses, and name kinds.

    Returns an Ast whose functions carry their collected local-variable
    lists (params first), as the lowering pass needs them for frames.
    """
    globals_seen: dict[str, str] = {}
    ordered_globals: dict[str, str] = {}
    for g in ast.globals_:
        if g.name in globals_seen:
            raise ResolveError(g.loc, g.name, f"duplicate global '{g.name}'")
        globals_seen[g.name] = _K_MUTEX if isinstance(g, GlobalMutex) else (
            _K_ARRAY if g.size is not None else _K_INT)
        ordered_globals[g.name] = globals_seen[g.name]

    func_names = set()
    mains = [f for f in ast.functions if f.name == "main"]
    for f in ast.functions:
        if f.name in func_names:
            raise ResolveError(f.loc, f.name, f"duplicate function '{f.name}'")
        if f.name in globals_seen:
            raise ResolveError(f.loc, f.name, f"'{f.name}' declared as both global and function")
        func_names.add(f.name)
    if len(mains) != 1:
        loc = ast.functions[0].loc if ast.functions else SourceLoc(1, 1)
        raise ResolveError(loc, "main", "program must define exactly one 'main' function")
    if mains[0].param is not None:
        raise KindError(mains[0].loc, "'main' takes no parameter")

    creates: dict[str, set[str]] = {f.name: set() for f in ast.functions}
    resolved: list[Function] = []

    for f in ast.functions:
        locals_: dict[str, SourceLoc] = {}
        if f.param is not None:
            if f.param in globals_seen and globals_seen[f.param] != _K_INT:
                raise KindError(f.loc, f"parameter '{f.param}' shadows a non-int global")
            locals_[f.param] = f.loc

        def kind_of(name: str, loc: SourceLoc) -> str:
            if name in locals_:
                return _K_INT
            if name in globals_seen:
                return globals_seen[name]
            raise ResolveError(loc, name)

        def check_expr(e: Expr) -> None:
            if isinstance(e, IntLit):
                return
            if isinstance(e, VarRef):
                k = kind_of(e.name, e.loc)
                if k != _K_INT:
                    raise KindError(e.loc, f"'{e.name}' is a {k}, not an int value")
                return
            if isinstance(e, IndexRef):
                k = kind_of(e.name, e.loc)
                if k == _K_MUTEX:
                    raise KindError(e.loc, f"cannot index mutex '{e.name}'")
                check_expr(e.index)
                return
            if isinstance(e, Unary):
                check_expr(e.operand)
                return
            check_expr(e.lhs)
            check_expr(e.rhs)

        def check_int_var(name: str, loc: SourceLoc) -> None:
            k = kind_of(name, loc)
            if k != _K_INT:
                raise KindError(loc, f"'{name}' is a {k}, not an int variable")

        def check_stmts(stmts: tuple) -> None:
            for s in stmts:
                if isinstance(s, LocalDecl):
                    if s.name in locals_:
                        raise ResolveError(s.loc, s.name, f"duplicate local '{s.name}'")
                    if s.name in globals_seen and globals_seen[s.name] != _K_INT:
                        raise KindError(s.loc, f"local '{s.name}' shadows a non-int global")
                    if s.init is not None:
                        check_expr(s.init)
                    locals_[s.name] = s.loc
                elif isinstance(s, Assign):
                    k = kind_of(s.target, s.loc)
                    if s.index is None:
                        if k != _K_INT:
                            raise KindError(s.loc, f"cannot assign to {k} '{s.target}'")
                    else:
                        if k == _K_MUTEX:
                            raise KindError(s.loc, f"cannot index mutex '{s.target}'")
                        check_expr(s.index)
                    check_expr(s.value)
                elif isinstance(s, If):
                    check_expr(s.cond)
                    check_stmts(s.then_body)
                    if s.else_body is not None:
                        check_stmts(s.else_body)
                elif isinstance(s, While):
                    check_expr(s.cond)
                    check_stmts(s.body)
                elif isinstance(s, (Lock, Unlock)):
                    if kind_of(s.mutex, s.loc) != _K_MUTEX:
                        raise KindError(s.loc, f"'{s.mutex}' is not a mutex")
                elif isinstance(s, ThreadCreate):
                    check_int_var(s.target, s.loc)
                    if s.func not in func_names:
                        raise ResolveError(s.loc, s.func, f"unknown thread function '{s.func}'")
                    entry = ast.function(s.func)
                    if s.arg is not None:
                        check_expr(s.arg)
                        if entry.param is None:
                            raise KindError(s.loc, f"'{s.func}' takes no parameter")
                    creates[f.name].add(s.func)
                elif isinstance(s, ThreadJoin):
                    check_int_var(s.var, s.loc)
                elif isinstance(s, NondetAssign):
                    check_int_var(s.target, s.loc)
                elif isinstance(s, AllocAssign):
                    check_int_var(s.target, s.loc)
                    check_expr(s.size)
                elif isinstance(s, Free):
                    check_int_var(s.var, s.loc)
                elif isinstance(s, (AssertStmt, AssumeStmt)):
                    check_expr(s.cond)
                # ReachErrorStmt needs nothing

        check_stmts(f.body)
        local_names = tuple(locals_.keys())
        resolved.append(Function(f.name, f.param, f.body, f.loc, local_names))

    # The thread-create graph stands in for a call graph; reject cycles.
    def reaches(start: str, target: str, seen: set[str]) -> bool:
        if start == target:
            return True
        if start in seen:
            return False
        seen.add(start)
        return any(reaches(n, target, seen) for n in creates.get(start, ()))

    for name in func_names:
        if any(reaches(child, name, set()) for child in creates[name]):
            raise ResolveError(ast.function(name).loc, name,
                               f"recursive thread creation through '{name}'")

    return Ast(ast.globals_, tuple(resolved))


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def parse(source: SourceProgram) -> Ast:
    """Parse and resolve MCL source into a checked Ast.

    Raises ParseError, ResolveError, or KindError with a source location
    on malformed input.
    """
    tokens = tokenize(source.text)
    ast = _Parser(tokens).program()
    return _resolve(ast)


def parse_text(text: str, path: str = "<string>") -> Ast:
    return parse(SourceProgram(path, text))


def parse_file(path: str) -> Ast:
    with open(path, "r", encoding="utf-8") as fh:
        return parse(SourceProgram(path, fh.read()))


# -- pretty printer --

_PRECEDENCE = {op: i for i, ops in enumerate(_BINOP_LEVELS) for op in ops}
_UNARY_LEVEL = len(_BINOP_LEVELS)


def expr_to_str(e: Expr, parent_level: int = -1) -> str:
    """Render an expression with minimal parentheses."""
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, VarRef):
        return e.name
    if isinstance(e, IndexRef):
        return f"{e.name}[{expr_to_str(e.index)}]"
    if isinstance(e, Unary):
        inner = expr_to_str(e.operand, _UNARY_LEVEL)
        # avoid '--x' gluing into a single token
        if e.op == "-" and inner.startswith("-"):
            inner = f"({inner})"
        return f"{e.op}{inner}"
    level = _PRECEDENCE[e.op]
    lhs = expr_to_str(e.lhs, level)
    rhs = expr_to_str(e.rhs, level + 1)  # left-assoc: parenthesize equal-level rhs
    text = f"{lhs} {e.op} {rhs}"
    if level < parent_level:
        return f"({text})"
    return text


def _stmt_lines(s: Stmt, indent: int) -> list[str]:
    pad = "  " * indent
    if isinstance(s, LocalDecl):
        if s.init is None:
            return [f"{pad}int {s.name};"]
        return [f"{pad}int {s.name} = {expr_to_str(s.init)};"]
    if isinstance(s, Assign):
        if s.index is None:
            return [f"{pad}{s.target} = {expr_to_str(s.value)};"]
        return [f"{pad}{s.target}[{expr_to_str(s.index)}] = {expr_to_str(s.value)};"]
    if isinstance(s, If):
        lines = [f"{pad}if ({expr_to_str(s.cond)}) {{"]
        for inner in s.then_body:
            lines.extend(_stmt_lines(inner, indent + 1))
        if s.else_body is not None:
            lines.append(f"{pad}}} else {{")
            for inner in s.else_body:
                lines.extend(_stmt_lines(inner, indent + 1))
        lines.append(f"{pad}}}")
        return lines
    if isinstance(s, While):
        lines = [f"{pad}while ({expr_to_str(s.cond)}) {{"]
        for inner in s.body:
            lines.extend(_stmt_lines(inner, indent + 1))
        lines.append(f"{pad}}}")
        return lines
    if isinstance(s, Lock):
        return [f"{pad}lock({s.mutex});"]
    if isinstance(s, Unlock):
        return [f"{pad}unlock({s.mutex});"]
    if isinstance(s, ThreadCreate):
        if s.arg is None:
            return [f"{pad}{s.target} = thread_create({s.func});"]
        return [f"{pad}{s.target} = thread_create({s.func}, {expr_to_str(s.arg)});"]
    if isinstance(s, ThreadJoin):
        return [f"{pad}thread_join({s.var});"]
    if isinstance(s, NondetAssign):
        return [f"{pad}{s.target} = nondet();"]
    if isinstance(s, AllocAssign):
        return [f"{pad}{s.target} = alloc({expr_to_str(s.size)});"]
    if isinstance(s, Free):
        return [f"{pad}free({s.var});"]
    if isinstance(s, AssertStmt):
        return [f"{pad}assert({expr_to_str(s.cond)});"]
    if isinstance(s, AssumeStmt):
        return [f"{pad}assume({expr_to_str(s.cond)});"]
    if isinstance(s, ReachErrorStmt):
        return [f"{pad}reach_error();"]
    raise TypeError(f"unknown statement {s!r}")


def pretty_print(ast: Ast, path: str = "<pretty>") -> SourceProgram:
    """Emit canonical source text; reparses to a structurally equal Ast."""
    lines: list[str] = []
    for g in ast.globals_:
        if isinstance(g, GlobalMutex):
            lines.append(f"mutex {g.name};")
        elif g.size is not None:
            lines.append(f"int {g.name}[{g.size}];")
        else:
            lines.append(f"int {g.name};")
    if ast.globals_:
        lines.append("")
    for f in ast.functions:
        head = f"void {f.name}({'int ' + f.param if f.param else ''}) {{"
        lines.append(head)
        for s in f.body:
            lines.extend(_stmt_lines(s, 1))
        lines.append("}")
        lines.append("")
    return SourceProgram(path, "\n".join(lines))


# -- structural comparison (ignores SourceLoc) --


def structure(node) -> tuple:
    """Location-free structural signature; equal signatures mean equal trees."""
    if isinstance(node, Ast):
        return ("ast",
                tuple(structure(g) for g in node.globals_),
                tuple(structure(f) for f in node.functions))
    if isinstance(node, Function):
        return ("func", node.name, node.param, tuple(structure(s) for s in node.body))
    if isinstance(node, GlobalInt):
        return ("gint", node.name, node.size)
    if isinstance(node, GlobalMutex):
        return ("gmutex", node.name)
    if isinstance(node, IntLit):
        return ("lit", node.value)
    if isinstance(node, VarRef):
        return ("var", node.name)
    if isinstance(node, IndexRef):
        return ("idx", node.name, structure(node.index))
    if isinstance(node, Unary):
        return ("un", node.op, structure(node.operand))
    if isinstance(node, Binary):
        return ("bin", node.op, structure(node.lhs), structure(node.rhs))
    if isinstance(node, Assign):
        return ("assign", node.target,
                structure(node.index) if node.index is not None else None,
                structure(node.value))
    if isinstance(node, LocalDecl):
        return ("local", node.name, structure(node.init) if node.init is not None else None)
    if isinstance(node, If):
        return ("if", structure(node.cond),
                tuple(structure(s) for s in node.then_body),
                tuple(structure(s) for s in node.else_body) if node.else_body is not None else None)
    if isinstance(node, While):
        return ("while", structure(node.cond), tuple(structure(s) for s in node.body))
    if isinstance(node, Lock):
        return ("lock", node.mutex)
    if isinstance(node, Unlock):
        return ("unlock", node.mutex)
    if isinstance(node, ThreadCreate):
        return ("tcreate", node.target, node.func,
                structure(node.arg) if node.arg is not None else None)
    if isinstance(node, ThreadJoin):
        return ("tjoin", node.var)
    if isinstance(node, NondetAssign):
        return ("nondet", node.target)
    if isinstance(node, AllocAssign):
        return ("alloc", node.target, structure(node.size))
    if isinstance(node, Free):
        return ("free", node.var)
    if isinstance(node, AssertStmt):
        return ("assert", structure(node.cond))
    if isinstance(node, AssumeStmt):
        return ("assume", structure(node.cond))
    if isinstance(node, ReachErrorStmt):
        return ("reach_error",)
    raise TypeError(f"unknown node {node!r}")
