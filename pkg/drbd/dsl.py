"""
Textual model language.

    # drive-by-wire, abridged
    name "dbw"
    TF ~ exp(1e-4)
    spare SC ~ exp(1e-4) dormancy 0.5
    set SENSORS = { TS, BS }
    system = TF * wsp(PC, SC) * series(SENSORS)

`*` (AND) binds tighter than `+` (OR). Declarations precede the single
`system = ...` line. Comments run from `#` to the end of the line.
"""
import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, NamedTuple, Optional, Tuple, Union

from drbd.algebra import (
    After,
    Always,
    And,
    Csp,
    Expr,
    Hsp,
    InclAfter,
    NaryAnd,
    NaryOr,
    Never,
    Or,
    Simult,
    Var,
    Wsp,
)
from drbd.distributions import Distribution, Exponential, SpareSpec, Weibull
from drbd.errors import DomainError, ParseError, SemanticError
from drbd.models import DrbdModel
from drbd.structures import ordered

KEYWORDS = frozenset({
    "system", "spare", "dormancy", "set", "name",
    "exp", "weibull",
    "always", "never",
    "wsp", "csp", "hsp", "series", "parallel",
    "after", "simult", "incl_after",
})

_SPARE_NODES = {"wsp": Wsp, "csp": Csp, "hsp": Hsp}
_TEMPORAL_NODES = {"after": After, "simult": Simult, "incl_after": InclAfter}

TOKEN_SPEC = [
    ("NUMBER", r"(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?"),
    ("ID", r"[A-Za-z_][A-Za-z0-9_.]*"),
    ("STRING", r'"[^"\n]*"'),
    ("OP", r"[~=+*(),{}]"),
    ("NEWLINE", r"\n"),
    ("SKIP", r"[ \t\r]+"),
    ("COMMENT", r"\#[^\n]*"),
    ("MISMATCH", r"."),
]
TOKEN_RE = re.compile("|".join(f"(?P<{name}>{pattern})" for name, pattern in TOKEN_SPEC))


class Token(NamedTuple):
    kind: str
    text: str
    line: int
    column: int

    @property
    def end_column(self) -> int:
        return self.column + len(self.text)


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    line, line_start = 1, 0
    for m in TOKEN_RE.finditer(text):
        kind = m.lastgroup
        column = m.start() - line_start + 1
        if kind == "NEWLINE":
            line += 1
            line_start = m.end()
        elif kind in ("SKIP", "COMMENT"):
            continue
        elif kind == "MISMATCH":
            raise ParseError(f"unexpected character {m.group()!r}", line, column)
        else:
            tokens.append(Token(kind, m.group(), line, column))
    tokens.append(Token("EOF", "", line, len(text) - line_start + 1))
    return tokens


# ============ Document ============

@dataclass(frozen=True)
class BlockDecl:
    id: str
    law: Distribution
    spare: bool = False
    dormancy: Optional[float] = None
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)

    def block_law(self) -> Union[Distribution, SpareSpec]:
        if self.spare:
            return SpareSpec.from_active(self.law, self.dormancy)
        return self.law


@dataclass(frozen=True)
class SetDecl:
    name: str
    members: Tuple[str, ...]


@dataclass(frozen=True)
class ModelDocument:
    blocks: Tuple[BlockDecl, ...]
    system: Expr
    sets: Tuple[SetDecl, ...] = ()
    name: Optional[str] = None

    def to_model(self) -> DrbdModel:
        return DrbdModel(
            {b.id: b.block_law() for b in self.blocks},
            self.system,
            name=self.name or "model",
        )


# ============ Parser ============

class Parser:
    """Recursive descent over the token list; one token of lookahead."""

    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0
        self.blocks: Dict[str, BlockDecl] = {}
        self.sets: Dict[str, SetDecl] = {}
        self.name: Optional[str] = None
        # declare unknown ids on first use (bare expressions)
        self.free = False

    # ---- token helpers ----

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def _advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def _error(self, message: str, tok: Optional[Token] = None) -> ParseError:
        tok = tok or self.tok
        found = "end of input" if tok.kind == "EOF" else repr(tok.text)
        return ParseError(f"{message}, found {found}", tok.line, tok.column)

    def _at(self, text: str) -> bool:
        return self.tok.kind in ("OP", "ID") and self.tok.text == text

    def _expect(self, text: str) -> Token:
        if not self._at(text):
            raise self._error(f"expected '{text}'")
        return self._advance()

    def _ident(self) -> Token:
        tok = self.tok
        if tok.kind != "ID" or tok.text in KEYWORDS:
            raise self._error("expected an identifier")
        return self._advance()

    def _number(self) -> Tuple[float, Token]:
        tok = self.tok
        if tok.kind != "NUMBER":
            raise self._error("expected a number")
        self._advance()
        return float(tok.text), tok

    @staticmethod
    def _semantic(message: str, tok: Token) -> SemanticError:
        return SemanticError(message, tok.line, tok.column, tok.end_column)

    # ---- declarations ----

    def parse(self) -> ModelDocument:
        while not self._at("system"):
            if self.tok.kind == "EOF":
                raise self._error("expected 'system = ...'")
            self._declaration()
        self._advance()
        self._expect("=")
        system = self._expr()
        if self.tok.kind != "EOF":
            raise self._error("expected end of input after the system expression")
        return ModelDocument(
            blocks=tuple(self.blocks.values()),
            system=system,
            sets=tuple(self.sets.values()),
            name=self.name,
        )

    def _declaration(self) -> None:
        if self._at("name"):
            self._advance()
            tok = self.tok
            if tok.kind != "STRING":
                raise self._error("expected a quoted model name")
            if self.name is not None:
                raise self._semantic("model name given twice", tok)
            self._advance()
            self.name = tok.text[1:-1]
        elif self._at("set"):
            self._advance()
            tok = self._ident()
            self._claim(tok)
            self._expect("=")
            self._expect("{")
            members = self._id_list("}")
            self._expect("}")
            self.sets[tok.text] = SetDecl(tok.text, tuple(members))
        elif self._at("spare"):
            self._advance()
            tok = self._ident()
            self._claim(tok)
            self._expect("~")
            law = self._dist()
            self._expect("dormancy")
            alpha, alpha_tok = self._number()
            if not 0.0 <= alpha <= 1.0:
                raise self._semantic(f"dormancy factor must be in [0, 1], got {alpha}", alpha_tok)
            decl = BlockDecl(tok.text, law, spare=True, dormancy=alpha, line=tok.line, column=tok.column)
            try:
                decl.block_law()
            except DomainError as e:
                raise self._semantic(e.message, tok) from e
            self.blocks[tok.text] = decl
        else:
            tok = self._ident()
            self._claim(tok)
            self._expect("~")
            law = self._dist()
            self.blocks[tok.text] = BlockDecl(tok.text, law, line=tok.line, column=tok.column)

    def _claim(self, tok: Token) -> None:
        if tok.text in self.blocks or tok.text in self.sets:
            raise self._semantic(f"'{tok.text}' is declared twice", tok)

    def _dist(self) -> Distribution:
        tok = self.tok
        try:
            if self._at("exp"):
                self._advance()
                self._expect("(")
                rate, _ = self._number()
                self._expect(")")
                return Exponential(rate)
            if self._at("weibull"):
                self._advance()
                self._expect("(")
                shape, _ = self._number()
                self._expect(",")
                scale, _ = self._number()
                self._expect(")")
                return Weibull(shape, scale)
        except DomainError as e:
            raise self._semantic(e.message, tok) from e
        raise self._error("expected a distribution (exp or weibull)")

    # ---- expressions ----

    def _expr(self) -> Expr:
        e = self._term()
        while self._at("+"):
            self._advance()
            e = Or(e, self._term())
        return e

    def _term(self) -> Expr:
        e = self._factor()
        while self._at("*"):
            self._advance()
            e = And(e, self._factor())
        return e

    def _factor(self) -> Expr:
        tok = self.tok
        if self._at("("):
            self._advance()
            e = self._expr()
            self._expect(")")
            return e
        if tok.kind != "ID":
            raise self._error("expected an expression")
        word = tok.text
        if word == "always":
            self._advance()
            return Always()
        if word == "never":
            self._advance()
            return Never()
        if word in _SPARE_NODES:
            self._advance()
            self._expect("(")
            main = self._expr()
            self._expect(",")
            spare_tok = self._ident()
            self._expect(")")
            self._check_spare(spare_tok)
            return _SPARE_NODES[word](main, spare_tok.text)
        if word in _TEMPORAL_NODES:
            self._advance()
            self._expect("(")
            left = self._expr()
            self._expect(",")
            right = self._expr()
            self._expect(")")
            return _TEMPORAL_NODES[word](left, right)
        if word in ("series", "parallel"):
            self._advance()
            self._expect("(")
            ids = self._id_list(")", expand_sets=True)
            self._expect(")")
            kind = NaryAnd if word == "series" else NaryOr
            return kind(tuple(Var(i) for i in ordered(ids)))
        ident = self._ident()
        self._check_block(ident)
        return Var(ident.text)

    def _id_list(self, closer: str, expand_sets: bool = False) -> List[str]:
        ids: List[str] = []
        seen: Dict[str, Token] = {}
        while True:
            tok = self._ident()
            names = [tok.text]
            if expand_sets and tok.text in self.sets:
                names = list(self.sets[tok.text].members)
            else:
                self._check_block(tok)
            for n in names:
                if n in seen:
                    raise self._semantic(f"'{n}' listed twice", tok)
                seen[n] = tok
                ids.append(n)
            if not self._at(","):
                break
            self._advance()
        if not self._at(closer):
            raise self._error(f"expected ',' or '{closer}'")
        return ids

    def _check_block(self, tok: Token) -> None:
        if self.free and tok.text not in self.blocks:
            self.blocks[tok.text] = BlockDecl(tok.text, Exponential(1.0))
        decl = self.blocks.get(tok.text)
        if decl is None:
            raise self._semantic(f"unknown block '{tok.text}'", tok)
        if decl.spare:
            raise self._semantic(f"spare block '{tok.text}' used outside a spare construct", tok)

    def _check_spare(self, tok: Token) -> None:
        if self.free and tok.text not in self.blocks:
            self.blocks[tok.text] = BlockDecl(tok.text, Exponential(1.0), spare=True, dormancy=0.0)
        decl = self.blocks.get(tok.text)
        if decl is None:
            raise self._semantic(f"unknown spare '{tok.text}'", tok)
        if not decl.spare:
            raise self._semantic(f"block '{tok.text}' is not declared as a spare", tok)


def parse(text: str) -> ModelDocument:
    """Parse model text into a ModelDocument.

    Raises:
        ParseError: Lexical or syntax error, with line:column.
        SemanticError: Duplicate or unknown ids and spare misuse, with the source span.
    """
    return Parser(text).parse()


def parse_model(text: str) -> DrbdModel:
    return parse(text).to_model()


def parse_expr(text: str, blocks: Optional[Iterable[str]] = None, spares: Iterable[str] = ()) -> Expr:
    """Parse a bare expression against the given block and spare ids.

    With blocks=None every identifier is accepted: spare-construct arguments
    as spares, the rest as blocks.
    """
    parser = Parser(text)
    parser.free = blocks is None
    for b in blocks or ():
        parser.blocks[b] = BlockDecl(b, Exponential(1.0))
    for s in spares:
        parser.blocks[s] = BlockDecl(s, Exponential(1.0), spare=True, dormancy=0.0)
    e = parser._expr()
    if parser.tok.kind != "EOF":
        raise parser._error("expected end of expression")
    return e


# ============ Printer ============

_PREC_OR, _PREC_AND, _PREC_ATOM = 1, 2, 3


def format_expr(e, prec: int = _PREC_OR) -> str:
    """Infix rendering that parse_expr reads back to the same tree."""
    if isinstance(e, Always):
        return "always"
    if isinstance(e, Never):
        return "never"
    if isinstance(e, Or):
        out = f"{format_expr(e.left, _PREC_OR)} + {format_expr(e.right, _PREC_AND)}"
        return f"({out})" if prec > _PREC_OR else out
    if isinstance(e, And):
        out = f"{format_expr(e.left, _PREC_AND)} * {format_expr(e.right, _PREC_ATOM)}"
        return f"({out})" if prec > _PREC_AND else out
    for word, kind in _TEMPORAL_NODES.items():
        if isinstance(e, kind):
            return f"{word}({format_expr(e.left)}, {format_expr(e.right)})"
    for word, kind in _SPARE_NODES.items():
        if isinstance(e, kind):
            return f"{word}({format_expr(e.main)}, {e.spare})"
    if isinstance(e, (NaryAnd, NaryOr)) and all(isinstance(a, Var) for a in e.args):
        word = "series" if isinstance(e, NaryAnd) else "parallel"
        return f"{word}({', '.join(a.name for a in e.args)})"
    if isinstance(e, (NaryAnd, NaryOr)):
        # compound arguments have no list syntax; fall back to a binary chain
        kind = And if isinstance(e, NaryAnd) else Or
        chain = e.args[-1]
        for a in reversed(e.args[:-1]):
            chain = kind(a, chain)
        return format_expr(chain, prec)
    # Var and rule metavariables
    return e.name


def _format_number(x: float) -> str:
    return repr(float(x))


def format_model(doc: ModelDocument) -> str:
    lines: List[str] = []
    if doc.name is not None:
        lines.append(f'name "{doc.name}"')
    for b in doc.blocks:
        if b.spare:
            lines.append(f"spare {b.id} ~ {b.law.describe()} dormancy {_format_number(b.dormancy)}")
        else:
            lines.append(f"{b.id} ~ {b.law.describe()}")
    for s in doc.sets:
        lines.append(f"set {s.name} = {{ {', '.join(s.members)} }}")
    lines.append(f"system = {format_expr(doc.system)}")
    return "\n".join(lines) + "\n"
