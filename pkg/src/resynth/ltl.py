"""LTL syntax trees, a small recursive-descent parser, NNF and lasso evaluation.

Concrete syntax (whitespace-insensitive)::

    !a   X a   F a   G a   a U b   a R b   a & b   a | b   a -> b   true   false

Unary operators bind tightest, then ``U``/``R`` (right-associative), ``&``,
``|`` and finally ``->`` (right-associative).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class LtlError(ValueError):
    pass


class LtlSyntaxError(LtlError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column


class UnknownPropositionError(LtlError):
    def __init__(self, name: str):
        super().__init__(f"unknown proposition {name!r}")
        self.name = name


@dataclass(frozen=True)
class AtomicAlphabet:
    """Input and output propositions.  Bit ``k`` of a letter mask is ``props[k]``."""

    inputs: tuple[str, ...]
    outputs: tuple[str, ...]

    def __init__(self, inputs: Iterable[str] = (), outputs: Iterable[str] = ()):
        object.__setattr__(self, "inputs", tuple(inputs))
        object.__setattr__(self, "outputs", tuple(outputs))
        names = self.inputs + self.outputs
        for name in names:
            if not IDENT_RE.match(name):
                raise LtlError(f"invalid proposition name {name!r}")
        if len(set(self.inputs)) != len(self.inputs) or len(set(self.outputs)) != len(self.outputs):
            raise LtlError("duplicate proposition name")
        if set(self.inputs) & set(self.outputs):
            raise LtlError("inputs and outputs must be disjoint")

    @property
    def props(self) -> tuple[str, ...]:
        return self.inputs + self.outputs

    @property
    def n_inputs(self) -> int:
        return len(self.inputs)

    @property
    def n_outputs(self) -> int:
        return len(self.outputs)

    def bit(self, name: str) -> int:
        try:
            return 1 << self.props.index(name)
        except ValueError:
            raise UnknownPropositionError(name) from None

    def mask(self, props: Iterable[str]) -> int:
        m = 0
        for p in props:
            m |= self.bit(p)
        return m

    def letter(self, mask: int) -> frozenset[str]:
        return frozenset(p for k, p in enumerate(self.props) if mask >> k & 1)

    def input_mask(self, i: int) -> int:
        """Input letter index ``i`` (bits over ``inputs``) as a full-alphabet mask."""
        return i

    def output_mask(self, o: int) -> int:
        """Output valuation ``o`` (bits over ``outputs``) as a full-alphabet mask."""
        return o << len(self.inputs)

    def input_letter(self, i: int) -> frozenset[str]:
        return frozenset(p for k, p in enumerate(self.inputs) if i >> k & 1)

    def output_letter(self, o: int) -> frozenset[str]:
        return frozenset(p for k, p in enumerate(self.outputs) if o >> k & 1)

    def input_index(self, props: Iterable[str]) -> int:
        return sum(1 << self.inputs.index(p) for p in props if p in self.inputs)

    def output_index(self, props: Iterable[str]) -> int:
        return sum(1 << self.outputs.index(p) for p in props if p in self.outputs)

    def to_dict(self) -> dict:
        return {"inputs": list(self.inputs), "outputs": list(self.outputs)}


# --- syntax trees -----------------------------------------------------------


class Formula:
    __slots__ = ()

    def __str__(self) -> str:
        return pretty(self)


@dataclass(frozen=True)
class TrueF(Formula):
    pass


@dataclass(frozen=True)
class FalseF(Formula):
    pass


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class Not(Formula):
    operand: Formula


@dataclass(frozen=True)
class Next(Formula):
    operand: Formula


@dataclass(frozen=True)
class Finally(Formula):
    operand: Formula


@dataclass(frozen=True)
class Globally(Formula):
    operand: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Release(Formula):
    left: Formula
    right: Formula


TRUE = TrueF()
FALSE = FalseF()

UNARY = (Not, Next, Finally, Globally)
BINARY = (And, Or, Implies, Until, Release)

_UNARY_SYM = {Not: "!", Next: "X", Finally: "F", Globally: "G"}
_BINARY_SYM = {And: "&", Or: "|", Implies: "->", Until: "U", Release: "R"}


def conj(formulas: Iterable[Formula]) -> Formula:
    fs = list(formulas)
    if not fs:
        return TRUE
    return reduce(And, fs)


def disj(formulas: Iterable[Formula]) -> Formula:
    fs = list(formulas)
    if not fs:
        return FALSE
    return reduce(Or, fs)


def conjuncts(f: Formula) -> list[Formula]:
    if isinstance(f, And):
        return conjuncts(f.left) + conjuncts(f.right)
    return [f]


def disjuncts(f: Formula) -> list[Formula]:
    if isinstance(f, Or):
        return disjuncts(f.left) + disjuncts(f.right)
    return [f]


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, UNARY):
        return (f.operand,)
    if isinstance(f, BINARY):
        return (f.left, f.right)
    return ()


def atoms(f: Formula) -> set[str]:
    if isinstance(f, Atom):
        return {f.name}
    out: set[str] = set()
    for c in children(f):
        out |= atoms(c)
    return out


def depth(f: Formula) -> int:
    return 1 + max((depth(c) for c in children(f)), default=0)


def subformulas(f: Formula) -> list[Formula]:
    """All distinct subformulas, children before parents."""
    seen: dict[Formula, None] = {}

    def walk(g: Formula) -> None:
        if g in seen:
            return
        for c in children(g):
            walk(c)
        seen[g] = None

    walk(f)
    return list(seen)


def pretty(f: Formula) -> str:
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, UNARY):
        inner = pretty(f.operand)
        sym = _UNARY_SYM[type(f)]
        return f"{sym}{inner}" if sym == "!" else f"{sym} {inner}"
    if isinstance(f, BINARY):
        return f"({pretty(f.left)} {_BINARY_SYM[type(f)]} {pretty(f.right)})"
    raise TypeError(f"not a formula: {f!r}")


# --- parser -----------------------------------------------------------------

_TOKEN_RE = re.compile(r"\s*(?:(->)|([!&|()])|([A-Za-z_][A-Za-z0-9_]*))")
_KEYWORDS = {"X", "F", "G", "U", "R", "true", "false"}


def _tokenize(text: str) -> list[tuple[str, int, int]]:
    tokens = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        ws_end = pos
        while ws_end < len(text) and text[ws_end].isspace():
            if text[ws_end] == "\n":
                line, line_start = line + 1, ws_end + 1
            ws_end += 1
        if ws_end == len(text):
            break
        if m is None or m.end() == ws_end:
            raise LtlSyntaxError(f"unexpected character {text[ws_end]!r}", line, ws_end - line_start + 1)
        tokens.append((m.group(m.lastindex), line, ws_end - line_start + 1))
        pos = m.end()
    tokens.append(("<eof>", line, len(text) - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str, alphabet: AtomicAlphabet | None):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.alphabet = alphabet

    def peek(self) -> str:
        return self.tokens[self.pos][0]

    def take(self) -> str:
        tok = self.tokens[self.pos][0]
        self.pos += 1
        return tok

    def error(self, message: str) -> LtlSyntaxError:
        _, line, col = self.tokens[self.pos]
        return LtlSyntaxError(message, line, col)

    def expect(self, tok: str) -> None:
        if self.peek() != tok:
            raise self.error(f"expected {tok!r}, found {self.peek()!r}")
        self.take()

    def parse(self) -> Formula:
        f = self.implication()
        if self.peek() != "<eof>":
            raise self.error(f"unexpected token {self.peek()!r}")
        return f

    def implication(self) -> Formula:
        left = self.disjunction()
        if self.peek() == "->":
            self.take()
            return Implies(left, self.implication())
        return left

    def disjunction(self) -> Formula:
        left = self.conjunction()
        while self.peek() == "|":
            self.take()
            left = Or(left, self.conjunction())
        return left

    def conjunction(self) -> Formula:
        left = self.temporal()
        while self.peek() == "&":
            self.take()
            left = And(left, self.temporal())
        return left

    def temporal(self) -> Formula:
        left = self.unary()
        if self.peek() == "U":
            self.take()
            return Until(left, self.temporal())
        if self.peek() == "R":
            self.take()
            return Release(left, self.temporal())
        return left

    def unary(self) -> Formula:
        tok = self.peek()
        if tok == "!":
            self.take()
            return Not(self.unary())
        if tok == "X":
            self.take()
            return Next(self.unary())
        if tok == "F":
            self.take()
            return Finally(self.unary())
        if tok == "G":
            self.take()
            return Globally(self.unary())
        if tok == "(":
            self.take()
            f = self.implication()
            self.expect(")")
            return f
        if tok == "true":
            self.take()
            return TRUE
        if tok == "false":
            self.take()
            return FALSE
        if tok not in _KEYWORDS and IDENT_RE.match(tok):
            if self.alphabet is not None and tok not in self.alphabet.props:
                raise UnknownPropositionError(tok)
            self.take()
            return Atom(tok)
        raise self.error(f"unexpected token {tok!r}")


def parse_ltl(text: str, alphabet: AtomicAlphabet | None = None) -> Formula:
    """Parse ``text``; atoms are checked against ``alphabet`` when given."""
    return _Parser(text, alphabet).parse()


# --- normal forms -----------------------------------------------------------


def nnf(f: Formula) -> Formula:
    """Negation normal form over True/False/literals/And/Or/Next/Until/Release."""
    return _nnf(f, False)


def negate_nnf(f: Formula) -> Formula:
    """NNF of ``!f``."""
    return _nnf(f, True)


def _nnf(f: Formula, neg: bool) -> Formula:
    if isinstance(f, TrueF):
        return FALSE if neg else TRUE
    if isinstance(f, FalseF):
        return TRUE if neg else FALSE
    if isinstance(f, Atom):
        return Not(f) if neg else f
    if isinstance(f, Not):
        return _nnf(f.operand, not neg)
    if isinstance(f, Next):
        return Next(_nnf(f.operand, neg))
    if isinstance(f, Finally):
        inner = _nnf(f.operand, neg)
        return Release(FALSE, inner) if neg else Until(TRUE, inner)
    if isinstance(f, Globally):
        inner = _nnf(f.operand, neg)
        return Until(TRUE, inner) if neg else Release(FALSE, inner)
    if isinstance(f, Implies):
        return _nnf(Or(Not(f.left), f.right), neg)
    left, right = _nnf(f.left, neg), _nnf(f.right, neg)
    if isinstance(f, And):
        return Or(left, right) if neg else And(left, right)
    if isinstance(f, Or):
        return And(left, right) if neg else Or(left, right)
    if isinstance(f, Until):
        return Release(left, right) if neg else Until(left, right)
    if isinstance(f, Release):
        return Until(left, right) if neg else Release(left, right)
    raise TypeError(f"not a formula: {f!r}")


# --- lasso words ------------------------------------------------------------


@dataclass(frozen=True)
class LassoWord:
    """The ultimately periodic word ``prefix . loop^omega``."""

    prefix: tuple[frozenset[str], ...]
    loop: tuple[frozenset[str], ...]

    def __init__(self, prefix: Sequence[Iterable[str]], loop: Sequence[Iterable[str]]):
        if len(loop) == 0:
            raise ValueError("lasso loop must be nonempty")
        object.__setattr__(self, "prefix", tuple(frozenset(x) for x in prefix))
        object.__setattr__(self, "loop", tuple(frozenset(x) for x in loop))

    def __len__(self) -> int:
        return len(self.prefix) + len(self.loop)

    def __getitem__(self, k: int) -> frozenset[str]:
        if k < len(self.prefix):
            return self.prefix[k]
        return self.loop[(k - len(self.prefix)) % len(self.loop)]

    def positions(self) -> tuple[frozenset[str], ...]:
        return self.prefix + self.loop

    def successor(self, p: int) -> int:
        return p + 1 if p + 1 < len(self) else len(self.prefix)

    def unrolled(self) -> "LassoWord":
        """Same word with one loop iteration moved into the prefix."""
        return LassoWord(self.prefix + self.loop, self.loop)

    def check_alphabet(self, alphabet: AtomicAlphabet) -> None:
        allowed = set(alphabet.props)
        for letter in self.positions():
            if not letter <= allowed:
                raise UnknownPropositionError(sorted(letter - allowed)[0])

    def to_dict(self) -> dict:
        return {"prefix": [sorted(x) for x in self.prefix], "loop": [sorted(x) for x in self.loop]}

    @classmethod
    def from_dict(cls, data: dict) -> "LassoWord":
        return cls(data["prefix"], data["loop"])

    def __str__(self) -> str:
        def show(xs):
            return ", ".join("{" + ",".join(sorted(x)) + "}" for x in xs)

        pre = f"{show(self.prefix)} " if self.prefix else ""
        return f"{pre}({show(self.loop)})^w"


class PositionSpace:
    """Disjoint union of the position graphs of several lassos, as bitsets.

    Position ``p`` is bit ``p``; each lasso occupies a contiguous block and
    its last position's successor is its loop start.
    """

    def __init__(self, words: Sequence[LassoWord]):
        self.words = list(words)
        self.starts: list[int] = []
        letters: list[frozenset[str]] = []
        not_last = 0
        wrap: dict[int, int] = {}  # distance last-loopstart -> loop-start bits
        for w in self.words:
            base = len(letters)
            self.starts.append(base)
            letters.extend(w.positions())
            last = base + len(w) - 1
            not_last |= ((1 << len(w)) - 1) << base & ~(1 << last)
            d = len(w.loop) - 1
            wrap[d] = wrap.get(d, 0) | 1 << (base + len(w.prefix))
        self.letters = letters
        self.size = len(letters)
        self.full = (1 << self.size) - 1
        self.not_last = not_last
        self.wrap = sorted(wrap.items())
        self.last_wrap = [(d, m << d) for d, m in self.wrap]
        self._atoms: dict[str, int] = {}

    def atom(self, name: str) -> int:
        bits = self._atoms.get(name)
        if bits is None:
            bits = 0
            for p, letter in enumerate(self.letters):
                if name in letter:
                    bits |= 1 << p
            self._atoms[name] = bits
        return bits

    def pull(self, v: int) -> int:
        """Bit ``p`` of the result is bit ``succ(p)`` of ``v``."""
        r = (v >> 1) & self.not_last
        for d, m in self.wrap:
            r |= (v & m) << d
        return r

    def push(self, v: int) -> int:
        """Bit ``succ(p)`` of the result is set for every set bit ``p`` of ``v``."""
        r = (v & self.not_last) << 1
        for d, m in self.last_wrap:
            r |= (v & m) >> d
        return r

    def at_starts(self, v: int) -> list[bool]:
        return [bool(v >> s & 1) for s in self.starts]


def eval_lasso(word: LassoWord, f: Formula) -> bool:
    """Whether ``word`` satisfies ``f``."""
    return eval_lassos([word], f)[0]


def eval_lassos(words: Sequence[LassoWord], f: Formula) -> list[bool]:
    """Truth of ``f`` on each of ``words``.

    Every subformula is labelled on all positions bottom-up; Until and
    Release are least and greatest fixpoints over the successor relation.
    """
    space = words if isinstance(words, PositionSpace) else PositionSpace(words)
    full = space.full
    values: dict[Formula, int] = {}
    for g in subformulas(f):
        if isinstance(g, TrueF):
            v = full
        elif isinstance(g, FalseF):
            v = 0
        elif isinstance(g, Atom):
            v = space.atom(g.name)
        elif isinstance(g, Not):
            v = full & ~values[g.operand]
        elif isinstance(g, Next):
            v = space.pull(values[g.operand])
        elif isinstance(g, And):
            v = values[g.left] & values[g.right]
        elif isinstance(g, Or):
            v = values[g.left] | values[g.right]
        elif isinstance(g, Implies):
            v = (full & ~values[g.left]) | values[g.right]
        elif isinstance(g, Until):
            v = _until(space, values[g.left], values[g.right])
        elif isinstance(g, Finally):
            v = _until(space, full, values[g.operand])
        elif isinstance(g, Release):
            v = _release(space, values[g.left], values[g.right])
        elif isinstance(g, Globally):
            v = _release(space, 0, values[g.operand])
        else:
            raise TypeError(f"not a formula: {g!r}")
        values[g] = v
    return space.at_starts(values[f])


def _until(space: PositionSpace, a: int, b: int) -> int:
    v = 0
    while True:
        new = b | (a & space.pull(v))
        if new == v:
            return v
        v = new


def _release(space: PositionSpace, a: int, b: int) -> int:
    v = space.full
    while True:
        new = b & (a | space.pull(v))
        if new == v:
            return v
        v = new
