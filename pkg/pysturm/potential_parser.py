"""
Expressions for the potential q(x).

Grammar (whitespace is ignored)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | atom ('^' uint)?
    atom   := number | 'x' | func '(' expr ')' | '(' expr ')'
    func   := 'sin' | 'cos' | 'exp'

The power binds tighter than unary minus, so "-x^2" is -(x^2).
"""
from __future__ import annotations

import math
import re
import threading
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from pysturm.defaults import PROBE_INTERVAL, PROBE_POINTS
from pysturm.errors import EvalDomainError, ExpressionSyntaxError
from pysturm.typing_local import NodeKind, RealArray


ARITY: Dict[str, int] = {'const': 0,
                         'x': 0,
                         'neg': 1,
                         'add': 2,
                         'sub': 2,
                         'mul': 2,
                         'div': 2,
                         'pow': 1,
                         'sin': 1,
                         'cos': 1,
                         'exp': 1}

FUNCTIONS = ('sin', 'cos', 'exp')


@dataclass(frozen=True, slots=True)
class ExprAst:
    """
    Node of an expression tree.

    Parameters
    ----------
    kind : NodeKind
        One of the keys of ARITY.
    children : Tuple[ExprAst, ...]
        Operands, as many as the arity of the kind.
    value : float
        Value of a 'const' node.
    exponent : int
        Non-negative integer exponent of a 'pow' node.
    """

    kind: NodeKind
    children: Tuple['ExprAst', ...] = ()
    value: float = 0.
    exponent: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ARITY:
            raise ValueError('Unknown node kind "{}"'.format(self.kind))
        if len(self.children) != ARITY[self.kind]:
            raise ValueError('Node "{}" expects {} children, got {}'.format(self.kind, ARITY[self.kind], len(self.children)))
        if self.kind == 'pow' and self.exponent < 0:
            raise ValueError('Integer power exponent must be non-negative')
        if self.kind == 'const' and not math.isfinite(self.value):
            raise ValueError('Constant must be finite')


    def is_const(self, value: Optional[float] = None) -> bool:
        if self.kind != 'const':
            return False
        return value is None or self.value == value


    def depth(self) -> int:
        if not self.children:
            return 1
        return 1 + max(c.depth() for c in self.children)


    def __str__(self) -> str:
        return to_text(self)


# The constructors fold literal subtrees and apply the 0/1 identities; the
# parser does not use them so that a parsed tree mirrors its source.
X = ExprAst('x')


def const(value: float) -> ExprAst:
    return ExprAst('const', value=float(value))


ZERO = const(0.)
ONE = const(1.)


def _fold(node: ExprAst) -> ExprAst:
    if node.children and all(c.kind == 'const' for c in node.children):
        try:
            return const(evaluate(node, 0.))
        except (EvalDomainError, ValueError):
            return node
    return node


def neg(a: ExprAst) -> ExprAst:
    if a.kind == 'neg':
        return a.children[0]
    return _fold(ExprAst('neg', (a,)))


def add(a: ExprAst, b: ExprAst) -> ExprAst:
    if a.is_const(0.):
        return b
    if b.is_const(0.):
        return a
    return _fold(ExprAst('add', (a, b)))


def sub(a: ExprAst, b: ExprAst) -> ExprAst:
    if b.is_const(0.):
        return a
    if a.is_const(0.):
        return neg(b)
    return _fold(ExprAst('sub', (a, b)))


def mul(a: ExprAst, b: ExprAst) -> ExprAst:
    if a.is_const(0.) or b.is_const(0.):
        return ZERO
    if a.is_const(1.):
        return b
    if b.is_const(1.):
        return a
    return _fold(ExprAst('mul', (a, b)))


def div(a: ExprAst, b: ExprAst) -> ExprAst:
    if b.is_const(1.):
        return a
    return _fold(ExprAst('div', (a, b)))


def power(a: ExprAst, exponent: int) -> ExprAst:
    if exponent == 0:
        return ONE
    if exponent == 1:
        return a
    return _fold(ExprAst('pow', (a,), exponent=exponent))


def function(name: str, a: ExprAst) -> ExprAst:
    return _fold(ExprAst(name, (a,)))


def differentiate(ast: ExprAst) -> ExprAst:
    """
    Exact symbolic derivative with respect to x.

    Literal subtrees are folded and the trivial 0/1 identities applied; no
    further simplification is attempted.
    """

    kind = ast.kind
    if kind == 'const':
        return ZERO
    if kind == 'x':
        return ONE
    if kind == 'neg':
        return neg(differentiate(ast.children[0]))
    if kind in ('add', 'sub'):
        a, b = ast.children
        da, db = differentiate(a), differentiate(b)
        return add(da, db) if kind == 'add' else sub(da, db)
    if kind == 'mul':
        a, b = ast.children
        return add(mul(differentiate(a), b), mul(a, differentiate(b)))
    if kind == 'div':
        a, b = ast.children
        return div(sub(mul(differentiate(a), b), mul(a, differentiate(b))),
                   power(b, 2))
    if kind == 'pow':
        a = ast.children[0]
        n = ast.exponent
        if n == 0:
            return ZERO
        return mul(mul(const(n), power(a, n-1)), differentiate(a))
    if kind == 'sin':
        a = ast.children[0]
        return mul(function('cos', a), differentiate(a))
    if kind == 'cos':
        a = ast.children[0]
        return neg(mul(function('sin', a), differentiate(a)))
    if kind == 'exp':
        a = ast.children[0]
        return mul(function('exp', a), differentiate(a))

    raise ValueError('Unknown node kind "{}"'.format(kind))


def _checked(value: float) -> float:
    if not math.isfinite(value):
        raise EvalDomainError('non-finite intermediate value {}'.format(value))
    return value


def evaluate(ast: ExprAst, x: float) -> float:
    """
    Recursive evaluation in 64-bit floats.

    Raises
    ------
    EvalDomainError
        On a division by zero or a non-finite intermediate value.
    """

    kind = ast.kind
    try:
        if kind == 'const':
            return ast.value
        if kind == 'x':
            return _checked(float(x))
        if kind == 'neg':
            return -evaluate(ast.children[0], x)
        if kind == 'pow':
            return _checked(evaluate(ast.children[0], x)**ast.exponent)
        if kind in FUNCTIONS:
            arg = evaluate(ast.children[0], x)
            return _checked(getattr(math, kind)(arg))

        a = evaluate(ast.children[0], x)
        b = evaluate(ast.children[1], x)
        if kind == 'add':
            return _checked(a + b)
        if kind == 'sub':
            return _checked(a - b)
        if kind == 'mul':
            return _checked(a*b)
        if kind == 'div':
            if b == 0.:
                raise EvalDomainError('division by zero at x={}'.format(x))
            return _checked(a/b)
    except (OverflowError, ZeroDivisionError) as e:
        raise EvalDomainError('{} at x={}'.format(e, x))

    raise ValueError('Unknown node kind "{}"'.format(kind))


_BINARY_SYMBOLS = {'add': '+', 'sub': '-', 'mul': '*', 'div': '/'}


def to_text(ast: ExprAst) -> str:
    """
    Fully parenthesized text that parses back to an equivalent tree.
    """

    kind = ast.kind
    if kind == 'const':
        if ast.value < 0 or str(ast.value).startswith('-'):
            return '(-{})'.format(repr(-ast.value))
        return repr(ast.value)
    if kind == 'x':
        return 'x'
    if kind == 'neg':
        return '(-{})'.format(to_text(ast.children[0]))
    if kind == 'pow':
        return '(({})^{})'.format(to_text(ast.children[0]), ast.exponent)
    if kind in FUNCTIONS:
        return '{}({})'.format(kind, to_text(ast.children[0]))

    a, b = ast.children
    return '({} {} {})'.format(to_text(a), _BINARY_SYMBOLS[kind], to_text(b))


def to_python(ast: ExprAst, module: str) -> str:
    """Python source of the expression, functions taken from `module`."""

    kind = ast.kind
    if kind == 'const':
        return '({!r})'.format(ast.value)
    if kind == 'x':
        return 'x'
    if kind == 'neg':
        return '(-{})'.format(to_python(ast.children[0], module))
    if kind == 'pow':
        return '(({})**{})'.format(to_python(ast.children[0], module), ast.exponent)
    if kind in FUNCTIONS:
        return '{}.{}({})'.format(module, kind, to_python(ast.children[0], module))

    a, b = ast.children
    return '({} {} {})'.format(to_python(a, module), _BINARY_SYMBOLS[kind], to_python(b, module))


_TOKEN = re.compile(r'(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)'
                    r'|(?P<name>[A-Za-z_][A-Za-z_0-9]*)'
                    r'|(?P<op>[-+*/^()])')
_WHITESPACE = re.compile(r'\s+')


@dataclass(frozen=True)
class Token:
    kind: str  # 'number', 'name', 'op' or 'end'
    text: str
    offset: int


def tokenize(src: str) -> List[Token]:
    """Split the source into tokens, offsets are utf-8 byte offsets."""

    tokens: List[Token] = []
    pos = 0
    while True:
        m = _WHITESPACE.match(src, pos)
        if m:
            pos = m.end()
        if pos >= len(src):
            break
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ExpressionSyntaxError('unexpected character "{}"'.format(src[pos]),
                                        _byte_offset(src, pos),
                                        'number, "x", function, operator or parenthesis')
        tokens.append(Token(m.lastgroup or '', m.group(), _byte_offset(src, pos)))
        pos = m.end()

    tokens.append(Token('end', '', _byte_offset(src, len(src))))

    return tokens


def _byte_offset(src: str, pos: int) -> int:
    return len(src[:pos].encode('utf8'))


class _Parser:

    def __init__(self, src: str) -> None:
        self.tokens = tokenize(src)
        self.index = 0


    @property
    def current(self) -> Token:
        return self.tokens[self.index]


    def _advance(self) -> Token:
        token = self.current
        self.index += 1
        return token


    def _error(self, expected: str) -> ExpressionSyntaxError:
        token = self.current
        found = 'end of input' if token.kind == 'end' else '"{}"'.format(token.text)
        return ExpressionSyntaxError('unexpected {}'.format(found), token.offset, expected)


    def _expect(self, text: str) -> None:
        if self.current.kind == 'op' and self.current.text == text:
            self._advance()
        else:
            raise self._error('"{}"'.format(text))


    def parse(self) -> ExprAst:
        ast = self.expr()
        if self.current.kind != 'end':
            raise self._error('operator or end of input')
        return ast


    def expr(self) -> ExprAst:
        node = self.term()
        while self.current.kind == 'op' and self.current.text in '+-':
            op = self._advance().text
            node = ExprAst('add' if op == '+' else 'sub', (node, self.term()))
        return node


    def term(self) -> ExprAst:
        node = self.factor()
        while self.current.kind == 'op' and self.current.text in '*/':
            op = self._advance().text
            node = ExprAst('mul' if op == '*' else 'div', (node, self.factor()))
        return node


    def factor(self) -> ExprAst:
        if self.current.kind == 'op' and self.current.text == '-':
            self._advance()
            return ExprAst('neg', (self.factor(),))

        node = self.atom()
        if self.current.kind == 'op' and self.current.text == '^':
            self._advance()
            token = self.current
            if token.kind != 'number' or not token.text.isdigit():
                raise self._error('non-negative integer exponent')
            self._advance()
            node = ExprAst('pow', (node,), exponent=int(token.text))
        return node


    def atom(self) -> ExprAst:
        token = self.current
        if token.kind == 'number':
            self._advance()
            value = float(token.text)
            if not math.isfinite(value):
                raise ExpressionSyntaxError('number out of range', token.offset, 'finite number')
            return ExprAst('const', value=value)
        if token.kind == 'name':
            if token.text == 'x':
                self._advance()
                return X
            if token.text in FUNCTIONS:
                self._advance()
                self._expect('(')
                arg = self.expr()
                self._expect(')')
                return ExprAst(token.text, (arg,))
            raise self._error('number, "x", sin, cos, exp or "("')
        if token.kind == 'op' and token.text == '(':
            self._advance()
            node = self.expr()
            self._expect(')')
            return node

        raise self._error('number, "x", sin, cos, exp or "("')


def parse_expression(src: str) -> ExprAst:
    """Parse an expression into an ExprAst, see the module grammar."""
    return _Parser(src).parse()


ScalarFunction = Callable[[float], float]
VectorFunction = Callable[[RealArray], RealArray]


def _compile_scalar(ast: ExprAst) -> ScalarFunction:
    code = compile(to_python(ast, 'math'), '<potential>', 'eval')
    namespace = {'math': math, '__builtins__': {}}

    def f(x: float) -> float:
        try:
            value = eval(code, namespace, {'x': x})
        except (OverflowError, ZeroDivisionError, ValueError) as e:
            raise EvalDomainError('{} at x={}'.format(e, x))
        if not math.isfinite(value):
            raise EvalDomainError('non-finite value at x={}'.format(x))
        return float(value)

    return f


def _compile_vector(ast: ExprAst) -> VectorFunction:
    code = compile(to_python(ast, 'np'), '<potential>', 'eval')
    namespace = {'np': np, '__builtins__': {}}

    def f(x: RealArray) -> RealArray:
        x = np.asarray(x, dtype=float)
        with np.errstate(all='ignore'):
            value = np.asarray(eval(code, namespace, {'x': x}), dtype=float)
        value = np.broadcast_to(value, x.shape).copy()
        if not np.all(np.isfinite(value)):
            bad = x[~np.isfinite(value)] if x.ndim else x
            raise EvalDomainError('non-finite value at x={}'.format(np.ravel(bad)[:5]))
        return value

    return f


class Potential:
    """
    Potential q(x) given by an expression, with its symbolic derivatives.

    The derivative trees are built on demand and cached; entry m of
    derivative_asts is the m-th derivative, entry 0 the parsed tree. The
    object is safe to share between threads.
    """

    __slots__ = ('_source', '_asts', '_scalar', '_vector', '_lock', '_probe')

    def __init__(self, source: str, ast: ExprAst) -> None:

        self._source = source
        self._asts: List[ExprAst] = [ast]
        self._scalar: List[ScalarFunction] = [_compile_scalar(ast)]
        self._vector: List[VectorFunction] = [_compile_vector(ast)]
        self._lock = threading.Lock()

        # load-time probe on a neighborhood of [0, 1]
        probe = np.linspace(PROBE_INTERVAL[0], PROBE_INTERVAL[1], PROBE_POINTS)
        self._probe = self._vector[0](probe)


    @property
    def source(self) -> str:
        return self._source


    @property
    def ast(self) -> ExprAst:
        return self._asts[0]


    @property
    def derivative_asts(self) -> Tuple[ExprAst, ...]:
        """Derivative trees built so far."""
        return tuple(self._asts)


    def __repr__(self) -> str:
        return 'Potential("{}")'.format(self._source)


    def _extend(self, order: int) -> None:
        if order < 0:
            raise ValueError('Derivative order must be non-negative')
        if order < len(self._asts):
            return
        with self._lock:
            while len(self._asts) <= order:
                d = differentiate(self._asts[-1])
                self._scalar.append(_compile_scalar(d))
                self._vector.append(_compile_vector(d))
                self._asts.append(d)


    def derivative_ast(self, order: int) -> ExprAst:
        self._extend(order)
        return self._asts[order]


    def scalar(self, order: int = 0) -> ScalarFunction:
        """Compiled scalar callable of the `order`-th derivative."""
        self._extend(order)
        return self._scalar[order]


    def __call__(self, x: float, order: int = 0) -> float:
        return self.scalar(order)(x)


    def values(self, x: Union[RealArray, float], order: int = 0) -> RealArray:
        """Vectorized evaluation of the `order`-th derivative."""
        self._extend(order)
        return self._vector[order](np.asarray(x, dtype=float))


    @property
    def sup_norm(self) -> float:
        """max |q| over the load-time probe grid."""
        return float(np.max(np.abs(self._probe)))


    @property
    def minimum(self) -> float:
        return float(np.min(self._probe))


    @property
    def maximum(self) -> float:
        return float(np.max(self._probe))


    def is_constant(self) -> bool:
        return self.derivative_ast(1).is_const(0.)


def parse_potential(src: str) -> Potential:
    """
    Parse the expression of a potential q(x).

    Parameters
    ----------
    src : str
        Expression in the variable x, see the module grammar.

    Raises
    ------
    ExpressionSyntaxError
        With the byte offset of the offending token.
    EvalDomainError
        If q is not finite on the probe grid around [0, 1].
    """

    if not src or not src.strip():
        raise ExpressionSyntaxError('empty expression', 0, 'expression')

    return Potential(src, parse_expression(src))
