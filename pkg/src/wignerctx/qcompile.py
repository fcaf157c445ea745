"""Quadrature expressions and their compilation to an optical measurement circuit.

A target quadrature ``x . R`` is measured with per-mode phase shifts, CZ
couplings ``exp(i g q_k q_l)`` that add ``g q_k`` into the momentum of a target
mode, and one homodyne detection on that mode. The homodyne reading equals
``scale * (x . R)``; simulations divide the scale back out.

Heisenberg actions (``U^dag R U = A R``, observables pull back with ``A^T``):

* ``Rot(k, theta)``: the rotation ``[[c, -s], [s, c]]`` on ``(q_k, p_k)``;
* ``CZ(k, l, g)``: ``p_k -> p_k + g q_l`` and ``p_l -> p_l + g q_k``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from . import _parallel
from .errors import CoverageError, DimensionError, ParseError
from .measurement import BinnedPdf, QuadratureLabel, as_label, born_quadrature_pdf_oracle, default_edges
from .phase_space import SymplecticMap, cz_map, rotation
from .states import CZ, GaussianState, Rot, StateHandle, apply_gate_fock, apply_symplectic_gaussian

# -- parsing -------------------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<var>[qpQP])_?(?P<idx>\d+)
  | (?P<op>[+\-*])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Term:
    coef: float
    kind: str
    mode: int
    position: int


@dataclass(frozen=True)
class QuadExpr:
    """Parsed expression: a flat sum of ``coef * q_k`` / ``coef * p_k`` terms."""

    terms: tuple
    text: str

    def vector(self, modes: int) -> np.ndarray:
        """Coefficient vector in ``(q_1..q_M, p_1..p_M)`` order with like terms combined."""
        x = np.zeros(2 * modes)
        for t in self.terms:
            if not 1 <= t.mode <= modes:
                raise ParseError(f"mode index {t.mode} outside 1..{modes}", self.text, t.position)
            x[t.mode - 1 if t.kind == "q" else modes + t.mode - 1] += t.coef
        return x


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup if m.lastgroup != "idx" else "var"
        if kind != "ws":
            if m.group("var"):
                tokens.append(("var", m.group("var").lower() + m.group("idx"), pos))
            else:
                tokens.append((kind, m.group(0), pos))
        pos = m.end()
    return tokens


def parse_expr(text: str) -> QuadExpr:
    """Parse ``expr := term (('+'|'-') term)*``, ``term := sign* [number ['*']] ('q'|'p') index``.

    Whitespace is ignored and ``2q1`` means ``2*q1``.
    """
    tokens = _tokenize(text)
    i = 0
    terms = []

    def peek():
        return tokens[i] if i < len(tokens) else ("end", "", len(text))

    expect_term = True
    sign = 1.0
    while True:
        kind, val, pos = peek()
        if expect_term:
            if kind == "op" and val in "+-":
                sign = -sign if val == "-" else sign
                i += 1
                continue
            coef = 1.0
            start = pos
            if kind == "num":
                coef = float(val)
                i += 1
                kind, val, pos = peek()
                if kind == "op" and val == "*":
                    i += 1
                    kind, val, pos = peek()
            if kind != "var":
                what = "end of input" if kind == "end" else repr(val)
                raise ParseError(f"expected a quadrature such as q1 or p2, found {what}", text, pos)
            mode = int(val[1:])
            if mode < 1:
                raise ParseError("mode indices start at 1", text, pos)
            terms.append(Term(sign * coef, val[0], mode, start))
            i += 1
            expect_term = False
            sign = 1.0
        else:
            if kind == "end":
                break
            if kind == "op" and val in "+-":
                sign = -1.0 if val == "-" else 1.0
                i += 1
                expect_term = True
                continue
            raise ParseError(f"expected '+' or '-', found {val!r}", text, pos)
    if not terms:
        raise ParseError("empty expression", text, 0)
    return QuadExpr(tuple(terms), text)


def parse_quadrature_expr(text: str, modes: int) -> QuadratureLabel:
    x = parse_expr(text).vector(modes)
    if not np.any(x):
        raise ValueError(f"expression {text!r} is the zero quadrature")
    return QuadratureLabel(x)


# -- plans ---------------------------------------------------------------------------------


@dataclass(frozen=True)
class Homodyne:
    """Homodyne detection of ``cos(phi) q + sin(phi) p`` on ``mode``."""

    mode: int
    phi: float

    def observable(self, modes: int) -> np.ndarray:
        h = np.zeros(2 * modes)
        h[self.mode - 1] = math.cos(self.phi)
        h[modes + self.mode - 1] = math.sin(self.phi)
        return h


@dataclass(frozen=True)
class CircuitPlan:
    gates: tuple
    homodyne: Homodyne
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("plan scale must be positive")
        object.__setattr__(self, "gates", tuple(self.gates))

    def max_mode(self) -> int:
        m = self.homodyne.mode
        for g in self.gates:
            m = max(m, g.mode) if isinstance(g, Rot) else max(m, g.k, g.l)
        return m


def compile_measurement(x) -> CircuitPlan:
    """Circuit whose homodyne reading is ``scale * (x . R)``.

    The target is the lowest mode with a nonzero coefficient. With one active
    mode a rotated homodyne suffices. Otherwise the target is rotated so its own
    term sits in its momentum, every other active mode is rotated so its term is
    a position, a CZ adds it into the target momentum, and the target momentum
    is read out.
    """
    x = as_label(x).vector
    M = x.size // 2
    ab = [(x[k], x[M + k]) for k in range(M)]
    active = [k for k in range(M) if ab[k] != (0.0, 0.0)]
    t = active[0]
    if len(active) == 1:
        a, b = ab[t]
        return CircuitPlan((), Homodyne(t + 1, math.atan2(b, a)), 1.0 / math.hypot(a, b))
    a, b = ab[t]
    s = 1.0 / math.hypot(a, b)
    gates = []
    theta = math.atan2(a, b)
    if theta != 0.0:
        gates.append(Rot(t + 1, theta))
    for k in active[1:]:
        a, b = ab[k]
        theta = math.atan2(-b, a)
        if theta != 0.0:
            gates.append(Rot(k + 1, theta))
        gates.append(CZ(t + 1, k + 1, s * math.hypot(a, b)))
    return CircuitPlan(tuple(gates), Homodyne(t + 1, math.pi / 2), s)


def heisenberg_matrix(gate, modes: int) -> np.ndarray:
    """``A`` with ``U^dag R U = A R`` for one gate."""
    if isinstance(gate, Rot):
        return rotation(gate.theta, gate.mode, modes).matrix
    if isinstance(gate, CZ):
        return cz_map(gate.k, gate.l, gate.g, modes).matrix
    raise TypeError(f"unsupported gate {gate!r}")


def _check_plan(plan: CircuitPlan, modes: int):
    for g in plan.gates:
        idx = (g.mode,) if isinstance(g, Rot) else (g.k, g.l)
        if any(not 1 <= i <= modes for i in idx):
            raise DimensionError(f"gate {g} addresses a mode outside 1..{modes}")
        if isinstance(g, CZ) and g.k == g.l:
            raise DimensionError("CZ needs two distinct modes")
    if not 1 <= plan.homodyne.mode <= modes:
        raise DimensionError(f"homodyne mode {plan.homodyne.mode} outside 1..{modes}")


def pullback(gates, h: np.ndarray, modes: int) -> np.ndarray:
    """Input-side label of the observable ``h`` measured after ``gates``."""
    h = np.array(h, dtype=float)
    for g in reversed(tuple(gates)):
        h = heisenberg_matrix(g, modes).T @ h
    return h


def heisenberg_verify(plan: CircuitPlan, modes: int) -> tuple[np.ndarray, float]:
    """``(vector, scale)`` such that the plan measures ``scale * (vector . R)``."""
    _check_plan(plan, modes)
    h = pullback(plan.gates, plan.homodyne.observable(modes), modes)
    return h / plan.scale, plan.scale


# -- simulation ----------------------------------------------------------------------------


def _inverse_cdf_samples(pdf: BinnedPdf, u: np.ndarray) -> np.ndarray:
    knots = np.concatenate([[0.0], np.cumsum(pdf.masses)]) / pdf.total
    return np.interp(u, knots, pdf.edges)


def _fine_born_pdf(state: StateHandle, h: np.ndarray) -> BinnedPdf:
    e = default_edges()
    for _ in range(4):
        fine = np.linspace(e[0], e[-1], 1201)
        try:
            return born_quadrature_pdf_oracle(state, h, fine)
        except CoverageError:
            e = 2.0 * e
    return born_quadrature_pdf_oracle(state, h, np.linspace(e[0], e[-1], 1201))


def _outcomes(state: StateHandle, h: np.ndarray, u: np.ndarray) -> np.ndarray:
    if isinstance(state, GaussianState):
        return h @ state.mean + math.sqrt(h @ state.cov @ h) * ndtri(u)
    return _inverse_cdf_samples(_fine_born_pdf(state, h), u)


def simulate_homodyne(state: StateHandle, plan: CircuitPlan, shots: int, seed: int,
                      method: str = "pullback") -> np.ndarray:
    """``shots`` samples of the target quadrature (homodyne reading divided by the scale).

    ``method="pullback"`` samples the pulled-back label on the input state;
    ``method="gates"`` applies the gates to the state and samples the homodyne
    quadrature of the output. Both invert the Born-rule CDF of one uniform per
    shot, drawn in fixed seeded blocks.
    """
    if shots < 0:
        raise ValueError("shots must be nonnegative")
    M = state.modes
    _check_plan(plan, M)
    if shots == 0:
        return np.zeros(0)
    u = _parallel.block_uniforms(seed, shots)
    if method == "pullback":
        h = pullback(plan.gates, plan.homodyne.observable(M), M)
        vals = _outcomes(state, h, u)
    elif method == "gates":
        out = state
        for g in plan.gates:
            if isinstance(out, GaussianState):
                out = apply_symplectic_gaussian(out, SymplecticMap(heisenberg_matrix(g, M), check=False))
            else:
                out = apply_gate_fock(out, g)
        vals = _outcomes(out, plan.homodyne.observable(M), u)
    else:
        raise ValueError(f"unknown simulation method {method!r}")
    return vals / plan.scale
