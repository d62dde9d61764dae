"""Canonical phase space and the sl(2) generator algebra.

The three quadratic functions

    Jm = sum(q_i^2),   Jp = sum(p_i^2),   J3 = sum(q_i p_i)

close the sl(2, R) Lie-Poisson brackets under the canonical bracket, and
any smooth function of them commutes with the chain integrals built from
the angular momenta L_ij = q_i p_j - q_j p_i.  This module provides the
state containers, the bracket, those generator and chain observables, and
the uniform :class:`Observable` wrapper the rest of the package evaluates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jets import Jet, Jet3, coordinate_jets
from .jets import seed as _seed_arrays

__all__ = [
    "PhaseState",
    "StateBatch",
    "SL2Point",
    "Observable",
    "phase_observable",
    "state_observable",
    "coalgebra_observable",
    "coordinate_observable",
    "generator_observable",
    "angular_momentum_observable",
    "casimir_observable",
    "universal_integrals",
    "sl2_realize",
    "sl2_jet_values",
    "seed",
    "poisson_bracket",
    "bracket_from_grads",
    "angular_momentum",
    "casimir_integral",
]


def _as_phase_array(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError(f"{name} must be a 1-D array with at least one entry")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class PhaseState:
    """A single phase-space point: positions ``q`` and momenta ``p``."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", _as_phase_array(self.q, "q"))
        object.__setattr__(self, "p", _as_phase_array(self.p, "p"))
        if len(self.q) != len(self.p):
            raise ValueError("q and p must have the same length")

    @property
    def n(self) -> int:
        return len(self.q)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.q, self.p])


@dataclass(frozen=True)
class StateBatch:
    """A set of phase-space points evaluated in one vectorised pass."""

    q: np.ndarray  # (S, N)
    p: np.ndarray  # (S, N)

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        p = np.asarray(self.p, dtype=float)
        if q.ndim != 2 or q.shape != p.shape:
            raise ValueError("batch arrays must be 2-D with matching shapes")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.q.shape[1]

    @property
    def size(self) -> int:
        return self.q.shape[0]

    def state(self, index: int) -> PhaseState:
        return PhaseState(self.q[index], self.p[index])


@dataclass(frozen=True)
class SL2Point:
    """The generator triple (Jm, Jp, J3) realised at a phase-space point."""

    jminus: float
    jplus: float
    j3: float


def sl2_realize(state: PhaseState) -> SL2Point:
    """Evaluate Jm = q.q, Jp = p.p, J3 = q.p at a state."""
    q, p = state.q, state.p
    return SL2Point(float(q @ q), float(p @ p), float(q @ p))


def sl2_jet_values(q: np.ndarray, p: np.ndarray):
    """Generator values for a single state or a batch (raw arrays)."""
    if q.ndim == 1:
        return float(q @ q), float(p @ p), float(q @ p)
    return (
        np.einsum("si,si->s", q, q),
        np.einsum("si,si->s", p, p),
        np.einsum("si,si->s", q, p),
    )


def seed(state: PhaseState, index: int) -> Jet:
    """Identity jet for coordinate ``index`` (0-based, q first then p)."""
    return _seed_arrays(state.q, state.p, index)


# ---------------------------------------------------------------------------
# Observables

class Observable:
    """A named scalar phase-space function that can produce its own jet.

    ``eval_jet`` accepts a :class:`PhaseState` (float value, gradient of
    length 2N) or a :class:`StateBatch` (value of shape (S,), gradient of
    shape (S, 2N)).
    """

    def __init__(self, name: str, eval_fn):
        self.name = name
        self._eval_fn = eval_fn

    def eval_jet(self, state) -> Jet:
        return self._eval_fn(state)

    def value(self, state):
        return self.eval_jet(state).value

    def __repr__(self):
        return f"Observable({self.name!r})"


def state_observable(name: str, fn) -> Observable:
    """Wrap ``fn(state) -> Jet`` directly."""
    return Observable(name, fn)


def phase_observable(name: str, fn) -> Observable:
    """Wrap ``fn(qjets, pjets) -> Jet`` over per-coordinate jets."""

    def eval_fn(state):
        qjets, pjets = coordinate_jets(state.q, state.p)
        result = fn(qjets, pjets)
        if isinstance(result, Jet):
            return result
        width = 2 * state.q.shape[-1]
        if state.q.ndim == 1:
            return Jet(float(result), np.zeros(width))
        size = state.q.shape[0]
        return Jet(np.full(size, float(result)), np.zeros((size, width)))

    return Observable(name, eval_fn)


def coalgebra_observable(name: str, fn) -> Observable:
    """Wrap ``fn(jm, jp, j3) -> jet`` defined on the sl(2) generators.

    The function is evaluated on generator-space jets (three gradient
    slots) and the result is expanded to the full phase-space gradient by
    the chain rule:  grad_q = 2a q + c p,  grad_p = 2b p + c q,  where
    (a, b, c) are the partials with respect to (Jm, Jp, J3).
    """

    def eval_fn(state):
        q, p = state.q, state.p
        jm, jp, j3 = sl2_jet_values(q, p)
        if q.ndim == 1:
            result = fn(Jet3(jm, 1.0, 0.0, 0.0), Jet3(jp, 0.0, 1.0, 0.0),
                        Jet3(j3, 0.0, 0.0, 1.0))
            if not isinstance(result, Jet3):
                result = Jet3(float(result))
            gq = (2.0 * result.g0) * q + result.g2 * p
            gp = (2.0 * result.g1) * p + result.g2 * q
            return Jet(result.v, np.concatenate([gq, gp]))
        size = q.shape[0]
        eye = np.eye(3)
        jets = [Jet(v, np.tile(eye[k], (size, 1))) for k, v in enumerate((jm, jp, j3))]
        result = fn(*jets)
        if not isinstance(result, Jet):
            result = Jet(np.full(size, float(result)), np.zeros((size, 3)))
        a = result.grad[:, 0:1]
        b = result.grad[:, 1:2]
        c = result.grad[:, 2:3]
        gq = 2.0 * a * q + c * p
        gp = 2.0 * b * p + c * q
        value = result.value
        if not isinstance(value, np.ndarray):
            value = np.full(size, value)
        return Jet(value, np.concatenate([gq, gp], axis=1))

    return Observable(name, eval_fn)


def coordinate_observable(kind: str, i: int) -> Observable:
    """The bare coordinate q_i or p_i (1-based); a non-integral control."""
    if kind not in ("q", "p"):
        raise ValueError("coordinate kind must be 'q' or 'p'")
    if i < 1:
        raise ValueError("coordinate index is 1-based")

    def fn(qjets, pjets):
        jets = qjets if kind == "q" else pjets
        if i > len(jets):
            raise ValueError(f"coordinate index {i} exceeds dimension {len(jets)}")
        return jets[i - 1]

    return phase_observable(f"{kind}{i}", fn)


def generator_observable(symbol: str) -> Observable:
    """One of the generators Jm, Jp, J3 as an observable."""
    table = {
        "Jm": lambda jm, jp, j3: jm,
        "Jp": lambda jm, jp, j3: jp,
        "J3": lambda jm, jp, j3: j3,
    }
    if symbol not in table:
        raise ValueError(f"unknown generator {symbol!r}; expected Jm, Jp or J3")
    return coalgebra_observable(symbol, table[symbol])


def angular_momentum_observable(i: int, j: int) -> Observable:
    """L_ij = q_i p_j - q_j p_i with 1-based indices i < j."""
    if not 1 <= i < j:
        raise ValueError(f"angular momentum indices must satisfy 1 <= i < j, got ({i}, {j})")

    def fn(qjets, pjets):
        if j > len(qjets):
            raise ValueError(f"index {j} exceeds dimension {len(qjets)}")
        return qjets[i - 1] * pjets[j - 1] - qjets[j - 1] * pjets[i - 1]

    return phase_observable(f"L{i}{j}", fn)


def _chain_window(n: int, m: int, chain: str) -> range:
    if chain not in ("left", "right"):
        raise ValueError("chain must be 'left' or 'right'")
    if not 2 <= m <= n:
        raise ValueError(f"chain level m={m} out of range 2..{n}")
    return range(0, m) if chain == "left" else range(n - m, n)


def casimir_observable(n: int, m: int, chain: str = "left") -> Observable:
    """Chain integral: the sum of L_ij^2 over an index window.

    ``chain='left'`` sums pairs within the first ``m`` coordinates,
    ``chain='right'`` within the last ``m``; at ``m == n`` both agree.
    """
    window = list(_chain_window(n, m, chain))
    name = f"C({m})" if chain == "left" else f"C_({m})"

    def fn(qjets, pjets):
        total = 0.0
        for a in range(len(window)):
            ia = window[a]
            for b in range(a + 1, len(window)):
                ib = window[b]
                lij = qjets[ia] * pjets[ib] - qjets[ib] * pjets[ia]
                total = total + lij * lij
        return total

    return phase_observable(name, fn)


def universal_integrals(n: int) -> tuple[Observable, ...]:
    """The 2N-3 chain integrals: left levels 2..N and right levels 2..N-1.

    The right chain's top level coincides with the left one and is listed
    once.  Empty for n == 1.
    """
    if n < 2:
        return ()
    left = [casimir_observable(n, m, "left") for m in range(2, n + 1)]
    right = [casimir_observable(n, m, "right") for m in range(2, n)]
    return tuple(left + right)


# ---------------------------------------------------------------------------
# Bracket and direct evaluators

def _eval_jet(obs, state) -> Jet:
    if isinstance(obs, Observable):
        return obs.eval_jet(state)
    if callable(obs):
        qjets, pjets = coordinate_jets(state.q, state.p)
        return obs(qjets, pjets)
    raise TypeError(f"not an observable: {obs!r}")


def bracket_from_grads(grad_f, grad_g, n: int):
    """Canonical bracket given full phase-space gradients."""
    fq, fp = grad_f[..., :n], grad_f[..., n:]
    gq, gp = grad_g[..., :n], grad_g[..., n:]
    return np.einsum("...i,...i->...", fq, gp) - np.einsum("...i,...i->...", gq, fp)


def poisson_bracket(f, g, state):
    """{f, g} at a state (or batch), via the jet gradients of f and g."""
    jf = _eval_jet(f, state)
    jg = _eval_jet(g, state)
    result = bracket_from_grads(jf.grad, jg.grad, state.q.shape[-1])
    if isinstance(state, PhaseState):
        return float(result)
    return result


def angular_momentum(state: PhaseState, i: int, j: int) -> float:
    """L_ij = q_i p_j - q_j p_i with 1-based indices i < j."""
    if not 1 <= i < j <= state.n:
        raise ValueError(f"indices must satisfy 1 <= i < j <= N, got ({i}, {j})")
    q, p = state.q, state.p
    return float(q[i - 1] * p[j - 1] - q[j - 1] * p[i - 1])


def casimir_integral(state: PhaseState, m: int, chain: str = "left") -> float:
    """Value of the level-``m`` chain integral at a state."""
    window = list(_chain_window(state.n, m, chain))
    q, p = state.q, state.p
    total = 0.0
    for a in range(len(window)):
        ia = window[a]
        for b in range(a + 1, len(window)):
            ib = window[b]
            lij = q[ia] * p[ib] - q[ib] * p[ia]
            total += lij * lij
    return float(total)
