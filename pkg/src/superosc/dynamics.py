"""Time integration of Hamilton's equations with drift tracking.

All curved-space kinetic terms here couple positions and momenta (they
are not separable), so the workhorse one-step method is the implicit
midpoint rule, which is symplectic and time-reversible.  Each step solves

    z' = z + h f((z + z')/2)

by a damped chord-Newton iteration whose Jacobian is assembled by finite
differences and reused across steps until convergence degrades.  An
adaptive Runge-Kutta run (:func:`rk_reference`, backed by scipy's DOP853
pair) serves as an independent cross-check, not as the production path.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import lu_factor, lu_solve

from .catalog import (
    SystemSpec,
    hamilton_domain_ok,
    hamiltonian_observable,
    integral_family,
    stale_extra_observables,
)
from .errors import EvaluationDomainError, StepFailureError
from .phase import Observable, PhaseState, StateBatch

__all__ = [
    "Trajectory",
    "hamilton_rhs",
    "implicit_midpoint_step",
    "integrate",
    "rk_reference",
    "resolve_watch",
    "write_csv",
]


@dataclass
class Trajectory:
    """Stored states of one integration run plus per-integral drift."""

    times: np.ndarray                   # (M,), strictly increasing
    q: np.ndarray                       # (M, N)
    p: np.ndarray                       # (M, N)
    energy: np.ndarray                  # (M,)
    watched: dict[str, np.ndarray] = field(default_factory=dict)
    drift: dict[str, np.ndarray] = field(default_factory=dict)
    status: str = "ok"
    failure_time: float | None = None

    @property
    def n(self) -> int:
        return self.q.shape[1]

    def state(self, index: int) -> PhaseState:
        return PhaseState(self.q[index], self.p[index])

    def max_drift(self) -> dict[str, float]:
        return {name: float(np.max(series)) for name, series in self.drift.items()}


class _View:
    """Minimal q/p holder so hot loops skip PhaseState validation."""

    __slots__ = ("q", "p")

    def __init__(self, q, p):
        self.q = q
        self.p = p


def _rhs_closure(spec: SystemSpec):
    obs = hamiltonian_observable(spec)
    n = spec.n

    def rhs(z: np.ndarray) -> np.ndarray:
        grad = obs.eval_jet(_View(z[:n], z[n:])).grad
        out = np.empty_like(z)
        out[:n] = grad[n:]
        out[n:] = -grad[:n]
        return out

    return rhs


def hamilton_rhs(spec: SystemSpec, state: PhaseState) -> np.ndarray:
    """Phase velocity (dq/dt, dp/dt) from the Hamiltonian's jet gradient."""
    return _rhs_closure(spec)(state.as_vector())


class _MidpointStepper:
    """Implicit midpoint with a frozen finite-difference Jacobian.

    The chord matrix ``I - (h/2) Df`` is refreshed lazily: once at start,
    and again whenever Newton fails to converge within its budget.
    """

    def __init__(self, rhs, dim: int, h: float, tol: float = 1e-12,
                 max_iter: int = 25):
        self.rhs = rhs
        self.dim = dim
        self.h = h
        self.tol = tol
        self.max_iter = max_iter
        self._lu = None
        self._slope = None  # f at the previous step's midpoint, predictor slope

    def _fd_jacobian(self, z: np.ndarray) -> np.ndarray:
        jac = np.empty((self.dim, self.dim))
        for j in range(self.dim):
            eps = 1e-6 * (1.0 + abs(z[j]))
            zp = z.copy()
            zp[j] += eps
            zm = z.copy()
            zm[j] -= eps
            jac[:, j] = (self.rhs(zp) - self.rhs(zm)) / (2.0 * eps)
        return jac

    def _refresh(self, z: np.ndarray) -> None:
        matrix = np.eye(self.dim) - 0.5 * self.h * self._fd_jacobian(z)
        self._lu = lu_factor(matrix)

    def step(self, z: np.ndarray) -> np.ndarray:
        if self._lu is None:
            self._refresh(z)
        for attempt in range(2):
            result = self._newton(z)
            if result is not None:
                return result
            # Convergence stalled: rebuild the chord matrix at z and retry.
            self._refresh(z)
        raise StepFailureError(
            f"implicit midpoint Newton iteration failed to reach {self.tol:g} "
            f"within {self.max_iter} iterations")

    def _newton(self, z: np.ndarray) -> np.ndarray | None:
        h = self.h
        w = z + h * self._slope if self._slope is not None else z + h * self.rhs(z)
        w_prev = w
        delta = np.zeros_like(z)
        prev_res = np.inf
        damping = 0
        for _ in range(self.max_iter):
            f_mid = self.rhs(0.5 * (z + w))
            residual = w - z - h * f_mid
            res = float(np.max(np.abs(residual)))
            if res <= self.tol * (1.0 + float(np.max(np.abs(w)))):
                self._slope = f_mid
                return w
            if res >= prev_res and damping < 4:
                # Damped retry from the previous iterate with half the update.
                damping += 1
                delta = 0.5 * delta
                w = w_prev - delta
                continue
            step = lu_solve(self._lu, residual)
            w_prev = w
            prev_res = res
            delta = step
            damping = 0
            w = w - step
        return None


def implicit_midpoint_step(spec: SystemSpec, state: PhaseState, h: float,
                           newton_tol: float = 1e-12,
                           newton_max_iter: int = 25) -> PhaseState:
    """Advance one implicit-midpoint step of size ``h``."""
    if h <= 0.0:
        raise ValueError("step size must be positive")
    rhs = _rhs_closure(spec)
    stepper = _MidpointStepper(rhs, 2 * spec.n, h, newton_tol, newton_max_iter)
    z = stepper.step(state.as_vector())
    n = spec.n
    return PhaseState(z[:n], z[n:])


def integrate(spec: SystemSpec, state0: PhaseState, h: float, t_end: float,
              watch=(), stride: int = 1, newton_tol: float = 1e-12,
              newton_max_iter: int = 25, max_halvings: int = 5) -> Trajectory:
    """Fixed-step implicit-midpoint run recording conserved-quantity drift.

    ``watch`` is a list of observables or watch tokens (see
    :func:`resolve_watch`).  Every ``stride``-th state is stored.  A step
    that fails even after ``max_halvings`` recursive halvings ends the run
    early; the partial trajectory is returned with ``status`` set.
    """
    if h <= 0.0:
        raise ValueError("step size must be positive")
    if t_end < 0.0:
        raise ValueError("final time must be non-negative")
    if stride < 1:
        raise ValueError("stride must be at least 1")
    if not np.all(hamilton_domain_ok(spec, state0.q)):
        raise EvaluationDomainError(
            "initial state outside the chart domain of the system")

    n_steps = int(round(t_end / h))
    rhs = _rhs_closure(spec)
    stepper = _MidpointStepper(rhs, 2 * spec.n, h, newton_tol, newton_max_iter)

    def advance(z: np.ndarray, step_h: float, depth: int) -> np.ndarray:
        if step_h != stepper.h:
            stepper.h = step_h
            stepper._lu = None
        try:
            return stepper.step(z)
        except (StepFailureError, EvaluationDomainError):
            if depth >= max_halvings:
                raise
            half = advance(z, 0.5 * step_h, depth + 1)
            return advance(half, 0.5 * step_h, depth + 1)

    stored = [state0.as_vector()]
    stored_idx = [0]
    z = state0.as_vector()
    status = "ok"
    failure_time = None
    for k in range(1, n_steps + 1):
        try:
            z = advance(z, h, 0)
            if stepper.h != h:
                stepper.h = h
                stepper._lu = None
            if not np.all(hamilton_domain_ok(spec, z[:spec.n])):
                raise EvaluationDomainError("trajectory left the chart domain")
        except (StepFailureError, EvaluationDomainError) as exc:
            status = "step-failure"
            failure_time = k * h
            if isinstance(exc, StepFailureError) and exc.time is None:
                exc.time = failure_time
            break
        if k % stride == 0 or k == n_steps:
            stored.append(z.copy())
            stored_idx.append(k)

    states = np.asarray(stored)
    times = h * np.asarray(stored_idx, dtype=float)
    traj = Trajectory(
        times=times,
        q=states[:, :spec.n],
        p=states[:, spec.n:],
        energy=np.empty(len(times)),
        status=status,
        failure_time=failure_time,
    )
    _attach_values(traj, spec, watch)
    return traj


def _attach_values(traj: Trajectory, spec: SystemSpec, watch) -> None:
    observables = resolve_watch(spec, watch)
    h_obs = hamiltonian_observable(spec)
    names = [obs.name for obs in observables]
    values = {name: np.empty(len(traj.times)) for name in names}
    energy = np.empty(len(traj.times))
    chunk = 4096
    for start in range(0, len(traj.times), chunk):
        stop = min(start + chunk, len(traj.times))
        batch = StateBatch(traj.q[start:stop], traj.p[start:stop])
        energy[start:stop] = h_obs.eval_jet(batch).value
        for obs, name in zip(observables, names):
            values[name][start:stop] = obs.eval_jet(batch).value
    traj.energy = energy
    traj.watched = values
    drift = {}
    for name in names:
        series = values[name]
        drift[name] = np.abs(series - series[0]) / (abs(series[0]) + 1.0)
    if {"H", "all"} & _tokens_of(watch):
        drift["H"] = np.abs(energy - energy[0]) / (abs(energy[0]) + 1.0)
    traj.drift = drift


def _tokens_of(watch) -> set[str]:
    return {w for w in watch if isinstance(w, str)}


def resolve_watch(spec: SystemSpec, watch) -> list[Observable]:
    """Expand watch tokens into observables.

    Tokens: ``C(m)``/``Cm`` one left-chain integral, ``C_(m)``/``C_m`` one
    right-chain integral, ``Ii`` one extra integral, ``C`` the whole left
    chain, ``C_`` the whole right chain, ``I`` all extras, ``all``
    everything.  ``H`` is always recorded as the energy column and is
    accepted as a token for drift reporting.  On a perturbed system the
    ``I`` tokens refer to the unperturbed sibling's candidates, which is
    exactly what a loss-of-conservation witness needs.
    """
    family = integral_family(spec)
    extras = family.extra if family.extra else (
        stale_extra_observables(spec) if spec.deltas else ())
    by_name = {obs.name: obs for obs in family.universal}
    by_name.update({obs.name: obs for obs in extras})
    left = [obs for obs in family.universal if not obs.name.startswith("C_")]
    right = [obs for obs in family.universal if obs.name.startswith("C_")]

    result: list[Observable] = []

    def add(obs):
        if all(existing.name != obs.name for existing in result):
            result.append(obs)

    for token in watch:
        if isinstance(token, Observable):
            add(token)
            continue
        token = token.strip()
        if token == "H":
            continue
        if token == "all":
            for obs in list(family.universal) + list(extras):
                add(obs)
            continue
        if token == "C":
            for obs in left:
                add(obs)
            continue
        if token == "C_":
            for obs in right:
                add(obs)
            continue
        name = _normalise_token(token)
        if name in by_name:
            add(by_name[name])
            continue
        raise ValueError(f"unknown watch token {token!r}")
    return result


def _normalise_token(token: str) -> str:
    if token.startswith("C_") and not token.startswith("C_("):
        return f"C_({token[2:]})"
    if token.startswith("C") and not token.startswith(("C(", "C_")):
        return f"C({token[1:]})"
    return token


def rk_reference(spec: SystemSpec, state0: PhaseState, h0: float, t_end: float,
                 tol: float = 1e-10, t_eval=None, watch=()) -> Trajectory:
    """Adaptive Runge-Kutta cross-check (embedded DOP853 pair via scipy)."""
    rhs = _rhs_closure(spec)
    sol = solve_ivp(lambda t, z: rhs(z), (0.0, t_end), state0.as_vector(),
                    method="DOP853", rtol=tol, atol=tol,
                    first_step=h0 if h0 > 0 else None, t_eval=t_eval,
                    dense_output=False)
    if not sol.success:
        raise StepFailureError(f"adaptive reference integration failed: {sol.message}")
    states = sol.y.T
    traj = Trajectory(
        times=sol.t,
        q=states[:, :spec.n],
        p=states[:, spec.n:],
        energy=np.empty(len(sol.t)),
    )
    _attach_values(traj, spec, watch)
    return traj


def write_csv(traj: Trajectory, path) -> None:
    """Trajectory as CSV: ``t,q1..qN,p1..pN,H,<watched names>``, 17 digits."""
    names = list(traj.watched)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        n = traj.n
        header = (["t"] + [f"q{i}" for i in range(1, n + 1)]
                  + [f"p{i}" for i in range(1, n + 1)] + ["H"] + names)
        writer.writerow(header)
        for k in range(len(traj.times)):
            row = [traj.times[k], *traj.q[k], *traj.p[k], traj.energy[k]]
            row += [traj.watched[name][k] for name in names]
            writer.writerow([f"{value:.17g}" for value in row])
