"""Charts and metrics for the curved configuration spaces.

The constant-curvature spaces are handled through their quadric embedding
``x0^2 + kappa * |x|^2 = 1`` in R^(N+1).  Two charts are provided:

* ``poincare`` -- stereographic projection from the pole ``(-1, 0)``;
  metric ``4 dq^2 / (1 + kappa q^2)^2``.
* ``beltrami`` -- central projection from the origin, covering the
  ``x0 > 0`` hemisphere; metric
  ``[(1 + kappa q^2) dq^2 - kappa (q . dq)^2] / (1 + kappa q^2)^2``.

The ``darboux`` chart covers the conformally flat space of non-constant
curvature with metric ``(a + q^2) dq^2``, ``a > 0``.

Kinetic-energy normalisation: the catalogued kinetic Hamiltonians are
fixed multiples of the geodesic Hamiltonian ``p' g^{-1} p / 2`` of these
display metrics.  :func:`kinetic_normalization` returns the factor ``c``
such that the catalogue kinetic term equals ``p' (g/c)^{-1} p / 2``;
it is 4 for ``poincare``, 1 for ``beltrami`` and 2 for ``darboux``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ChartDomainError
from .jets import Jet, jet_sqrt

__all__ = [
    "AmbientPoint",
    "poincare_to_ambient",
    "beltrami_to_ambient",
    "ambient_to_poincare",
    "ambient_to_beltrami",
    "chart_transfer",
    "transfer_jets",
    "position_jets",
    "cotangent_lift",
    "chart_lift",
    "geodesic_distance_from_origin",
    "metric_eval",
    "kinetic_normalization",
    "darboux_scalar_curvature",
]

CHARTS = ("poincare", "beltrami", "darboux")

_KINETIC_FACTOR = {"poincare": 4.0, "beltrami": 1.0, "darboux": 2.0}


@dataclass(frozen=True)
class AmbientPoint:
    """Embedding coordinates (x0, x) on the quadric x0^2 + kappa x^2 = 1."""

    x0: float
    x: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))

    def constraint_residual(self, kappa: float) -> float:
        return float(abs(self.x0 ** 2 + kappa * (self.x @ self.x) - 1.0))


def poincare_to_ambient(q: np.ndarray, kappa: float) -> AmbientPoint:
    """Stereographic chart point -> ambient coordinates."""
    q = np.asarray(q, dtype=float)
    q2 = float(q @ q)
    denom = 1.0 + kappa * q2
    if denom == 0.0:
        raise ChartDomainError("poincare chart singular: 1 + kappa*q^2 = 0")
    lam = 2.0 / denom
    return AmbientPoint((1.0 - kappa * q2) / denom, lam * q)


def beltrami_to_ambient(q: np.ndarray, kappa: float) -> AmbientPoint:
    """Central-projection chart point -> ambient coordinates."""
    q = np.asarray(q, dtype=float)
    q2 = float(q @ q)
    denom = 1.0 + kappa * q2
    if denom <= 0.0:
        raise ChartDomainError("beltrami chart domain requires 1 + kappa*q^2 > 0")
    mu = 1.0 / np.sqrt(denom)
    return AmbientPoint(mu, mu * q)


def ambient_to_poincare(point: AmbientPoint, kappa: float) -> np.ndarray:
    if point.x0 == -1.0:
        raise ChartDomainError("poincare projection pole x0 = -1")
    return point.x / (1.0 + point.x0)


def ambient_to_beltrami(point: AmbientPoint, kappa: float) -> np.ndarray:
    if point.x0 <= 0.0:
        raise ChartDomainError("beltrami chart covers only the x0 > 0 hemisphere")
    return point.x / point.x0


_TO_AMBIENT = {"poincare": poincare_to_ambient, "beltrami": beltrami_to_ambient}
_FROM_AMBIENT = {"poincare": ambient_to_poincare, "beltrami": ambient_to_beltrami}


def chart_transfer(q: np.ndarray, src: str, dst: str, kappa: float) -> np.ndarray:
    """Express a chart point in another chart via the ambient space."""
    if src not in _TO_AMBIENT or dst not in _FROM_AMBIENT:
        raise ValueError(f"charts must be one of {tuple(_TO_AMBIENT)}, got {src!r}->{dst!r}")
    if src == dst:
        return np.asarray(q, dtype=float).copy()
    return _FROM_AMBIENT[dst](_TO_AMBIENT[src](q, kappa), kappa)


# ---------------------------------------------------------------------------
# Jet-polymorphic transition maps (single-sourced chart Jacobians)

def _sum_sq(jets):
    total = jets[0] * jets[0]
    for j in jets[1:]:
        total = total + j * j
    return total


def transfer_jets(qjets, src: str, dst: str, kappa: float):
    """Transition map applied to position jets; works on jets or floats."""
    if src == dst:
        return list(qjets)
    q2 = _sum_sq(qjets)
    if src == "poincare" and dst == "beltrami":
        # Composition of the two projections: Q = 2 q / (1 - kappa q^2),
        # valid where the image stays on the x0 > 0 hemisphere.
        denom = 1.0 - kappa * q2
        if _jet_min(denom) <= 0.0:
            raise ChartDomainError("image leaves the beltrami chart (1 - kappa*q^2 <= 0)")
        return [2.0 * qj / denom for qj in qjets]
    if src == "beltrami" and dst == "poincare":
        inside = 1.0 + kappa * q2
        if _jet_min(inside) <= 0.0:
            raise ChartDomainError("beltrami chart domain requires 1 + kappa*q^2 > 0")
        denom = 1.0 + jet_sqrt(inside) if isinstance(inside, Jet) else 1.0 + np.sqrt(inside)
        return [qj / denom for qj in qjets]
    raise ValueError(f"unsupported chart transfer {src!r} -> {dst!r}")


def _jet_min(value) -> float:
    v = value.value if isinstance(value, Jet) else value
    return float(np.min(v)) if isinstance(v, np.ndarray) else float(v)


def position_jets(q: np.ndarray):
    """Seed one jet per position coordinate (gradient width N)."""
    q = np.asarray(q, dtype=float)
    n = len(q)
    jets = []
    for i in range(n):
        g = np.zeros(n)
        g[i] = 1.0
        jets.append(Jet(float(q[i]), g))
    return jets


def cotangent_lift(position_map, q: np.ndarray, p: np.ndarray):
    """Lift a point transformation to phase space.

    ``position_map`` maps a list of position jets to the new position
    jets; its Jacobian J is read off the jet gradients and the momenta
    transform contravariantly, P = J^{-T} p, preserving the symplectic
    form.
    """
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    out = position_map(position_jets(q))
    new_q = np.array([j.value for j in out])
    jac = np.array([j.grad for j in out])
    try:
        new_p = np.linalg.solve(jac.T, p)
    except np.linalg.LinAlgError as exc:
        raise ChartDomainError(f"singular chart Jacobian: {exc}") from exc
    if not np.all(np.isfinite(new_p)):
        raise ChartDomainError("chart Jacobian produced non-finite momenta")
    return new_q, new_p


def chart_lift(q: np.ndarray, p: np.ndarray, src: str, dst: str, kappa: float):
    """Cotangent lift of the chart transition ``src`` -> ``dst``."""
    return cotangent_lift(lambda jets: transfer_jets(jets, src, dst, kappa), q, p)


# ---------------------------------------------------------------------------
# Distances, metrics, curvature

def geodesic_distance_from_origin(point: AmbientPoint, kappa: float) -> float:
    """Geodesic distance from the chart origin (x0=1, x=0).

    Determined by tan^2(sqrt(kappa) r)/kappa = x^2/x0^2 on the sphere and
    its hyperbolic continuation tanh^2(sqrt(-kappa) r)/(-kappa) = x^2/x0^2;
    the inverse-trig forms used here are numerically stable as kappa -> 0
    and reduce to the Euclidean distance |x| at kappa = 0.
    """
    x0 = point.x0
    norm = float(np.sqrt(point.x @ point.x))
    if kappa > 0.0:
        rk = np.sqrt(kappa)
        if x0 == 0.0:
            return float(np.pi / (2.0 * rk))
        if x0 > 0.0:
            return float(np.arctan(rk * norm / x0) / rk)
        # Beyond the equator: continue onto the far hemisphere.
        return float((np.pi + np.arctan(rk * norm / x0)) / rk)
    if kappa < 0.0:
        rk = np.sqrt(-kappa)
        if x0 <= 0.0 or rk * norm >= x0:
            raise ChartDomainError(
                "point outside the hyperbolic sheet: requires x^2/x0^2 < 1/(-kappa)")
        return float(np.arctanh(rk * norm / x0) / rk)
    return norm


def metric_eval(chart: str, q: np.ndarray, kappa: float = 0.0, a: float = 1.0) -> np.ndarray:
    """Metric matrix of a chart at a point (display normalisation)."""
    q = np.asarray(q, dtype=float)
    n = len(q)
    q2 = float(q @ q)
    if chart == "poincare":
        denom = 1.0 + kappa * q2
        if denom == 0.0:
            raise ChartDomainError("poincare chart singular: 1 + kappa*q^2 = 0")
        return (4.0 / denom ** 2) * np.eye(n)
    if chart == "beltrami":
        denom = 1.0 + kappa * q2
        if denom <= 0.0:
            raise ChartDomainError("beltrami chart domain requires 1 + kappa*q^2 > 0")
        return (denom * np.eye(n) - kappa * np.outer(q, q)) / denom ** 2
    if chart == "darboux":
        if a <= 0.0:
            raise ValueError("darboux deformation parameter must satisfy a > 0")
        return (a + q2) * np.eye(n)
    raise ValueError(f"unknown chart {chart!r}; expected one of {CHARTS}")


def kinetic_normalization(chart: str) -> float:
    """Factor c with kinetic Hamiltonian = p' (g/c)^{-1} p / 2 for the chart."""
    try:
        return _KINETIC_FACTOR[chart]
    except KeyError:
        raise ValueError(f"unknown chart {chart!r}; expected one of {CHARTS}") from None


def darboux_scalar_curvature(q: np.ndarray, a: float) -> float:
    """Scalar curvature of the (a + q^2) dq^2 metric; negative for a > 0."""
    if a <= 0.0:
        raise ValueError("darboux deformation parameter must satisfy a > 0")
    q = np.asarray(q, dtype=float)
    n = len(q)
    q2 = float(q @ q)
    return float(-(n - 1) * (3.0 * (n - 2) * q2 + 2.0 * a * n) / (a + q2) ** 3)
