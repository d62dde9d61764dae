"""The built-in Hamiltonian systems and their conserved quantities.

Eight kinds are catalogued.  Each Hamiltonian is a function of the sl(2)
generators alone, which is what guarantees its quasi-maximal
superintegrability: the 2N-3 chain integrals commute with any such
function.  The unperturbed members carry an explicit extra integral per
coordinate, making them maximally superintegrable; switching on any
anharmonic coefficient keeps the chain integrals but breaks the extras.

kind              space                    potential
----------------  -----------------------  -----------------------------------
euclidean-osc     flat E^N                 harmonic + even anharmonic tail
poincare-higgs    S^N/H^N, stereographic   intrinsic oscillator + tail
beltrami-osc      S^N/H^N, central         intrinsic oscillator + tail
darboux3-A        conformally flat (a>0)   oscillator ratio + powers of ratio
darboux3-B        conformally flat (a>0)   all powers inside the conformal factor
free-poincare     S^N/H^N, stereographic   none (geodesic flow)
free-beltrami     S^N/H^N, central         none (geodesic flow)
free-darboux      conformally flat (a>0)   none (geodesic flow)
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ChartDomainError
from .jets import Jet, coordinate_jets
from .phase import (
    Observable,
    coalgebra_observable,
    phase_observable,
    state_observable,
    universal_integrals,
)

__all__ = [
    "KINDS",
    "SystemSpec",
    "IntegralFamily",
    "hamiltonian_observable",
    "hamiltonian",
    "hamilton_domain_ok",
    "check_domain",
    "extra_family",
    "extra_integral",
    "extra_observable",
    "extra_observables",
    "family_extra_observable",
    "stale_extra_observables",
    "integral_family",
    "garnier_tag",
    "formula_text",
    "equivalent_beltrami_spec",
    "spec_to_dict",
    "spec_from_dict",
]

KINDS = (
    "euclidean-osc",
    "poincare-higgs",
    "beltrami-osc",
    "darboux3-A",
    "darboux3-B",
    "free-poincare",
    "free-beltrami",
    "free-darboux",
)

_FREE_KINDS = ("free-poincare", "free-beltrami", "free-darboux")
_DARBOUX_KINDS = ("darboux3-A", "darboux3-B", "free-darboux")
_POINCARE_KINDS = ("poincare-higgs", "free-poincare")
_BELTRAMI_KINDS = ("beltrami-osc", "free-beltrami")

# Which extra-integral family certifies maximal superintegrability.
_EXTRA_FAMILY = {
    "euclidean-osc": "euclidean",
    "poincare-higgs": "poincare",
    "free-poincare": "poincare",
    "beltrami-osc": "beltrami",
    "free-beltrami": "beltrami",
    "darboux3-A": "darboux",
    "darboux3-B": "darboux",
    "free-darboux": "darboux",
}


@dataclass(frozen=True)
class SystemSpec:
    """Descriptor of one catalogued system."""

    kind: str
    n: int
    omega: float = 0.0
    kappa: float = 0.0
    a: float = 1.0
    deltas: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown system kind {self.kind!r}; expected one of {KINDS}")
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "kappa", float(self.kappa))
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "deltas", tuple(float(d) for d in self.deltas))
        for name in ("omega", "kappa", "a"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.omega < 0.0:
            raise ValueError("omega must be non-negative")
        if not all(np.isfinite(d) for d in self.deltas):
            raise ValueError("anharmonic coefficients must be finite")
        if self.kind in _DARBOUX_KINDS and self.a <= 0.0:
            raise ValueError("darboux kinds require a > 0")
        if self.kind in _FREE_KINDS:
            if self.omega != 0.0 or self.deltas:
                raise ValueError("free kinds have omega = 0 and no anharmonic coefficients")

    @property
    def is_free(self) -> bool:
        return self.kind in _FREE_KINDS


@dataclass(frozen=True)
class IntegralFamily:
    """Conserved quantities attached to a system.

    ``universal`` holds the 2N-3 chain integrals shared by every
    catalogued Hamiltonian; ``extra`` the per-coordinate integrals that
    exist only when all anharmonic coefficients vanish.
    """

    universal: tuple[Observable, ...]
    extra: tuple[Observable, ...] = field(default=())

    @property
    def has_extra(self) -> bool:
        return bool(self.extra)


# ---------------------------------------------------------------------------
# Hamiltonians

def _anharmonic(ratio, deltas):
    total = None
    for j, delta in enumerate(deltas):
        term = delta * ratio ** (j + 2)
        total = term if total is None else total + term
    return total


def _hamiltonian_fn(spec: SystemSpec):
    kind = spec.kind
    kappa = spec.kappa
    a = spec.a
    w2 = 0.5 * spec.omega ** 2
    deltas = spec.deltas

    if kind == "euclidean-osc":
        def fn(jm, jp, j3):
            h = 0.5 * jp + w2 * jm
            tail = _anharmonic(jm, deltas)
            return h if tail is None else h + tail
    elif kind in _POINCARE_KINDS:
        free = kind == "free-poincare"

        def fn(jm, jp, j3):
            factor = 1.0 + kappa * jm
            h = 0.5 * factor * factor * jp
            if free:
                return h
            ratio = jm / ((1.0 - kappa * jm) ** 2)
            h = h + w2 * ratio
            tail = _anharmonic(ratio, deltas)
            return h if tail is None else h + tail
    elif kind in _BELTRAMI_KINDS:
        free = kind == "free-beltrami"

        def fn(jm, jp, j3):
            h = 0.5 * (1.0 + kappa * jm) * (jp + kappa * j3 * j3)
            if free:
                return h
            h = h + w2 * jm
            tail = _anharmonic(jm, deltas)
            return h if tail is None else h + tail
    elif kind == "darboux3-A":
        def fn(jm, jp, j3):
            conformal = a + jm
            h = (jp + (2.0 * w2) * jm) / conformal
            tail = _anharmonic(jm / conformal, deltas)
            return h if tail is None else h + tail
    elif kind == "darboux3-B":
        def fn(jm, jp, j3):
            numerator = jp + (2.0 * w2) * jm
            tail = _anharmonic(jm, deltas)
            if tail is not None:
                numerator = numerator + tail
            return numerator / (a + jm)
    elif kind == "free-darboux":
        def fn(jm, jp, j3):
            return jp / (a + jm)
    else:  # pragma: no cover - guarded by SystemSpec validation
        raise ValueError(f"unknown system kind {kind!r}")
    return fn


def hamiltonian_observable(spec: SystemSpec) -> Observable:
    """The system Hamiltonian as a generator-algebra observable."""
    return coalgebra_observable("H", _hamiltonian_fn(spec))


def hamiltonian(spec: SystemSpec, state) -> Jet:
    """Evaluate the Hamiltonian jet at a state, enforcing the chart domain."""
    check_domain(spec, state.q)
    return hamiltonian_observable(spec).eval_jet(state)


# ---------------------------------------------------------------------------
# Chart domains

def hamilton_domain_ok(spec: SystemSpec, q: np.ndarray, margin: float = 0.0):
    """Whether positions lie inside the system's chart domain.

    ``q`` has shape (N,) or (S, N); the return is a bool or a bool array.
    ``margin`` keeps a guard distance from poles and chart boundaries.
    """
    q = np.asarray(q, dtype=float)
    q2 = np.einsum("...i,...i->...", q, q)
    kind, kappa = spec.kind, spec.kappa
    if kind in _POINCARE_KINDS:
        ok = 1.0 + kappa * q2 > margin
        if kind == "poincare-higgs":
            ok = ok & (np.abs(1.0 - kappa * q2) > margin)
        return ok
    if kind in _BELTRAMI_KINDS:
        return 1.0 + kappa * q2 > margin
    full = np.ones(np.shape(q2), dtype=bool)
    return bool(full) if full.ndim == 0 else full


def check_domain(spec: SystemSpec, q: np.ndarray, margin: float = 0.0) -> None:
    ok = hamilton_domain_ok(spec, q, margin)
    if not np.all(ok):
        raise ChartDomainError(domain_condition(spec) + " violated")


def domain_condition(spec: SystemSpec) -> str:
    """Human-readable chart-domain condition for a system."""
    if spec.kind in _POINCARE_KINDS:
        cond = "1 + kappa*q^2 > 0"
        if spec.kind == "poincare-higgs":
            cond += " and kappa*q^2 != 1"
        return cond
    if spec.kind in _BELTRAMI_KINDS:
        return "1 + kappa*q^2 > 0"
    return "none (entire R^N)"


# ---------------------------------------------------------------------------
# Extra integrals

def extra_family(spec: SystemSpec) -> str:
    return _EXTRA_FAMILY[spec.kind]


def _family_extra_fn(family: str, i: int, omega: float, kappa: float):
    """Per-coordinate extra integral over coordinate jets (1-based ``i``)."""
    w2 = omega ** 2
    idx = i - 1

    if family == "euclidean":
        def fn(qjets, pjets):
            return pjets[idx] * pjets[idx] + w2 * (qjets[idx] * qjets[idx])
    elif family == "poincare":
        def fn(qjets, pjets):
            s = _jet_sum(qjets[k] * qjets[k] for k in range(len(qjets)))
            d = _jet_sum(qjets[k] * pjets[k] for k in range(len(qjets)))
            factor = 1.0 - kappa * s
            lead = pjets[idx] * factor + (2.0 * kappa) * d * qjets[idx]
            return lead * lead + w2 * (qjets[idx] * qjets[idx]) / (factor * factor)
    elif family == "beltrami":
        def fn(qjets, pjets):
            d = _jet_sum(qjets[k] * pjets[k] for k in range(len(qjets)))
            lead = pjets[idx] + kappa * d * qjets[idx]
            return lead * lead + w2 * (qjets[idx] * qjets[idx])
    else:
        raise ValueError(f"unknown extra-integral family {family!r}")
    return fn


def _jet_sum(terms):
    total = None
    for term in terms:
        total = term if total is None else total + term
    return total


def extra_observable(spec: SystemSpec, i: int) -> Observable:
    """The i-th extra integral (1-based) of an unperturbed system."""
    if spec.deltas:
        raise ValueError(
            "extra integrals are only defined for unperturbed systems "
            "(maximal superintegrability is lost once any anharmonic "
            "coefficient is non-zero)")
    if not 1 <= i <= spec.n:
        raise ValueError(f"integral index {i} out of range 1..{spec.n}")
    family = extra_family(spec)
    if family == "darboux":
        h_obs = hamiltonian_observable(spec)
        return _darboux_extra(i, spec.omega, h_obs)
    return phase_observable(f"I{i}", _family_extra_fn(family, i, spec.omega, spec.kappa))


def _darboux_extra(i: int, omega: float, h_obs: Observable) -> Observable:
    """I_i = p_i^2 - (H - omega^2) q_i^2; the Hamiltonian enters by value."""
    w2 = omega ** 2
    idx = i - 1

    def eval_fn(state):
        h = h_obs.eval_jet(state)
        qjets, pjets = coordinate_jets(state.q, state.p)
        return pjets[idx] * pjets[idx] - (h - w2) * (qjets[idx] * qjets[idx])

    return state_observable(f"I{i}", eval_fn)


def family_extra_observable(family: str, i: int, n: int, omega: float = 0.0,
                            kappa: float = 0.0, h_obs: Observable | None = None) -> Observable:
    """Extra integral of a named family, for user-supplied Hamiltonians."""
    if not 1 <= i <= n:
        raise ValueError(f"integral index {i} out of range 1..{n}")
    if family == "darboux":
        if h_obs is None:
            raise ValueError("the darboux extra integrals need the Hamiltonian observable")
        return _darboux_extra(i, omega, h_obs)
    return phase_observable(f"I{i}", _family_extra_fn(family, i, omega, kappa))


def extra_integral(spec: SystemSpec, i: int, state, h_value: float | None = None) -> float:
    """Value of the i-th extra integral at a state.

    For the darboux family the Hamiltonian enters the integral by value
    and must be supplied as ``h_value``; other families ignore it.
    """
    if spec.deltas:
        raise ValueError(
            "extra integrals are only defined for unperturbed systems "
            "(maximal superintegrability is lost once any anharmonic "
            "coefficient is non-zero)")
    if not 1 <= i <= spec.n:
        raise ValueError(f"integral index {i} out of range 1..{spec.n}")
    family = extra_family(spec)
    q, p = state.q, state.p
    idx = i - 1
    w2 = spec.omega ** 2
    if family == "darboux":
        if h_value is None:
            raise ValueError("darboux extra integrals require the Hamiltonian value")
        return float(p[idx] ** 2 - (h_value - w2) * q[idx] ** 2)
    kappa = spec.kappa
    if family == "euclidean":
        return float(p[idx] ** 2 + w2 * q[idx] ** 2)
    if family == "poincare":
        s = float(q @ q)
        d = float(q @ p)
        factor = 1.0 - kappa * s
        return float((p[idx] * factor + 2.0 * kappa * d * q[idx]) ** 2
                     + w2 * q[idx] ** 2 / factor ** 2)
    # beltrami
    d = float(q @ p)
    return float((p[idx] + kappa * d * q[idx]) ** 2 + w2 * q[idx] ** 2)


def extra_observables(spec: SystemSpec) -> tuple[Observable, ...]:
    return tuple(extra_observable(spec, i) for i in range(1, spec.n + 1))


def stale_extra_observables(spec: SystemSpec) -> tuple[Observable, ...]:
    """Extra integrals of the unperturbed sibling of a perturbed system.

    These are the candidates whose bracket with the perturbed Hamiltonian
    witnesses the loss of maximal superintegrability.
    """
    return extra_observables(replace(spec, deltas=()))


def integral_family(spec: SystemSpec) -> IntegralFamily:
    """Universal chain integrals plus, for unperturbed systems, the extras."""
    universal = universal_integrals(spec.n)
    extra = extra_observables(spec) if not spec.deltas else ()
    return IntegralFamily(universal=universal, extra=extra)


# ---------------------------------------------------------------------------
# Metadata

def garnier_tag(spec: SystemSpec) -> str | None:
    """Tag for the quartic-perturbation members of the anharmonic families."""
    quartic_only = (len(spec.deltas) == 1 and spec.deltas[0] != 0.0
                    and spec.omega != 0.0)
    if not quartic_only:
        return None
    if spec.kind == "euclidean-osc":
        return "radial Garnier"
    if spec.kind == "beltrami-osc":
        return "curved Garnier"
    return None


_FORMULAS = {
    "euclidean-osc":
        "H = Jp/2 + (omega^2/2)*Jm + sum_k delta_k*Jm^(k+1)",
    "poincare-higgs":
        "H = (1 + kappa*Jm)^2*Jp/2 + (omega^2/2)*Jm/(1 - kappa*Jm)^2"
        " + sum_k delta_k*(Jm/(1 - kappa*Jm)^2)^(k+1)",
    "beltrami-osc":
        "H = (1 + kappa*Jm)*(Jp + kappa*J3^2)/2 + (omega^2/2)*Jm"
        " + sum_k delta_k*Jm^(k+1)",
    "darboux3-A":
        "H = (Jp + omega^2*Jm)/(a + Jm) + sum_k delta_k*(Jm/(a + Jm))^(k+1)",
    "darboux3-B":
        "H = (Jp + omega^2*Jm + sum_k delta_k*Jm^(k+1))/(a + Jm)",
    "free-poincare":
        "H = (1 + kappa*Jm)^2*Jp/2",
    "free-beltrami":
        "H = (1 + kappa*Jm)*(Jp + kappa*J3^2)/2",
    "free-darboux":
        "H = Jp/(a + Jm)",
}


def formula_text(kind: str) -> str:
    """The Hamiltonian of a kind written over the generators."""
    try:
        return _FORMULAS[kind]
    except KeyError:
        raise ValueError(f"unknown system kind {kind!r}") from None


def equivalent_beltrami_spec(spec: SystemSpec) -> tuple[SystemSpec, float]:
    """The central-projection system matching a stereographic one.

    The two charts normalise kinetic energy differently (the
    stereographic kinetic term is four times the geodesic Hamiltonian of
    its display metric), so matching requires rescaling: under the
    cotangent-lifted chart transfer,

        H_poincare(q, p; omega, delta_k) =
            scale * H_beltrami(Q, P; omega/4, delta_k/4^(k+2)),

    with ``scale = 4`` and ``k`` the 1-based coefficient index.  Returns
    the matched spec and the energy scale.
    """
    if spec.kind not in _POINCARE_KINDS:
        raise ValueError("only stereographic-chart systems have a central-chart match")
    if spec.kind == "free-poincare":
        matched = SystemSpec("free-beltrami", spec.n, kappa=spec.kappa)
    else:
        deltas = tuple(d / 4.0 ** (j + 3) for j, d in enumerate(spec.deltas))
        matched = SystemSpec("beltrami-osc", spec.n, omega=spec.omega / 4.0,
                             kappa=spec.kappa, deltas=deltas)
    return matched, 4.0


# ---------------------------------------------------------------------------
# Serialisation

def spec_to_dict(spec: SystemSpec) -> dict:
    return {
        "kind": spec.kind,
        "n": spec.n,
        "omega": spec.omega,
        "kappa": spec.kappa,
        "a": spec.a,
        "deltas": list(spec.deltas),
    }


def spec_from_dict(data: dict) -> SystemSpec:
    known = {"kind", "n", "omega", "kappa", "a", "deltas"}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown system fields: {sorted(unknown)}")
    if "kind" not in data or "n" not in data:
        raise ValueError("a system document requires at least 'kind' and 'n'")
    return SystemSpec(
        kind=data["kind"],
        n=data["n"],
        omega=data.get("omega", 0.0),
        kappa=data.get("kappa", 0.0),
        a=data.get("a", 1.0),
        deltas=tuple(data.get("deltas", ())),
    )
