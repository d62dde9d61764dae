"""The superintegrability test harness.

Everything here reduces claims about conserved quantities to numbers a
test can bound:

* bracket residuals ``{H, F}`` over seeded random in-domain states,
  reported absolute and relative to the scale ``|grad H| |grad F| + 1``;
* pairwise involution matrices for integral sets;
* functional-independence ranks from singular values of the stacked
  gradient Jacobians;
* the cotangent-lift equivalence between the stereographic and central
  charts, and flat-limit convergence tables;
* a machine-readable :class:`VerificationReport` with pass/fail verdicts.

A quasi-maximal verdict needs every chain integral to commute with the
Hamiltonian and the set ``{H} + chains`` to reach rank 2N-2; the maximal
verdict additionally needs the per-coordinate extras and rank 2N-1.  One
non-integral control observable is always evaluated so that a silently
broken bracket cannot produce an all-green report.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .catalog import (
    SystemSpec,
    domain_condition,
    equivalent_beltrami_spec,
    family_extra_observable,
    garnier_tag,
    hamilton_domain_ok,
    hamiltonian_observable,
    integral_family,
    spec_to_dict,
    stale_extra_observables,
)
from .errors import SamplingError
from .expr import expression_observable
from .geometry import chart_lift
from .phase import (
    Observable,
    StateBatch,
    bracket_from_grads,
    casimir_observable,
    coordinate_observable,
    universal_integrals,
)

__all__ = [
    "ResidualStats",
    "RankResult",
    "VerificationReport",
    "sample_states",
    "sample_box",
    "evaluate_grads",
    "residual_grid",
    "involution_matrix",
    "independence_rank",
    "chart_equivalence",
    "flat_limit",
    "verify_system",
]

DEFAULT_BRACKET_TOL = 1e-10
DEFAULT_SVD_CUTOFF = 1e-8
SAMPLE_BOX = 0.9
DOMAIN_GUARD = 1e-3
OVERSAMPLE_LIMIT = 100


# ---------------------------------------------------------------------------
# Sampling

def sample_box(n: int, count: int, seed: int, box: float = SAMPLE_BOX) -> StateBatch:
    """Uniform box sampling with no domain rejection."""
    rng = np.random.default_rng(seed)
    q = rng.uniform(-box, box, (count, n))
    p = rng.uniform(-box, box, (count, n))
    return StateBatch(q, p)


def sample_states(spec: SystemSpec | None, n: int, count: int, seed: int,
                  box: float = SAMPLE_BOX, guard: float = DOMAIN_GUARD,
                  predicate=None) -> StateBatch:
    """Seeded rejection sampling of in-domain states.

    Positions and momenta are drawn uniformly from ``[-box, box]`` and
    rejected against the system's chart domain with a guard distance from
    poles.  Raises :class:`SamplingError` once ``OVERSAMPLE_LIMIT * count``
    draws were not enough.
    """
    rng = np.random.default_rng(seed)
    accepted_q = []
    accepted_p = []
    total = 0
    drawn = 0
    while total < count:
        want = max(count - total, 64)
        if drawn + want > OVERSAMPLE_LIMIT * count:
            want = OVERSAMPLE_LIMIT * count - drawn
            if want <= 0:
                condition = (domain_condition(spec) if spec is not None
                             else "custom predicate")
                raise SamplingError(
                    f"could not draw {count} in-domain states after "
                    f"{OVERSAMPLE_LIMIT}x oversampling; constraint: {condition}")
        q = rng.uniform(-box, box, (want, n))
        p = rng.uniform(-box, box, (want, n))
        drawn += want
        if spec is not None:
            keep = hamilton_domain_ok(spec, q, margin=guard)
        else:
            keep = np.ones(want, dtype=bool)
        if predicate is not None:
            keep = keep & predicate(q, p)
        if np.any(keep):
            accepted_q.append(q[keep])
            accepted_p.append(p[keep])
            total += int(np.count_nonzero(keep))
    q = np.concatenate(accepted_q)[:count]
    p = np.concatenate(accepted_p)[:count]
    return StateBatch(q, p)


# ---------------------------------------------------------------------------
# Residuals

@dataclass(frozen=True)
class ResidualStats:
    """Bracket residual statistics for one pair of observables."""

    name: str
    max_abs: float
    mean_abs: float
    max_rel: float
    mean_rel: float

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "max_abs": self.max_abs,
            "mean_abs": self.mean_abs,
            "max_rel": self.max_rel,
            "mean_rel": self.mean_rel,
        }


def evaluate_grads(observables, states: StateBatch, workers: int = 1):
    """Jets of several observables over a batch, optionally chunked in threads."""
    observables = list(observables)
    if workers <= 1 or states.size < 2 * workers:
        return [obs.eval_jet(states) for obs in observables]
    bounds = np.linspace(0, states.size, workers + 1, dtype=int)
    chunks = [StateBatch(states.q[a:b], states.p[a:b])
              for a, b in zip(bounds[:-1], bounds[1:]) if b > a]

    def eval_chunks(obs):
        return [obs.eval_jet(chunk) for chunk in chunks]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(eval_chunks, observables))
    from .jets import Jet

    return [Jet(np.concatenate([j.value for j in jets]),
                np.concatenate([j.grad for j in jets]))
            for jets in parts]


def _grad_norms(jet) -> np.ndarray:
    return np.linalg.norm(jet.grad, axis=-1)


def _pair_stats(name, jet_f, jet_g, n: int) -> ResidualStats:
    values = np.abs(bracket_from_grads(jet_f.grad, jet_g.grad, n))
    scale = _grad_norms(jet_f) * _grad_norms(jet_g) + 1.0
    rel = values / scale
    return ResidualStats(name, float(np.max(values)), float(np.mean(values)),
                         float(np.max(rel)), float(np.mean(rel)))


def residual_grid(f: Observable, g: Observable, states: StateBatch) -> ResidualStats:
    """Statistics of |{f, g}| over a batch of sampled states."""
    jet_f, jet_g = evaluate_grads([f, g], states)
    return _pair_stats(f"{{{f.name},{g.name}}}", jet_f, jet_g, states.n)


def involution_matrix(observables, states: StateBatch,
                      workers: int = 1) -> np.ndarray:
    """Matrix of max relative bracket residuals over all pairs."""
    observables = list(observables)
    if not observables:
        raise ValueError("involution_matrix needs at least one observable")
    jets = evaluate_grads(observables, states, workers)
    size = len(observables)
    out = np.zeros((size, size))
    for i in range(size):
        for j in range(i + 1, size):
            stats = _pair_stats("", jets[i], jets[j], states.n)
            out[i, j] = out[j, i] = stats.max_rel
    return out


# ---------------------------------------------------------------------------
# Functional independence

@dataclass(frozen=True)
class RankResult:
    """Best (maximum) numerical Jacobian rank found over the sample set."""

    rank: int
    singular_values: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"rank": self.rank, "singular_values": list(self.singular_values)}


def independence_rank(observables, states: StateBatch,
                      svd_cutoff: float = DEFAULT_SVD_CUTOFF,
                      workers: int = 1) -> RankResult:
    """Numerical rank of the stacked gradients, maximised over samples.

    A single full-rank sample certifies functional independence at
    generic points; rank deficiency everywhere only means "not certified".
    """
    observables = list(observables)
    if len(observables) > 2 * states.n:
        raise ValueError("more observables than phase-space dimensions")
    jets = evaluate_grads(observables, states, workers)
    jacobians = np.stack([jet.grad for jet in jets], axis=1)  # (S, k, 2N)
    singular = np.linalg.svd(jacobians, compute_uv=False)
    top = singular[:, 0]
    usable = top > 0.0
    if not np.any(usable):
        raise SamplingError("all sampled states had vanishing gradients")
    ranks = np.sum(singular > svd_cutoff * top[:, None], axis=1)
    ranks[~usable] = 0
    best = int(np.argmax(ranks))
    return RankResult(int(ranks[best]), tuple(float(s) for s in singular[best]))


# ---------------------------------------------------------------------------
# Chart equivalence and flat limits

def chart_equivalence(kappa: float, omega: float, deltas=(), n: int = 3,
                      count: int = 100, seed: int = 0,
                      lift_momenta: bool = True) -> float:
    """Max relative mismatch between the two chart Hamiltonians.

    Samples stereographic-chart states, maps them to the central chart by
    the cotangent-lifted transition, and compares the stereographic
    Hamiltonian against its matched central-chart system (see
    :func:`superosc.catalog.equivalent_beltrami_spec` for the scale and
    parameter conversion).  ``lift_momenta=False`` skips the momentum
    half of the lift, which destroys the match and serves as a negative
    control.
    """
    if kappa == 0.0:
        raise ValueError("chart equivalence needs kappa != 0")
    spec_p = SystemSpec("poincare-higgs", n, omega=omega, kappa=kappa,
                        deltas=tuple(deltas))
    spec_b, scale = equivalent_beltrami_spec(spec_p)

    def image_in_beltrami(q, p):
        q2 = np.einsum("si,si->s", q, q)
        return 1.0 - kappa * q2 > DOMAIN_GUARD

    states = sample_states(spec_p, n, count, seed, predicate=image_in_beltrami)
    h_p = hamiltonian_observable(spec_p).eval_jet(states).value
    lifted_q = np.empty_like(states.q)
    lifted_p = np.empty_like(states.p)
    for k in range(states.size):
        big_q, big_p = chart_lift(states.q[k], states.p[k], "poincare",
                                  "beltrami", kappa)
        lifted_q[k] = big_q
        lifted_p[k] = big_p if lift_momenta else states.p[k]
    h_b = hamiltonian_observable(spec_b).eval_jet(
        StateBatch(lifted_q, lifted_p)).value
    return float(np.max(np.abs(h_p - scale * h_b) / (np.abs(h_p) + 1.0)))


def flat_limit(kind: str, omega: float, deltas=(), n: int = 3,
               kappa_seq=(1e-2, 1e-4, 1e-6, 1e-8, 1e-10),
               count: int = 100, seed: int = 0, box: float = SAMPLE_BOX):
    """Gap to the flat oscillator for a decreasing curvature sequence.

    Returns ``[(kappa, max |H_kappa - H_flat|)]``; for the catalogued
    curved kinds the gap shrinks linearly in kappa.
    """
    if kind not in ("poincare-higgs", "beltrami-osc", "free-poincare",
                    "free-beltrami"):
        raise ValueError(f"no flat limit table for kind {kind!r}")
    free = kind.startswith("free")
    states = sample_box(n, count, seed, box)
    if free:
        flat = SystemSpec("euclidean-osc", n)
    else:
        flat = SystemSpec("euclidean-osc", n, omega=omega, deltas=tuple(deltas))
    h_flat = hamiltonian_observable(flat).eval_jet(states).value
    table = []
    for kappa in kappa_seq:
        if free:
            curved = SystemSpec(kind, n, kappa=kappa)
        else:
            curved = SystemSpec(kind, n, omega=omega, kappa=kappa,
                                deltas=tuple(deltas))
        h_curved = hamiltonian_observable(curved).eval_jet(states).value
        table.append((float(kappa), float(np.max(np.abs(h_curved - h_flat)))))
    return table


# ---------------------------------------------------------------------------
# Report

@dataclass
class VerificationReport:
    """Residuals, involution matrices, ranks and verdicts for one system."""

    system: dict
    n: int
    seed: int
    samples: int
    tolerances: dict
    universal_residuals: list[ResidualStats]
    extra_residuals: list[ResidualStats]
    involution_left: dict
    involution_right: dict
    rank: dict
    target_rank_qms: int
    target_rank_ms: int
    negative_control: dict
    verdict_qms: str
    verdict_ms: str
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "system": self.system,
            "n": self.n,
            "seed": self.seed,
            "samples": self.samples,
            "tolerances": self.tolerances,
            "universal_residuals": [s.to_dict() for s in self.universal_residuals],
            "extra_residuals": [s.to_dict() for s in self.extra_residuals],
            "involution_left": self.involution_left,
            "involution_right": self.involution_right,
            "rank": self.rank,
            "target_rank_qms": self.target_rank_qms,
            "target_rank_ms": self.target_rank_ms,
            "negative_control": self.negative_control,
            "verdict_qms": self.verdict_qms,
            "verdict_ms": self.verdict_ms,
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _involution_payload(observables, states, workers) -> dict:
    matrix = involution_matrix(observables, states, workers)
    return {
        "names": [obs.name for obs in observables],
        "max_rel": [[float(v) for v in row] for row in matrix],
    }


def verify_system(spec: SystemSpec | None = None, *, expression: str | None = None,
                  params: dict | None = None, n: int | None = None,
                  extra_family_name: str | None = None,
                  check_ms: bool | None = None, samples: int = 200,
                  seed: int = 0, bracket_tol: float = DEFAULT_BRACKET_TOL,
                  svd_cutoff: float = DEFAULT_SVD_CUTOFF,
                  workers: int = 1) -> VerificationReport:
    """Run the full verification battery for a catalogued or custom system.

    Exactly one of ``spec`` and ``expression`` must be given.  With
    ``check_ms=None`` the maximal-superintegrability check runs whenever
    extra integrals are available (catalogued unperturbed systems, or a
    custom Hamiltonian with ``extra_family_name``); ``check_ms=True``
    forces it -- on a perturbed system this tests the unperturbed
    sibling's candidates and is expected to fail, which is the
    loss-of-superintegrability witness.
    """
    if (spec is None) == (expression is None):
        raise ValueError("provide exactly one of spec= or expression=")
    notes: list[str] = []

    if spec is not None:
        n = spec.n
        h_obs = hamiltonian_observable(spec)
        family = integral_family(spec)
        universal = list(family.universal)
        system_doc = spec_to_dict(spec)
        tag = garnier_tag(spec)
        if tag:
            notes.append(f"tagged: {tag}")
        if family.extra:
            extras = list(family.extra)
        elif check_ms:
            extras = list(stale_extra_observables(spec))
            notes.append("extra integrals taken from the unperturbed system; "
                         "non-conservation is the expected witness")
        else:
            extras = []
        states = sample_states(spec, n, samples, seed)
    else:
        if n is None:
            raise ValueError("expression verification requires n=")
        params = dict(params or {})
        h_obs = expression_observable(expression, params, name="H")
        universal = list(universal_integrals(n))
        system_doc = {"expr": expression, "params": {k: float(v) for k, v in
                                                     sorted(params.items())}}
        if extra_family_name is not None:
            extras = [family_extra_observable(extra_family_name, i, n,
                                              omega=params.get("omega", 0.0),
                                              kappa=params.get("kappa", 0.0),
                                              h_obs=h_obs)
                      for i in range(1, n + 1)]
        else:
            extras = []
        states = sample_box(n, samples, seed)

    if n == 1:
        notes.append("n = 1 is degenerate: there are no chain integrals "
                     "and the verdict rests on rank alone")

    universal_stats = []
    jets = evaluate_grads([h_obs] + universal + extras, states, workers)
    h_jet = jets[0]
    universal_jets = jets[1:1 + len(universal)]
    extra_jets = jets[1 + len(universal):]
    for obs, jet in zip(universal, universal_jets):
        universal_stats.append(_pair_stats(f"{{H,{obs.name}}}", h_jet, jet, n))
    extra_stats = [_pair_stats(f"{{H,{obs.name}}}", h_jet, jet, n)
                   for obs, jet in zip(extras, extra_jets)]

    # Involution of {H} with each chain, including the shared top level.
    left_chain = [h_obs] + [obs for obs in universal if not obs.name.startswith("C_")]
    right_chain = [h_obs] + [casimir_observable(n, m, "right")
                             for m in range(2, n + 1)]
    if n >= 2:
        involution_left = _involution_payload(left_chain, states, workers)
        involution_right = _involution_payload(right_chain, states, workers)
    else:
        involution_left = {"names": [h_obs.name], "max_rel": [[0.0]]}
        involution_right = {"names": [h_obs.name], "max_rel": [[0.0]]}

    qms_set = [h_obs] + universal
    rank_qms = independence_rank(qms_set, states, svd_cutoff, workers)
    rank_payload = {
        "qms": rank_qms.rank,
        "singular_values_qms": list(rank_qms.singular_values),
        "ms": None,
        "singular_values_ms": [],
    }
    rank_ms = None
    if extras:
        rank_ms = independence_rank(qms_set + [extras[0]], states, svd_cutoff,
                                    workers)
        rank_payload["ms"] = rank_ms.rank
        rank_payload["singular_values_ms"] = list(rank_ms.singular_values)

    control = coordinate_observable("q", 1)
    control_stats = residual_grid(h_obs, control, states)
    control_ok = control_stats.max_rel > 100.0 * bracket_tol
    if not control_ok:
        notes.append("negative control commuted with H; the bracket "
                     "machinery is suspect and verdicts are forced to fail")

    target_qms = max(2 * n - 2, 0)
    target_ms = 2 * n - 1
    universal_ok = all(s.max_rel <= bracket_tol for s in universal_stats)
    qms_pass = universal_ok and rank_qms.rank >= target_qms and control_ok
    verdict_qms = "pass" if qms_pass else "fail"

    wants_ms = check_ms if check_ms is not None else bool(extras)
    if not wants_ms or not extras:
        verdict_ms = "not-applicable"
    else:
        extra_ok = all(s.max_rel <= bracket_tol for s in extra_stats)
        ms_pass = (extra_ok and rank_ms is not None
                   and rank_ms.rank >= target_ms and control_ok)
        verdict_ms = "pass" if ms_pass else "fail"

    return VerificationReport(
        system=system_doc,
        n=n,
        seed=seed,
        samples=samples,
        tolerances={"bracket_rel": bracket_tol, "svd_cutoff": svd_cutoff},
        universal_residuals=universal_stats,
        extra_residuals=extra_stats,
        involution_left=involution_left,
        involution_right=involution_right,
        rank=rank_payload,
        target_rank_qms=target_qms,
        target_rank_ms=target_ms,
        negative_control={"name": control.name, "max_rel": control_stats.max_rel},
        verdict_qms=verdict_qms,
        verdict_ms=verdict_ms,
        notes=notes,
    )
