"""Command-line interface.

Subcommands:

* ``catalog``       -- list the built-in systems, their parameters and status
* ``define``        -- parse and normalise a custom Hamiltonian expression
* ``verify``        -- run the superintegrability battery, write a JSON report
* ``simulate``      -- integrate a trajectory, write CSV, print drift summary
* ``bracket-table`` -- print the pairwise bracket-residual matrix

Exit codes: 0 success/verdict passed, 1 usage or domain error, 2 numeric
failure (sampling, integration, verdict failed), 3 expression parse error.

Flags override values from ``--config`` (a JSON document with the same
key names), which override built-in defaults.  The environment variable
``SUPEROSC_SEED`` supplies the default seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .catalog import (
    KINDS,
    SystemSpec,
    domain_condition,
    extra_family,
    formula_text,
    garnier_tag,
    hamilton_domain_ok,
    hamiltonian_observable,
    integral_family,
    spec_from_dict,
    stale_extra_observables,
)
from .dynamics import integrate, write_csv
from .errors import (
    EvaluationDomainError,
    ExprError,
    SamplingError,
    StepFailureError,
    SuperoscError,
)
from .expr import parse, symbols_of, unparse
from .phase import PhaseState
from .verify import (
    DEFAULT_BRACKET_TOL,
    DEFAULT_SVD_CUTOFF,
    involution_matrix,
    sample_states,
    verify_system,
)

__all__ = ["main", "entry", "build_parser"]


class _Parser(argparse.ArgumentParser):
    # Usage problems exit with status 1 (argparse defaults to 2, which this
    # tool reserves for numeric failures).
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _default_seed() -> int:
    raw = os.environ.get("SUPEROSC_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        return 0


def _parse_floats(text: str) -> tuple[float, ...]:
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError:
        raise ValueError(f"expected a comma-separated list of numbers, got {text!r}")


def _parse_params(text: str) -> dict:
    table: dict[str, float] = {}
    if not text.strip():
        return table
    for item in text.split(","):
        if "=" not in item:
            raise ValueError(f"parameter bindings look like name=value, got {item!r}")
        name, value = item.split("=", 1)
        table[name.strip()] = float(value)
    return table


def build_parser() -> _Parser:
    parser = _Parser(prog="superosc",
                     description="Superintegrable oscillator toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    cat = sub.add_parser("catalog", help="list built-in systems")
    cat.add_argument("--kind", choices=KINDS)
    cat.add_argument("--omega", type=float)
    cat.add_argument("--deltas", type=str)

    define = sub.add_parser("define", help="check a custom Hamiltonian expression")
    define.add_argument("--expr", required=True)
    define.add_argument("--params", type=str, default="")
    define.add_argument("--out", type=str)

    ver = sub.add_parser("verify", help="verify superintegrability")
    _add_system_flags(ver)
    ver.add_argument("--expr", type=str)
    ver.add_argument("--params", type=str)
    ver.add_argument("--extra", type=str, dest="extra_family",
                     choices=("euclidean", "poincare", "beltrami", "darboux"),
                     help="extra-integral family for --expr systems")
    ver.add_argument("--ms", action="store_true",
                     help="also require the maximal-superintegrability verdict")
    ver.add_argument("--samples", type=int)
    ver.add_argument("--seed", type=int)
    ver.add_argument("--tol", type=float)
    ver.add_argument("--svd-cutoff", type=float, dest="svd_cutoff")
    ver.add_argument("--workers", type=int)
    ver.add_argument("--out", type=str)
    ver.add_argument("--config", type=str)

    sim = sub.add_parser("simulate", help="integrate a trajectory")
    _add_system_flags(sim)
    sim.add_argument("--q", type=str, help="initial positions, comma separated")
    sim.add_argument("--p", type=str, help="initial momenta, comma separated")
    sim.add_argument("--h", type=float, help="time step")
    sim.add_argument("--t-end", type=float, dest="t_end")
    sim.add_argument("--stride", type=int)
    sim.add_argument("--watch", type=str)
    sim.add_argument("--out", type=str)
    sim.add_argument("--config", type=str)

    table = sub.add_parser("bracket-table", help="pairwise bracket residuals")
    _add_system_flags(table)
    table.add_argument("--samples", type=int)
    table.add_argument("--seed", type=int)
    table.add_argument("--config", type=str)

    return parser


def _add_system_flags(parser) -> None:
    parser.add_argument("--kind", type=str, choices=KINDS)
    parser.add_argument("--n", type=int)
    parser.add_argument("--omega", type=float)
    parser.add_argument("--kappa", type=float)
    parser.add_argument("--a", type=float)
    parser.add_argument("--deltas", type=str)


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path) as handle:
        data = json.load(handle)
    if not isinstance(data, dict):
        raise ValueError("config file must contain a JSON object")
    return data


def _pick(args, config: dict, key: str, default=None):
    value = getattr(args, key, None)
    if value is not None and value is not False:
        return value
    if key in config:
        return config[key]
    return default


def _spec_from_args(args, config: dict) -> SystemSpec | None:
    kind = _pick(args, config, "kind")
    if kind is None:
        return None
    deltas = _pick(args, config, "deltas", ())
    if isinstance(deltas, str):
        deltas = _parse_floats(deltas)
    doc = {
        "kind": kind,
        "n": _pick(args, config, "n", 3),
        "omega": _pick(args, config, "omega", 0.0),
        "kappa": _pick(args, config, "kappa", 0.0),
        "a": _pick(args, config, "a", 1.0),
        "deltas": tuple(deltas),
    }
    return spec_from_dict(doc)


# ---------------------------------------------------------------------------
# Subcommands

def cmd_catalog(args) -> int:
    kinds = [args.kind] if args.kind else list(KINDS)
    deltas = _parse_floats(args.deltas) if args.deltas else ()
    omega = args.omega if args.omega is not None else (0.0 if deltas == () else 1.0)
    for kind in kinds:
        print(f"{kind}")
        print(f"  form:        {formula_text(kind)}")
        print(f"  parameters:  {_parameter_schema(kind)}")
        print(f"  domain:      {_domain_text(kind)}")
        print(f"  status:      {_status_text(kind)}")
        if deltas and kind in ("euclidean-osc", "beltrami-osc"):
            probe = SystemSpec(kind, 3, omega=omega or 1.0,
                               kappa=-1.0 if kind == "beltrami-osc" else 0.0,
                               deltas=deltas)
            tag = garnier_tag(probe)
            if tag:
                print(f"  tag:         {tag} (omega and a single quartic "
                      "coefficient)")
        print()
    return 0


def _parameter_schema(kind: str) -> str:
    parts = ["n (dimension)"]
    if kind not in ("free-poincare", "free-beltrami", "free-darboux"):
        parts.append("omega >= 0")
        parts.append("deltas (anharmonic coefficients, may be empty)")
    if "poincare" in kind or "beltrami" in kind:
        parts.append("kappa (curvature; >0 sphere, <0 hyperbolic)")
    if "darboux" in kind:
        parts.append("a > 0 (deformation)")
    return ", ".join(parts)


def _domain_text(kind: str) -> str:
    probe = SystemSpec(kind, 2, omega=0.0 if kind.startswith("free") else 1.0,
                       kappa=1.0, a=1.0)
    return domain_condition(probe)


def _status_text(kind: str) -> str:
    if kind.startswith("free"):
        return ("geodesic flow; maximally superintegrable (extra integrals "
                "with omega = 0)")
    return ("maximally superintegrable when all deltas vanish; any non-zero "
            "delta keeps the 2N-3 chain integrals (quasi-maximal) but breaks "
            "the extra ones")


def cmd_define(args) -> int:
    params = _parse_params(args.params)
    node = parse(args.expr, declared_params=params)
    canonical = unparse(node)
    print(f"expression: {canonical}")
    used = sorted(symbols_of(node))
    print(f"symbols:    {', '.join(used) if used else '(none)'}")
    if params:
        bound = ", ".join(f"{k}={v:g}" for k, v in sorted(params.items()))
        print(f"parameters: {bound}")
    if args.out:
        doc = {"expr": canonical, "params": params}
        with open(args.out, "w") as handle:
            json.dump(doc, handle, indent=2)
            handle.write("\n")
        print(f"wrote {args.out}")
    return 0


def cmd_verify(args) -> int:
    config = _load_config(args.config)
    spec = _spec_from_args(args, config)
    expression = _pick(args, config, "expr")
    if (spec is None) == (expression is None):
        raise ValueError("verify needs exactly one of --kind or --expr")
    params = _pick(args, config, "params", {})
    if isinstance(params, str):
        params = _parse_params(params)
    seed = _pick(args, config, "seed", _default_seed())
    samples = _pick(args, config, "samples", 200)
    tol = _pick(args, config, "tol", DEFAULT_BRACKET_TOL)
    cutoff = _pick(args, config, "svd_cutoff", DEFAULT_SVD_CUTOFF)
    workers = _pick(args, config, "workers", os.cpu_count() or 1)
    check_ms = True if _pick(args, config, "ms", False) else None

    report = verify_system(
        spec,
        expression=expression,
        params=params,
        n=_pick(args, config, "n", 3) if spec is None else None,
        extra_family_name=_pick(args, config, "extra_family"),
        check_ms=check_ms,
        samples=int(samples),
        seed=int(seed),
        bracket_tol=float(tol),
        svd_cutoff=float(cutoff),
        workers=int(workers),
    )
    payload = report.to_json()
    out = _pick(args, config, "out")
    if out:
        with open(out, "w") as handle:
            handle.write(payload)
        print(f"wrote {out}")
    else:
        print(payload, end="")
    print(f"verdict: QMS {report.verdict_qms}, MS {report.verdict_ms}",
          file=sys.stderr)
    ok = report.verdict_qms == "pass"
    if check_ms:
        ok = ok and report.verdict_ms == "pass"
    return 0 if ok else 2


def cmd_simulate(args) -> int:
    config = _load_config(args.config)
    spec = _spec_from_args(args, config)
    if spec is None:
        raise ValueError("simulate needs --kind")
    q_text = _pick(args, config, "q")
    p_text = _pick(args, config, "p")
    if q_text is None or p_text is None:
        raise ValueError("simulate needs --q and --p initial data")
    q = _parse_floats(q_text) if isinstance(q_text, str) else tuple(q_text)
    p = _parse_floats(p_text) if isinstance(p_text, str) else tuple(p_text)
    if len(q) != spec.n or len(p) != spec.n:
        raise ValueError(f"initial data must have n={spec.n} entries per vector")
    state0 = PhaseState(np.asarray(q), np.asarray(p))
    if not np.all(hamilton_domain_ok(spec, state0.q)):
        print(f"error: initial state violates {domain_condition(spec)}",
              file=sys.stderr)
        return 1
    h = float(_pick(args, config, "h", 1e-3))
    t_end = float(_pick(args, config, "t_end", 10.0))
    stride = int(_pick(args, config, "stride", 100))
    watch_text = _pick(args, config, "watch", "all")
    watch = ([w.strip() for w in watch_text.split(",")]
             if isinstance(watch_text, str) else list(watch_text))
    out = _pick(args, config, "out", "trajectory.csv")

    traj = integrate(spec, state0, h, t_end, watch=watch + ["H"], stride=stride)
    write_csv(traj, out)
    print(f"wrote {out} ({len(traj.times)} rows)")
    for name, value in traj.max_drift().items():
        print(f"max drift {name}: {value:.3e}")
    if traj.status != "ok":
        print(f"error: integration failed at t = {traj.failure_time:g}",
              file=sys.stderr)
        return 2
    return 0


def cmd_bracket_table(args) -> int:
    config = _load_config(args.config)
    spec = _spec_from_args(args, config)
    if spec is None:
        raise ValueError("bracket-table needs --kind")
    seed = int(_pick(args, config, "seed", _default_seed()))
    samples = int(_pick(args, config, "samples", 100))
    states = sample_states(spec, spec.n, samples, seed)
    observables = [hamiltonian_observable(spec)]
    family = integral_family(spec)
    observables += list(family.universal)
    observables += list(family.extra) if family.extra else (
        list(stale_extra_observables(spec)) if spec.deltas else [])
    matrix = involution_matrix(observables, states)
    names = [obs.name for obs in observables]
    width = max(len(name) for name in names) + 2
    print(f"max relative bracket residuals over {samples} states "
          f"(seed {seed}, family {extra_family(spec)}):")
    print(" " * width + "".join(f"{name:>12}" for name in names))
    for name, row in zip(names, matrix):
        cells = "".join(f"{value:>12.2e}" for value in row)
        print(f"{name:<{width}}{cells}")
    return 0


# ---------------------------------------------------------------------------

_COMMANDS = {
    "catalog": cmd_catalog,
    "define": cmd_define,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "bracket-table": cmd_bracket_table,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    command = _COMMANDS[args.command]
    try:
        return command(args)
    except ExprError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (SamplingError, StepFailureError, EvaluationDomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, SuperoscError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
