"""Command line: ``puredirac verify`` runs identity suites, ``puredirac compute`` evaluates objects.

Exit codes: 0 success, 1 a verified identity exceeded its tolerance,
2 usage error, 3 the requested point lies outside an object's domain.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

import numpy as np

from .algebra import Multivector
from .errors import DomainError, UsageError
from .group import GroupDescriptor, GroupPoint, group_descriptor, pi_G
from .lie import builtin_algebra, cdybe_twist
from .linear import two_form
from .qham import conjugacy_class_space, exponential_orbit, liouville_volume
from .spinors import phi_G, psi_hat_G
from .verify import SCHEMA_VERSION, SUITE_NAMES, RunConfig, identity_ids, report_dict, report_text, run

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DOMAIN = 0, 1, 2, 3
COMPUTE_OBJECTS = ("cdybe-epsilon", "cartan-spinor", "gauss-spinor", "pi-g", "volume")
CITATIONS = {
    "cdybe-epsilon": "dynamical twist ε(ν) solving the classical dynamical Yang-Baxter equation",
    "cartan-spinor": "pure spinor φ_G = ℛ(1) of the Cartan-Dirac structure",
    "gauss-spinor": "pure spinor ψ̂_G of the Gauss-Dirac structure",
    "pi-g": "bivector π_G of the splitting (E_G, F_G)",
    "volume": "Liouville volume (exp(ω)∧Φ*ψ_G)^{[top]} of a q-Hamiltonian space",
}
# stream index for compute sampling, after the verification suites
COMPUTE_STREAM = len(SUITE_NAMES)


# ---------------------------------------------------------------------------
# argument types


def _group_arg(name: str) -> str:
    try:
        return group_descriptor(name).name
    except UsageError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _algebra_arg(name: str) -> str:
    try:
        return builtin_algebra(name).name
    except UsageError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _seed_arg(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("expected a positive number")
    return value


def _tol_arg(text: str) -> tuple[str, float]:
    key, sep, val = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError("tolerance overrides have the form ID=VALUE")
    if key not in identity_ids():
        raise argparse.ArgumentTypeError(f"unknown identity id {key!r}")
    return key, _positive_float(val)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="puredirac", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--group", type=_group_arg, default="su2", help="matrix group (default su2)")
    common.add_argument("--algebra", type=_algebra_arg, default=None, help="Lie algebra (default: the group's)")
    common.add_argument("--seed", type=_seed_arg, default=0, help="64-bit seed of the PCG64 streams")
    common.add_argument("--samples", type=_positive_int, default=20, help="sample points per identity")
    common.add_argument("--fd-step", type=_positive_float, default=1e-5, help="central finite-difference step")

    ver = sub.add_parser("verify", parents=[common], help="run identity suites")
    ver.add_argument("suite", choices=SUITE_NAMES + ("all",))
    ver.add_argument("--tol", type=_tol_arg, action="append", default=[], metavar="ID=VALUE")
    ver.add_argument("--report", choices=("text", "json"), default="text")

    comp = sub.add_parser("compute", parents=[common], help="evaluate a named object at a point")
    comp.add_argument("object", choices=COMPUTE_OBJECTS)
    comp.add_argument("--at", default="identity", help='"identity", coefficients "a,b,c" or a JSON matrix')
    comp.add_argument("--component", type=int, default=0, help="component of the group for coefficient points")
    comp.add_argument("--model", default=None, help="volume model, e.g. conj:su2:theta=1.0 or orbit:su2:r=1.5")
    comp.add_argument("--points", type=_positive_int, default=5, help="model points for the volume")
    return parser


# ---------------------------------------------------------------------------
# point and model parsing


def _scalar(text: str) -> complex:
    try:
        return complex(text.strip().replace(" ", ""))
    except ValueError:
        raise UsageError(f"cannot parse number {text!r}") from None


def _vector(values: Sequence[complex]) -> np.ndarray:
    arr = np.array(values, dtype=complex)
    return arr.real.copy() if not np.any(arr.imag) else arr


def parse_coefficients(text: str, dim: int) -> np.ndarray:
    coeffs = _vector([_scalar(part) for part in text.split(",")])
    if coeffs.shape != (dim,):
        raise UsageError(f"expected {dim} coefficients, got {coeffs.shape[0]}")
    return coeffs


def parse_point(text: str, group: GroupDescriptor, component: int = 0) -> GroupPoint:
    text = text.strip()
    if component and not 0 <= component <= len(group.component_reps):
        raise UsageError(f"{group.name} has no component {component}")
    if text == "identity":
        return group.point(None, component)
    if text.startswith("["):
        try:
            rows = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"cannot parse matrix: {exc}") from None
        m = np.array([[_scalar(str(x)) for x in row] for row in rows])
        m = m.real.copy() if not np.any(m.imag) else m
        if m.shape != (group.rep_dim, group.rep_dim):
            raise UsageError(f"expected a {group.rep_dim}×{group.rep_dim} matrix")
        return GroupPoint(group, m, None, group.component_of(m))
    xi = parse_coefficients(text, group.dim)
    if np.iscomplexobj(xi) and not group.is_complex:
        raise UsageError(f"{group.name} needs real coefficients")
    return group.point(xi, component)


def parse_model(spec: str, points: int, seed: int):
    parts = spec.split(":")
    if len(parts) != 3:
        raise UsageError("model has the form KIND:GROUP:key=value[,key=value]")
    kind, name, params = parts
    group = group_descriptor(name)
    values = {}
    for item in filter(None, params.split(",")):
        key, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"model parameter {item!r} is not key=value")
        values[key.strip()] = float(val)
    seq = np.random.SeedSequence(seed, spawn_key=(COMPUTE_STREAM, 0))
    rng = np.random.Generator(np.random.PCG64(seq))
    direction = np.eye(group.dim)[-1]
    if kind == "conj":
        _require_keys(values, {"theta"})
        g0 = group.point(values["theta"] * direction)
        return conjugacy_class_space(g0, points, rng)
    if kind == "orbit":
        _require_keys(values, {"r"})
        return exponential_orbit(values["r"] * direction, group, points, rng)
    raise UsageError(f"unknown model kind {kind!r}; use conj or orbit")


def _require_keys(values: dict, keys: set[str]) -> None:
    if set(values) != keys:
        raise UsageError(f"model parameters must be exactly {sorted(keys)}")


def _number(z: complex) -> dict:
    return {"re": float(np.real(z)), "im": float(np.imag(z))}


# ---------------------------------------------------------------------------
# commands


def _config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(args.group, args.algebra, args.seed, args.samples, dict(getattr(args, "tol", [])), args.fd_step)


def cmd_verify(args: argparse.Namespace) -> int:
    config = _config(args)
    rows = run(args.suite, config)
    if args.report == "json":
        print(json.dumps(report_dict(args.suite, config, rows), indent=2, ensure_ascii=False))
    else:
        print(report_text(args.suite, config, rows))
    return EXIT_OK if all(r.passed for r in rows) else EXIT_FAIL


def compute_object(args: argparse.Namespace) -> dict:
    obj = args.object
    group = group_descriptor(args.group)
    out = {"schema": SCHEMA_VERSION, "object": obj, "point": args.at, "group": group.name, "citation": CITATIONS[obj]}
    if obj == "cdybe-epsilon":
        alg = builtin_algebra(args.algebra) if args.algebra else group.algebra
        nu = parse_coefficients(args.at, alg.dim) if args.at != "identity" else np.zeros(alg.dim)
        if np.iscomplexobj(nu):
            raise UsageError("the dynamical twist is evaluated at real coefficients")
        out["algebra"] = alg.name
        out["value"] = cdybe_twist(alg, nu).epsilon.to_dict()
        return out
    if obj == "volume":
        if not args.model:
            raise UsageError("compute volume needs --model")
        model = parse_model(args.model, args.points, args.seed)
        out.update(point=args.model, group=model.group.name)
        out["value"] = [dict(label=pt.label, **_number(liouville_volume(model, pt))) for pt in model.points]
        return out
    gp = parse_point(args.at, group, args.component)
    if obj == "cartan-spinor":
        value: Multivector = phi_G(gp)
    elif obj == "gauss-spinor":
        value = psi_hat_G(gp)
    else:
        value = two_form(pi_G(gp))
    out["value"] = value.to_dict()
    return out


def cmd_compute(args: argparse.Namespace) -> int:
    print(json.dumps(compute_object(args), indent=2, ensure_ascii=False))
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "verify":
            return cmd_verify(args)
        return cmd_compute(args)
    except DomainError as exc:
        print(f"puredirac: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"puredirac: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
