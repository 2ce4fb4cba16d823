"""Command-line harness: ``malab <subcommand> [options]``.

Exit codes: 0 on success, 1 on a domain error (one line
``error: <Kind>: <message>`` on stderr), 2 on usage or configuration errors.
Tables go to stdout as CSV unless ``--out`` is given; reports are JSON with
sorted keys.  ``MA_LAB_SEED`` sets the default seed of randomized inputs.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DomainError, MalabError

SUBCOMMANDS = (
    "weight-check", "lux-norm", "legendre", "radial-forward", "radial-inverse",
    "radial-integrability", "rigidity", "construct-chi", "trick-constant", "solve-ma",
    "moser-trace", "energy-check", "skoda", "envelope", "reduction-check", "beta-bounds",
    "operator-check", "domination", "osc-experiment",
)


class UsageError(Exception):
    """Bad configuration; reported with exit code 2."""


def default_seed():
    raw = os.environ.get("MA_LAB_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"MA_LAB_SEED must be an integer, got {raw!r}") from None


def load_schema():
    text = resources.files("malab").joinpath("schemas/experiment.schema.json").read_text()
    return json.loads(text)


def load_config(path):
    """Read and schema-validate an experiment config; unknown keys are rejected."""
    import jsonschema

    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    try:
        jsonschema.validate(cfg, load_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise UsageError(f"{path}: {where}: {exc.message}") from None
    return cfg


# -- shared input helpers -------------------------------------------------------


def _num(v):
    """Float rounded to 12 significant digits, printed via repr."""
    return repr(float(f"{float(v):.12g}"))


def _emit(args, text):
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, obj):
    _emit(args, json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "value"):
        return o.value
    raise TypeError(f"not serializable: {type(o).__name__}")


def _csv(header, rows):
    lines = [",".join(header)]
    lines += [",".join(repr(float(v)) for v in r) for r in rows]
    return "\n".join(lines) + "\n"


def _weight(text):
    """``family:p:n`` (``p`` and ``n`` optional) to a WeightSpec."""
    from .weights import WeightSpec

    parts = text.split(":")
    if not 1 <= len(parts) <= 3:
        raise argparse.ArgumentTypeError(f"weight must be family[:p[:n]], got {text!r}")
    d = {"family": parts[0]}
    try:
        if len(parts) > 1:
            d["p"] = float(parts[1])
        if len(parts) > 2:
            d["n"] = int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number in weight {text!r}") from None
    return WeightSpec.from_dict(d)


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def random_density(grid, seed, amp=0.3):
    """Smooth positive density of mean one built from three random Fourier modes."""
    rng = np.random.default_rng(seed)
    X = grid.coords()
    v = np.zeros(grid.shape)
    for _ in range(3):
        k = rng.integers(-2, 3, size=grid.ndim)
        v += rng.uniform(-1, 1) * np.cos(2 * np.pi * sum(ki * xi for ki, xi in zip(k, X)) + rng.uniform(0, 2 * np.pi))
    v = 1.0 + amp * v / max(1.0, float(np.abs(v).max()))
    return grid.field(v / v.mean())


def _add_grid(p, N=32):
    p.add_argument("--n", type=int, default=1, choices=(1, 2), help="complex dimension of the torus")
    p.add_argument("--N", type=int, default=N, help="points per real axis (power of 2, >= 8)")


def _add_density(p, N=32):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--density", metavar="FILE", help="density field (.mafld)")
    src.add_argument("--random", type=int, metavar="SEED", default=None,
                     help="random smooth density (default seed from MA_LAB_SEED)")
    _add_grid(p, N)
    p.add_argument("--amp", type=float, default=0.3, help="relative amplitude of the random density")


def _density(args):
    from .grid import TorusGrid, read_field

    if args.density:
        return read_field(args.density)
    seed = default_seed() if args.random is None else args.random
    return random_density(TorusGrid(args.n, args.N), seed, args.amp)


def _solve(f):
    """Potential solving ``MA(phi) = b f``, sup-normalized; returns ``(phi, b)``."""
    from .solver import solve_ma_newton, solve_poisson_spectral

    if f.grid.n == 1:
        return solve_poisson_spectral(f), 1.0
    phi, rep = solve_ma_newton(f)
    return phi, rep.scale


def _potential(args):
    """``--field FILE`` or the solution of the ``--random`` density."""
    from .grid import read_field

    if getattr(args, "field", None):
        return read_field(args.field)
    return _solve(_density(args))[0]


def _add_potential(p, N=32):
    p.add_argument("--field", metavar="FILE", help="potential field (.mafld); default solves a random density")
    p.add_argument("--random", type=int, metavar="SEED", default=None, help="seed of the random density")
    p.add_argument("--density", help=argparse.SUPPRESS)
    _add_grid(p, N)
    p.add_argument("--amp", type=float, default=0.3, help="relative amplitude of the random density")


def _profile(args):
    from .radial import RadialProfile, read_profile_csv

    if getattr(args, "csv", None):
        return read_profile_csv(args.csv, args.n)
    return {
        "triple_log": RadialProfile.triple_log,
        "exponential": RadialProfile.exponential,
        "linear": RadialProfile.linear,
    }[args.profile](args.n)


def _add_profile(p):
    p.add_argument("--profile", choices=("triple_log", "exponential", "linear"), default="triple_log")
    p.add_argument("--csv", metavar="FILE", help="sampled profile with header t,chi,chi1,chi2")
    p.add_argument("--n", type=int, default=2, help="complex dimension")


def _tail(a):
    from .weights import TailFunction

    return TailFunction.power(a, s_min=0.5)


# -- subcommands ------------------------------------------------------------------


def cmd_weight_check(args):
    from .weights import WeightSpec, check_condition_K

    spec = WeightSpec.from_dict({"family": args.family, "p": args.p, "n": args.n})
    res = check_condition_K(spec)
    _emit(args, res.summary() + "\n")


def cmd_lux_norm(args):
    from .grid import read_field
    from .weights import DensitySample, luxembourg_norm

    path = Path(args.density)
    sample = DensitySample.from_field(read_field(path)) if path.suffix == ".mafld" else DensitySample.from_csv(path)
    _emit(args, _num(luxembourg_norm(sample, args.weight)) + "\n")


def cmd_legendre(args):
    from .weights import legendre_conjugate

    s = np.linspace(0.0, args.s_max, args.num)
    conj = legendre_conjugate(args.weight, s)
    _emit(args, _csv(["s", "conjugate", "argmax"], zip(conj.s, conj.values, conj.argmax)))


def cmd_radial_forward(args):
    from .radial import log_forward_density

    prof = _profile(args)
    x = np.linspace(math.log(args.t_min), math.log(args.t_max), args.num)
    logF = log_forward_density(prof, x)
    _emit(args, _csv(["t", "log_F"], zip(-np.exp(x), logF)))


def cmd_radial_inverse(args):
    from .radial import DensityProfile, inverse_profile

    if args.from_profile:
        args.profile = args.from_profile
        F = DensityProfile.from_profile(_profile(args))
    else:
        F = DensityProfile.constant(args.n)
    prof = inverse_profile(F, x_min=args.x_min, x_max=args.x_max, per_unit=args.per_unit)
    x = np.linspace(args.x_min, args.x_max, args.num)[1:-1]
    t = -np.exp(x)
    _emit(args, _csv(["t", "chi", "chi1", "chi2"], zip(t, prof.chi(t), prof.chi1(t), prof.chi2(t))))


def cmd_radial_integrability(args):
    from .radial import integrability_functional

    res = integrability_functional(_profile(args), _tail(args.h_power), log_abs_T=args.log_abs_T,
                                   doublings=args.doublings)
    lines = [
        f"value: {_num(res.value)}",
        f"verdict: {res.verdict.value}",
        "truncations: " + " ".join(_num(v) for v in res.values),
        "changes: " + " ".join(_num(v) for v in res.changes),
    ]
    _emit(args, "\n".join(lines) + "\n")


def cmd_rigidity(args):
    from dataclasses import asdict

    from .radial import rigidity_chain

    rep = rigidity_chain(_profile(args), args.p, log_abs_T=args.log_abs_T)
    d = asdict(rep)
    d.update(ratio=rep.ratio, holds=rep.holds, tension=rep.tension)
    _emit_json(args, d)


def cmd_construct_chi(args):
    from .reduction import construct_chi

    con = construct_chi(_tail(args.h_power), args.alpha, args.c, B=args.B, n=args.n)
    _emit_json(args, con.summary())


def cmd_trick_constant(args):
    from .reduction import TrickInputs, trick_constant

    inp = TrickInputs(args.a, args.b, args.delta, args.gamma, args.C1, args.fp_norm, args.n)
    _emit(args, _num(trick_constant(inp)) + "\n")


def cmd_solve_ma(args):
    from .grid import write_field
    from .solver import solve_ma_newton

    f = _density(args)
    phi, rep = solve_ma_newton(f, tol=args.tol)
    if args.save:
        write_field(args.save, phi)
    d = rep.to_dict()
    d.pop("wall_time")
    _emit_json(args, d)


def cmd_moser_trace(args):
    from .solver import MoserSchedule, moser_trace

    phi = _potential(args)
    if args.schedule_n == 1:
        radii = MoserSchedule.geometric(1.0, 2.0, args.K)
        tr = moser_trace(phi, radii, args.K)
    else:
        tr = moser_trace(phi, MoserSchedule(args.schedule_n, args.p), args.K)
    rows = [(k, r, v) for k, (r, v) in enumerate(zip(tr.radii, tr.norms))]
    text = _csv(["k", "r", "norm"], rows)
    text += f"# sup={tr.sup!r} monotone={tr.monotone} gap_above_1e3={tr.relative_gap()!r}\n"
    _emit(args, text)


def cmd_energy_check(args):
    from .solver import energy_chain_check

    f = _density(args)
    phi, b = _solve(f)
    shifted = phi.with_values(phi.values - 1.0)
    rows = []
    for r in args.r:
        chk = energy_chain_check(shifted, f * b, r)
        rows.append({"r": r, "lhs": chk.lhs, "rhs": chk.rhs, "slack": chk.slack, "small_r": chk.small_r})
    _emit_json(args, {"n": f.grid.n, "N": f.grid.N, "checks": rows})


def cmd_skoda(args):
    from .solver import skoda_alpha_scan

    phi = _potential(args)
    best, alphas, vals = skoda_alpha_scan(phi, args.alpha, args.cap)
    text = _csv(["alpha", "integral"], zip(alphas, vals))
    text += f"# largest alpha with integral <= {args.cap!r}: {best!r}\n"
    _emit(args, text)


def cmd_envelope(args):
    from .envelope import compute_envelope, save_envelope
    from .grid import TorusGrid, read_field

    if args.obstacle:
        h = read_field(args.obstacle)
    else:
        seed = default_seed() if args.random is None else args.random
        f = random_density(TorusGrid(args.n, args.N), seed, 1.0)
        h = f.with_values(args.amp * (f.values - 1.0))
    res = compute_envelope(h, backend=args.backend)
    if args.save:
        save_envelope(args.save, res)
    d = res.summary()
    d.pop("backend")
    _emit_json(args, d)


def cmd_reduction_check(args):
    from .envelope import reduction_check
    from .operators import OperatorSpec, solve_g_equation

    f = _density(args)
    spec = OperatorSpec(args.kind, f.grid.n, args.k, args.delta)
    if f.grid.n == 1:
        phi, c = solve_g_equation(spec, f)
    elif spec.kind.value == "GeometricMean":
        phi, b = _solve(f)
        c = math.sqrt(b)
    else:
        raise DomainError("n=2 reduction checks use GeometricMean")
    _emit_json(args, reduction_check(phi, spec, args.delta, c, f))


def cmd_beta_bounds(args):
    from .reduction import beta_bounds_check, choose_lambda_M
    from .weights import DensitySample, eval_weight, inverse_conjugate_array, luxembourg_norm

    f = _density(args)
    phi, b = _solve(f)
    f = f * b
    w = args.weight
    h = lambda y: inverse_conjugate_array(w, np.asarray(y, dtype=float))[0]
    fnorm = luxembourg_norm(DensitySample.from_field(f), w)
    B_HY = fnorm * (float(eval_weight(w, 1.0)) + float(np.mean(-phi.values)))
    if args.lam is None or args.M is None:
        lam, M = choose_lambda_M(args.delta, args.c, f.grid.n, B_HY, 1.0, h)
    else:
        lam, M = args.lam, args.M
    rep = beta_bounds_check(phi, f, lam, M, args.delta, args.c, f.grid.n, B_HY, h)
    rep["B_HY"] = B_HY
    _emit_json(args, rep)


def cmd_operator_check(args):
    from .operators import OperatorSpec, check_conditions

    spec = OperatorSpec(args.kind, args.n, args.k, args.delta)
    seed = default_seed() if args.seed is None else args.seed
    _emit_json(args, check_conditions(spec, args.samples, seed))


def cmd_domination(args):
    from .grid import TorusGrid, read_field
    from .operators import OperatorSpec, domination_check

    if args.phi and args.psi:
        phi, psi = read_field(args.phi), read_field(args.psi)
    else:
        seed = default_seed() if args.random is None else args.random
        g = TorusGrid(args.n, args.N)
        phi = _solve(random_density(g, seed))[0]
        psi = _solve(random_density(g, seed + 1))[0]
    spec = OperatorSpec(args.kind, phi.grid.n, args.k)
    _emit_json(args, domination_check(phi, psi, spec, args.c))


def cmd_osc_experiment(args):
    from .solver import experiment_csv, osc_experiment
    from .weights import WeightSpec

    cfg = load_config(args.config) if args.config else {"command": "osc-experiment"}
    grid = cfg.get("grid", {})
    n = grid.get("n", args.n)
    N = grid.get("N", args.N)
    family = cfg.get("family", args.family)
    exponent = cfg.get("exponent", args.exponent)
    eps = cfg.get("eps", args.eps)
    p = cfg.get("p", args.p)
    if "weights" in cfg:
        weights = [WeightSpec.from_dict(d) for d in cfg["weights"]]
    else:
        weights = args.weight or [WeightSpec.from_dict({"family": "LogP", "p": n + 1.0, "n": n})]
    jobs = args.jobs if args.jobs is not None else cfg.get("jobs", 1)
    if cfg.get("output") and not args.out:
        args.out = cfg["output"]
    rows = osc_experiment(family, eps, weights, p, n=n, N=N, exponent=exponent, jobs=jobs)
    failed = [r for r in rows if r.failed]
    _emit(args, experiment_csv(rows, weights))
    if failed:
        raise DomainError(f"{len(failed)} sweep point(s) failed: {failed[0].failed}")


# -- parser -----------------------------------------------------------------------


def build_parser():
    from .weights import WeightSpec

    ap = argparse.ArgumentParser(prog="malab", description="Numerical laboratory for complex Monge-Ampere estimates.")
    sub = ap.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.set_defaults(func=fn)
        return p

    default_w = WeightSpec.from_dict({"family": "PowerP", "p": 2.0, "n": 1})

    p = add("weight-check", cmd_weight_check, "Classify a weight family against the integrability condition (K).")
    p.add_argument("--family", required=True, help="PowerP, LogP or LogLogP")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--out")

    p = add("lux-norm", cmd_lux_norm, "Luxembourg norm of a density sample (f,m CSV or .mafld field).")
    p.add_argument("--density", required=True, metavar="FILE")
    p.add_argument("--weight", type=_weight, default=default_w, help="family[:p[:n]], default PowerP:2:1")
    p.add_argument("--out")

    p = add("legendre", cmd_legendre, "Tabulate the convex conjugate of a weight on a slope grid.")
    p.add_argument("--weight", type=_weight, default=default_w, help="family[:p[:n]]")
    p.add_argument("--s-max", type=float, default=10.0)
    p.add_argument("--num", type=int, default=101)
    p.add_argument("--out")

    p = add("radial-forward", cmd_radial_forward, "Log radial density of a convex profile at log-spaced points.")
    _add_profile(p)
    p.add_argument("--t-min", type=float, default=1.0, help="smallest |t|")
    p.add_argument("--t-max", type=float, default=1e3, help="largest |t|")
    p.add_argument("--num", type=int, default=11)
    p.add_argument("--out")

    p = add("radial-inverse", cmd_radial_inverse, "Recover a profile from a radial density; writes t,chi,chi1,chi2.")
    p.add_argument("--from-profile", choices=("triple_log", "exponential", "linear"),
                   help="use the forward density of this profile (default: the constant density)")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--x-min", type=float, default=-6.0)
    p.add_argument("--x-max", type=float, default=8.0)
    p.add_argument("--per-unit", type=int, default=64)
    p.add_argument("--num", type=int, default=12)
    p.add_argument("--out")

    p = add("radial-integrability", cmd_radial_integrability,
            "Truncated integrability functional with h(s) = s^a and its doubling study.")
    _add_profile(p)
    p.add_argument("--h-power", type=float, default=0.5, help="exponent a of h(s) = s^a")
    p.add_argument("--log-abs-T", type=float, default=150.0)
    p.add_argument("--doublings", type=int, default=3)
    p.add_argument("--out")

    p = add("rigidity", cmd_rigidity, "Integration-by-parts and Holder chain on [T, -e] for a profile.")
    _add_profile(p)
    p.add_argument("--p", type=float, default=1.5)
    p.add_argument("--log-abs-T", type=float, default=50.0)
    p.add_argument("--out")

    p = add("construct-chi", cmd_construct_chi, "Build the bounded convex profile from the tail h(s) = s^a.")
    p.add_argument("--h-power", type=float, default=2.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--B", type=float, default=None, help="default: smallest admissible power of 2")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--out")

    p = add("trick-constant", cmd_trick_constant, "Constant C of the comparison principle.")
    for name in ("a", "b", "delta", "gamma", "C1"):
        p.add_argument(f"--{name}", type=float, required=True)
    p.add_argument("--fp-norm", type=float, required=True)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--out")

    p = add("solve-ma", cmd_solve_ma, "Damped Newton solve of MA(phi) = b f; prints the solve report.")
    _add_density(p)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--save", metavar="FILE", help="write the solution as .mafld")
    p.add_argument("--out")

    p = add("moser-trace", cmd_moser_trace, "L^r norms of a potential along the Moser exponent schedule.")
    _add_potential(p)
    p.add_argument("--schedule-n", type=int, default=2, help="dimension of the schedule (1: geometric doubling)")
    p.add_argument("--p", type=float, default=3.0)
    p.add_argument("--K", type=int, default=20)
    p.add_argument("--out")

    p = add("energy-check", cmd_energy_check, "Both sides of the energy inequality for the solution shifted below -1.")
    _add_density(p)
    p.add_argument("--r", type=_float_list, default=[1.0, 2.0], help="comma-separated exponents")
    p.add_argument("--out")

    p = add("skoda", cmd_skoda, "Exponential integrals mean exp(-alpha phi) over an alpha scan.")
    _add_potential(p)
    p.add_argument("--alpha", type=_float_list, default=[0.5, 1.0, 2.0, 4.0])
    p.add_argument("--cap", type=float, default=2.0)
    p.add_argument("--out")

    p = add("envelope", cmd_envelope, "Omega-psh envelope of an obstacle by projected Gauss-Seidel.")
    p.add_argument("--obstacle", metavar="FILE")
    p.add_argument("--random", type=int, metavar="SEED", default=None)
    _add_grid(p, 16)
    p.add_argument("--amp", type=float, default=0.05, help="amplitude of the random obstacle")
    p.add_argument("--backend", choices=("cython", "python"), default=None)
    p.add_argument("--save", metavar="PREFIX", help="write PREFIX.mafld and PREFIX.json")
    p.add_argument("--out")

    p = add("reduction-check", cmd_reduction_check, "Compare delta^n MA(P(phi)) with c^n f on the contact set.")
    _add_density(p, 16)
    p.add_argument("--kind", default="ArithmeticMean", choices=("ArithmeticMean", "GeometricMean", "SigmaKRoot"))
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--out")

    p = add("beta-bounds", cmd_beta_bounds, "Choose (lambda, M) and check both integral bounds on int beta_M(phi) f.")
    _add_density(p)
    p.add_argument("--weight", type=_weight, default=default_w)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--lam", type=float, default=None, help="fix lambda instead of searching")
    p.add_argument("--M", type=float, default=None, help="fix M instead of searching")
    p.add_argument("--out")

    p = add("operator-check", cmd_operator_check, "Sampled symmetry, ellipticity and majorization of an operator.")
    p.add_argument("--kind", required=True, choices=("SigmaKRoot", "GeometricMean", "ArithmeticMean"))
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out")

    p = add("domination", cmd_domination, "Minimum-point comparison for the domination principle.")
    p.add_argument("--phi", metavar="FILE")
    p.add_argument("--psi", metavar="FILE")
    p.add_argument("--random", type=int, metavar="SEED", default=None)
    _add_grid(p)
    p.add_argument("--kind", default="GeometricMean", choices=("SigmaKRoot", "GeometricMean", "ArithmeticMean"))
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--c", type=float, default=0.5)
    p.add_argument("--out")

    p = add("osc-experiment", cmd_osc_experiment, "Oscillation sweep over a degenerating density family; CSV per eps.")
    p.add_argument("--config", metavar="FILE", help="JSON config validated against the experiment schema")
    p.add_argument("--family", default="power_sine", choices=("power_sine", "constant"))
    p.add_argument("--exponent", type=float, default=0.4)
    p.add_argument("--eps", type=_float_list, default=[1e-1, 1e-2, 1e-3, 1e-4])
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--weight", type=_weight, action="append", help="repeatable family[:p[:n]]")
    _add_grid(p, 64)
    p.add_argument("--jobs", type=int, default=None, help="worker threads; output order is fixed")
    p.add_argument("--out")
    return ap


def run(argv=None):
    """Parse ``argv`` and run one subcommand; returns the exit code."""
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except UsageError as exc:
        print(f"error: ConfigError: {exc}", file=sys.stderr)
        return 2
    except MalabError as exc:
        msg = " ".join(str(exc).split())
        print(f"error: {exc.kind}: {msg}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: IOError: {exc.strerror or exc}: {exc.filename}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
