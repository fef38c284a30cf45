"""Command-line front end.

Exit codes: 0 success, 2 usage error, 3 validation error, 4 numerical
non-convergence.
"""

from __future__ import annotations

import argparse
import json
import re
import sys

import numpy as np

from . import bounds, channels, finite_dim, fock_sim, stretching
from .channels import ChannelKind
from .errors import ConvergenceError, ValidationError
from .gaussian_core import GaussianState, make_state

EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_NUMERICAL = 4

_COMPLEX = re.compile(r"^\s*([+-]?[0-9.eE+-]*?[0-9.])\s*([+-])\s*([0-9.eE+-]+)\s*i\s*$")


def parse_complex(text: str) -> complex:
    """Parse ``RE+IMi`` (e.g. ``0.8+0.0i`` or ``-1-0.5i``); a bare real is accepted."""
    m = _COMPLEX.match(text)
    if m:
        re_part, sign, im_part = m.groups()
        try:
            return complex(float(re_part), float(sign + im_part))
        except ValueError:
            pass
    try:
        return complex(float(text))
    except ValueError:
        raise ValidationError(f"cannot parse complex literal {text!r}; expected RE+IMi") from None


def parse_json(text: str) -> dict:
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON channel spec: {exc}") from None
    if not isinstance(spec, dict):
        raise ValidationError("channel spec must be a JSON object")
    return spec


def parse_input(text: str) -> tuple[str, object]:
    """``coherent:RE+IMi`` or ``fock:n`` (``vacuum`` is ``fock:0``)."""
    if text == "vacuum":
        return "fock", 0
    kind, _, value = text.partition(":")
    if kind == "coherent":
        return "coherent", parse_complex(value)
    if kind == "fock":
        try:
            n = int(value)
        except ValueError:
            raise ValidationError(f"photon number must be an integer, got {value!r}") from None
        if n < 0:
            raise ValidationError("photon number must be non-negative")
        return "fock", n
    raise ValidationError(f"unknown input {text!r}; expected coherent:RE+IMi or fock:n")


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def _matrix_lines(name: str, mat) -> list[str]:
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    rows = ["[" + ", ".join(_fmt(v) for v in row) + "]" for row in mat]
    return [f"{name} = " + rows[0]] + [" " * (len(name) + 3) + r for r in rows[1:]]


def _emit(args, payload: dict, lines: list[str]) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        print("\n".join(lines))


# ---------------------------------------------------------------------------
# handlers


def cmd_channel_compose(args) -> int:
    first = channels.triplet_from_dict(parse_json(args.first))
    second = channels.triplet_from_dict(parse_json(args.second))
    out = channels.compose(first, second)
    kind = channels.classify(out)
    ok, margin = channels.is_physical(out)
    payload = {"triplet": out.to_dict(), "classification": kind.to_dict(), "physical": ok, "margin": margin}
    lines = _matrix_lines("K", out.K) + _matrix_lines("m", out.m) + _matrix_lines("alpha", out.alpha)
    lines += [f"classification: {json.dumps(kind.to_dict(), sort_keys=True)}", f"physical: {ok} (margin {_fmt(margin)})"]
    _emit(args, payload, lines)
    return 0


def cmd_channel_classify(args) -> int:
    kind = channels.kind_from_dict(parse_json(args.spec))
    _emit(args, {"classification": kind.to_dict()}, [f"classification: {json.dumps(kind.to_dict(), sort_keys=True)}"])
    return 0


def cmd_channel_check(args) -> int:
    triplet = channels.triplet_from_dict(parse_json(args.spec))
    ok, margin = channels.is_physical(triplet)
    _emit(args, {"physical": ok, "margin": margin}, [f"physical: {ok}", f"margin: {_fmt(margin)} (tolerance 1e-10)"])
    return 0 if ok else EXIT_VALIDATION


def _plan_from_args(args) -> stretching.StretchPlan:
    return stretching.make_plan(channels.kind_from_dict(parse_json(args.target)), args.xi)


def _plan_lines(plan: stretching.StretchPlan) -> list[str]:
    r = plan.resource_channel
    lines = [f"target: {json.dumps(plan.target.to_dict(), sort_keys=True)}", f"xi: {_fmt(plan.xi)}"]
    if r.is_loss:
        lines.append(f"resource: {r.tag} eta {_fmt(r.eta)} excess_noise {_fmt(r.excess_noise)}")
    else:
        lines.append(f"resource: {r.tag} gain {_fmt(r.gain)} excess_noise {_fmt(r.excess_noise)}")
    if plan.post_channel is not None:
        lines.append(f"post-processing: {json.dumps(plan.post_channel.to_dict(), sort_keys=True)}")
    lines += [
        f"gain: {_fmt(plan.gain)}",
        f"achieved: {json.dumps(plan.achieved.to_dict(), sort_keys=True)}",
        f"exact: {str(plan.exact).lower()}",
        f"residual_noise: {_fmt(plan.residual_noise)}",
    ]
    return lines


def cmd_stretch_plan(args) -> int:
    plan = _plan_from_args(args)
    payload = plan.to_dict()
    payload["achieved_triplet"] = stretching.achieved_channel(plan).to_dict()
    _emit(args, payload, _plan_lines(plan))
    return 0


def fock_oracle(plan: stretching.StretchPlan, rho: fock_sim.FockOperator) -> fock_sim.FockOperator:
    """Direct Fock-space action of the channel the plan should realise."""
    if plan.achieved.tag != "other":
        return fock_sim.apply_channel_fock(plan.achieved, rho)
    out = fock_sim.apply_channel_fock(ChannelKind.amplifier(1.0, plan.residual_noise), rho)
    return fock_sim.apply_channel_fock(plan.post_channel, out)


def cmd_stretch_verify_fock(args) -> int:
    plan = _plan_from_args(args)
    kind, value = parse_input(args.input)
    cutoff = args.cutoff
    if kind == "coherent":
        ket = fock_sim.make_ket("coherent", cutoff, alpha=value)
    else:
        ket = fock_sim.make_ket("fock", cutoff, n=value)
    rho = ket.density()
    grid = fock_sim.default_grid(plan.xi, rho)
    if args.grid_radius is not None or args.grid_step is not None:
        grid = fock_sim.Grid(
            args.grid_radius if args.grid_radius is not None else grid.radius,
            args.grid_step if args.grid_step is not None else grid.step,
            grid.center,
        )
    res = fock_sim.integrate_stretch(plan, rho, grid, fixed_step=args.fixed_step)
    oracle = fock_oracle(plan, rho)
    td = fock_sim.distance(res.rho, oracle, "trace")
    last_change = res.step_history[-1][1]
    payload = {
        "plan": plan.to_dict(),
        "input": args.input,
        "cutoff": cutoff,
        "grid": {"radius": res.grid.radius, "step": res.grid.step, "center": list(res.grid.center)},
        "trace": res.trace,
        "trace_distance": td,
        "step_change": last_change,
        "input_norm_deficit": ket.norm_deficit,
        "tmss_rows": res.tmss_rows,
        "tmss_tail": plan.xi ** (2 * res.tmss_rows),
        "oracle_trace": oracle.trace,
    }
    lines = _plan_lines(plan) + [
        f"input: {args.input} (cutoff {cutoff}, norm deficit {ket.norm_deficit:.2e})",
        f"grid: radius {_fmt(res.grid.radius)} step {_fmt(res.grid.step)}"
        + (f" (last halving changed output by {last_change:.2e})" if last_change is not None else " (fixed)"),
        f"tmss rows: {res.tmss_rows} (tail {plan.xi ** (2 * res.tmss_rows):.1e})",
        f"output trace: {_fmt(res.trace)} +- {abs(1 - res.trace):.1e}",
        f"oracle trace: {_fmt(oracle.trace)}",
        f"trace distance to oracle: {td:.3e}",
    ]
    _emit(args, payload, lines)
    return 0


def _gaussian_input(text: str) -> GaussianState:
    kind, value = parse_input(text)
    if kind == "coherent":
        return make_state("coherent", alpha=value)
    if value != 0:
        raise ValidationError("the Gaussian simulator accepts coherent inputs or fock:0 (vacuum) only")
    return make_state("vacuum")


def cmd_stretch_verify_mc(args) -> int:
    plan = _plan_from_args(args)
    state = _gaussian_input(args.input)
    res = stretching.simulate_locc_gaussian(plan, state, args.samples, args.seed)
    pred = stretching.predicted_output(plan, state)
    payload = {
        "plan": plan.to_dict(),
        "input": args.input,
        "result": res.to_dict(),
        "predicted_mean": pred.mean.tolist(),
        "predicted_cov": pred.cov.tolist(),
    }
    lines = _plan_lines(plan) + [f"input: {args.input}, samples {args.samples}, seed {args.seed}"]
    for i, q in enumerate("xp"):
        lines.append(
            f"mean[{q}]: empirical {_fmt(res.empirical_mean[i])} +- {res.stderr_mean[i]:.2e}, predicted {_fmt(pred.mean[i])}"
        )
    for i, j in ((0, 0), (0, 1), (1, 1)):
        lines.append(
            f"cov[{'xp'[i]}{'xp'[j]}]: empirical {_fmt(res.empirical_cov[i, j])} +- {res.stderr_cov[i, j]:.2e},"
            f" predicted {_fmt(pred.cov[i, j])}"
        )
    _emit(args, payload, lines)
    return 0


def cmd_bound(args) -> int:
    value = bounds.plob_bound(args.eta)
    _emit(args, {"eta": args.eta, "bound": value}, [_fmt(value)])
    return 0


def sweep_csv(rows) -> str:
    out = ["xi,eta,excess_noise,log_negativity"]
    out += [",".join(_fmt(v) for v in (r.xi, r.eta, r.excess_noise, r.log_negativity)) for r in rows]
    return "\n".join(out) + "\n"


def cmd_sweep(args) -> int:
    if args.steps < 1:
        raise ValidationError("steps must be positive")
    xis = np.linspace(args.xi_from, args.xi_to, args.steps) if args.steps > 1 else np.array([args.xi_from])
    rows = bounds.negativity_sweep(args.eta, args.excess_noise, xis)
    text = sweep_csv(rows)
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text)
        if not args.json:
            print(f"wrote {len(rows)} rows to {args.out}")
        else:
            print(json.dumps({"rows": len(rows), "out": args.out}, sort_keys=True))
    else:
        sys.stdout.write(text)
    return 0


def parse_finite_channel(text: str, d: int):
    kind, _, value = text.partition(":")
    try:
        if kind == "pauli":
            return finite_dim.weyl_channel([float(v) for v in value.split(",")], d)
        if kind == "amplitude-damping":
            if d != 2:
                raise ValidationError("amplitude damping is defined for qubits (--dim 2)")
            return finite_dim.amplitude_damping(float(value))
        if kind == "depolarizing":
            return finite_dim.depolarizing(float(value), d)
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"cannot parse channel parameters {value!r}") from None
    raise ValidationError(f"unknown finite channel {text!r}")


def cmd_finite_stretch_check(args) -> int:
    kraus = parse_finite_channel(args.channel, args.dim)
    cert = finite_dim.stretch_check(kraus, args.dim)
    corr = None if cert.corrections is None else {f"{a},{b}": list(v) for (a, b), v in cert.corrections.items()}
    lines = [f"stretchable: {str(cert.stretchable).lower()}"]
    if corr:
        lines += [f"  k=({k}) -> U=sigma({v[0]},{v[1]})" for k, v in corr.items()]
    _emit(args, {"stretchable": cert.stretchable, "corrections": corr}, lines)
    return 0


# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")

    p = _Parser(prog="cvstretch", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ch = sub.add_parser("channel", help="Gaussian channel algebra").add_subparsers(dest="action", required=True)
    c = ch.add_parser("compose", parents=[common], help="triplet of second o first")
    c.add_argument("--first", required=True)
    c.add_argument("--second", required=True)
    c.set_defaults(func=cmd_channel_compose)
    c = ch.add_parser("classify", parents=[common])
    c.add_argument("--spec", required=True)
    c.set_defaults(func=cmd_channel_classify)
    c = ch.add_parser("check", parents=[common], help="physicality margin")
    c.add_argument("--spec", required=True)
    c.set_defaults(func=cmd_channel_check)

    st = sub.add_parser("stretch", help="finite-energy stretching").add_subparsers(dest="action", required=True)
    s = st.add_parser("plan", parents=[common])
    s.add_argument("--target", required=True)
    s.add_argument("--xi", type=float, required=True)
    s.set_defaults(func=cmd_stretch_plan)
    s = st.add_parser("verify-fock", parents=[common], help="Fock-space integration against the direct channel")
    s.add_argument("--target", required=True)
    s.add_argument("--xi", type=float, required=True)
    s.add_argument("--input", required=True)
    s.add_argument("--cutoff", type=int, default=fock_sim.DEFAULT_CUTOFF)
    s.add_argument("--grid-radius", type=float)
    s.add_argument("--grid-step", type=float)
    s.add_argument("--fixed-step", action="store_true", help="skip step halving")
    s.set_defaults(func=cmd_stretch_verify_fock)
    s = st.add_parser("verify-mc", parents=[common], help="Gaussian Monte-Carlo of the protocol")
    s.add_argument("--target", required=True)
    s.add_argument("--xi", type=float, required=True)
    s.add_argument("--input", required=True)
    s.add_argument("--samples", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_stretch_verify_mc)

    b = sub.add_parser("bound", parents=[common], help="-log2(1 - eta)")
    b.add_argument("--eta", type=float, required=True)
    b.set_defaults(func=cmd_bound)

    w = sub.add_parser("sweep", parents=[common], help="log-negativity of finite-energy Choi states")
    w.add_argument("--eta", type=float, required=True)
    w.add_argument("--excess-noise", type=float, default=0.0)
    w.add_argument("--xi-from", type=float, required=True)
    w.add_argument("--xi-to", type=float, required=True)
    w.add_argument("--steps", type=int, required=True)
    w.add_argument("--out")
    w.set_defaults(func=cmd_sweep)

    f = sub.add_parser("finite", help="finite-dimensional oracle").add_subparsers(dest="action", required=True)
    s = f.add_parser("stretch-check", parents=[common])
    s.add_argument("--channel", required=True, help="pauli:p0,p1,... | amplitude-damping:g | depolarizing:p")
    s.add_argument("--dim", type=int, default=2)
    s.set_defaults(func=cmd_finite_stretch_check)
    return p


def execute(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConvergenceError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main() -> None:
    sys.exit(execute())
