"""Command-line front end.

    chanbound measure --theory ns --channel depolarizing:p=0.3 --monotone weight
    chanbound measure --theory stab --state T --monotone fidelity
    chanbound bound copies --r 1.17 --w 0 --f 0.5625 --eps 0.09
    chanbound fig --fig 2a --out fig2a.csv
    chanbound selftest

Exit codes: 0 success, 1 self-test failure, 2 usage or unsupported request,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import acceptance, bounds, channels as ch, figures, measures, qla, theories
from .config import DEFAULT
from .errors import DimensionError, DomainError, NumericalError, SolverError, UnsupportedError

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _fmt(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, measures.Infinite):
        return "inf"
    return f"{float(x):.10g}"


# ---------------------------------------------------------------- object specs
def _parse_spec(text: str) -> tuple[str, dict]:
    name, _, rest = text.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, eq, val = item.partition("=")
        if not eq:
            raise UsageError(f"expected key=value in {text!r}, got {item!r}")
        params[key.strip()] = val.strip()
    return name.strip().lower(), params


def _num(params: dict, key: str, default=None) -> float:
    if key not in params:
        if default is None:
            raise UsageError(f"missing parameter {key!r}")
        return default
    try:
        return float(params.pop(key))
    except ValueError as exc:
        raise UsageError(f"parameter {key!r} is not a number") from exc


def _gate(name: str) -> np.ndarray:
    for key, u in ch.GATES.items():
        if key.lower() == name.lower():
            return u
    raise UsageError(f"unknown gate {name!r}; choose from {', '.join(ch.GATES)}")


CHANNELS = ("identity", "depolarizing", "dephasing", "amplitude_damping", "dephrasure", "unitary")


def parse_channel(text: str) -> ch.Channel:
    """``name:k=v,...`` or a path to a Choi text file.

    Every channel accepts ``power=k`` (k parallel copies).  ``unitary`` takes
    ``gate=NAME``; ``depolarizing`` also accepts ``gate`` to append noise to a gate.
    """
    if os.path.isfile(text):
        with open(text) as fh:
            return ch.from_text(fh)
    name, params = _parse_spec(text)
    power = int(_num(params, "power", 1))
    gate = params.pop("gate", None)
    if name == "identity":
        e = ch.make_identity(int(_num(params, "d", 2)))
    elif name == "depolarizing":
        e = ch.make_depolarizing(_num(params, "p"), int(_num(params, "d", 2)))
        if gate is not None:
            e = ch.compose(e, ch.make_unitary(_gate(gate)))
            gate = None
    elif name == "dephasing":
        e = ch.make_dephasing(_num(params, "p"))
    elif name in ("amplitude_damping", "ad"):
        e = ch.make_amplitude_damping(_num(params, "gamma"))
    elif name == "dephrasure":
        e = ch.make_dephrasure(_num(params, "p"), _num(params, "q"))
    elif name == "unitary":
        if gate is None:
            raise UsageError("unitary needs gate=NAME")
        e = ch.make_unitary(_gate(gate))
        gate = None
    elif name.upper() in {g.upper() for g in ch.GATES}:
        e = ch.make_unitary(_gate(name))
    else:
        raise UsageError(f"unknown channel {name!r}; choose from {', '.join(CHANNELS)} or a gate name")
    if gate is not None or params:
        raise UsageError(f"unused parameters for {name}: {sorted(params) + ([] if gate is None else ['gate'])}")
    if power < 1:
        raise UsageError("power must be >= 1")
    return ch.tensor_power(e, power) if power > 1 else e


def parse_state(text: str) -> qla.DensityOperator:
    """A gate name (the state ``U|+>^n``), ``plus``, ``zero``, or a ``.npy``/text matrix file.

    ``noise=p`` mixes with the maximally mixed state, ``power=k`` takes copies.
    """
    if os.path.isfile(text):
        m = np.load(text) if text.endswith(".npy") else np.loadtxt(text, dtype=complex)
        return qla.DensityOperator(np.atleast_2d(m))
    name, params = _parse_spec(text)
    noise = _num(params, "noise", 0.0)
    power = int(_num(params, "power", 1))
    if params:
        raise UsageError(f"unused parameters for {name}: {sorted(params)}")
    if name == "plus":
        vec = np.ones(2) / np.sqrt(2)
    elif name == "zero":
        vec = np.array([1.0, 0.0])
    else:
        u = _gate(name)
        vec = u @ np.ones(u.shape[0]) / np.sqrt(u.shape[0])
    if not 0.0 <= noise <= 1.0:
        raise UsageError("noise must lie in [0, 1]")
    d = vec.size
    rho = (1 - noise) * np.outer(vec, vec.conj()) + noise * np.eye(d) / d
    if power > 1:
        rho = qla.kron(*([rho] * power))
    return qla.DensityOperator(rho)


def _qubits(d: int) -> int:
    n = int(round(math.log2(d)))
    if 2 ** n != d:
        raise UsageError(f"dimension {d} is not a power of two")
    return n


def free_set(theory: str, obj):
    if isinstance(obj, ch.Channel):
        d_in, d_out = obj.dims
        if theory == "ns":
            return theories.replacement_channels(d_in, d_out)
        if theory == "ppt":
            return theories.ppt_channels(d_in, d_out)
        if theory == "sep":
            return theories.sep_channels(d_in, d_out)
        if theory == "stab":
            return theories.csp_channels(_qubits(d_in), _qubits(d_out))
        raise UsageError(f"theory {theory} applies to states; pass --state")
    if theory == "stab":
        return theories.stab_states(_qubits(obj.dim))
    if theory == "coherence":
        return theories.diag_states(np.eye(obj.dim))
    raise UsageError(f"theory {theory} applies to channels; pass --channel")


# ---------------------------------------------------------------- commands
def cmd_measure(args) -> int:
    if (args.channel is None) == (args.state is None):
        raise UsageError("pass exactly one of --channel or --state")
    obj = parse_channel(args.channel) if args.channel else parse_state(args.state)
    tol = DEFAULT if args.tol is None else DEFAULT.with_(gap=args.tol)
    if args.theory == "sep" and args.monotone == "robustness":
        value = measures.sep_robustness_analytic(obj)
        print(f"robustness = {_fmt(value)}")
        print("method: closed form (qubit output)")
        return EXIT_OK
    fs = free_set(args.theory, obj)
    fn = {"robustness": measures.robustness, "weight": measures.weight, "fidelity": measures.free_fidelity}
    res = fn[args.monotone](obj, fs, tol)
    dg = res.diagnostics
    print(f"{args.monotone} = {_fmt(res.value)}")
    print(f"free set: {fs.name}")
    if res.witness is not None:
        state = "verified" if dg.witness_ok else "NOT verified"
        print(f"witness: {state} (residual {dg.witness_residual:.2e})")
    elif res.certificate is not None:
        print("infeasibility certificate attached")
    print(f"solver: {dg.method}, status {dg.status}, gap {dg.gap:.2e}, iterations {dg.iterations}")
    return EXIT_OK


BOUNDS = {
    "error-unitary": (("r", "w", "f"), bounds.error_floor_unitary),
    "error-state": (("r", "w", "f"), bounds.error_floor_state),
    "previous": (("lambda_min", "f"), bounds.previous_bound),
    "copies": (("r", "w", "f", "m", "eps"), bounds.copy_floor),
    "previous-copies": (("lambda_min", "f", "m", "eps"), bounds.previous_copy_floor),
    "transform": (("r", "r_out", "w", "w_out"), bounds.transform_floor),
    "rate-adaptive": (("r", "f"), bounds.rate_ceiling_adaptive),
    "rate-parallel": (("dinf", "f"), bounds.rate_ceiling_parallel),
    "prob-channel": (("r", "w", "f", "p", "trm"), bounds.probabilistic_floor_channel),
    "prob-state": (("r", "w", "f", "p", "trm"), bounds.probabilistic_floor_state),
}


def cmd_bound(args) -> int:
    names, fn = BOUNDS[args.kind]
    vals = []
    for n in names:
        v = getattr(args, n)
        if v is None:
            if n == "m":
                v = 1
            else:
                raise UsageError(f"bound {args.kind} needs --{n.replace('_', '-')}")
        vals.append(int(v) if n == "m" else v)
    out = fn(*vals)
    if isinstance(out, bounds.Bound):
        out = bounds.BoundReport(dict(zip(names, vals)), {out.name: out})
    for line in out.lines():
        print(line)
    return EXIT_OK


def cmd_fig(args) -> int:
    np.random.seed(args.seed)  # generators are deterministic; the seed is recorded for reproducibility
    grid = figures.default_grid(args.fig, args.points)
    spec = figures.FigureSpec(args.fig, grid, args.param)
    tol = DEFAULT if args.tol is None else DEFAULT.with_(gap=args.tol)
    table = figures.make_figure(spec, tol)
    if args.out in (None, "-"):
        sys.stdout.write(table.to_csv())
    else:
        figures.write_csv(table, args.out)
        print(f"wrote {len(table.rows)} rows to {args.out}")
    return EXIT_OK


def cmd_selftest(args) -> int:
    results = acceptance.run_all(lambda line: print(line, flush=True))
    passed = sum(c.passed for c in results)
    print(f"{passed}/{len(results)} criteria passed")
    return EXIT_OK if passed == len(results) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chanbound", description="Resource monotones and distillation bounds.")
    sub = p.add_subparsers(dest="command", required=True)

    m = sub.add_parser("measure", help="robustness, weight or free fidelity of a channel or state")
    m.add_argument("--theory", required=True, choices=["ns", "ppt", "sep", "stab", "coherence"])
    m.add_argument("--channel", help="name:k=v,... or Choi text file")
    m.add_argument("--state", help="gate name, plus, zero, or matrix file")
    m.add_argument("--monotone", required=True, choices=["robustness", "weight", "fidelity"])
    m.add_argument("--tol", type=float, help="solver duality-gap tolerance")
    m.set_defaults(func=cmd_measure)

    b = sub.add_parser("bound", help="evaluate a bound from monotone values")
    b.add_argument("kind", choices=sorted(BOUNDS))
    for flag in ("r", "w", "f", "eps", "p", "trm", "lambda-min", "r-out", "w-out", "dinf"):
        b.add_argument(f"--{flag}", type=float)
    b.add_argument("--m", type=int, help="number of target copies")
    b.set_defaults(func=cmd_bound)

    f = sub.add_parser("fig", help="write figure data as CSV")
    f.add_argument("--fig", required=True, choices=sorted(figures.FIGURES))
    f.add_argument("--out", help="output path (default stdout)")
    f.add_argument("--points", type=int, help="number of grid points")
    f.add_argument("--param", type=float, help="fixed noise level for the copy-count figures")
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--tol", type=float, help="solver duality-gap tolerance")
    f.set_defaults(func=cmd_fig)

    s = sub.add_parser("selftest", help="run the acceptance suite")
    s.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, DimensionError, DomainError, UnsupportedError, ValueError) as exc:
        print(f"chanbound: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverError, NumericalError, np.linalg.LinAlgError) as exc:
        print(f"chanbound: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
