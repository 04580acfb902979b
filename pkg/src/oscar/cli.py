"""Command-line front end.

Machine-readable results go to stdout (JSON) or to the ``-o`` file; progress
and diagnostics go to stderr. Every written file gets a
``<file>.manifest.json`` sibling recording how it was produced.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .cs import MeasurementSet, SolverConfig, reconstruct, sparsity_fraction
from .dispatch import LatencyModel, dispatch, eager_reconstruct
from .errors import InvalidInputError, OscarError
from .landscape import (
    GRID_PRESETS,
    Dim,
    GridSpec,
    Landscape,
    export_csv,
    grid_points,
    import_csv,
    load,
    metrics,
    nrmse,
    sample_uniform,
    save,
)
from .mitigation import ZneConfig, mitigated_landscape, zne_expectation
from .ncm import LinearNcm, mixed_reconstruct, ncm_reconstruct, split_samples, train
from .optimize import (
    CircuitObjective,
    Interpolator,
    OPTIMIZERS,
    SurrogateObjective,
    default_config,
    oscar_init,
    random_point,
)
from .sim import (
    AnsatzConfig,
    NoiseModel,
    ProblemInstance,
    build_circuit,
    evaluate_circuit,
    generate_landscape,
    random_regular_graph,
    random_sk,
)

log = logging.getLogger("oscar")


class UsageError(Exception):
    pass


# -- argument types ---------------------------------------------------------


def _fraction(text: str) -> float:
    v = float(text)
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError(f"fraction must be in (0, 1], got {text}")
    return v


def _share(text: str) -> float:
    v = float(text)
    if not 0 <= v <= 1:
        raise argparse.ArgumentTypeError(f"value must be in [0, 1], got {text}")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _grid(text: str) -> GridSpec:
    """A preset name or ``name:lo:hi:count[,name:lo:hi:count...]``."""
    if text in GRID_PRESETS:
        return GRID_PRESETS[text]()
    try:
        dims = []
        for part in text.split(","):
            name, lo, hi, count = part.split(":")
            dims.append(Dim(name, float(lo), float(hi), int(count)))
        return GridSpec(tuple(dims))
    except (ValueError, InvalidInputError) as exc:
        raise argparse.ArgumentTypeError(
            f"grid must be one of {sorted(GRID_PRESETS)} or name:lo:hi:count,... ({exc})"
        ) from None


def _ranges(text: str) -> list[tuple[str, float, float]]:
    if text in GRID_PRESETS:
        return [(d.name, d.lo, d.hi) for d in GRID_PRESETS[text]().dims]
    try:
        out = []
        for part in text.split(","):
            name, lo, hi = part.split(":")
            out.append((name, float(lo), float(hi)))
        return out
    except ValueError:
        raise argparse.ArgumentTypeError("ranges must be a preset or name:lo:hi,name:lo:hi") from None


# -- shared option groups ---------------------------------------------------


def _common(p: argparse.ArgumentParser, out_required=False):
    p.add_argument("--seed", type=int, default=None, help="RNG seed (falls back to $OSCAR_SEED, then 0)")
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument("-o", "--out", type=Path, required=out_required, help="output file")


def _problem_opts(p: argparse.ArgumentParser):
    g = p.add_argument_group("problem")
    g.add_argument("--problem", choices=["maxcut3", "sk"], default="maxcut3")
    g.add_argument("--problem-file", type=Path, help="JSON problem instance (overrides --problem)")
    g.add_argument("--qubits", type=_positive_int, default=8)
    g.add_argument("--problem-seed", type=int, default=None, help="instance seed (default: --seed)")
    g.add_argument("--ansatz", choices=["qaoa", "twolocal"], default="qaoa")
    g.add_argument("--p", type=_positive_int, default=1, help="QAOA depth")
    g.add_argument("--layers", type=_positive_int, default=1, help="Two-local entangling layers")


def _noise_opts(p: argparse.ArgumentParser):
    g = p.add_argument_group("noise")
    g.add_argument("--p1q", type=float, default=0.0, help="1-qubit depolarizing probability")
    g.add_argument("--p2q", type=float, default=0.0, help="2-qubit depolarizing probability")
    g.add_argument("--trajectories", type=_positive_int, default=200)
    g.add_argument("--shots", type=int, default=0, help="0 means exact expectations")


def _solver_opts(p: argparse.ArgumentParser):
    g = p.add_argument_group("solver")
    g.add_argument("--lam", type=float, default=None)
    g.add_argument("--max-iters", type=_positive_int, default=5000)
    g.add_argument("--tolerance", type=float, default=1e-7)
    g.add_argument("--backtracking", action="store_true")


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("OSCAR_SEED")
    if env is None or env == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"OSCAR_SEED must be an integer, got {env!r}") from None


def _problem(args) -> ProblemInstance:
    if args.problem_file:
        return ProblemInstance.from_json(Path(args.problem_file).read_text())
    pseed = args.problem_seed if args.problem_seed is not None else args.seed_value
    if args.problem == "maxcut3":
        return random_regular_graph(args.qubits, 3, seed=pseed)
    return random_sk(args.qubits, seed=pseed)


def _ansatz(args) -> AnsatzConfig:
    return AnsatzConfig(args.ansatz, args.p, args.layers)


def _noise(args) -> NoiseModel:
    return NoiseModel(args.p1q, args.p2q, args.trajectories, args.shots)


def _solver(args) -> SolverConfig:
    return SolverConfig(args.lam, args.max_iters, args.tolerance, args.backtracking)


def _emit(obj):
    sys.stdout.write(json.dumps(obj, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    if hasattr(o, "to_dict"):
        return o.to_dict()
    raise TypeError(type(o).__name__)


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, sort_keys=True, indent=1, default=_jsonable) + "\n")


# -- subcommands ------------------------------------------------------------


def cmd_generate(args):
    problem, ansatz, noise = _problem(args), _ansatz(args), _noise(args)
    log.info("generating %d-point landscape for %d qubits", args.grid.size, problem.n_qubits)
    land = generate_landscape(problem, ansatz, args.grid, noise, args.seed_value, args.threads)
    save(land, args.out)
    return {"out": args.out, "shape": list(land.spec.shape), "points": land.spec.size}, [args.out]


def cmd_sample(args):
    land = load(args.input)
    idx = sample_uniform(land.spec, args.fraction, args.seed_value)
    meas = MeasurementSet.from_grid(land.values, idx)
    _write_json(args.out, {"grid": land.spec.to_dict(), "samples": meas.to_dict(), "source_meta": land.meta})
    return {"out": args.out, "samples": len(meas)}, [args.out]


def _load_samples(path: Path) -> tuple[GridSpec, MeasurementSet]:
    data = json.loads(Path(path).read_text())
    try:
        return GridSpec.from_dict(data["grid"]), MeasurementSet.from_dict(data["samples"])
    except (KeyError, TypeError) as exc:
        raise InvalidInputError(f"{path}: not a sample file ({exc})") from None


def cmd_reconstruct(args):
    if (args.input is None) == (args.samples is None):
        raise UsageError("give exactly one of --in (with --fraction) or --samples")
    if args.input is not None:
        if args.fraction is None:
            raise UsageError("--in needs --fraction")
        src = load(args.input)
        spec = src.spec
        meas = MeasurementSet.from_grid(src.values, sample_uniform(spec, args.fraction, args.seed_value))
    else:
        spec, meas = _load_samples(args.samples)
    res = reconstruct(meas, _solver(args))
    land = Landscape(spec, res.grid, {
        "reconstruction": {
            "samples": len(meas),
            "fraction": len(meas) / spec.size,
            "seed": args.seed_value,
            "lam": res.lam,
            "residual": res.residual,
            "converged": res.converged,
            "iterations": res.iterations,
        }
    })
    result = {"samples": len(meas), "converged": res.converged, "iterations": res.iterations, "residual": res.residual}
    outputs = []
    if args.out:
        save(land, args.out)
        outputs.append(args.out)
        result["out"] = args.out
    if args.truth:
        result["nrmse"] = nrmse(load(args.truth), land)
    return result, outputs


def cmd_metrics(args):
    return metrics(load(args.input)).to_dict(), []


def cmd_sparsity(args):
    land = load(args.input)
    return {"energy": args.energy, "fraction": sparsity_fraction(land.values, args.energy)}, []


def cmd_zne(args):
    problem, ansatz, noise = _problem(args), _ansatz(args), _noise(args)
    zne = ZneConfig(args.scales, args.method)
    if (args.params is None) == (args.grid is None):
        raise UsageError("give exactly one of --params or --grid")
    if args.params is not None:
        r = zne_expectation(problem, ansatz, args.params, noise, zne, args.seed_value)
        return {"value": r.value, "scale_factors": r.scale_factors, "scaled_values": r.scaled_values, "queries": r.queries}, []
    if not args.out:
        raise UsageError("--grid needs -o/--out")
    land = mitigated_landscape(problem, ansatz, args.grid, noise, zne, args.seed_value, threads=args.threads)
    save(land, args.out)
    return {"out": args.out, "points": land.spec.size, "queries": land.spec.size * zne.queries_per_point}, [args.out]


def cmd_ncm_train(args):
    src, ref = load(args.src), load(args.ref)
    if src.spec != ref.spec:
        raise InvalidInputError("source and reference landscapes use different grids")
    idx = sample_uniform(src.spec, args.train_fraction, args.seed_value)
    model = train(src.flat[idx], ref.flat[idx], train_fraction=args.train_fraction, seed=args.seed_value)
    outputs = []
    if args.out:
        _write_json(args.out, model.to_dict())
        outputs.append(args.out)
    return model.to_dict(), outputs


def cmd_ncm_reconstruct(args):
    ref, other = load(args.ref), load(args.other)
    if args.model:
        model = LinearNcm.from_dict(json.loads(Path(args.model).read_text()))
        split = split_samples(ref.spec.size, args.fraction, args.ref_share, 0.0, args.seed_value)
        land = mixed_reconstruct(
            MeasurementSet.from_grid(ref.values, split.ref_indices),
            MeasurementSet.from_grid(other.values, split.other_indices),
            None if args.no_ncm else model,
            _solver(args),
            ref.spec,
        )
    else:
        land, model = ncm_reconstruct(
            ref, other, args.fraction, args.ref_share, args.train_fraction,
            use_ncm=not args.no_ncm, seed=args.seed_value, config=_solver(args),
        )
    result = {"ncm": None if args.no_ncm or model is None else model.to_dict(), "nrmse_vs_ref": nrmse(ref, land)}
    outputs = []
    if args.out:
        save(land, args.out)
        outputs.append(args.out)
        result["out"] = args.out
    return result, outputs


def _config(args, spec: GridSpec):
    over = {}
    if args.optimizer == "adam":
        for key in ("lr", "tol"):
            if getattr(args, key) is not None:
                over[key] = getattr(args, key)
    elif args.tol is not None:
        over["fatol"] = args.tol
    if args.opt_iters is not None:
        over["max_iters"] = args.opt_iters
    return default_config(args.optimizer, spec, **over)


def cmd_optimize(args):
    if args.input is not None:
        land = load(args.input)
        spec = land.spec
        objective = SurrogateObjective(Interpolator(land))
    else:
        if args.grid is None:
            raise UsageError("live optimization needs --grid for bounds and step sizes")
        spec = args.grid
        objective = CircuitObjective(_problem(args), _ansatz(args), _noise(args), args.seed_value)
    init = np.asarray(args.init) if args.init is not None else random_point(spec, args.seed_value)
    if init.size != spec.ndim:
        raise UsageError(f"--init needs {spec.ndim} values")
    run = OPTIMIZERS[args.optimizer](objective, init, _config(args, spec))
    out = run.to_dict()
    out["objective"] = "surrogate" if args.input is not None else "circuit"
    outputs = []
    if args.out:
        _write_json(args.out, out)
        outputs.append(args.out)
    return out, outputs


def cmd_init(args):
    spec = args.grid
    r = oscar_init(
        _problem(args), _ansatz(args), spec, _noise(args), args.fraction,
        args.optimizer, args.seed_value, _config(args, spec), _solver(args),
    )
    out = r.to_dict()
    outputs = []
    if args.out:
        _write_json(args.out, out)
        outputs.append(args.out)
    return out, outputs


def cmd_dispatch(args):
    if args.input is not None:
        land = load(args.input)
        spec, flat = land.spec, land.flat

        def evaluator(i):
            return flat[i]
    else:
        if args.grid is None:
            raise UsageError("give --in or --grid")
        spec = args.grid
        problem, noise = _problem(args), _noise(args)
        circuit = build_circuit(problem, _ansatz(args))
        pts = grid_points(spec)

        def evaluator(i):
            return evaluate_circuit(problem, circuit, pts[i][None, :], noise, args.seed_value)[0]

    idx = sample_uniform(spec, args.fraction, args.seed_value)
    latency = LatencyModel(args.latency_base, args.latency_mu, args.latency_sigma, args.latency_scale, args.seed_value)
    report = dispatch(idx, evaluator, spec.shape, args.workers, latency, args.timeout, args.threads)
    out = report.to_dict()
    out["omitted_fraction"] = report.omitted_fraction
    outputs = []
    if args.out:
        land = eager_reconstruct(report, _solver(args), spec)
        save(land, args.out)
        outputs.append(args.out)
        out["out"] = args.out
        if args.input is not None:
            out["nrmse"] = nrmse(load(args.input), land)
    return out, outputs


def cmd_import_csv(args):
    land = import_csv(args.input, args.ranges, {"source_file": Path(args.input).name})
    save(land, args.out)
    return {"out": args.out, "shape": list(land.spec.shape)}, [args.out]


def cmd_export_csv(args):
    export_csv(load(args.input), args.out, header=args.header)
    return {"out": args.out}, [args.out]


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oscar", description="Cost-landscape reconstruction toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="progress messages on stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("generate", help="grid-search a landscape with the simulator")
    _common(p, out_required=True)
    _problem_opts(p)
    _noise_opts(p)
    p.add_argument("--grid", type=_grid, required=True, help="preset (paper-p1, paper-p2) or name:lo:hi:count,...")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("sample", help="draw uniform random samples from a landscape")
    _common(p, out_required=True)
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--fraction", type=_fraction, required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("reconstruct", help="compressed-sensing reconstruction")
    _common(p)
    _solver_opts(p)
    p.add_argument("--in", dest="input", type=Path, help="landscape to subsample")
    p.add_argument("--fraction", type=_fraction)
    p.add_argument("--samples", type=Path, help="sample file written by 'sample'")
    p.add_argument("--truth", type=Path, help="reference landscape; adds nrmse to the output")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("metrics", help="roughness, variance of gradients, variance")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("sparsity", help="fraction of DCT coefficients holding a share of the energy")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--energy", type=_fraction, default=0.99)
    p.set_defaults(func=cmd_sparsity)

    p = sub.add_parser("zne", help="zero-noise extrapolation at one point or over a grid")
    _common(p)
    _problem_opts(p)
    _noise_opts(p)
    p.add_argument("--scales", type=_floats, default=(1.0, 2.0, 3.0))
    p.add_argument("--method", choices=["richardson", "linear"], default="richardson")
    p.add_argument("--params", type=_floats, help="single parameter vector")
    p.add_argument("--grid", type=_grid, help="mitigate a whole landscape")
    p.set_defaults(func=cmd_zne)

    p = sub.add_parser("ncm-train", help="fit an affine map from one device's values to another's")
    _common(p)
    p.add_argument("--src", type=Path, required=True)
    p.add_argument("--ref", type=Path, required=True)
    p.add_argument("--train-fraction", type=_fraction, default=0.01)
    p.set_defaults(func=cmd_ncm_train)

    p = sub.add_parser("ncm-reconstruct", help="reconstruct from samples mixed across two devices")
    _common(p)
    _solver_opts(p)
    p.add_argument("--ref", type=Path, required=True)
    p.add_argument("--other", type=Path, required=True)
    p.add_argument("--fraction", type=_fraction, default=0.1)
    p.add_argument("--ref-share", type=_share, default=0.5)
    p.add_argument("--train-fraction", type=_fraction, default=0.01)
    p.add_argument("--model", type=Path, help="model file from ncm-train instead of fitting one")
    p.add_argument("--no-ncm", action="store_true", help="merge raw samples without compensation")
    p.set_defaults(func=cmd_ncm_reconstruct)

    for name, func, helptext in (
        ("optimize", cmd_optimize, "run an optimizer on a landscape surrogate or the live simulator"),
        ("init", cmd_init, "landscape-based initialization followed by live optimization"),
    ):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        _problem_opts(p)
        _noise_opts(p)
        p.add_argument("--optimizer", choices=sorted(OPTIMIZERS), default="adam")
        p.add_argument("--lr", type=float, default=None)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--opt-iters", type=_positive_int, default=None)
        if name == "optimize":
            p.add_argument("--in", dest="input", type=Path, help="landscape to interpolate (2-D)")
            p.add_argument("--grid", type=_grid, help="grid for live runs")
            p.add_argument("--init", type=_floats, help="initial point (default: random in the box)")
        else:
            _solver_opts(p)
            p.add_argument("--grid", type=_grid, default=GRID_PRESETS["paper-p1"]())
            p.add_argument("--fraction", type=_fraction, default=0.1)
        p.set_defaults(func=func)

    p = sub.add_parser("dispatch", help="sample across simulated workers with latency and timeout")
    _common(p)
    _problem_opts(p)
    _noise_opts(p)
    _solver_opts(p)
    p.add_argument("--in", dest="input", type=Path, help="landscape standing in for the device")
    p.add_argument("--grid", type=_grid, help="grid for live circuit jobs")
    p.add_argument("--fraction", type=_fraction, default=0.1)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--timeout", type=float, default=None, help="soft timeout in virtual seconds")
    p.add_argument("--latency-base", type=float, default=1.0)
    p.add_argument("--latency-mu", type=float, default=0.0)
    p.add_argument("--latency-sigma", type=float, default=1.0)
    p.add_argument("--latency-scale", type=float, default=1.0)
    p.set_defaults(func=cmd_dispatch)

    p = sub.add_parser("import-csv", help="convert a CSV grid to a landscape file")
    _common(p, out_required=True)
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--ranges", type=_ranges, required=True, help="preset or name:lo:hi,name:lo:hi")
    p.set_defaults(func=cmd_import_csv)

    p = sub.add_parser("export-csv", help="write a 2-D landscape as CSV")
    _common(p, out_required=True)
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--header", action="store_true")
    p.set_defaults(func=cmd_export_csv)
    return parser


def _manifest(args, argv, outputs, wall):
    flags = {k: v for k, v in vars(args).items() if k not in ("func", "seed_value")}
    record = {
        "command": args.command,
        "argv": list(argv),
        "flags": flags,
        "seed": args.seed_value,
        "inputs": [str(getattr(args, k)) for k in ("input", "samples", "truth", "src", "ref", "other", "model")
                   if getattr(args, k, None) is not None],
        "outputs": [str(o) for o in outputs],
        "version": __version__,
        "wall_time": wall,
    }
    for out in outputs:
        _write_json(Path(f"{out}.manifest.json"), record)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)  # exits 2 on usage errors
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(message)s")
    t0 = time.perf_counter()
    try:
        args.seed_value = _seed(args) if hasattr(args, "seed") else None
        if getattr(args, "out", None) is not None and not Path(args.out).parent.exists():
            raise UsageError(f"output directory {Path(args.out).parent} does not exist")
        result, outputs = args.func(args)
    except (UsageError, InvalidInputError) as exc:
        parser.print_usage(sys.stderr)
        print(f"oscar {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (OscarError, OSError, ArithmeticError, ValueError, KeyError) as exc:
        print(f"oscar {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if outputs:
        _manifest(args, argv, outputs, time.perf_counter() - t0)
    _emit(result)
    log.info("done in %.2fs", time.perf_counter() - t0)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
