"""Command-line front end: experiment orchestration and result archives.

Subcommands
-----------
twirl           print an equivariant generator set for a symmetry group
describe        print the structure of a named ansatz
train           one training run, archived with per-epoch history
benchmark       (ansatz, layers, seed) sweep with an aggregate MAE table
baseline        the same sweep for the classical networks (width grid)
expressibility  KL-vs-Haar table over an (ansatz, layers) grid
validate        generator fixtures, exact-solution residual oracle,
                Bessel zeros, and archive self-consistency checks

Every archive-producing command writes a directory containing a config echo,
a per-run detail table, and a summary table.  A sha256 hash of the canonical
config text is embedded in every file; identical config plus seeds yields
byte-identical summaries.  The default output root is ``./symqpde_runs``,
overridable with the ``SYMQPDE_RUNS_DIR`` environment variable.

Exit codes: 0 success (including recorded-but-failed runs, which only emit a
warning), 1 integrity or validation failure, 2 usage error.
"""

import argparse
import concurrent.futures
import dataclasses
import hashlib
import inspect
import os
import sys

import numpy as np

from .ansatz import ANSATZ_NAMES, get_ansatz
from .autodiff import DEFAULT_STENCIL, StencilConfig
from .bessel import bessel_j0, bessel_j0_zeros
from .classical import PinnModel, SiPinnModel
from .errors import NumericIntegrityError
from .expressibility import (
    DEFAULT_BINS,
    DEFAULT_PAIRS,
    domain_for_ansatz,
    expressibility_report,
)
from .optimize import DEFAULT_LBFGS, LbfgsConfig, train
from .pauli import format_pauli_sum, parse_pauli_sum
from .pde import PROBLEM_BUILDERS, get_problem, residual_at
from .symmetry import (
    SEED_POOL_2Q,
    SEED_POOL_4Q,
    SEED_POOL_4Q_K4,
    equivariant_generator_set,
    k4_rep,
    k4_twirl_group,
    so2_rep,
    z2_rep,
)

OUTPUT_DIR_ENV = "SYMQPDE_RUNS_DIR"
DEFAULT_OUTPUT_DIR = "symqpde_runs"

CLASSICAL_NAMES = ("pinn", "sipinn")

_OPT_FIELDS = ("lr", "max_iter", "max_eval", "tolerance_grad",
               "tolerance_change", "history_size", "c1", "c2", "max_ls")


def _output_root(args):
    if args.out is not None:
        return args.out
    return os.environ.get(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_DIR)


# ---------------------------------------------------------------------------
# config echo and archives


def _render_value(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ",".join(_render_value(x) for x in v)
    return str(v)


def config_text(config):
    """Canonical config echo: one ``key = value`` line per key, sorted."""
    lines = [f"{k} = {_render_value(config[k])}" for k in sorted(config)]
    return "\n".join(lines) + "\n"


def config_hash(config):
    return hashlib.sha256(config_text(config).encode()).hexdigest()[:16]


def _fmt(x):
    """Stable float rendering for tables."""
    return format(float(x), ".12g")


class ResultArchive:
    """One output directory: config echo, detail table, summary table.

    The directory name is derived from the config hash, so rerunning the
    same command overwrites (reproduces) the same archive.
    """

    def __init__(self, root, command, config):
        self.config = dict(config)
        self.hash = config_hash(self.config)
        self.dir = os.path.join(root, f"{command}-{self.hash}")
        os.makedirs(self.dir, exist_ok=True)
        self._write("config.txt",
                    config_text(self.config) + f"config_hash = {self.hash}\n")

    def _write(self, filename, text):
        path = os.path.join(self.dir, filename)
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
        return path

    def write_table(self, filename, columns, rows):
        """Column-delimited text with a header row and the hash up top."""
        lines = [f"# config_hash = {self.hash}", "\t".join(columns)]
        for row in rows:
            lines.append("\t".join(str(c) for c in row))
        return self._write(filename, "\n".join(lines) + "\n")

    def write_summary(self, sections):
        """``sections`` is a list of (title, lines); keys stay sorted by the
        caller so repeated runs emit identical bytes."""
        lines = [f"# config_hash = {self.hash}"]
        for title, body in sections:
            lines.append("")
            lines.append(f"[{title}]")
            lines.extend(body)
        return self._write("summary.txt", "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# model construction shared by train/benchmark/baseline workers


def _build_model(kind, name, p, input_dim):
    if kind == "ansatz":
        kwargs = {}
        if name == "qpinn":
            # the baseline follows the published protocol: two qubits with
            # three rotations each on planar problems, three qubits with
            # four rotations each when time is a third input
            kwargs = {"n": input_dim,
                      "rotations_per_qubit": 3 if input_dim == 2 else 4}
        circuit, _ = get_ansatz(name, p, **kwargs)
        if circuit.input_dim != input_dim:
            raise ValueError(
                f"ansatz {name!r} consumes {circuit.input_dim} inputs but the "
                f"problem supplies {input_dim}")
        return circuit
    if kind == "classical":
        cls = {"pinn": PinnModel, "sipinn": SiPinnModel}[name]
        return cls(p, n=input_dim)
    raise ValueError(f"unknown model kind {kind!r}")


@dataclasses.dataclass(frozen=True)
class RunRecord:
    """Picklable per-run summary returned by the training worker."""

    label: str
    p: int
    n_params: int
    seed: int
    final_loss: float
    final_mae: float
    parts: tuple  # ((key, value), ...) for the final epoch
    epochs_run: int
    status: str
    failed: bool
    wall_time: float


_PROBLEM_CACHE = {}


def _cached_problem(problem_name, problem_kwargs):
    key = (problem_name, problem_kwargs)
    if key not in _PROBLEM_CACHE:
        _PROBLEM_CACHE[key] = get_problem(problem_name, **dict(problem_kwargs))
    return _PROBLEM_CACHE[key]


def _train_task(task):
    """Module-level worker so ``--jobs`` can fan runs out to processes."""
    (kind, name, p, problem_name, problem_kwargs, opt_items, h_input,
     seed, epochs) = task
    prob = _cached_problem(problem_name, problem_kwargs)
    model = _build_model(kind, name, p, prob.input_dim)
    opt_cfg = LbfgsConfig(**dict(opt_items))
    stencil = StencilConfig(h_input=h_input)
    run = train(model, prob, opt_cfg, stencil, seed=seed, epochs=epochs)
    n_params = model.n_params
    parts = run.part_history[-1] if run.part_history else {}
    return RunRecord(
        label=name, p=p, n_params=n_params, seed=seed,
        final_loss=run.final_loss, final_mae=run.final_mae,
        parts=tuple(sorted(parts.items())),
        epochs_run=len(run.loss_history),
        status=run.statuses[-1] if run.statuses else "failed",
        failed=run.failed, wall_time=run.wall_time)


def _run_tasks(tasks, jobs):
    if jobs <= 1:
        return [_train_task(t) for t in tasks]
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        records = list(pool.map(_train_task, tasks))
    return records


def _aggregate_rows(records):
    """Aggregate table rows keyed by parameter count (then label, then p)."""
    groups = {}
    for r in records:
        groups.setdefault((r.n_params, r.label, r.p), []).append(r)
    rows = []
    for (n_params, label, p) in sorted(groups):
        runs = groups[(n_params, label, p)]
        good = [r.final_mae for r in runs if not r.failed]
        n_failed = len(runs) - len(good)
        if good:
            med, mean, lo = (np.median(good), np.mean(good), np.min(good))
        else:
            med = mean = lo = float("nan")
        rows.append((n_params, label, p, len(runs), n_failed,
                     _fmt(med), _fmt(mean), _fmt(lo)))
    return rows


_AGGREGATE_COLUMNS = ("n_params", "label", "p", "n_runs", "n_failed",
                      "median_mae", "mean_mae", "min_mae")

_DETAIL_COLUMNS = ("label", "p", "n_params", "seed", "final_loss",
                   "final_mae", "res", "init", "bnd", "epochs_run",
                   "status", "failed", "wall_time")


def _detail_rows(records):
    rows = []
    order = sorted(range(len(records)),
                   key=lambda i: (records[i].label, records[i].p,
                                  records[i].seed))
    for i in order:
        r = records[i]
        parts = dict(r.parts)
        rows.append((r.label, r.p, r.n_params, r.seed, _fmt(r.final_loss),
                     _fmt(r.final_mae), _fmt(parts.get("res", float("nan"))),
                     _fmt(parts.get("init", 0.0)),
                     _fmt(parts.get("bnd", 0.0)), r.epochs_run, r.status,
                     int(r.failed), format(r.wall_time, ".3f")))
    return rows


def _warn_failures(records):
    n_failed = sum(r.failed for r in records)
    if n_failed:
        print(f"warning: {n_failed} of {len(records)} runs failed; "
              "they are recorded in the archive but left out of aggregates",
              file=sys.stderr)


def _emit_plot_data(archive, records):
    """Per-label series of (parameter count, MAE statistics)."""
    for label in sorted({r.label for r in records}):
        rows = [row[:1] + row[5:] for row in
                _aggregate_rows([r for r in records if r.label == label])]
        archive.write_table(f"plot_{label}.tsv",
                            ("n_params", "median_mae", "mean_mae", "min_mae"),
                            rows)


# ---------------------------------------------------------------------------
# argument plumbing


def _parse_range(text):
    """``1..10`` -> [1..10]; ``3`` -> [3]; ``1,3,5`` -> [1, 3, 5]."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        lo, hi = int(lo), int(hi)
        if hi < lo:
            raise ValueError(f"empty range {text!r}")
        return list(range(lo, hi + 1))
    if "," in text:
        return [int(x) for x in text.split(",") if x]
    return [int(text)]


def _parse_names(text, allowed, parser, what):
    names = [x.strip() for x in text.split(",") if x.strip()]
    if not names:
        parser.error(f"no {what} given")
    for name in names:
        if name not in allowed:
            parser.error(f"unknown {what} {name!r}; choose from "
                         f"{', '.join(allowed)}")
    return names


def _opt_config(args):
    overrides = {f: getattr(args, f) for f in _OPT_FIELDS
                 if getattr(args, f, None) is not None}
    return dataclasses.replace(DEFAULT_LBFGS, **overrides)


def _problem_kwargs(args):
    """Only pass λ overrides the chosen problem actually accepts."""
    builder = PROBLEM_BUILDERS[args.problem]
    accepted = inspect.signature(builder).parameters
    kwargs = {}
    for flag, key in (("lambda_init", "lambda_i"), ("lambda_bnd", "lambda_b")):
        value = getattr(args, flag, None)
        if value is None:
            continue
        if key not in accepted:
            args._parser.error(f"{args.problem} has no {key} weight")
        kwargs[key] = value
    return tuple(sorted(kwargs.items()))


def _sweep_config(args, command, labels, grid, seed_key, seed_value):
    opt = _opt_config(args)
    config = {
        "command": command,
        "problem": args.problem,
        "labels": labels,
        "grid": grid,
        seed_key: seed_value,
        "epochs": args.epochs,
        "h_input": args.h_input if args.h_input is not None
        else DEFAULT_STENCIL.h_input,
    }
    for f in _OPT_FIELDS:
        config[f] = getattr(opt, f)
    for key, value in _problem_kwargs(args):
        config[key] = value
    return config, opt


def _run_sweep(args, command, kind, labels, grid):
    """Shared benchmark/baseline machinery."""
    config, opt = _sweep_config(args, command, labels, grid,
                                "seeds", args.seeds)
    problem_kwargs = _problem_kwargs(args)
    prob = _cached_problem(args.problem, problem_kwargs)
    for label in labels:
        try:
            _build_model(kind, label, grid[0], prob.input_dim)
        except ValueError as exc:
            args._parser.error(str(exc))
    h_input = config["h_input"]
    opt_items = tuple((f, getattr(opt, f)) for f in _OPT_FIELDS)
    tasks = [(kind, label, p, args.problem, problem_kwargs, opt_items,
              h_input, seed, args.epochs)
             for label in labels for p in grid for seed in range(args.seeds)]
    records = _run_tasks(tasks, args.jobs)

    archive = ResultArchive(_output_root(args), command, config)
    archive.write_table("details.tsv", _DETAIL_COLUMNS, _detail_rows(records))
    agg = _aggregate_rows(records)
    table = ["\t".join(_AGGREGATE_COLUMNS)]
    table += ["\t".join(str(c) for c in row) for row in agg]
    archive.write_summary([
        ("config", config_text(config).splitlines()),
        ("aggregate by parameter count", table),
    ])
    if args.emit_plot_data:
        _emit_plot_data(archive, records)
    print(f"archive: {archive.dir}")
    for line in table:
        print(line)
    _warn_failures(records)
    return 0


# ---------------------------------------------------------------------------
# subcommands


_TWIRL_CHOICES = ("k4", "so2", "z2")


def _twirl_set(group, qubits):
    if group == "z2":
        if qubits != 2:
            raise ValueError("z2 acts on the two-qubit encoding only")
        return equivariant_generator_set(SEED_POOL_2Q, z2_rep()[0])
    if qubits == 2:
        rep = {"k4": k4_rep(2)[0], "so2": so2_rep(2)[0]}[group]
        return equivariant_generator_set(SEED_POOL_2Q, rep)
    if qubits == 4:
        if group == "k4":
            return equivariant_generator_set(SEED_POOL_4Q_K4,
                                             k4_twirl_group(4))
        return equivariant_generator_set(SEED_POOL_4Q, so2_rep(4)[0])
    raise ValueError(f"unsupported qubit count {qubits}")


def cmd_twirl(args):
    try:
        gens = _twirl_set(args.group, args.qubits)
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    for g in gens:
        print(format_pauli_sum(g))
    return 0


def cmd_describe(args):
    circuit, spec = get_ansatz(args.ansatz, args.layers, n=args.qubits,
                               rotations_per_qubit=args.rotations)
    print(f"ansatz = {spec.name}")
    print(f"qubits = {spec.n}")
    print(f"layers = {spec.p}")
    print(f"params_per_block = {spec.params_per_block}")
    print(f"total_params = {spec.total_params}")
    print(f"input_dim = {spec.input_dim}")
    print(f"observable = {format_pauli_sum(circuit.observable)}")
    prep = ", ".join(
        f"{op.name}({','.join(str(t) for t in op.targets)})"
        for op in circuit.prep) or "(none)"
    print(f"preparation = {prep}")
    print("trainable block (one angle per line):")
    for op in circuit.ops:
        if op.kind == "rot" and op.binding[0] == "theta":
            if op.binding[1] >= spec.params_per_block:
                break
            print(f"  theta[{op.binding[1]}] : {format_pauli_sum(op.generator)}")
    print("encoding layer (repeated between blocks):")
    for op in circuit.ops:
        if op.kind == "bloch":
            print(f"  bloch(q{op.targets[0]}; z[{op.coords[0]}], z[{op.coords[1]}])")
        elif op.kind == "rot" and op.binding[0] == "input":
            print(f"  z[{op.binding[1]}] : {format_pauli_sum(op.generator)}")
        elif op.kind == "rot" and op.binding[0] == "theta" \
                and op.binding[1] >= spec.params_per_block:
            break
    return 0


def cmd_train(args):
    config, opt = _sweep_config(args, "train", [args.ansatz], [args.layers],
                                "seed", args.seed)
    prob = get_problem(args.problem, **dict(_problem_kwargs(args)))
    model = _build_model("ansatz" if args.ansatz in ANSATZ_NAMES
                         else "classical", args.ansatz, args.layers,
                         prob.input_dim)
    stencil = StencilConfig(h_input=config["h_input"])
    run = train(model, prob, opt, stencil, seed=args.seed, epochs=args.epochs)

    archive = ResultArchive(_output_root(args), "train", config)
    rows = []
    for e in range(len(run.loss_history)):
        parts = run.part_history[e]
        rows.append((e + 1, _fmt(run.loss_history[e]),
                     _fmt(parts.get("res", float("nan"))),
                     _fmt(parts.get("init", 0.0)),
                     _fmt(parts.get("bnd", 0.0)),
                     _fmt(run.mae_history[e]), run.statuses[e]))
    archive.write_table(
        "details.tsv",
        ("epoch", "loss", "res", "init", "bnd", "mae", "status"), rows)
    final = [
        f"epochs_run = {len(run.loss_history)}",
        f"failed = {int(run.failed)}",
        f"final_loss = {_fmt(run.final_loss)}",
        f"final_mae = {_fmt(run.final_mae)}",
        f"n_params = {model.n_params}",
    ]
    archive.write_summary([
        ("config", config_text(config).splitlines()),
        ("result", final),
    ])
    np.savetxt(os.path.join(archive.dir, "theta_final.txt"), run.theta_final,
               fmt="%.17g", header=f"config_hash = {archive.hash}")
    print(f"archive: {archive.dir}")
    for line in final:
        print(line)
    if run.failed:
        print("warning: run failed; history recorded up to the failure",
              file=sys.stderr)
    return 0


def cmd_benchmark(args):
    parser = args._parser
    labels = _parse_names(args.ansatz, ANSATZ_NAMES, parser, "ansatz")
    try:
        grid = _parse_range(args.layers)
    except ValueError as exc:
        parser.error(str(exc))
    return _run_sweep(args, "benchmark", "ansatz", labels, grid)


def cmd_baseline(args):
    parser = args._parser
    labels = _parse_names(args.model, CLASSICAL_NAMES, parser, "model")
    try:
        grid = _parse_range(args.widths)
    except ValueError as exc:
        parser.error(str(exc))
    return _run_sweep(args, "baseline", "classical", labels, grid)


def cmd_expressibility(args):
    parser = args._parser
    labels = _parse_names(args.ansatz, ANSATZ_NAMES, parser, "ansatz")
    try:
        grid = _parse_range(args.layers)
    except ValueError as exc:
        parser.error(str(exc))
    config = {
        "command": "expressibility",
        "labels": labels,
        "grid": grid,
        "pairs": args.pairs,
        "bins": args.bins,
        "seed": args.seed,
    }
    rows = []
    for label in labels:
        for p in grid:
            rep = expressibility_report(label, p, pairs=args.pairs,
                                        seed=args.seed, bin_count=args.bins)
            n_params = get_ansatz(label, p)[1].total_params
            rows.append((label, p, n_params, rep.dim,
                         domain_for_ansatz(label), _fmt(rep.kl)))
    archive = ResultArchive(_output_root(args), "expressibility", config)
    columns = ("label", "p", "n_params", "dim", "domain", "kl")
    archive.write_table("details.tsv", columns, rows)
    table = ["\t".join(columns)]
    table += ["\t".join(str(c) for c in row) for row in rows]
    archive.write_summary([
        ("config", config_text(config).splitlines()),
        ("kl divergence vs haar", table),
    ])
    print(f"archive: {archive.dir}")
    for line in table:
        print(line)
    return 0


# ---------------------------------------------------------------------------
# validate


_GENERATOR_FIXTURES = (
    ("k4 2q", "k4", 2, ["0.5*X1 + 0.5*X2", "X1X2", "Y1Y2", "Z1Z2"]),
    ("so2 2q", "so2", 2, ["Z1", "Z2", "Z1Z2", "0.5*X1X2 + 0.5*Y1Y2"]),
    ("z2 2q", "z2", 2, ["X1", "X2", "Y2", "Z2", "X1X2"]),
    ("k4 4q", "k4", 4, [
        "0.5*X1 + 0.5*X2", "0.5*X3 + 0.5*X4", "Y1Y2", "Y3Y4", "Z1Z2", "Z3Z4",
        "0.25*X2X3 + 0.25*X1X3 + 0.25*X2X4 + 0.25*X1X4"]),
    ("so2 4q", "so2", 4, [
        "Z1", "Z2", "Z3", "Z4", "Z1Z2", "Z2Z3", "Z3Z4",
        "0.5*X1X2 + 0.5*Y1Y2", "0.5*X2X3 + 0.5*Y2Y3", "0.5*X3X4 + 0.5*Y3Y4"]),
)

_RESIDUAL_SUITE = (
    ("poisson2d", 1e-6),
    ("diffusion2d", 1e-5),
    ("wave1d", 1e-4),
    ("burgers1d", 1e-3),
)


def _matches_fixture(gens, expected_texts, n):
    expected = [parse_pauli_sum(t, n) for t in expected_texts]
    if len(gens) != len(expected):
        return False
    for e in expected:
        hits = [g for g in gens if set(g.terms) == set(e.terms) and all(
            abs(g.terms[k] - e.terms[k]) < 1e-12 for k in e.terms)]
        if len(hits) != 1:
            return False
    return True


def _oracle_points(name, count=100, seed=0):
    rng = np.random.default_rng(seed)
    if name == "poisson2d":
        rad = np.sqrt(rng.uniform(0, 1, count)) * 0.999
        ang = rng.uniform(0, 2 * np.pi, count)
        return np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
    if name == "diffusion2d":
        rad = np.sqrt(rng.uniform(0, 1, count))
        ang = rng.uniform(0, 2 * np.pi, count)
        # t stays away from 0: the truncated modal series solves the PDE,
        # but the backward t-stencil samples t-h where the highest retained
        # mode explodes and swamps the h^2 oracle
        return np.column_stack([rad * np.cos(ang), rad * np.sin(ang),
                                rng.uniform(0.05, 0.5, count)])
    return np.column_stack([rng.uniform(-1, 1, count),
                            rng.uniform(0, 1, count)])


def cmd_validate(args):
    failures = 0

    def report(ok, label, detail=""):
        nonlocal failures
        mark = "ok  " if ok else "FAIL"
        suffix = f"  ({detail})" if detail else ""
        print(f"[{mark}] {label}{suffix}")
        if not ok:
            failures += 1

    for label, group, qubits, expected in _GENERATOR_FIXTURES:
        gens = _twirl_set(group, qubits)
        n = 2 if qubits == 2 else 4
        report(_matches_fixture(gens, expected, n), f"generator set {label}")

    for name, bound in _RESIDUAL_SUITE:
        prob = get_problem(name)
        model = lambda theta, z, _p=prob: float(_p.exact(np.atleast_2d(z))[0])
        pts = _oracle_points(name)
        r = residual_at(model, np.zeros(1), prob, pts)
        worst = float(np.max(np.abs(r)))
        report(worst < bound, f"exact-solution residual {name}",
               f"max |r| = {worst:.3e}, bound {bound:g}")

    zeros = bessel_j0_zeros(50)
    worst = max(abs(bessel_j0(z)) for z in zeros)
    report(worst < 1e-13, "bessel J0 zeros n<=50", f"max |J0| = {worst:.3e}")
    first_err = abs(zeros[0] - 2.404825557695773)
    report(first_err < 1e-12, "bessel first zero",
           f"|alpha_01 - 2.404825557695773| = {first_err:.3e}")

    if args.archive is not None:
        for ok, label, detail in _check_archive(args.archive):
            report(ok, label, detail)

    print("validate: " + ("PASS" if failures == 0 else
                          f"FAIL ({failures} check(s))"))
    return 0 if failures == 0 else 1


def _check_archive(path):
    """Self-consistency: the echoed hash matches the config text, every
    output file carries it, and sweep summaries regenerate from details."""
    checks = []
    config_path = os.path.join(path, "config.txt")
    if not os.path.isfile(config_path):
        return [(False, "archive config", f"missing {config_path}")]
    with open(config_path) as fh:
        lines = fh.read().splitlines()
    body = [ln for ln in lines if not ln.startswith("config_hash = ")]
    echoed = [ln.split(" = ", 1)[1] for ln in lines
              if ln.startswith("config_hash = ")]
    text = "\n".join(body) + "\n"
    recomputed = hashlib.sha256(text.encode()).hexdigest()[:16]
    ok = len(echoed) == 1 and echoed[0] == recomputed
    checks.append((ok, "archive config hash",
                   f"echoed {echoed[0] if echoed else '?'} vs {recomputed}"))
    stamp = f"# config_hash = {recomputed}"
    for fname in sorted(os.listdir(path)):
        if fname == "config.txt":
            continue
        with open(os.path.join(path, fname)) as fh:
            head = fh.readline().rstrip("\n")
        checks.append((head == stamp, f"archive stamp {fname}", head))

    details = os.path.join(path, "details.tsv")
    summary = os.path.join(path, "summary.txt")
    if os.path.isfile(details) and os.path.isfile(summary):
        with open(details) as fh:
            rows = [ln.rstrip("\n").split("\t") for ln in fh
                    if not ln.startswith("#")]
        header = rows[0]
        if header[:4] == ["label", "p", "n_params", "seed"]:
            idx = {c: i for i, c in enumerate(header)}
            records = [RunRecord(
                label=r[idx["label"]], p=int(r[idx["p"]]),
                n_params=int(r[idx["n_params"]]), seed=int(r[idx["seed"]]),
                final_loss=float(r[idx["final_loss"]]),
                final_mae=float(r[idx["final_mae"]]),
                parts=(), epochs_run=int(r[idx["epochs_run"]]),
                status=r[idx["status"]], failed=bool(int(r[idx["failed"]])),
                wall_time=float(r[idx["wall_time"]])) for r in rows[1:]]
            want = ["\t".join(str(c) for c in row)
                    for row in _aggregate_rows(records)]
            with open(summary) as fh:
                text = fh.read().splitlines()
            got = [ln for ln in text if ln and ln[0].isdigit()]
            checks.append((got == want, "summary regenerates from details",
                           f"{len(got)} rows"))
    return checks


# ---------------------------------------------------------------------------
# parser


def _add_output_flags(sub):
    sub.add_argument("--out", default=None,
                     help=f"output root (default ${OUTPUT_DIR_ENV} "
                          f"or ./{DEFAULT_OUTPUT_DIR})")
    sub.add_argument("--jobs", type=int, default=1,
                     help="max parallel runs (default 1)")
    sub.add_argument("--emit-plot-data", action="store_true",
                     help="write per-label (n_params, MAE stats) series")


def _add_protocol_flags(sub, epochs=50):
    sub.add_argument("--epochs", type=int, default=epochs)
    sub.add_argument("--h-input", dest="h_input", type=float, default=None,
                     help="stencil step for input derivatives")
    sub.add_argument("--lambda-init", dest="lambda_init", type=float,
                     default=None, help="initial-condition weight")
    sub.add_argument("--lambda-bnd", dest="lambda_bnd", type=float,
                     default=None, help="boundary weight")
    for f in _OPT_FIELDS:
        default = getattr(DEFAULT_LBFGS, f)
        sub.add_argument(f"--{f.replace('_', '-')}",
                         type=type(default), default=None,
                         help=f"optimizer override (default {default})")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="symqpde",
        description="symmetry-equivariant quantum models for PDE benchmarks")
    subs = parser.add_subparsers(dest="command", required=True)

    tw = subs.add_parser("twirl", help="print an equivariant generator set")
    tw.add_argument("--group", required=True, choices=_TWIRL_CHOICES)
    tw.add_argument("--qubits", type=int, default=2, choices=(2, 4))
    tw.set_defaults(func=cmd_twirl)

    de = subs.add_parser("describe", help="print an ansatz structure")
    de.add_argument("--ansatz", required=True, choices=ANSATZ_NAMES)
    de.add_argument("--layers", type=int, default=1)
    de.add_argument("--qubits", type=int, default=2)
    de.add_argument("--rotations", type=int, default=3,
                    help="rotations per qubit (qpinn only)")
    de.set_defaults(func=cmd_describe)

    tr = subs.add_parser("train", help="one archived training run")
    tr.add_argument("--problem", required=True, choices=sorted(PROBLEM_BUILDERS))
    tr.add_argument("--ansatz", required=True,
                    choices=ANSATZ_NAMES + CLASSICAL_NAMES)
    tr.add_argument("--layers", type=int, required=True,
                    help="layer count (hidden width for pinn/sipinn)")
    tr.add_argument("--seed", type=int, default=0)
    _add_protocol_flags(tr)
    _add_output_flags(tr)
    tr.set_defaults(func=cmd_train)

    be = subs.add_parser("benchmark", help="ansatz/layers/seeds sweep")
    be.add_argument("--problem", required=True, choices=sorted(PROBLEM_BUILDERS))
    be.add_argument("--ansatz", required=True,
                    help="comma-separated ansatz names")
    be.add_argument("--layers", required=True, help="range like 1..10")
    be.add_argument("--seeds", type=int, default=10)
    _add_protocol_flags(be)
    _add_output_flags(be)
    be.set_defaults(func=cmd_benchmark)

    ba = subs.add_parser("baseline", help="classical PINN/SI-PINN sweep")
    ba.add_argument("--problem", required=True, choices=sorted(PROBLEM_BUILDERS))
    ba.add_argument("--model", default="pinn,sipinn",
                    help="comma-separated: pinn, sipinn")
    ba.add_argument("--widths", default="1..6", help="hidden widths, 1..6")
    ba.add_argument("--seeds", type=int, default=10)
    _add_protocol_flags(ba)
    _add_output_flags(ba)
    ba.set_defaults(func=cmd_baseline)

    ex = subs.add_parser("expressibility", help="KL-vs-Haar table")
    ex.add_argument("--ansatz", required=True,
                    help="comma-separated ansatz names")
    ex.add_argument("--layers", required=True, help="range like 1..6")
    ex.add_argument("--pairs", type=int, default=DEFAULT_PAIRS)
    ex.add_argument("--bins", type=int, default=DEFAULT_BINS)
    ex.add_argument("--seed", type=int, default=0)
    _add_output_flags(ex)
    ex.set_defaults(func=cmd_expressibility)

    va = subs.add_parser("validate", help="fixture and oracle suites")
    va.add_argument("--archive", default=None,
                    help="also check this archive's self-consistency")
    va.set_defaults(func=cmd_validate)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    args._parser = parser
    try:
        return args.func(args)
    except NumericIntegrityError as exc:
        print(f"error: integrity: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
