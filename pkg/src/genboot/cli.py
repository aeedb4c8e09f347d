"""Command-line front end.

Subcommands: fit a generator from a CSV, sample a fitted model, run a
single replication, run a full coverage experiment, and draw from the
discretized cube-root limit law.  Exit codes: 0 success, 2 bad flags,
3 unreadable/unwritable files, 4 numerical failure (diverged training or
no valid replication).  Everything is a pure function of the flags and
input files; reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import sys

from .autodiff import NonFiniteError
from .core import RngStream, format_float, read_csv, write_csv
from .estimators import SingularDesignError
from .generators import (
    TrainingDivergedError,
    fit_generator,
    flow_config_from_options,
    gan_config_from_options,
    load_model,
    parse_training_options,
    sample,
    save_model,
)
from .inference import (
    AllTrialsInvalidError,
    TrialConfig,
    report_to_csv,
    run_coverage,
    run_trial,
    trials_to_csv,
)
from .oracles import ChernoffConfig, chernoff_sample

__all__ = ["main"]

# Flag defaults follow the source experiments; `--preset desk` shrinks the
# expensive knobs so the whole pipeline runs on a laptop in minutes.
_PRESETS = {
    "paper": {"reps": 500, "boot": 1000, "gen_steps": 2000, "flow_steps": 1000},
    "desk": {"reps": 100, "boot": 300, "gen_steps": 300, "flow_steps": 300},
}


def _say(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def _read_dataset(path: str):
    try:
        return read_csv(path)
    except ValueError as exc:  # malformed file counts as unreadable input
        raise OSError(f"{path}: {exc}") from exc


def _load_model(path: str):
    try:
        return load_model(path)
    except ValueError as exc:
        raise OSError(f"{path}: {exc}") from exc


def _write_text(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _add_training_flags(sub) -> None:
    sub.add_argument("--options", help="training options file, key=value lines")
    sub.add_argument("--gen-steps", type=int, dest="gen_steps")
    sub.add_argument("--critic-steps", type=int, dest="critic_steps")
    sub.add_argument("--lambda", type=float, dest="penalty", help="gradient penalty weight")
    sub.add_argument("--lr", type=float)
    sub.add_argument("--dropout", type=float)
    sub.add_argument("--flow-depth", type=int, dest="flow_depth")
    sub.add_argument("--flow-steps", type=int, dest="flow_steps")


_FLAG_KEYS = (
    ("gen_steps", "gen_steps"),
    ("critic_steps", "critic_steps"),
    ("penalty", "lambda"),
    ("lr", "lr"),
    ("dropout", "dropout"),
    ("flow_depth", "flow_depth"),
    ("flow_steps", "flow_steps"),
)


def _gather_options(args, preset: str | None = None) -> dict:
    """Options file values, overridden by explicit flags, padded by preset."""
    opts = {}
    if getattr(args, "options", None):
        with open(args.options, "r", encoding="utf-8") as fh:
            opts.update(parse_training_options(fh.read()))
    for attr, key in _FLAG_KEYS:
        val = getattr(args, attr, None)
        if val is not None:
            opts[key] = val
    if preset is not None:
        chosen = _PRESETS[preset]
        opts.setdefault("gen_steps", chosen["gen_steps"])
        opts.setdefault("flow_steps", chosen["flow_steps"])
    return opts


def _seed_of(args, opts: dict) -> int:
    if args.seed is not None:
        return args.seed
    return opts.get("seed", 0)


def _print_train_log(model) -> None:
    log = getattr(model.payload, "train_log", None)
    if not log:
        return
    label = "critic" if model.variant == "gan" else "nll"
    for i, val in enumerate(log):
        step = i + 1 if model.variant == "gan" else i
        _say(f"step {step} {label} {val:.6g}")


def cmd_fit(args) -> int:
    opts = _gather_options(args)
    gan_cfg = gan_config_from_options(opts)
    flow_cfg = flow_config_from_options(opts)
    seed = _seed_of(args, opts)
    data = _read_dataset(args.input)
    model = fit_generator(data, args.method, gan_cfg=gan_cfg, flow_cfg=flow_cfg, rng=RngStream(seed, 0))
    _print_train_log(model)
    save_model(model, args.out)
    _say(f"wrote {args.out}")
    return 0


def cmd_sample(args) -> int:
    if args.count < 0:
        raise ValueError("--count must be >= 0")
    model = _load_model(args.model)
    data = sample(model, args.count, RngStream(args.seed if args.seed is not None else 0, 0))
    write_csv(data, args.out)
    _say(f"wrote {args.out}")
    return 0


def _trial_config(args, preset: str | None) -> TrialConfig:
    opts = _gather_options(args, preset)
    if args.p is not None:
        p = args.p
    elif args.problem == "iso":
        p = 2
    else:
        raise ValueError("--p is required for --problem ols")
    boot = args.boot
    if boot is None:
        boot = _PRESETS[preset]["boot"] if preset else _PRESETS["paper"]["boot"]
    return TrialConfig(
        problem=args.problem,
        method=args.method,
        n=args.n,
        p=p,
        boot_reps=boot,
        center_draws=args.center_draws,
        seed=_seed_of(args, opts),
        gan=gan_config_from_options(opts),
        flow=flow_config_from_options(opts),
    )


def cmd_trial(args) -> int:
    cfg = _trial_config(args, None)
    result = run_trial(cfg, args.rep)
    _write_text(args.out, trials_to_csv([result], cfg.levels))
    if not result.valid:
        raise AllTrialsInvalidError("replication exceeded its bootstrap skip budget")
    return 0


def cmd_coverage(args) -> int:
    cfg = _trial_config(args, args.preset)
    reps = args.reps
    if reps is None:
        reps = _PRESETS[args.preset]["reps"] if args.preset else _PRESETS["paper"]["reps"]
    dump = [] if args.dump else None

    def progress(done, total):
        _say(f"rep {done}/{total}")

    report = run_coverage(
        cfg,
        reps,
        workers=args.workers,
        progress=progress,
        collect_trials=dump.extend if dump is not None else None,
    )
    if args.dump:
        _write_text(args.dump, trials_to_csv(dump, cfg.levels))
    _write_text(args.out, report_to_csv(report, levels=cfg.levels))
    return 0


def cmd_chernoff(args) -> int:
    cfg = ChernoffConfig(t_max=args.T, delta=args.delta, draws=args.draws)
    draws = chernoff_sample(cfg, RngStream(args.seed if args.seed is not None else 0, 0))
    lines = ["value"] + [format_float(v) for v in draws]
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="genboot", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True)

    fit = subs.add_parser("fit", help="fit a generator to a dataset CSV")
    fit.add_argument("--input", required=True)
    fit.add_argument("--method", required=True, choices=["empirical", "smoothed", "gan", "flow"])
    fit.add_argument("--out", required=True)
    fit.add_argument("--seed", type=int)
    _add_training_flags(fit)
    fit.set_defaults(func=cmd_fit)

    smp = subs.add_parser("sample", help="draw synthetic rows from a fitted model")
    smp.add_argument("--model", required=True)
    smp.add_argument("--count", type=int, required=True)
    smp.add_argument("--out", required=True)
    smp.add_argument("--seed", type=int)
    smp.set_defaults(func=cmd_sample)

    def _add_trial_flags(sub):
        sub.add_argument("--problem", required=True, choices=["ols", "iso"])
        sub.add_argument("--method", required=True, choices=["empirical", "smoothed", "gan", "flow"])
        sub.add_argument("--p", type=int)
        sub.add_argument("--n", type=int, required=True)
        sub.add_argument("--boot", type=int, help="bootstrap samples per replication")
        sub.add_argument("--center-draws", type=int, dest="center_draws", default=50000)
        sub.add_argument("--seed", type=int)
        sub.add_argument("--out")
        _add_training_flags(sub)

    trial = subs.add_parser("trial", help="run one replication and dump its row")
    _add_trial_flags(trial)
    trial.add_argument("--rep", type=int, default=0)
    trial.set_defaults(func=cmd_trial)

    cov = subs.add_parser("coverage", help="Monte Carlo coverage experiment")
    _add_trial_flags(cov)
    cov.add_argument("--reps", type=int, help="Monte Carlo replications")
    cov.add_argument("--workers", type=int, default=1)
    cov.add_argument("--preset", choices=sorted(_PRESETS))
    cov.add_argument("--dump", help="write per-replication rows to this CSV")
    cov.set_defaults(func=cmd_coverage)

    chf = subs.add_parser("chernoff", help="draw from the discretized limit law")
    chf.add_argument("--draws", type=int, default=100000)
    chf.add_argument("--T", type=float, default=3.0)
    chf.add_argument("--delta", type=float, default=0.001)
    chf.add_argument("--seed", type=int)
    chf.add_argument("--out")
    chf.set_defaults(func=cmd_chernoff)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        _say(f"error: {exc}")
        return 3
    except (TrainingDivergedError, NonFiniteError, AllTrialsInvalidError, SingularDesignError) as exc:
        _say(f"error: {exc}")
        return 4
    except ValueError as exc:
        _say(f"error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
