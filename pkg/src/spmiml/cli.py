"""Command-line entry point: generate, train, eval, ablate, patchify.

Every command writes machine-readable ``key=value`` rows. Errors go to stderr
prefixed with ``spmiml: error:`` and exit non-zero.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .core import (GLOBAL_FREQ, INSTANCE_LEVEL, LABEL_LEVEL, NO_WEIGHTS, PER_SAMPLE_FREQ,
                   ConfigError, MIMLError, TrainConfig)
from .engine import evaluate, load_checkpoint, save_checkpoint, train
from .metrics import MetricsReport
from .patching import DROP_PARTIAL, ZERO_PAD, PatchSpec, image_to_bag, read_pnm
from .synthgen import SynthConfig, generate, manifest, read_bags, write_bags

PROG = "spmiml"
GRANULARITY_FLAGS = {"label": LABEL_LEVEL, "instance": INSTANCE_LEVEL}
INIT_FLAGS = {"global": GLOBAL_FREQ, "per-sample": PER_SAMPLE_FREQ, "none": NO_WEIGHTS}
METRIC_KEYS = ["hamming_loss", "one_error", "ranking_loss", "average_precision",
               "f1_micro", "f1_macro", "subset_accuracy", "mAP", "overall"]

# name -> (use_sampler, use_dispatcher, use_coefficients)
ABLATIONS = {
    "baseline": (False, False, False),
    "no-sampler": (False, True, True),
    "no-dispatcher": (True, False, True),
    "no-coefficients": (True, True, False),
    "full": (True, True, True),
}


def fail(message, code=1):
    print(f"{PROG}: error: {message}", file=sys.stderr)
    sys.exit(code)


# -- config resolution -------------------------------------------------------

def _coerce(name, raw: str):
    fields = {f.name: f for f in dataclasses.fields(TrainConfig)}
    if name not in fields:
        raise ConfigError(f"unknown config key {name!r}")
    default = fields[name].default
    if name == "hidden":
        return tuple(int(x) for x in raw.split(",") if x.strip())
    if name == "sample_count":
        return None if raw in ("", "none", "None") else ("all" if raw == "all" else int(raw))
    if isinstance(default, bool):
        if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
            raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
        return raw.lower() in ("true", "1", "yes")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def read_config_file(path) -> dict:
    """Flat ``key=value`` file using TrainConfig field names; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            out[key] = _coerce(key, value)
        except ValueError as e:
            raise ConfigError(f"{path}:{lineno}: {e}") from None
    return out


def resolve_config(args) -> TrainConfig:
    """Defaults, then the config file, then MIML_SEED, then explicit flags."""
    values = read_config_file(args.config) if args.config else {}
    if "seed" not in values and os.environ.get("MIML_SEED"):
        values["seed"] = int(os.environ["MIML_SEED"])
    flag_map = {
        "seed": args.seed, "epochs": args.epochs, "lr_theta": args.lr,
        "lr_alpha_base": args.alpha_lr, "batch_size": args.batch, "C": args.c, "tau": args.tau,
        "dispatcher_gradient": args.dispatcher_grad,
    }
    values.update({k: v for k, v in flag_map.items() if v is not None})
    if args.m is not None:
        values["sample_count"] = _coerce("sample_count", args.m)
    if args.granularity is not None:
        values["granularity"] = GRANULARITY_FLAGS[args.granularity]
    if args.no_sampler:
        values["use_sampler"] = False
    if args.no_dispatcher:
        values["use_dispatcher"] = False
    if args.no_coefficients:
        values["use_coefficients"] = False
    if args.init is not None:
        values["init_mode"] = INIT_FLAGS[args.init]
    elif "init_mode" not in values:
        values["init_mode"] = _auto_init(values)
    return TrainConfig(**values)


def _auto_init(values) -> str:
    components = [values.get(k, True) for k in ("use_sampler", "use_dispatcher", "use_coefficients")]
    if not any(components):
        return NO_WEIGHTS
    if values.get("granularity") == INSTANCE_LEVEL:
        return GLOBAL_FREQ
    return PER_SAMPLE_FREQ


# -- reporting ---------------------------------------------------------------

def kv_row(pairs) -> str:
    return " ".join(f"{k}={v}" for k, v in pairs)


def _num(x) -> str:
    return "nan" if x != x else f"{x:.6f}"


def metrics_rows(report: MetricsReport) -> list[str]:
    d = report.as_dict()
    return [kv_row([("metric", k), ("value", _num(d[k]))]) for k in METRIC_KEYS]


def metrics_table(report: MetricsReport) -> list[str]:
    d = report.as_dict()
    width = max(map(len, METRIC_KEYS))
    return [f"{k:<{width}}  {_num(d[k])}" for k in METRIC_KEYS]


def _emit(lines, out_path=None):
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if out_path:
        Path(out_path).write_text(text)


# -- commands ----------------------------------------------------------------

def cmd_generate(args):
    lo, hi = (int(x) for x in args.instances.split(","))
    cfg = SynthConfig(K=args.k, D=args.d, bags=args.bags + args.test_bags,
                      instances_per_bag=(lo, hi), max_labels=args.max_labels,
                      noise_fraction=args.noise, class_separation=args.separation, seed=args.seed)
    bags = generate(cfg)
    train_bags, test_bags = bags[:args.bags], bags[args.bags:]
    write_bags(train_bags, args.out)
    meta = manifest(cfg, bags)
    meta["train_file"] = str(args.out)
    meta["train_bags"] = len(train_bags)
    if args.test_bags:
        if not args.test_out:
            raise ConfigError("--test-bags needs --test-out")
        write_bags(test_bags, args.test_out)
        meta["test_file"] = str(args.test_out)
        meta["test_bags"] = len(test_bags)
    Path(str(args.out) + ".manifest.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(kv_row([("bags", len(train_bags)), ("test_bags", len(test_bags)),
                  ("max_cooccurrence", meta["max_cooccurrence"]), ("out", args.out)]))


def cmd_train(args):
    cfg = resolve_config(args)
    bags = read_bags(args.data)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    start = time.perf_counter()

    def log(epoch, loss):
        rows.append(kv_row([("epoch", epoch), ("loss", f"{loss:.9g}"),
                            ("wall_time", f"{time.perf_counter() - start:.3f}")]))
        print(rows[-1], flush=True)

    state = train(bags, cfg, on_epoch=log)
    save_checkpoint(state, out / "checkpoint.json")
    (out / "train_log.txt").write_text("".join(r + "\n" for r in rows))
    (out / "config.txt").write_text(
        "".join(f"{k}={_config_value(v)}\n" for k, v in sorted(cfg.to_dict().items())))


def _config_value(v):
    if isinstance(v, list):
        return ",".join(map(str, v))
    return "none" if v is None else str(v)


def cmd_eval(args):
    ckpt = Path(args.checkpoint)
    if ckpt.is_dir():
        ckpt = ckpt / "checkpoint.json"
    if not ckpt.exists():
        raise FileNotFoundError(f"checkpoint not found: {ckpt}")
    state = load_checkpoint(ckpt)
    report = evaluate(read_bags(args.data), state, args.tau)
    lines = metrics_rows(report)
    if args.table:
        lines += [""] + metrics_table(report)
    _emit(lines, args.out)


def _run_one(job):
    name, cfg_dict, train_path, test_path = job
    cfg = TrainConfig.from_dict(cfg_dict)
    state = train(read_bags(train_path), cfg)
    return name, cfg.seed, evaluate(read_bags(test_path), state).as_dict()


def _ablation_grid(args, base: TrainConfig):
    grid = []
    names = [n.strip() for n in args.configs.split(",") if n.strip()] if args.configs else []
    for name in names:
        if name not in ABLATIONS:
            raise ConfigError(f"unknown ablation {name!r}; choose from {', '.join(ABLATIONS)}")
        s, d, c = ABLATIONS[name]
        init = base.init_mode if any((s, d, c)) else NO_WEIGHTS
        cfg = dataclasses.replace(base, use_sampler=s, use_dispatcher=d, use_coefficients=c,
                                  init_mode=init)
        grid.append((name, cfg))
    for C in _parse_int_list(args.c_sweep):
        grid.append((f"C={C}", dataclasses.replace(base, C=C)))
    if not grid:
        raise ConfigError("nothing to run: give --configs and/or --c-sweep")
    return grid


def _parse_int_list(text):
    if not text:
        return []
    out = []
    for part in text.split(","):
        if "-" in part:
            lo, hi = (int(x) for x in part.split("-"))
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    return out


def _flag(on):
    return "yes" if on else "no"


def cmd_ablate(args):
    base = resolve_config(args)
    K = read_bags(args.data)[0].K
    seeds = _parse_int_list(args.seeds)
    grid = _ablation_grid(args, base)
    for _, cfg in grid:
        cfg.validate(K)
    jobs = [(name, dataclasses.replace(cfg, seed=s).to_dict(), args.data, args.test)
            for name, cfg in grid for s in seeds]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]

    lines, table = [], []
    cols = ["f1_micro", "f1_macro", "subset_accuracy", "mAP", "overall"]
    inv_gran = {v: k for k, v in GRANULARITY_FLAGS.items()}
    inv_init = {v: k for k, v in INIT_FLAGS.items()}
    for name, cfg in grid:
        runs = [r for n, _, r in results if n == name]
        desc = [("config", name), ("granularity", inv_gran[cfg.granularity] if cfg.uses_weights else "none"),
                ("init", inv_init[cfg.init_mode]), ("sampling", _flag(cfg.use_sampler)),
                ("pseudo_label", _flag(cfg.use_dispatcher)),
                ("coefficients", _flag(cfg.use_coefficients)), ("C", cfg.C), ("seeds", len(runs))]
        stats = []
        for k in METRIC_KEYS:
            vals = np.array([r[k] for r in runs], dtype=np.float64)
            stats += [(f"{k}_mean", _num(float(np.mean(vals)))), (f"{k}_std", _num(float(np.std(vals))))]
        lines.append(kv_row(desc + stats))
        table.append([name] + [v for _, v in desc[1:6]] +
                     [f"{np.mean([r[c] for r in runs]):.3f}±{np.std([r[c] for r in runs]):.3f}"
                      for c in cols])
    header = ["model", "granularity", "init", "sampling", "pseudo-label", "coefficients"] + cols
    widths = [max(len(str(r[i])) for r in table + [header]) for i in range(len(header))]
    fmt = lambda row: "  ".join(f"{str(v):<{w}}" for v, w in zip(row, widths)).rstrip()
    if args.table:
        lines += ["", fmt(header)] + [fmt(r) for r in table]
    _emit(lines, args.out)


def read_image_manifest(path):
    """Lines of ``<image path> <comma-separated class indices>``; relative paths resolve
    against the manifest's directory."""
    entries = []
    base = Path(path).parent
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ConfigError(f"{path}:{lineno}: expected '<image> <labels>'")
        img = Path(parts[0])
        entries.append((img if img.is_absolute() else base / img,
                        [int(x) for x in parts[1].split(",")]))
    return entries


def cmd_patchify(args):
    spec = PatchSpec(args.patch_size, args.policy)
    bags = []
    for i, (img_path, labels) in enumerate(read_image_manifest(args.manifest)):
        label = np.zeros(args.k, dtype=np.int8)
        label[labels] = 1
        bags.append(image_to_bag(read_pnm(img_path), label, f"img{i:05d}", spec, bins=args.bins))
    write_bags(bags, args.out)
    print(kv_row([("bags", len(bags)), ("instances", sum(len(b) for b in bags)),
                  ("out", args.out)]))


# -- parser ------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    # one error prefix for the top level and every subcommand
    def error(self, message):
        self.print_usage(sys.stderr)
        fail(message, code=2)


def _add_train_flags(p):
    p.add_argument("--config", help="key=value file of training settings; flags override it")
    p.add_argument("--seed", type=int, help="default: config file, then $MIML_SEED, then 0")
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float, help="network learning rate")
    p.add_argument("--alpha-lr", type=float, help="base learning rate of the confidence weights")
    p.add_argument("--batch", type=int, help="instances per optimizer step")
    p.add_argument("--c", type=int, help="label-aware coefficient C")
    p.add_argument("--tau", type=float, help="decision threshold")
    p.add_argument("--m", help="instances sampled per bag per epoch (integer or 'all')")
    p.add_argument("--granularity", choices=sorted(GRANULARITY_FLAGS))
    p.add_argument("--init", choices=sorted(INIT_FLAGS),
                   help="default: none when all three components are off, else per-sample "
                        "(global for instance granularity)")
    p.add_argument("--no-sampler", action="store_true")
    p.add_argument("--no-dispatcher", action="store_true")
    p.add_argument("--no-coefficients", action="store_true")
    p.add_argument("--dispatcher-grad", choices=["detached", "full"])


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog=PROG, description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="write a synthetic bag dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--d", type=int, default=16)
    p.add_argument("--bags", type=int, default=500)
    p.add_argument("--test-bags", type=int, default=0)
    p.add_argument("--test-out")
    p.add_argument("--instances", default="8,24", help="min,max instances per bag")
    p.add_argument("--max-labels", type=int, default=3)
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--separation", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train and write a checkpoint plus a loss log")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="output directory")
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a bag file")
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", required=True, help="checkpoint file or training output dir")
    p.add_argument("--tau", type=float)
    p.add_argument("--table", action="store_true", help="append a human-readable table")
    p.add_argument("--out", help="also write the report to this file")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="component and C sweeps across seeds, mean and std")
    p.add_argument("--data", required=True, help="training bags")
    p.add_argument("--test", required=True, help="evaluation bags")
    p.add_argument("--seeds", default="0-4", help="e.g. 0-4 or 1,5,9")
    p.add_argument("--configs", default="baseline,no-sampler,no-dispatcher,no-coefficients,full")
    p.add_argument("--c-sweep", default="", help="C values, e.g. 2-7")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--table", action="store_true")
    p.add_argument("--out")
    _add_train_flags(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("patchify", help="tile labeled PGM/PPM images into a bag file")
    p.add_argument("--manifest", required=True, help="lines of '<image> <labels>'")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--patch-size", type=int, default=448)
    p.add_argument("--policy", choices=[DROP_PARTIAL, ZERO_PAD], default=DROP_PARTIAL)
    p.add_argument("--bins", type=int, default=8)
    p.set_defaults(func=cmd_patchify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "generate" and args.seed is None:
        args.seed = int(os.environ.get("MIML_SEED", 0))
    try:
        args.func(args)
    except (MIMLError, ValueError, OSError, KeyError) as e:
        fail(str(e))
    return 0


if __name__ == "__main__":
    sys.exit(main())
