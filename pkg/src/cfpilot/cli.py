"""Command-line front end: dataset generation, training, benchmarking, checks."""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time

import numpy as np

from .baselines import (SearchSpaceTooLarge, exhaustive_search, greedy_assignment,
                        location_based_assignment, master_ap_assignment,
                        random_assignment)
from .config import SystemConfig
from .dataset import generate_dataset, label_dataset, load_dataset, save_dataset
from .gradcheck import REL_TOL, run_gradcheck
from .models import (MODEL_KINDS, HqcnnModel, count_parameters, load_checkpoint,
                     save_checkpoint)
from .scenario import generate_topology
from .throughput import sum_rate
from .training import TrainingConfig, TrainingDiverged, train

HEURISTICS = ("random", "greedy", "master-ap", "location", "epas")


class CliError(Exception):
    """User-facing error; exits with status 1."""


def _load_config(path) -> SystemConfig:
    if path is None:
        return SystemConfig()
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config {path}: {exc}")
    system = doc.get("system", doc)
    try:
        return SystemConfig.from_dict(system)
    except (TypeError, ValueError) as exc:
        raise CliError(f"invalid config: {exc}")


def _realization_hash(ds) -> str:
    digest = hashlib.sha256()
    for beta in ds.betas:
        digest.update(np.ascontiguousarray(beta, dtype="<f8").tobytes())
    return digest.hexdigest()[:16]


def cmd_generate(args) -> int:
    config = _load_config(args.config)
    ds = generate_dataset(config, args.n_samples, args.seed,
                          fixed_aps=args.fixed_aps)
    if args.label:
        label_dataset(ds)
    save_dataset(ds, args.out)
    print(f"wrote {len(ds)} samples to {args.out} (config {config.config_hash()})")
    return 0


def cmd_label(args) -> int:
    ds = load_dataset(args.dataset)
    label_dataset(ds)
    save_dataset(ds, args.out)
    print(f"labeled {len(ds)} samples -> {args.out}")
    return 0


def cmd_train(args) -> int:
    ds = load_dataset(args.dataset)
    if not ds.has_stats:
        raise CliError("dataset has no normalization statistics (empty?)")
    mode = {"sup": "supervised", "unsup": "unsupervised"}.get(args.mode, args.mode)
    if mode == "supervised" and ds.labels is None:
        raise CliError("supervised training needs a labeled dataset (run `label`)")
    if args.init_checkpoint:
        model, meta = load_checkpoint(args.init_checkpoint)
        if meta["config_hash"] != ds.config.config_hash():
            raise CliError("--init-checkpoint was trained on a different config")
        if meta["kind"] != args.model:
            raise CliError(f"--init-checkpoint holds a {meta['kind']!r} model, "
                           f"not {args.model!r}")
    else:
        from .models import build_model
        model = build_model(args.model, ds.config, seed=args.seed,
                            n_qubits=args.qubits, input_mean=ds.mean,
                            input_std=ds.std)
    tconf = TrainingConfig(mode=mode, learning_rate=args.learning_rate,
                           epochs=args.epochs, batch_size=args.batch_size,
                           optimizer=args.optimizer, seed=args.seed,
                           entropy_weight=args.entropy_weight)
    try:
        history = train(model, ds.beta_array(), ds.labels, tconf, ds.config)
    except TrainingDiverged as exc:
        save_checkpoint(args.out, model, args.model, ds.config,
                        extra={"diverged": True})
        raise CliError(f"training diverged ({exc}); last finite parameters saved")
    save_checkpoint(args.out, model, args.model, ds.config,
                    extra={"training": {"mode": mode, "seed": args.seed,
                                        "epochs": tconf.epochs,
                                        "learning_rate": tconf.learning_rate,
                                        "optimizer": tconf.optimizer,
                                        "batch_size": tconf.batch_size,
                                        "entropy_weight": tconf.entropy_weight}})
    hist_path = str(args.out) + ".history.json"
    with open(hist_path, "w") as fh:
        json.dump({"config_hash": ds.config.config_hash(), "seed": args.seed,
                   **history.to_dict()}, fh, indent=2)
    print(f"final loss {history.losses[-1]:.6g} "
          f"(initial {history.initial_loss:.6g}); history -> {hist_path}")
    return 0


def _evaluate_method(name, ds, checkpoints, epas_limit):
    """Per-sample sum-rates and a parameter count for one method."""
    config = ds.config
    rates, n_params = [], 0
    if name in HEURISTICS:
        for i, beta in enumerate(ds.betas):
            seed = ds.sample_seeds[i]
            if name == "random":
                a = random_assignment(config.K, config.tau_p, seed)
            elif name == "greedy":
                a = greedy_assignment(beta, config, seed).assignment
            elif name == "master-ap":
                a = master_ap_assignment(beta, config.tau_p)
            elif name == "location":
                topo = generate_topology(config, seed)
                a = location_based_assignment(topo, config.tau_p)
            else:
                a = exhaustive_search(beta, config, limit=epas_limit).assignment
            rates.append(sum_rate(beta, a, config).sum_mbps)
    else:
        if name not in checkpoints:
            raise CliError(f"method {name} needs --checkpoint {name}=PATH")
        model, meta = load_checkpoint(checkpoints[name])
        if meta["config_hash"] != config.config_hash():
            raise CliError(f"checkpoint {name} was trained on a different config")
        n_params = count_parameters(model)
        for beta in ds.betas:
            rates.append(sum_rate(beta, model.predict(beta), config).sum_mbps)
    return np.asarray(rates), n_params


def cmd_benchmark(args) -> int:
    ds = load_dataset(args.dataset)
    config = ds.config
    if len(ds) == 0:
        raise CliError("empty dataset")
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    checkpoints = {}
    for spec_item in args.checkpoint or []:
        if "=" not in spec_item:
            raise CliError("--checkpoint expects NAME=PATH")
        name, path = spec_item.split("=", 1)
        checkpoints[name] = path
    for m in methods:
        if m not in HEURISTICS and m not in MODEL_KINDS:
            raise CliError(f"unknown method {m!r}")

    rhash = _realization_hash(ds)
    rows = []
    for m in methods:
        t0 = time.perf_counter()
        try:
            rates, n_params = _evaluate_method(m, ds, checkpoints, args.epas_limit)
        except SearchSpaceTooLarge as exc:
            print(f"warning: skipping epas: {exc}", file=sys.stderr)
            continue
        elapsed = time.perf_counter() - t0
        rows.append({
            "method": m, "M": config.M, "L": config.L, "K": config.K,
            "tau_p": config.tau_p,
            "mean_mbps": rates.mean(), "std_mbps": rates.std(),
            "samples": len(rates), "parameters": n_params,
            "mbps_per_param": rates.mean() / n_params if n_params else "",
            "seconds": round(elapsed, 3),
            "realization_hash": rhash, "config_hash": config.config_hash(),
        })
        print(f"{m:12s} mean {rows[-1]['mean_mbps']:8.2f} Mbps "
              f"(std {rows[-1]['std_mbps']:.2f}, {elapsed:.1f}s)")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)
        print(f"report -> {args.out}")
    return 0


def cmd_gradcheck(args) -> int:
    report = run_gradcheck(args.seed)
    failed = False
    for group, err in report.items():
        ok = err < REL_TOL
        failed |= not ok
        print(f"{group:28s} max rel err {err:.3e}  {'PASS' if ok else 'FAIL'}")
    return 1 if failed else 0


def cmd_noise_sweep(args) -> int:
    ds = load_dataset(args.dataset)
    model, meta = load_checkpoint(args.checkpoint)
    if not isinstance(model, HqcnnModel):
        raise CliError("noise sweep needs an HQCNN checkpoint")
    if meta["config_hash"] != ds.config.config_hash():
        raise CliError("checkpoint and dataset configs disagree")
    noise_rates = [float(p) for p in args.noise.split(",")]
    rows = []
    for p in noise_rates:
        if not 0.0 <= p <= 1.0:
            raise CliError(f"noise rate {p} outside [0, 1]")
        pipelines = [("noiseless", 0.0, False), ("noisy", p, False)]
        if args.zne:
            pipelines.append(("noisy+zne", p, True))
        for label, rate, use_zne in pipelines:
            rates = []
            for beta in ds.betas:
                q = model.forward_noisy(beta, rate, zne=use_zne)
                from .models import hard_decision
                rates.append(sum_rate(beta, hard_decision(q), ds.config).sum_mbps)
            rows.append({"noise": p, "pipeline": label,
                         "mean_mbps": float(np.mean(rates)),
                         "std_mbps": float(np.std(rates)),
                         "samples": len(rates),
                         "config_hash": ds.config.config_hash()})
            print(f"p={p:<6g} {label:10s} mean {rows[-1]['mean_mbps']:.2f} Mbps")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)
        print(f"report -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cfpilot",
                                description="Pilot-assignment lab for cell-free "
                                            "massive MIMO")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a fading dataset")
    g.add_argument("--config", default=None)
    g.add_argument("--n-samples", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--fixed-aps", action="store_true")
    g.add_argument("--label", action="store_true",
                   help="attach master-AP labels while generating")
    g.set_defaults(func=cmd_generate)

    l = sub.add_parser("label", help="attach master-AP labels to a dataset")
    l.add_argument("--dataset", required=True)
    l.add_argument("--out", required=True)
    l.set_defaults(func=cmd_label)

    t = sub.add_parser("train", help="train a learned assigner")
    t.add_argument("--dataset", required=True)
    t.add_argument("--model", choices=MODEL_KINDS, default="hqcnn")
    t.add_argument("--mode", choices=["sup", "unsup", "supervised", "unsupervised"],
                   default="unsup")
    t.add_argument("--epochs", type=int, default=20)
    t.add_argument("--batch-size", type=int, default=16)
    t.add_argument("--learning-rate", type=float, default=None)
    t.add_argument("--optimizer", choices=["sgd", "adam"], default="sgd")
    t.add_argument("--qubits", type=int, default=8)
    t.add_argument("--entropy-weight", type=float, default=0.0,
                   help="sharpening penalty for unsupervised training")
    t.add_argument("--init-checkpoint", default=None,
                   help="warm-start parameters from an existing checkpoint")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)

    b = sub.add_parser("benchmark", help="score methods on one realization set")
    b.add_argument("--dataset", required=True)
    b.add_argument("--methods", default="random,greedy,master-ap,location,epas")
    b.add_argument("--checkpoint", action="append",
                   help="NAME=PATH for learned methods; repeatable")
    b.add_argument("--epas-limit", type=int, default=10**8)
    b.add_argument("--out", default=None)
    b.set_defaults(func=cmd_benchmark)

    c = sub.add_parser("gradcheck", help="finite-difference gradient validation")
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_gradcheck)

    n = sub.add_parser("noise-sweep", help="evaluate a checkpoint under noise")
    n.add_argument("--dataset", required=True)
    n.add_argument("--checkpoint", required=True)
    n.add_argument("--noise", default="0.1", help="comma-separated rates")
    n.add_argument("--zne", action="store_true")
    n.add_argument("--out", default=None)
    n.set_defaults(func=cmd_noise_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except AssertionError as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
