"""Command line entry point: generate, train, attack, bounds, verify, experiment.

Configuration is an INI file read with configparser; every key and its
default is printed by ``--print-defaults``. Exit codes: 0 ok, 2 bad config
or input, 3 training divergence, 4 degenerate weights, 5 failed verification.
"""

import argparse
import configparser
import csv
import hashlib
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import attack, bounds, gnn, graph, margins, verify
from .errors import DegenerateWeight, Divergence, PacGnnError

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGENCE, EXIT_DEGENERATE, EXIT_VERIFY = 0, 2, 3, 4, 5

DEFAULTS = {
    "dataset": {
        "path": "",
        "family": "erdos_renyi",
        "m": "100",
        "n": "8",
        "p": "0.3",
        "degree": "3",
        "h0": "4",
        "K": "2",
        "B": "1.0",
        "seed": "0",
    },
    "model": {
        "arch": "gcn",
        "hidden": "8",
        "phi": "relu",
        "rho": "relu",
        "psi": "relu",
        "diffusion": "laplacian",
        "M1": "1.0",
        "M2": "1.0",
        "lipschitz": "1.0",
        "checkpoint": "",
    },
    "train": {"steps": "200", "lr": "0.5", "seed": "0"},
    "attack": {
        "epsilon": "0.1",
        "pgd_steps": "40",
        "step_size": "",
        "restarts": "3",
        "edge_flip_budget": "2",
        "structure_mode": "flips",
        "seed": "0",
        "allow_diffusion_growth": "false",
    },
    "bound": {"gamma": "0.05, 0.1, 0.2, 0.5, 1.0", "delta": "0.1", "epsilon": "0.0, 0.1"},
    "verify": {"checks": "all", "seed": "0"},
    "experiment": {
        "resamples": "50",
        "m": "200",
        "heldout": "20000",
        "delta": "0.1",
        "gamma": "0.1",
        "epsilon": "0.1",
    },
    "output": {"dir": "out"},
}

SEEDED = ("dataset", "train", "attack", "verify")


class ConfigError(Exception):
    pass


def defaults_text() -> str:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp.read_dict(DEFAULTS)
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def load_config(path=None, seed=None, out=None) -> configparser.ConfigParser:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp.read_dict(DEFAULTS)
    if path:
        if not Path(path).exists():
            raise ConfigError(f"config file {path} not found")
        try:
            cp.read(path)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from exc
        unknown = [s for s in cp.sections() if s not in DEFAULTS]
        if unknown:
            raise ConfigError(f"unknown config sections: {unknown}")
        for sec in DEFAULTS:
            extra = set(cp[sec]) - set(DEFAULTS[sec])
            if extra:
                raise ConfigError(f"unknown keys in [{sec}]: {sorted(extra)}")
    if seed is not None:
        for sec in SEEDED:
            cp[sec]["seed"] = str(seed)
    if out is not None:
        cp["output"]["dir"] = str(out)
    return cp


def config_hash(cp) -> str:
    canon = json.dumps({s: dict(cp[s]) for s in cp.sections()}, sort_keys=True)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def provenance(cp, command: str) -> dict:
    return {"command": command, "config_hash": config_hash(cp),
            "seeds": {s: cp[s].getint("seed") for s in SEEDED}}


def _get(cp, sec, key, kind):
    raw = cp[sec][key].strip()
    try:
        if kind is bool:
            return cp[sec].getboolean(key)
        if kind == "floats":
            return [float(v) for v in raw.split(",") if v.strip()]
        if kind == "ints":
            return tuple(int(v) for v in raw.split(",") if v.strip())
        if kind == "optfloat":
            return float(raw) if raw else None
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(f"[{sec}] {key} = {raw!r}: {exc}") from exc


def corpus_spec(cp) -> graph.CorpusSpec:
    g = lambda k, t: _get(cp, "dataset", k, t)
    return graph.CorpusSpec(family=g("family", str), m=g("m", int), n=g("n", int), p=g("p", float),
                            degree=g("degree", int), h0=g("h0", int), K=g("K", int), B=g("B", float))


def arch_spec(cp) -> gnn.ArchSpec:
    g = lambda k, t: _get(cp, "model", k, t)
    return gnn.ArchSpec(arch=g("arch", str), hidden=g("hidden", "ints"), phi=g("phi", str),
                        rho=g("rho", str), psi=g("psi", str), diffusion=g("diffusion", str),
                        M1=g("M1", float), M2=g("M2", float), lipschitz=g("lipschitz", float))


def attack_config(cp, epsilon=None) -> attack.AttackConfig:
    g = lambda k, t: _get(cp, "attack", k, t)
    return attack.AttackConfig(
        epsilon=g("epsilon", float) if epsilon is None else epsilon,
        pgd_steps=g("pgd_steps", int), step_size=g("step_size", "optfloat"),
        restarts=g("restarts", int), edge_flip_budget=g("edge_flip_budget", int),
        structure_mode=g("structure_mode", str), seed=g("seed", int),
        allow_diffusion_growth=g("allow_diffusion_growth", bool))


def load_or_generate(cp):
    path = cp["dataset"]["path"].strip()
    if path:
        if not Path(path).exists():
            raise ConfigError(f"dataset {path} not found")
        return graph.load_dataset(path)
    return graph.generate_corpus(corpus_spec(cp), _get(cp, "dataset", "seed", int))


def load_params(cp):
    path = cp["model"]["checkpoint"].strip()
    if not path:
        path = str(Path(cp["output"]["dir"]) / "checkpoint.json")
    if not Path(path).exists():
        raise ConfigError(f"checkpoint {path} not found (run `train` or set [model] checkpoint)")
    return gnn.load_checkpoint(path)


def _outdir(cp) -> Path:
    d = Path(cp["output"]["dir"])
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_csv(path, header, rows, prov):
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_hash={prov['config_hash']} seeds={json.dumps(prov['seeds'])}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1)


# --- commands -----------------------------------------------------------------

def cmd_generate(cp, args):
    spec = corpus_spec(cp)
    meta, graphs = graph.generate_corpus(spec, _get(cp, "dataset", "seed", int))
    prov = provenance(cp, "generate")
    path = _outdir(cp) / "dataset.jsonl"
    graph.save_dataset(meta, graphs, path, provenance=prov)
    degs = [graph.max_degree(g) for g in graphs]
    pn = max(graph.diffusion_norm(g, "laplacian") for g in graphs)
    print(f"wrote {path}: m={meta.m} K={meta.K} B={meta.B} "
          f"max_degree_range=[{min(degs)}, {max(degs)}] max_laplacian_norm={pn:.6g}")
    return EXIT_OK


def cmd_train(cp, args):
    meta, graphs = load_or_generate(cp)
    seed = _get(cp, "train", "seed", int)
    res = gnn.train(graphs, arch_spec(cp), _get(cp, "train", "steps", int),
                    _get(cp, "train", "lr", float), seed=seed, h0=meta.h0, K=meta.K)
    out = _outdir(cp)
    prov = provenance(cp, "train")
    gnn.save_checkpoint(res.params, out / "checkpoint.json", seed=seed, provenance=prov)
    _write_csv(out / "loss_trace.csv", ["step", "loss"], list(enumerate(res.losses)), prov)
    print(f"trained {res.params.arch}: loss {res.losses[0]:.4f} -> {res.losses[-1]:.4f}, "
          f"train accuracy {gnn.accuracy(res.params, graphs):.3f}")
    return EXIT_OK


def _dataset_cap(p, graphs):
    if p.arch == "mpgnn":
        return max(graph.diffusion_norm(g, p.diffusion) for g in graphs)
    return None


def cmd_attack(cp, args):
    meta, graphs = load_or_generate(cp)
    p = load_params(cp)
    cfg = attack_config(cp)
    cfg.diffusion_norm_cap = _dataset_cap(p, graphs)
    gamma = _get(cp, "bound", "gamma", "floats")[0]
    rep = margins.margin_report(p, graphs, gamma, cfg, threads=args.threads)
    bad = [i for i, (g, w) in enumerate(zip(graphs, rep.witnesses))
           if not attack.within_budget(g, w, cfg.epsilon)]
    if bad:
        raise PacGnnError(f"witnesses {bad[:5]} violate the feature budget")
    out = _outdir(cp)
    prov = provenance(cp, "attack")
    rep.to_csv(out / "margins.csv",
               provenance=f"config_hash={prov['config_hash']} seeds={json.dumps(prov['seeds'])}")
    graph.save_dataset(graph.DatasetMeta(meta.K, meta.h0, meta.B + cfg.epsilon),
                       rep.witnesses, out / "witnesses.jsonl", provenance=prov)
    print(f"gamma={gamma} eps={cfg.epsilon}: clean loss {rep.clean_loss:.4f}, "
          f"robust loss {rep.robust_loss:.4f}, attacked {int(rep.attacked.sum())}/{len(graphs)}")
    return EXIT_OK


def certify(p, graphs, B, gamma, delta, epsilon):
    m = len(graphs)
    if p.arch == "gcn":
        inp = bounds.BoundInputs.from_gcn(p, B, gamma, delta, m, epsilon)
        return inp, bounds.gcn_certificate(inp)
    inp = bounds.BoundInputs.from_mpgnn(p, graphs, B, gamma, delta, m, epsilon)
    return inp, bounds.mpgnn_certificate(inp)


def cmd_bounds(cp, args):
    meta, graphs = load_or_generate(cp)
    p = load_params(cp)
    gammas = _get(cp, "bound", "gamma", "floats")
    epsilons = _get(cp, "bound", "epsilon", "floats")
    delta = _get(cp, "bound", "delta", float)
    clean = margins.sample_margins(p, graphs)
    dmax = max(max(graph.max_degree(g) for g in graphs), 1)
    rows, certs = [], []
    for eps in epsilons:
        if eps > 0:
            cfg = attack_config(cp, epsilon=eps)
            cfg.diffusion_norm_cap = _dataset_cap(p, graphs)
            robust = np.minimum(margins.robust_margins(p, graphs, cfg, args.threads)[0], clean)
        else:
            robust = clean
        for gamma in gammas:
            inp, cert = certify(p, graphs, meta.B, gamma, delta, eps)
            comp = bounds.baseline_comparators(inp, dmax)
            rows.append([gamma, eps, margins.loss_at(clean, gamma), margins.loss_at(robust, gamma),
                         cert.bound_value, cert.regime, *comp.values()])
            certs.append({"gamma": gamma, "epsilon": eps, **cert.to_json()})
    out = _outdir(cp)
    prov = provenance(cp, "bounds")
    header = ["gamma", "epsilon", "clean_loss", "robust_loss", "certificate", "regime",
              *bounds.baseline_comparators(inp, dmax).keys()]
    _write_csv(out / "bounds.csv", header, rows, prov)
    _write_json(out / "certificates.json", {"provenance": prov, "max_degree": dmax,
                                            "certificates": certs})
    for r in rows:
        print(f"gamma={r[0]:<6} eps={r[1]:<5} clean={r[2]:.3f} robust={r[3]:.3f} "
              f"cert={r[4]:.4g} ({r[5]})")
    return EXIT_OK


def cmd_verify(cp, args):
    raw = cp["verify"]["checks"].strip()
    names = list(verify.CHECKS) if raw in ("", "all") else [c.strip() for c in raw.split(",")]
    unknown = [n for n in names if n not in verify.CHECKS]
    if unknown:
        raise ConfigError(f"unknown checks {unknown}; choose from {list(verify.CHECKS)}")
    reports = verify.run_all(_get(cp, "verify", "seed", int), args.threads, names, log=print)
    prov = provenance(cp, "verify")
    _write_json(_outdir(cp) / "verify.json",
                {"provenance": prov, "reports": [r.to_json() for r in reports]})
    failed = [r.name for r in reports if not r.passed]
    if failed:
        print(f"failed checks: {', '.join(failed)}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_experiment(cp, args):
    g = lambda k, t: _get(cp, "experiment", k, t)
    cfg = verify.PacExperimentConfig(resamples=g("resamples", int), m=g("m", int),
                                     heldout=g("heldout", int), delta=g("delta", float),
                                     gamma=g("gamma", float), epsilon=g("epsilon", float))
    res = verify.end_to_end_pac(cfg, seed=_get(cp, "verify", "seed", int), log=print)
    prov = provenance(cp, "experiment")
    out = _outdir(cp)
    _write_json(out / "pac_experiment.json", {"provenance": prov, **res})
    keys = list(res["rows"][0])
    _write_csv(out / "pac_experiment.csv", keys, [[r[k] for k in keys] for r in res["rows"]], prov)
    print(f"violations {res['violations']}/{cfg.resamples} (allowed {res['allowed_violations']:.2f}); "
          f"vacuous certificates {res['vacuous_fraction']:.0%}; degree pair identical: "
          f"{res['degree_independence']['identical']}")
    return EXIT_OK if res["passed"] else EXIT_VERIFY


COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "attack": cmd_attack,
    "bounds": cmd_bounds,
    "verify": cmd_verify,
    "experiment": cmd_experiment,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="pacgnn", description=__doc__.splitlines()[0])
    ap.add_argument("command", nargs="?", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="INI configuration file")
    ap.add_argument("--seed", type=int, help="override every seed in the config")
    ap.add_argument("--threads", type=int, default=1, help="worker threads for per-sample loops")
    ap.add_argument("--out", help="output directory (overrides [output] dir)")
    ap.add_argument("--print-defaults", action="store_true", help="print the default config and exit")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.print_defaults:
        print(defaults_text(), end="")
        return EXIT_OK
    if args.command is None:
        print("a command is required", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cp = load_config(args.config, args.seed, args.out)
        return COMMANDS[args.command](cp, args)
    except Divergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except DegenerateWeight as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (ConfigError, PacGnnError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
