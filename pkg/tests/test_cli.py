import csv
import json

import numpy as np
import pytest

from pacgnn import cli
from pacgnn.gnn import GcnParams, save_checkpoint
from pacgnn.graph import load_dataset


def write_config(path, **sections):
    lines = []
    for sec, kv in sections.items():
        lines.append(f"[{sec}]")
        lines += [f"{k} = {v}" for k, v in kv.items()]
    path.write_text("\n".join(lines) + "\n")
    return str(path)


SMALL = dict(
    dataset={"m": "20", "n": "5", "p": "0.5"},
    train={"steps": "20"},
    attack={"pgd_steps": "4", "restarts": "2", "edge_flip_budget": "1"},
)


def run(tmp_path, *argv, **sections):
    merged = {k: dict(v) for k, v in SMALL.items()}
    for k, v in sections.items():
        merged.setdefault(k, {}).update(v)
    cfg = write_config(tmp_path / "run.ini", **merged)
    return cli.main([*argv, "--config", cfg, "--out", str(tmp_path / "out")])


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# config_hash=")
    return list(csv.reader(lines[1:]))


def test_print_defaults(capsys):
    assert cli.main(["--print-defaults"]) == 0
    text = capsys.readouterr().out
    for sec in cli.DEFAULTS:
        assert f"[{sec}]" in text


def test_missing_command_and_bad_config(tmp_path, capsys):
    assert cli.main([]) == 2
    assert cli.main(["generate", "--config", str(tmp_path / "none.ini")]) == 2
    bad = write_config(tmp_path / "bad.ini", dataset={"colour": "red"})
    assert cli.main(["generate", "--config", bad]) == 2
    bad = write_config(tmp_path / "bad2.ini", extras={"a": "1"})
    assert cli.main(["generate", "--config", bad]) == 2
    with pytest.raises(SystemExit) as info:
        cli.main(["frobnicate"])
    assert info.value.code == 2


def test_generate_deterministic_and_m_zero(tmp_path, capsys):
    assert run(tmp_path, "generate") == 0
    first = (tmp_path / "out" / "dataset.jsonl").read_text()
    assert run(tmp_path, "generate") == 0
    assert (tmp_path / "out" / "dataset.jsonl").read_text() == first
    head = json.loads(first.splitlines()[0])
    assert head["meta"]["provenance"]["config_hash"] == cli.config_hash(
        cli.load_config(str(tmp_path / "run.ini"), out=str(tmp_path / "out")))
    assert run(tmp_path, "generate", dataset={"m": "0"}) == 2


def test_generate_star_reports_uniform_degree(tmp_path, capsys):
    assert run(tmp_path, "generate", dataset={"family": "star", "n": "6"}) == 0
    assert "max_degree_range=[5, 5]" in capsys.readouterr().out
    meta, graphs = load_dataset(tmp_path / "out" / "dataset.jsonl")
    assert meta.m == 20


def test_seed_override_changes_hash(tmp_path):
    a = cli.load_config(None, seed=1)
    b = cli.load_config(None, seed=2)
    assert cli.config_hash(a) != cli.config_hash(b)
    assert all(a[s]["seed"] == "1" for s in cli.SEEDED)


def test_train_attack_bounds_pipeline(tmp_path, capsys):
    assert run(tmp_path, "train") == 0
    out = tmp_path / "out"
    ckpt = json.loads((out / "checkpoint.json").read_text())
    assert ckpt["arch"] == "gcn" and "config_hash" in ckpt["provenance"]
    trace = read_csv(out / "loss_trace.csv")
    assert trace[0] == ["step", "loss"] and len(trace) == 1 + 21
    assert float(trace[-1][1]) < float(trace[1][1])

    assert run(tmp_path, "train") == 0
    assert json.loads((out / "checkpoint.json").read_text()) == ckpt

    assert run(tmp_path, "attack") == 0
    rows = read_csv(out / "margins.csv")
    assert rows[0] == ["index", "clean_margin", "robust_margin", "attacked"]
    assert len(rows) == 1 + 20 + 1
    _, witnesses = load_dataset(out / "witnesses.jsonl")
    assert len(witnesses) == 20

    assert run(tmp_path, "bounds") == 0
    rows = read_csv(out / "bounds.csv")
    header, body = rows[0], rows[1:]
    assert len(body) == 5 * 2
    col = {k: i for i, k in enumerate(header)}
    zero = [r for r in body if float(r[col["epsilon"]]) == 0.0]
    assert all(r[col["clean_loss"]] == r[col["robust_loss"]] for r in zero)
    losses = [float(r[col["clean_loss"]]) for r in zero]
    assert losses == sorted(losses)
    for r in body:
        assert float(r[col["robust_loss"]]) >= float(r[col["clean_loss"]])
    certs = json.loads((out / "certificates.json").read_text())
    assert len(certs["certificates"]) == 10


def test_attack_with_zero_budget_returns_inputs(tmp_path):
    assert run(tmp_path, "train") == 0
    assert run(tmp_path, "attack", attack={"epsilon": "0.0", "structure_mode": "none"}) == 0
    _, witnesses = load_dataset(tmp_path / "out" / "witnesses.jsonl")
    rows = read_csv(tmp_path / "out" / "margins.csv")[1:-1]
    assert all(r[1] == r[2] and r[3] == "0" for r in rows)
    assert len(witnesses) == 20


def test_missing_inputs(tmp_path):
    assert run(tmp_path, "train", dataset={"path": str(tmp_path / "absent.jsonl")}) == 2
    assert run(tmp_path, "bounds") == 2


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_exit(tmp_path):
    assert run(tmp_path, "train", train={"lr": "1e300", "steps": "5"}) == 3


def test_degenerate_exit(tmp_path):
    out = tmp_path / "out"
    out.mkdir()
    save_checkpoint(GcnParams([np.zeros((4, 8)), np.ones((8, 2))]), out / "checkpoint.json")
    assert run(tmp_path, "bounds") == 4


def test_verify_selection(tmp_path, capsys):
    assert run(tmp_path, "verify", verify={"checks": "moment_lemma"}) == 0
    rep = json.loads((tmp_path / "out" / "verify.json").read_text())
    assert [r["name"] for r in rep["reports"]] == ["moment_lemma"]
    assert run(tmp_path, "verify", verify={"checks": "no_such_check"}) == 2


def test_experiment_small(tmp_path, capsys):
    code = run(tmp_path, "experiment", experiment={"resamples": "2", "m": "20", "heldout": "100"})
    assert code == 0
    res = json.loads((tmp_path / "out" / "pac_experiment.json").read_text())
    assert res["violations"] == 0 and len(res["rows"]) == 2
    assert read_csv(tmp_path / "out" / "pac_experiment.csv")[0][0] == "resample"
