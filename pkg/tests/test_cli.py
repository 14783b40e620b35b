"""CLI dispatch: exit codes, determinism, audit ordering, file handling."""
import json
import warnings

import numpy as np
import pytest

from ppdl.cli import YATRACOS_COLUMNS, dispatch
from ppdl.lowerbound import NFL_COLUMNS
from ppdl.pipeline import EXPERIMENT_COLUMNS
from ppdl.rng import as_generator

G01 = '{"kind": "gaussian", "mean": [0.0], "covariance": [[1.0]]}'
G11 = '{"kind": "gaussian", "mean": [1.0], "covariance": [[1.0]]}'


def run(capsys, argv):
    code = dispatch(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_samples(tmp_path, name, count, seed, dims=1, mean=0.0):
    gen = as_generator(seed)
    pts = gen.normal(mean, 1.0, size=(count, dims))
    path = tmp_path / name
    np.savetxt(path, pts, delimiter=",")
    return str(path)


def write_json(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def learn_config(tmp_path, **overrides):
    cfg = {
        "public": write_samples(tmp_path, "public.csv", 32, 200),
        "private": write_samples(tmp_path, "private.csv", 200, 201),
        "alpha": 0.3,
    }
    cfg.update(overrides)
    return write_json(tmp_path, "learn.json", cfg)


# ------------------------------ tv ------------------------------


def test_tv_exact_values(capsys):
    code, out, _ = run(capsys, ["tv", "--p", G01, "--q", "same"])
    assert code == 0 and out.splitlines()[0] == "0.0"
    code, out, err = run(capsys, ["tv", "--p", G01, "--q", G11])
    assert code == 0 and out.splitlines()[0] == "0.38292492254802624"
    assert "method=exact-gaussian-1d" in err


def test_tv_finite(capsys):
    p = '{"kind": "finite", "masses": [0.5, 0.5]}'
    q = '{"kind": "finite", "masses": [0.2, 0.8]}'
    code, out, err = run(capsys, ["tv", "--p", p, "--q", q])
    assert code == 0 and float(out.splitlines()[0]) == pytest.approx(0.3, abs=1e-15)
    assert "method=exact-finite" in err


def test_tv_monte_carlo_seed_contract(capsys):
    prod = json.dumps({"kind": "product", "factors": [json.loads(G01), json.loads(G01)]})
    code, _, err = run(capsys, ["tv", "--p", prod, "--q", prod])
    assert code == 2 and "--seed" in err
    argv = ["tv", "--p", prod, "--q", prod, "--trials", "5000", "--seed", "99"]
    code1, out1, err1 = run(capsys, argv)
    code2, out2, _ = run(capsys, argv)
    assert code1 == code2 == 0
    assert out1 == out2
    assert "method=monte-carlo" in err1


def test_tv_bad_json(capsys):
    code, _, err = run(capsys, ["tv", "--p", "{not json", "--q", "same"])
    assert code == 2 and "config error" in err


# ------------------------------ suggest-n ------------------------------


def test_suggest_n_prints_reference(capsys):
    argv = ["suggest-n", "--alpha", "0.1", "--beta", "0.1", "--epsilon", "1.0",
            "--tau", "32", "--bits", "40"]
    code, out, _ = run(capsys, argv)
    assert code == 0 and out.strip() == "15579"


# ------------------------------ learn ------------------------------


def test_learn_writes_result_and_reruns_identically(capsys, tmp_path):
    cfg = learn_config(tmp_path)
    out_path = tmp_path / "result.json"
    argv = ["learn", "--config", cfg, "--seed", "17", "--out", str(out_path)]
    code, _, _ = run(capsys, argv)
    assert code == 0
    first = out_path.read_bytes()
    payload = json.loads(first)
    assert set(payload) == {"chosen", "chosen_index", "candidates", "epsilon", "n"}
    assert payload["chosen"]["kind"] == "gaussian"
    assert payload["n"] == 200
    code, _, _ = run(capsys, argv)
    assert code == 0 and out_path.read_bytes() == first


def test_learn_audit_order(capsys, tmp_path):
    cfg = learn_config(tmp_path)
    argv = ["learn", "--config", cfg, "--seed", "18", "--audit",
            "--out", str(tmp_path / "r.json")]
    code, _, err = run(capsys, argv)
    assert code == 0
    events = [line.removeprefix("audit: ") for line in err.splitlines()
              if line.startswith("audit: ")]
    order = [
        "public_file_read:start",
        "public_file_read:done",
        "generate_candidates:start",
        "generate_candidates:done",
        "private_file_read:start",
        "private_file_read:done",
        "scheffe_candidate:start",
        "scheffe_candidate:done",
        "private_read:start",
        "private_read:done",
        "exponential_mechanism:done",
    ]
    idx = [events.index(e) for e in order]
    assert idx == sorted(idx)


def test_learn_error_exits(capsys, tmp_path):
    cfg = learn_config(tmp_path)
    code, _, err = run(capsys, ["learn", "--config", cfg])
    assert code == 2 and "--seed" in err

    bad = learn_config(tmp_path, publik="oops")
    code, _, err = run(capsys, ["learn", "--config", bad, "--seed", "1"])
    assert code == 2 and "publik" in err

    code, _, err = run(capsys, ["learn", "--seed", "1"])
    assert code == 2 and "--config" in err

    missing = write_json(tmp_path, "missing-files.json", {
        "public": str(tmp_path / "nope.csv"),
        "private": str(tmp_path / "nope.csv"),
    })
    code, _, err = run(capsys, ["learn", "--config", missing, "--seed", "1"])
    assert code == 2

    not_dict = tmp_path / "list.json"
    not_dict.write_text("[1, 2]")
    code, _, _ = run(capsys, ["learn", "--config", str(not_dict), "--seed", "1"])
    assert code == 2

    incomplete = write_json(tmp_path, "no-private.json",
                            {"public": write_samples(tmp_path, "p2.csv", 8, 1)})
    code, _, err = run(capsys, ["learn", "--config", incomplete, "--seed", "1"])
    assert code == 2 and "private" in err


def test_learn_dimension_mismatch(capsys, tmp_path):
    cfg = learn_config(
        tmp_path, private=write_samples(tmp_path, "private2d.csv", 50, 202, dims=2)
    )
    code, _, err = run(capsys, ["learn", "--config", cfg, "--seed", "1"])
    assert code == 2 and "dimension" in err


def test_learn_shift_gamma_guard(capsys, tmp_path):
    cfg = learn_config(tmp_path, shift_gamma=0.5)
    code, _, err = run(capsys, ["learn", "--config", cfg, "--seed", "1"])
    assert code == 2 and "shift_gamma" in err


# ------------------------------ experiment ------------------------------


def test_experiment_csv_and_rerun(capsys, tmp_path):
    cfg = write_json(tmp_path, "exp.json", {
        "m_list": [8], "n_list": [20], "epsilon_list": [1.0], "trials": 2,
    })
    out_path = tmp_path / "exp.csv"
    argv = ["experiment", "--config", cfg, "--seed", "1234", "--out", str(out_path)]
    code, _, _ = run(capsys, argv)
    assert code == 0
    first = out_path.read_bytes()
    lines = first.decode().strip().split("\n")
    assert lines[0] == ",".join(EXPERIMENT_COLUMNS)
    assert len(lines) == 3
    run(capsys, argv)
    assert out_path.read_bytes() == first


def test_experiment_fixed_truth_and_errors(capsys, tmp_path):
    cfg = write_json(tmp_path, "exp2.json", {
        "m_list": [16], "n_list": [50], "epsilon_list": [1.0], "trials": 1,
        "truth": {"kind": "gaussian", "mean": [3.0], "covariance": [[1.0]]},
    })
    code, out, _ = run(capsys, ["experiment", "--config", cfg, "--seed", "7"])
    assert code == 0 and out.startswith(",".join(EXPERIMENT_COLUMNS))

    bad = write_json(tmp_path, "exp3.json", {"m_list": [8], "n_list": [20],
                                             "epsilon_list": [1.0]})
    code, _, err = run(capsys, ["experiment", "--config", bad, "--seed", "7"])
    assert code == 2 and "trials" in err

    unknown = write_json(tmp_path, "exp4.json", {
        "m_list": [8], "n_list": [20], "epsilon_list": [1.0], "trials": 1,
        "mystery": True,
    })
    code, _, err = run(capsys, ["experiment", "--config", unknown, "--seed", "7"])
    assert code == 2 and "mystery" in err


# ------------------------------ lowerbound ------------------------------


def test_lowerbound_csv_and_rerun(capsys):
    argv = ["lowerbound", "--seed", "9000", "--d", "2", "--k", "10,20",
            "--trials-eta", "2000", "--trials-rk", "2000"]
    code1, out1, err1 = run(capsys, argv)
    code2, out2, _ = run(capsys, argv)
    assert code1 == code2 == 0
    assert out1 == out2
    lines = out1.strip().split("\n")
    assert lines[0] == ",".join(NFL_COLUMNS)
    assert len(lines) == 3
    assert "decay_flag=" in err1


def test_lowerbound_argument_errors(capsys):
    with pytest.raises(SystemExit):
        dispatch(["lowerbound", "--seed", "1", "--k", "a,b"])
    capsys.readouterr()
    code, _, err = run(capsys, ["lowerbound", "--d", "2", "--k", "10"])
    assert code == 2 and "--seed" in err
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        code, _, err = run(capsys, ["lowerbound", "--seed", "1", "--d", "9", "--k", "10"])
    assert code == 2


# ------------------------------ yatracos demo ------------------------------


def yatracos_classes(tmp_path):
    return write_json(tmp_path, "classes.json", [
        {"kind": "finite", "masses": [0.7, 0.1, 0.1, 0.1]},
        {"masses": [0.1, 0.1, 0.1, 0.7]},
    ])


def test_yatracos_demo_csv_and_rerun(capsys, tmp_path):
    classes = yatracos_classes(tmp_path)
    out_path = tmp_path / "y.csv"
    argv = ["yatracos-demo", "--domain", "4", "--classes", classes,
            "--m", "20", "--n", "200", "--alpha", "0.3", "--trials", "2",
            "--seed", "5151", "--out", str(out_path)]
    code, _, _ = run(capsys, argv)
    assert code == 0
    first = out_path.read_bytes()
    lines = first.decode().strip().split("\n")
    assert lines[0] == ",".join(YATRACOS_COLUMNS)
    assert len(lines) == 3
    run(capsys, argv)
    assert out_path.read_bytes() == first


def test_yatracos_demo_domain_mismatch(capsys, tmp_path):
    classes = yatracos_classes(tmp_path)
    code, _, err = run(capsys, ["yatracos-demo", "--domain", "5",
                                "--classes", classes, "--seed", "1"])
    assert code == 2 and "domain" in err


def test_yatracos_demo_cap_exceeded(capsys, tmp_path):
    # Six bit-plane hypotheses over 64 symbols: the reduced domain stays
    # near 64, so exact database enumeration blows the cap.
    classes = []
    for bit in range(6):
        masses = [1.0 / 32.0 if (x >> bit) & 1 else 0.0 for x in range(64)]
        classes.append({"kind": "finite", "masses": masses})
    path = write_json(tmp_path, "planes.json", classes)
    code, _, err = run(capsys, ["yatracos-demo", "--domain", "64",
                                "--classes", path, "--n", "50", "--seed", "1"])
    assert code == 3 and "numerical error" in err


def test_yatracos_demo_classes_validation(capsys, tmp_path):
    single = write_json(tmp_path, "one.json", [{"masses": [1.0]}])
    code, _, err = run(capsys, ["yatracos-demo", "--domain", "1",
                                "--classes", single, "--seed", "1"])
    assert code == 2 and "at least 2" in err
    gaussian = write_json(tmp_path, "gauss.json", [json.loads(G01), json.loads(G11)])
    code, _, err = run(capsys, ["yatracos-demo", "--domain", "4",
                                "--classes", gaussian, "--seed", "1"])
    assert code == 2 and "finite" in err


# ------------------------------ plumbing ------------------------------


def test_seed_parse_rejects_out_of_range(capsys):
    for bad in ("-1", str(2**64), "abc"):
        with pytest.raises(SystemExit):
            dispatch(["suggest-n", "--alpha", "0.1", "--beta", "0.1",
                      "--epsilon", "1.0", "--tau", "4", "--bits", "4",
                      "--seed", bad])
        capsys.readouterr()


def test_atomic_overwrite_leaves_no_temp_files(capsys, tmp_path):
    out_path = tmp_path / "target.csv"
    out_path.write_text("stale contents")
    cfg = write_json(tmp_path, "exp.json", {
        "m_list": [8], "n_list": [20], "epsilon_list": [1.0], "trials": 1,
    })
    code, _, _ = run(capsys, ["experiment", "--config", cfg, "--seed", "3",
                              "--out", str(out_path)])
    assert code == 0
    assert out_path.read_text().startswith(",".join(EXPERIMENT_COLUMNS))
    assert list(tmp_path.glob(".ppdl-tmp-*")) == []


def test_verbose_notes_on_stderr(capsys, tmp_path):
    cfg = learn_config(tmp_path)
    code, _, err = run(capsys, ["learn", "--config", cfg, "--seed", "19", "-v",
                                "--out", str(tmp_path / "r.json")])
    assert code == 0 and "note:" in err
