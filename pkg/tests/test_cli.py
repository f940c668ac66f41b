import numpy as np
import pytest

from helpers import random_model_text
from ifacepred.cli import main
from ifacepred.report import find_clusters, format_spans
from ifacepred.sequence import format_fasta, format_label_file, parse_fasta, parse_label_file
from ifacepred.synthetic import clustered_corpus


@pytest.fixture
def corpus(tmp_path):
    d = clustered_corpus(np.random.default_rng(0), n_chains=6, length=60)
    fasta, labels = tmp_path / "train.fa", tmp_path / "train.lab"
    fasta.write_text(format_fasta(d.chains))
    labels.write_text(format_label_file(d.chains))
    return tmp_path, str(fasta), str(labels)


def run(*argv):
    return main([str(a) for a in argv])


def test_train_nb_predict_and_tracks(corpus, capsys):
    tmp, fasta, labels = corpus
    model = tmp / "nb.json"
    assert run("train-nb", "--fasta", fasta, "--labels", labels, "--out", model, "--tune") == 0
    assert run("predict", "--fasta", fasta, "--nb-model", model, "--out-tracks", tmp / "t.tsv") == 0
    out = capsys.readouterr().out
    assert out.startswith(">c0") or out.startswith(">")
    assert "RNA  " in out and "PRO  " not in out
    assert (tmp / "t.tsv").read_text().startswith("chain_id\tsequence\tprotein\trna\n")


def test_two_stage_pipeline(corpus, capsys):
    tmp, fasta, labels = corpus
    svm, cpt = tmp / "svm.json", tmp / "cpt.json"
    assert run("train-svm", "--fasta", fasta, "--labels", labels, "--out", svm, "--negative-ratio", 1,
               "--window", 7) == 0
    assert run("fit-cpt", "--svm-model", svm, "--fasta", fasta, "--labels", labels, "--out", cpt) == 0
    assert run("tune-theta", "--model", cpt, "--svm-model", svm, "--fasta", fasta, "--labels", labels) == 0
    assert "theta = " in capsys.readouterr().err
    assert run("predict", "--fasta", fasta, "--svm-model", svm, "--cpt-model", cpt, "--format", "tsv") == 0
    rows = capsys.readouterr().out.splitlines()
    assert len(rows) == 7 and rows[1].split("\t")[3] == ""


def test_evaluate_emits_all_measures(corpus, capsys):
    tmp, fasta, labels = corpus
    assert run("evaluate", "--fasta", fasta, "--labels", labels, "--window", 7) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split("\t")[-4:] == ["accuracy", "specificity", "sensitivity", "mcc"]
    assert len(lines) == 8 and lines[-1].startswith("AGGREGATE")
    assert run("evaluate", "--fasta", fasta, "--labels", labels, "--classifier", "two-stage",
               "--negative-ratio", 1, "--format", "text", "--workers", 2) == 0
    assert "AGGREGATE" in capsys.readouterr().out


def test_tune_theta_nb_in_place(corpus):
    tmp, fasta, labels = corpus
    model = tmp / "nb.json"
    run("train-nb", "--fasta", fasta, "--labels", labels, "--out", model, "--window", 5)
    before = model.read_text()
    assert run("tune-theta", "--model", model, "--fasta", fasta, "--labels", labels) == 0
    assert model.read_text() != before


def test_clusters_match_library(tmp_path, capsys):
    masks = "a\t" + "-" * 62 + "+" * 15 + "-" * 69 + "+" * 19 + "\nb\t++-+\n"
    path = tmp_path / "m.lab"
    path.write_text(masks)
    assert run("clusters", "--mask-file", path) == 0
    parsed = parse_label_file(masks)
    rows = [(cid, None, s, None) for cid, m in parsed.items() for s in find_clusters(m)]
    assert capsys.readouterr().out == format_spans(rows)
    assert run("clusters", "--mask-file", path, "--format", "text") == 0
    assert capsys.readouterr().out == "a\t63-77\tsize=15\tgaps=0\na\t147-165\tsize=19\tgaps=0\nb\t1-4\tsize=3\tgaps=1\n"


def test_diff(tmp_path, capsys):
    a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
    a.write_text("chain_id\tsequence\tprotein\trna\nwt\tMKVLAG\t------\t-+++--\n")
    b.write_text("chain_id\tsequence\tprotein\trna\nmut\tMKALAG\t------\t------\n")
    assert run("diff", a, b) == 0
    out = capsys.readouterr().out
    assert "3 positional change(s)" in out and "2-4\tremoved" in out
    assert run("diff", a, a) == 0
    assert capsys.readouterr().out == "no differences\n"
    b.write_text("chain_id\tsequence\tprotein\trna\nmut\tMKALAGG\t-------\t-------\n")
    assert run("diff", a, b) == 2


def test_build_dataset(tmp_path):
    rng = np.random.default_rng(0)
    for k in range(3):
        (tmp_path / f"s{k}.pdb").write_text(random_model_text(rng, n_protein_res=30))
    (tmp_path / "manifest.tsv").write_text("s0.pdb\t2.0\ns1.pdb\t4.0\ns2.pdb\tNA\n")
    fa, lab = tmp_path / "o.fa", tmp_path / "o.lab"
    assert run("build-dataset", "--manifest", tmp_path / "manifest.tsv", "--out-fasta", fa,
               "--out-labels", lab) == 0
    chains = parse_fasta(fa.read_text())
    assert [c.id for c in chains] == ["s0_A"]
    assert list(parse_label_file(lab.read_text())) == ["s0_A"]
    assert len(chains[0]) == 30


def test_usage_errors(corpus, capsys):
    tmp, fasta, labels = corpus
    assert run() == 1
    assert run("train-nb", "--fasta", fasta) == 1
    assert run("nonsense") == 1
    assert run("predict", "--fasta", fasta) == 1
    assert run("evaluate", "--fasta", fasta, "--labels", labels, "--window", "x") == 1
    assert "usage" in capsys.readouterr().err


def test_data_errors(corpus, capsys):
    tmp, fasta, labels = corpus
    assert run("train-nb", "--fasta", tmp / "missing.fa", "--labels", labels, "--out", tmp / "m") == 2
    (tmp / "bad.fa").write_text(">a\nMK1V\n")
    assert run("train-nb", "--fasta", tmp / "bad.fa", "--labels", labels, "--out", tmp / "m") == 2
    (tmp / "bad.json").write_text("{}")
    assert run("predict", "--fasta", fasta, "--nb-model", tmp / "bad.json") == 2
    (tmp / "neg.lab").write_text("".join(l.split("\t")[0] + "\t" + "-" * len(l.split("\t")[1]) + "\n"
                                         for l in open(labels).read().splitlines()))
    assert run("train-svm", "--fasta", fasta, "--labels", tmp / "neg.lab", "--out", tmp / "m") == 2
    assert run("evaluate", "--fasta", fasta, "--labels", tmp / "neg.lab") == 2
    assert run("train-nb", "--fasta", fasta, "--labels", labels, "--out", tmp / "no" / "dir" / "m") == 2
    assert not (tmp / "m").exists()
    assert "error" in capsys.readouterr().err


@pytest.mark.parametrize("cmd,extra", [("train-nb", ["--tune"]), ("train-svm", ["--negative-ratio", "1"])])
def test_train_byte_deterministic(corpus, cmd, extra):
    tmp, fasta, labels = corpus
    outs = [tmp / f"{cmd}{k}.json" for k in range(2)]
    for out in outs:
        assert run(cmd, "--fasta", fasta, "--labels", labels, "--out", out, "--seed", 3, *extra) == 0
    assert outs[0].read_bytes() == outs[1].read_bytes()
