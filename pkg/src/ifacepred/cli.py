"""Command-line entry point: ``ifacepred <subcommand> ...``.

Exit status is 0 on success, 1 on usage errors and 2 on data errors (missing
or malformed input files, untrainable data).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import tempfile
from pathlib import Path

from . import __version__
from .evaluation import FoldError, format_report, loocv
from .naive_bayes import NbModel, nb_predict, nb_train, nb_trainer, nb_tune_theta
from .redundancy import FilterParams, build_dataset
from .report import (
    PredictionTrack, find_clusters, diff_predictions, format_diff, format_spans, format_tracks,
    parse_annotations, parse_tracks, render_report,
)
from .sequence import (
    attach_labels, format_fasta, format_label_file, parse_fasta, parse_label_file,
)
from .serialization import ModelFormatError, model_type_of
from .structure import PROTEIN, RNA, ContactParams, parse_manifest
from .svm import KernelSpec, SvmModel, TrainConfig, svm_predict, svm_train
from .two_stage import CptModel, fit_cpt, search_theta, stage2_classify, two_stage_trainer

log = logging.getLogger("ifacepred")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _read(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _write(path, text: str):
    """Write atomically: temp file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent if str(path.parent) else ".", prefix=f".{path.name}.")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _emit(args, text: str):
    if getattr(args, "out", None):
        _write(args.out, text)
    else:
        sys.stdout.write(text)


def _dataset(args, name="training"):
    chains = parse_fasta(_read(args.fasta))
    masks = parse_label_file(_read(args.labels))
    return attach_labels(chains, masks, name)


def _load(path, cls):
    try:
        return cls.from_json(_read(path))
    except (ModelFormatError, KeyError, TypeError) as exc:
        raise DataError(f"{path}: {exc}") from exc


# --- subcommands ------------------------------------------------------------

def cmd_build_dataset(args):
    manifest = Path(args.manifest)
    entries = parse_manifest(_read(manifest))
    base = Path(args.base_dir) if args.base_dir else manifest.parent
    for path, _ in entries:
        if not (base / path).exists():
            raise DataError(f"structure file not found: {base / path}")
    params = FilterParams(args.max_identity, args.max_resolution, args.min_len)
    contact = ContactParams(args.cutoff if args.cutoff is not None else 5.0, args.include_hydrogens)
    partner = RNA if args.partner == "rna" else PROTEIN
    d = build_dataset(entries, partner, contact, params, base)
    _write(args.out_fasta, format_fasta(d.chains))
    _write(args.out_labels, format_label_file(d.chains))
    print(f"{len(d.chains)} chains written", file=sys.stderr)


def cmd_train_nb(args):
    d = _dataset(args)
    model = nb_train(d, args.window or 25, args.alpha)
    if args.tune:
        model = model.with_theta(nb_tune_theta(model, d))
    elif args.theta is not None:
        model = model.with_theta(args.theta)
    _write(args.out, model.to_json())


def _train_config(args):
    return TrainConfig(C=args.C, tolerance=args.tol, seed=args.seed, negative_downsample=args.negative_ratio)


def cmd_train_svm(args):
    d = _dataset(args)
    model = svm_train(d, _train_config(args), KernelSpec(args.kernel, args.gamma), args.window or 9)
    _write(args.out, model.to_json())


def cmd_fit_cpt(args):
    d = _dataset(args)
    svm = _load(args.svm_model, SvmModel)
    stage1 = [svm_predict(svm, c) for c in d.chains]
    labels = [c.labels for c in d.chains]
    cpt = fit_cpt(stage1, labels, args.radius, args.alpha, [c.id for c in d.chains])
    if args.tune:
        cpt = cpt.with_theta(search_theta(cpt, stage1, labels))
    elif args.theta is not None:
        cpt = cpt.with_theta(args.theta)
    _write(args.out, cpt.to_json())


def cmd_tune_theta(args):
    d = _dataset(args)
    kind = _model_type(args.model)
    if kind == "naive_bayes":
        model = _load(args.model, NbModel)
        model = model.with_theta(nb_tune_theta(model, d))
    elif kind == "cpt":
        if not args.svm_model:
            raise UsageError("tuning a CPT model requires --svm-model")
        svm = _load(args.svm_model, SvmModel)
        cpt = _load(args.model, CptModel)
        stage1 = [svm_predict(svm, c) for c in d.chains]
        model = cpt.with_theta(search_theta(cpt, stage1, [c.labels for c in d.chains]))
    else:
        raise DataError(f"{args.model}: cannot tune a {kind} model")
    _write(args.out or args.model, model.to_json())
    print(f"theta = {model.theta!r}", file=sys.stderr)


def _model_type(path):
    try:
        return model_type_of(path)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except ModelFormatError as exc:
        raise DataError(f"{path}: {exc}") from exc


def cmd_predict(args):
    if not args.nb_model and not (args.svm_model and args.cpt_model):
        raise UsageError("predict needs --nb-model and/or both --svm-model and --cpt-model")
    chains = parse_fasta(_read(args.fasta))
    nb = _load(args.nb_model, NbModel) if args.nb_model else None
    svm = _load(args.svm_model, SvmModel) if args.svm_model else None
    cpt = _load(args.cpt_model, CptModel) if args.cpt_model else None
    tracks = []
    for chain in chains:
        rna = nb_predict(nb, chain, args.theta) if nb else None
        pro = stage2_classify(cpt, svm_predict(svm, chain), args.theta) if svm else None
        tracks.append(PredictionTrack(chain, pro, rna))
    if args.out_tracks:
        _write(args.out_tracks, format_tracks(tracks))
    if args.format == "tsv":
        _emit(args, format_tracks(tracks))
        return
    annotations = parse_annotations(_read(args.annotations)) if args.annotations else None
    text = "\n".join(
        render_report(t, annotations, args.width, args.max_gap, args.min_size) for t in tracks
    )
    _emit(args, text)


def cmd_evaluate(args):
    d = _dataset(args, "evaluation")
    if args.classifier == "nb":
        trainer = nb_trainer(args.window or 25, args.alpha)
    else:
        trainer = two_stage_trainer(_train_config(args), KernelSpec(args.kernel, args.gamma),
                                    args.window or 9, args.radius, args.alpha)
    result = loocv(d, trainer, workers=args.workers)
    text = format_report(result)
    if args.format == "text":
        rows = [line.split("\t") for line in text.splitlines()]
        widths = [max(len(r[k]) for r in rows) for k in range(len(rows[0]))]
        text = "".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) + "\n" for r in rows)
    _emit(args, text)


def _pick(tracks, chain_id, path):
    if chain_id is None:
        if len(tracks) != 1:
            raise UsageError(f"{path} holds {len(tracks)} chains; choose one with --chain-a/--chain-b")
        return tracks[0]
    for t in tracks:
        if t.chain.id == chain_id:
            return t
    raise DataError(f"chain {chain_id!r} not found in {path}")


def cmd_diff(args):
    a = _pick(parse_tracks(_read(args.a)), args.chain_a, args.a)
    b = _pick(parse_tracks(_read(args.b)), args.chain_b, args.b)
    report = diff_predictions(a, b, args.max_gap, args.min_size)
    _emit(args, format_diff(report, args.format))


def cmd_clusters(args):
    masks = parse_label_file(_read(args.mask_file))
    rows = [(cid, None, s, None) for cid, m in masks.items()
            for s in find_clusters(m, args.max_gap, args.min_size)]
    if args.format == "text":
        lines = [f"{cid}\t{s.start}-{s.end}\tsize={s.size}\tgaps={s.gaps}" for cid, _, s, _ in rows]
        _emit(args, "\n".join(lines) + ("\n" if lines else ""))
    else:
        _emit(args, format_spans(rows))


# --- parser -----------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--window", type=int, default=None, help="window size (NB default 25, SVM default 9)")
    g.add_argument("--theta", type=float, default=None, help="override a model's decision threshold")
    g.add_argument("--cutoff", type=float, default=None, help="contact distance cutoff in angstrom")
    g.add_argument("--max-gap", type=int, default=2)
    g.add_argument("--min-size", type=int, default=3)
    g.add_argument("--format", choices=("text", "tsv"), default=None)
    g.add_argument("-v", "--verbose", action="store_true")
    return p


def _svm_options(p):
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--kernel", choices=("linear", "rbf"), default="linear")
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--negative-ratio", type=float, default=None,
                   help="down-sample negatives to this many per positive")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="ifacepred", description="Sequence-based interface residue prediction.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")
    sub.required = True

    def add(name, func, help):
        p = sub.add_parser(name, parents=[common], help=help, description=help)
        p.set_defaults(func=func)
        return p

    p = add("build-dataset", cmd_build_dataset, "label chains of structures listed in a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--partner", choices=("rna", "protein"), default="rna")
    p.add_argument("--base-dir")
    p.add_argument("--out-fasta", required=True)
    p.add_argument("--out-labels", required=True)
    p.add_argument("--max-identity", type=float, default=0.30)
    p.add_argument("--max-resolution", type=float, default=3.5)
    p.add_argument("--min-len", type=int, default=10)
    p.add_argument("--include-hydrogens", action="store_true")

    for name, func, help in (("train-nb", cmd_train_nb, "train the Naive Bayes RNA-interface model"),
                             ("train-svm", cmd_train_svm, "train the stage-1 SVM")):
        p = add(name, func, help)
        p.add_argument("--fasta", required=True)
        p.add_argument("--labels", required=True)
        p.add_argument("--out", required=True)
        if name == "train-nb":
            p.add_argument("--alpha", type=float, default=1.0, help="pseudo-count")
            p.add_argument("--tune", action="store_true", help="set theta by training-set MCC")
        else:
            _svm_options(p)

    p = add("fit-cpt", cmd_fit_cpt, "fit the stage-2 table from stage-1 predictions")
    p.add_argument("--svm-model", required=True)
    p.add_argument("--fasta", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--radius", type=int, default=4)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--tune", action="store_true", help="run the theta grid search")

    p = add("tune-theta", cmd_tune_theta, "set a model's theta by training-set MCC")
    p.add_argument("--model", required=True)
    p.add_argument("--svm-model")
    p.add_argument("--fasta", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", help="output model (default: overwrite --model)")

    p = add("predict", cmd_predict, "predict interface tracks and render a report")
    p.add_argument("--fasta", required=True)
    p.add_argument("--nb-model")
    p.add_argument("--svm-model")
    p.add_argument("--cpt-model")
    p.add_argument("--annotations")
    p.add_argument("--width", type=int, default=60)
    p.add_argument("--out-tracks", help="also write machine-readable tracks here")
    p.add_argument("--out")

    p = add("evaluate", cmd_evaluate, "leave-one-protein-out cross-validation")
    p.add_argument("--fasta", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--classifier", choices=("nb", "two-stage"), default="nb")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--radius", type=int, default=4)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    _svm_options(p)

    p = add("diff", cmd_diff, "compare two prediction track files")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--chain-a")
    p.add_argument("--chain-b")
    p.add_argument("--out")

    p = add("clusters", cmd_clusters, "binding-site spans of label masks")
    p.add_argument("--mask-file", required=True)
    p.add_argument("--out")
    return parser


DEFAULT_FORMAT = {"evaluate": "tsv", "clusters": "tsv"}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.format is None:
            args.format = DEFAULT_FORMAT.get(args.command, "text")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s: %(message)s")
        args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"ifacepred: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, IndexError, FoldError) as exc:
        print(f"ifacepred: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"ifacepred: error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
