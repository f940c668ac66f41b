"""Sequence-based prediction of protein-protein and protein-RNA interface residues."""

__version__ = "0.1.0"

from .evaluation import ConfusionCounts, MetricsReport, confusion, loocv, metrics
from .naive_bayes import NbModel, nb_classify, nb_score, nb_train, nb_tune_theta
from .report import PredictionTrack, diff_predictions, find_clusters, render_report
from .sequence import Dataset, ProteinChain, dataset_stats, parse_fasta, window_at
from .svm import KernelSpec, SvmModel, TrainConfig, svm_decision, svm_train
from .two_stage import CptModel, fit_cpt, neighbor_count, search_theta, stage2_classify, two_stage_predict
