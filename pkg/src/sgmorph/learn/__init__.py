"""Embedding, clustering and classification of feature vectors."""
from .embed import (
    Embedding2D,
    agglomerative_cluster,
    pairwise_feature_distances,
    tsne_embed,
)
from .forest import ForestModel, mdi_ranking, train_random_forest_ovr
from .metrics import ClassReport, SplitRunsReport, evaluate, split_runs, stratified_split
from .oversample import smote_center_oversample

__all__ = [
    "ClassReport",
    "Embedding2D",
    "ForestModel",
    "SplitRunsReport",
    "agglomerative_cluster",
    "evaluate",
    "mdi_ranking",
    "pairwise_feature_distances",
    "smote_center_oversample",
    "split_runs",
    "stratified_split",
    "train_random_forest_ovr",
    "tsne_embed",
]
