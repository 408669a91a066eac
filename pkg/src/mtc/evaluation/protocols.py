"""The four experimental protocols: cross-validation, zero-day,
incremental family growth, and cross-dataset transfer."""

from __future__ import annotations

import random
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ..dataset import BENIGN, LabeledCorpus, LabeledSession, MALWARE
from ..errors import UnknownFamily
from ..features import extract, extract_pktseq
from .folds import stratified_kfold
from .metrics import ConfusionMatrix, MetricsReport, compute_metrics, metrics_from_confusion
from .plugins import FoldData

TASK_BINARY = "binary"
TASK_FAMILY = "family"


def _derived_seed(seed: int, *parts: int) -> int:
    return int(np.random.SeedSequence([seed, *parts]).generate_state(1)[0])


def _task_view(corpus: LabeledCorpus, task: str) -> Tuple[List[LabeledSession], List[str], List[str]]:
    """Sessions, per-session class labels, and the class list for a task."""
    if task == TASK_BINARY:
        sessions = list(corpus.sessions)
        labels = [s.label for s in sessions]
        classes = [BENIGN, MALWARE]
    elif task == TASK_FAMILY:
        sessions = [s for s in corpus.sessions if s.label == MALWARE]
        labels = [s.family for s in sessions]
        classes = sorted(set(labels))
    else:
        raise ValueError(f"unknown task {task!r}")
    return sessions, labels, classes


def _featurize(sessions: Sequence[LabeledSession], repr_name: str,
               repr_kwargs: Optional[dict], needs_aux: bool):
    kwargs = repr_kwargs or {}
    tensors = [extract(s.session, repr_name, **kwargs) for s in sessions]
    aux = [extract_pktseq(s.session) for s in sessions] if needs_aux else None
    return tensors, aux


def _fold_data(tensors, aux, ids, labels, classes, idx) -> FoldData:
    return FoldData(
        tensors=[tensors[i] for i in idx],
        ids=[ids[i] for i in idx],
        labels=[labels[i] for i in idx],
        classes=classes,
        aux_tensors=[aux[i] for i in idx] if aux is not None else None,
    )


def _mean_report(reports: List[MetricsReport], seed: int, fingerprint: str) -> MetricsReport:
    classes = reports[0].confusion.classes
    counts = sum(r.confusion.counts for r in reports)
    mean = metrics_from_confusion(
        ConfusionMatrix(classes, counts), fold=-1, seed=seed, fingerprint=fingerprint
    )
    k = len(reports)
    mean.accuracy = sum(r.accuracy for r in reports) / k
    mean.macro_precision = sum(r.macro_precision for r in reports) / k
    mean.macro_recall = sum(r.macro_recall for r in reports) / k
    mean.macro_f1 = sum(r.macro_f1 for r in reports) / k
    mean.per_class = {
        c: {
            m: sum(r.per_class[c][m] for r in reports) / k
            for m in ("precision", "recall", "f1")
        }
        for c in classes
    }
    return mean


def run_cv(
    corpus: LabeledCorpus,
    plugin,
    repr_name: str = "raw784",
    task: str = TASK_BINARY,
    k: int = 5,
    seed: int = 0,
    repr_kwargs: Optional[dict] = None,
    fingerprint: str = "",
) -> Tuple[List[MetricsReport], MetricsReport]:
    """Stratified k-fold cross-validation; the summary is the fold mean."""
    sessions, labels, classes = _task_view(corpus, task)
    ids = [s.hex_id for s in sessions]
    tensors, aux = _featurize(sessions, repr_name, repr_kwargs, plugin.needs_aux)
    assignment = stratified_kfold(labels, k=k, seed=seed)
    reports: List[MetricsReport] = []
    for fold in range(k):
        train_idx, test_idx = assignment.train_test(fold)
        assert not set(train_idx) & set(test_idx)
        train = _fold_data(tensors, aux, ids, labels, classes, train_idx)
        test = _fold_data(tensors, aux, ids, labels, classes, test_idx)
        probs = plugin.train_predict(train, test, _derived_seed(seed, fold))
        y_pred = [classes[int(np.argmax(row))] for row in probs]
        y_true = [labels[i] for i in test_idx]
        reports.append(
            compute_metrics(y_true, y_pred, classes, fold=fold, seed=seed,
                            fingerprint=fingerprint)
        )
    return reports, _mean_report(reports, seed, fingerprint)


def run_zero_day(
    corpus: LabeledCorpus,
    plugin,
    repr_name: str = "raw784",
    family: str = "",
    seed: int = 0,
    include_benign_test: bool = False,
    repr_kwargs: Optional[dict] = None,
) -> float:
    """Leave-one-family-out binary test.

    Train on all benign plus every other family; test on the held-out
    family only. Returns the fraction of its sessions flagged malicious
    (with ``include_benign_test``, a seeded fifth of the benign sessions
    moves to the test side and overall accuracy is returned instead).
    """
    if family not in corpus.families():
        raise UnknownFamily(family)
    classes = [BENIGN, MALWARE]
    train_sessions = [
        s for s in corpus.sessions
        if s.label == BENIGN or s.family != family
    ]
    test_sessions = [s for s in corpus.sessions if s.family == family]
    if include_benign_test:
        benign_idx = [i for i, s in enumerate(train_sessions) if s.label == BENIGN]
        rng = random.Random(_derived_seed(seed, 1))
        held = set(rng.sample(benign_idx, len(benign_idx) // 5))
        test_sessions = test_sessions + [train_sessions[i] for i in sorted(held)]
        train_sessions = [s for i, s in enumerate(train_sessions) if i not in held]

    # leakage checks: held-out family never trains, ids are disjoint
    assert all(s.family != family for s in train_sessions)
    assert not {s.session_id for s in train_sessions} & {
        s.session_id for s in test_sessions
    }

    tr_tensors, tr_aux = _featurize(train_sessions, repr_name, repr_kwargs, plugin.needs_aux)
    te_tensors, te_aux = _featurize(test_sessions, repr_name, repr_kwargs, plugin.needs_aux)
    train = FoldData(
        tensors=tr_tensors,
        ids=[s.hex_id for s in train_sessions],
        labels=[s.label for s in train_sessions],
        classes=classes,
        aux_tensors=tr_aux,
    )
    test = FoldData(
        tensors=te_tensors,
        ids=[s.hex_id for s in test_sessions],
        labels=[s.label for s in test_sessions],
        classes=classes,
        aux_tensors=te_aux,
    )
    probs = plugin.train_predict(train, test, _derived_seed(seed, 0))
    y_pred = [classes[int(np.argmax(row))] for row in probs]
    correct = sum(1 for s, p in zip(test_sessions, y_pred) if p == s.label)
    return correct / len(test_sessions)


def _rebalance_step(sessions: List[LabeledSession], seed: int) -> List[LabeledSession]:
    """Downsample benign to the malware total, preserving order."""
    benign_idx = [i for i, s in enumerate(sessions) if s.label == BENIGN]
    n_mal = sum(1 for s in sessions if s.label == MALWARE)
    if len(benign_idx) <= n_mal:
        return sessions
    rng = random.Random(seed)
    keep = set(rng.sample(benign_idx, n_mal))
    return [s for i, s in enumerate(sessions) if s.label == MALWARE or i in keep]


def run_incremental(
    corpus: LabeledCorpus,
    plugin,
    repr_name: str = "raw784",
    family_order: Sequence[str] = (),
    task: str = TASK_BINARY,
    k: int = 5,
    seed: int = 0,
    repr_kwargs: Optional[dict] = None,
) -> List[float]:
    """Mean cross-validated accuracy as families are added one at a time.

    Benign is re-balanced down to the running malware total at each step
    so the 50/50 detection setting holds throughout.
    """
    known = set(corpus.families())
    for fam in family_order:
        if fam not in known:
            raise UnknownFamily(fam)
    accuracies: List[float] = []
    for step in range(1, len(family_order) + 1):
        current = set(family_order[:step])
        subset = [
            s for s in corpus.sessions
            if s.label == BENIGN or s.family in current
        ]
        if task == TASK_BINARY:
            subset = _rebalance_step(subset, _derived_seed(seed, step))
        sub = LabeledCorpus(corpus.dataset_name, subset)
        _, mean = run_cv(
            sub, plugin, repr_name=repr_name, task=task, k=k,
            seed=_derived_seed(seed, step, 1), repr_kwargs=repr_kwargs,
        )
        accuracies.append(mean.accuracy)
    return accuracies


def run_cross_dataset(
    train_corpus: LabeledCorpus,
    test_corpus: LabeledCorpus,
    plugin,
    repr_name: str = "raw784",
    family: Union[str, Tuple[str, str]] = "",
    seed: int = 0,
    repr_kwargs: Optional[dict] = None,
) -> float:
    """Binary transfer test: train on one corpus, score the paired family
    of the other. Returns the fraction of its sessions flagged malicious."""
    if isinstance(family, tuple):
        fam_train, fam_test = family
    else:
        fam_train = fam_test = family
    if fam_train not in train_corpus.families():
        raise UnknownFamily(f"{fam_train} not in training corpus")
    if fam_test not in test_corpus.families():
        raise UnknownFamily(f"{fam_test} not in test corpus")
    classes = [BENIGN, MALWARE]
    train_sessions = list(train_corpus.sessions)
    test_sessions = [s for s in test_corpus.sessions if s.family == fam_test]
    tr_tensors, tr_aux = _featurize(train_sessions, repr_name, repr_kwargs, plugin.needs_aux)
    te_tensors, te_aux = _featurize(test_sessions, repr_name, repr_kwargs, plugin.needs_aux)
    train = FoldData(
        tensors=tr_tensors,
        ids=[s.hex_id for s in train_sessions],
        labels=[s.label for s in train_sessions],
        classes=classes,
        aux_tensors=tr_aux,
    )
    test = FoldData(
        tensors=te_tensors,
        ids=[s.hex_id for s in test_sessions],
        labels=[s.label for s in test_sessions],
        classes=classes,
        aux_tensors=te_aux,
    )
    probs = plugin.train_predict(train, test, _derived_seed(seed, 0))
    flagged = sum(1 for row in probs if classes[int(np.argmax(row))] == MALWARE)
    return flagged / len(test_sessions)
