"""Train the fall classifier on a small synthetic corpus and score held-out traces.

    python demos/fall_detection.py [n_traces]

Takes roughly half a second per trace.  The acceptance suite runs the same flow
on 200 single-target and 40 two-target traces.
"""

import sys

import numpy as np

from dpace.corpus import CORPUS_SUBCARRIERS, fall_corpus
from dpace.pipeline import (EvalReport, ScenarioResult, TraceConfig, build_traces, fall_labeler, match_targets,
                            score_detections, trace_features)
from dpace.svm import detect, select_hyperparameters, train
from dpace.synth import synthesize


def featurize(entry):
    stream, truth = synthesize(entry.scenario)
    traces = build_traces(stream, tc=TraceConfig(subcarriers=CORPUS_SUBCARRIERS))
    mapping = match_targets(traces, truth)
    feats = []
    for tr in traces:
        row = mapping.get(tr.target_id)
        feats += trace_features(tr, fall_labeler([(a, b) for r, a, b in entry.events if r == row]))
    return feats, mapping


def main(n_traces=40):
    corpus = fall_corpus(n_traces, seed=7)
    data = [(e, *featurize(e)) for e in corpus]
    half = n_traces // 2
    X = [f.as_array() for _, feats, _ in data[:half] for f in feats]
    y = [f.label for _, feats, _ in data[:half] for f in feats]
    groups = [i for i, (_, feats, _) in enumerate(data[:half]) for _ in feats]
    gamma, C, table = select_hyperparameters(X, y, tuple(2.0 ** k for k in range(-8, 0)), (1.0, 10.0, 100.0),
                                             folds=4, groups=groups)
    model = train(X, y, gamma, C)
    print(f"{len(y)} training segments ({int(np.sum(np.asarray(y) == 1))} falls); "
          f"gamma = {gamma:g}, C = {C:g}, CV balanced accuracy {table[(gamma, C)]:.3f}")

    report = EvalReport()
    for e, feats, mapping in data[half:]:
        det, fa = score_detections(detect(model, feats, e.trace_id).detections, e.events, mapping)
        report.results.append(ScenarioResult(e.trace_id, e.has_fall, det, fa))
        print(f"  {e.trace_id}  {e.kinds[0]:5s}  detected={det!s:5s}  false_alarm={fa}")
    print(f"held-out TPR {report.tpr:.3f}, FPR {report.fpr:.3f}")


if __name__ == "__main__":
    main(*map(int, sys.argv[1:2]))
