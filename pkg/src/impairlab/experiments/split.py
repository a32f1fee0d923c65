"""Stratified train/val/test assignment with largest-remainder seat counts,
so every class lands as close to the requested fractions as integers allow.
"""

from __future__ import annotations

import numpy as np

from ..errors import TooSmallError
from ..synthesis import N_CLASSES, LabeledDataset

SPLIT_NAMES = ("train", "val", "test")


def largest_remainder_counts(n: int, fractions: tuple) -> list[int]:
    """Integer allocation of n items to fractions; remainders break ties in
    favor of earlier entries."""
    exact = [f * n for f in fractions]
    base = [int(np.floor(e)) for e in exact]
    leftover = n - sum(base)
    order = sorted(range(len(fractions)), key=lambda i: (-(exact[i] - base[i]), i))
    for i in order[:leftover]:
        base[i] += 1
    return base


def stratified_split(dataset: LabeledDataset, fractions: tuple = (0.70, 0.15, 0.15),
                     seed: int = 0) -> LabeledDataset:
    """Copy of the dataset with each record's split set; shuffling and counting
    happen independently per true class, from stream (seed, class)."""
    out = dataset.copy_records()
    for cls in range(N_CLASSES):
        idx = [i for i, r in enumerate(out.records) if int(r.true_label) == cls]
        if not idx:
            continue
        counts = largest_remainder_counts(len(idx), fractions)
        for name, frac, count in zip(SPLIT_NAMES, fractions, counts):
            if frac > 0 and count == 0:
                raise TooSmallError(
                    f"class {cls}: {len(idx)} records leave the {name} split empty")
        order = np.random.default_rng((seed, cls)).permutation(len(idx))
        cursor = 0
        for name, count in zip(SPLIT_NAMES, counts):
            for j in order[cursor:cursor + count]:
                out.records[idx[j]].split = name
            cursor += count
    return out
