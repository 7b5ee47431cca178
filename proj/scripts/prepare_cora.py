#!/usr/bin/env python3
"""Convert a Planetoid-format citation dataset into the bundle layout.

Input: the eight ind.<name>.* files (x, y, tx, ty, allx, ally, graph,
test.index) as distributed with the Planetoid benchmarks. Output: a bundle
directory with edges.tsv, features.csv, labels.csv and the standard
train/val/test split (train = labeled training nodes, val = the next 500,
test = the ids from test.index).

Usage: prepare_cora.py --input /path/to/planetoid/data --name cora --output datasets/cora
"""

import argparse
import os
import pickle
import sys

import numpy as np
import scipy.sparse as sp


def load_pickle(path):
    with open(path, "rb") as f:
        return pickle.load(f, encoding="latin1")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--input", required=True, help="directory with ind.<name>.* files")
    parser.add_argument("--name", default="cora", help="dataset name (cora/citeseer/pubmed)")
    parser.add_argument("--output", required=True, help="bundle directory to create")
    args = parser.parse_args()

    def part(suffix):
        return os.path.join(args.input, f"ind.{args.name}.{suffix}")

    y = load_pickle(part("y"))
    tx, ty = load_pickle(part("tx")), load_pickle(part("ty"))
    allx, ally = load_pickle(part("allx")), load_pickle(part("ally"))
    graph = load_pickle(part("graph"))
    test_idx = np.loadtxt(part("test.index"), dtype=int)
    test_sorted = np.sort(test_idx)

    if args.name == "citeseer":
        # Citeseer's test set has gaps (isolated nodes absent from tx); pad
        # the feature and label blocks over the full contiguous range.
        full = np.arange(test_sorted.min(), test_sorted.max() + 1)
        tx_pad = sp.lil_matrix((len(full), tx.shape[1]))
        tx_pad[test_sorted - test_sorted.min(), :] = tx
        ty_pad = np.zeros((len(full), ty.shape[1]))
        ty_pad[test_sorted - test_sorted.min(), :] = ty
        tx, ty = tx_pad, ty_pad

    # Rows arrive as [allx; tx] with the tx block in test_sorted order; move
    # the test rows to their true node ids.
    features = sp.vstack((allx, tx)).tolil()
    labels = np.vstack((ally, ty))
    features[test_idx, :] = features[test_sorted, :]
    labels[test_idx, :] = labels[test_sorted, :]

    n = features.shape[0]
    os.makedirs(args.output, exist_ok=True)

    edges = set()
    for u, neighbors in graph.items():
        for v in neighbors:
            if u != v and u < n and v < n:
                edges.add((min(u, v), max(u, v)))
    with open(os.path.join(args.output, "edges.tsv"), "w") as f:
        for u, v in sorted(edges):
            f.write(f"{u}\t{v}\n")

    dense = np.asarray(features.todense())
    with open(os.path.join(args.output, "features.csv"), "w") as f:
        f.write(",".join(f"f{c}" for c in range(dense.shape[1])) + "\n")
        for row in dense:
            f.write(",".join("%.17g" % v for v in row) + "\n")

    label_ids = labels.argmax(axis=1)
    with open(os.path.join(args.output, "labels.csv"), "w") as f:
        f.write("label\n")
        for l in label_ids:
            f.write(f"{int(l)}\n")

    test = [int(i) for i in test_sorted]
    train = list(range(len(y)))
    in_test = set(test)
    val = [i for i in range(len(y), min(len(y) + 500, n)) if i not in in_test]
    for name, ids in (("train.txt", train), ("val.txt", val), ("test.txt", test)):
        with open(os.path.join(args.output, name), "w") as f:
            for i in ids:
                f.write(f"{i}\n")

    print(f"wrote bundle for {args.name}: {n} nodes, {len(edges)} edges, "
          f"{len(train)}/{len(val)}/{len(test)} split -> {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
