#!/usr/bin/env python3
"""Convert a BIF Bayesian network into the edgebd network JSON format.

Usage: bif_to_network.py network.bif[.gz] > network.json

Nodes keep their BIF declaration order.  CPT rows are indexed by the parent
configuration in mixed radix, lowest-numbered parent most significant.
"""
import gzip
import json
import sys

import numpy as np
from pgmpy.readwrite import BIFReader


def main(path):
    opener = gzip.open if path.endswith(".gz") else open
    with opener(path, "rt") as f:
        reader = BIFReader(string=f.read())
    model = reader.get_model()
    names = list(reader.variable_names)
    index = {name: k for k, name in enumerate(names)}
    cards, cpts, edges = [], [], []
    for name in names:
        cpd = model.get_cpds(name)
        parents = sorted(cpd.variables[1:], key=index.get)
        edges += [[index[p], index[name]] for p in parents]
        values = cpd.get_values().reshape(cpd.cardinality)  # axes: (child, *evidence)
        axes = [cpd.variables.index(p) for p in parents] + [0]
        table = np.transpose(values, axes).reshape(-1, cpd.cardinality[0])
        table = table / table.sum(axis=1, keepdims=True)
        cards.append(int(cpd.cardinality[0]))
        cpts.append(table.tolist())
    json.dump({"names": names, "dag": {"n": len(names), "edges": sorted(edges)},
               "cardinalities": cards, "cpts": cpts}, sys.stdout)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main(sys.argv[1])
