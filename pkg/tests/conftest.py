import numpy as np


def read_csv(path):
    """Read one of our CSVs (# metadata block + header row) into a dict."""
    with open(path, encoding="utf-8") as fh:
        lines = [l for l in fh if not l.startswith("#")]
    names = lines[0].strip().split(",")
    data = np.loadtxt(lines[1:], delimiter=",", ndmin=2).T
    return dict(zip(names, data))
