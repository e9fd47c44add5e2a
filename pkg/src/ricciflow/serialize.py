"""Structured-text (JSON) serialization and trajectory CSV export.

Floats are written with repr (shortest exact round trip, <= 17 significant
digits); matrices are row-major nested lists. Rewriting the same objects is
bit-identical, which the experiment runner relies on.
"""

import json

import numpy as np

from .curvature import CurvatureReport
from .flow import FlowTrajectory
from .homspace import ReductiveSplit, WeightDecomposition
from .liealg import LieAlgebra, algebra_from_dict, algebra_to_dict


def matrix_to_list(M):
    return [[float(x) for x in row] for row in np.atleast_2d(np.asarray(M, dtype=float))]


def vector_to_list(v):
    return [float(x) for x in np.asarray(v, dtype=float).ravel()]


def split_to_dict(split: ReductiveSplit) -> dict:
    return {
        "algebra": algebra_to_dict(split.algebra),
        "h_idx": split.h_idx.tolist(),
        "l_idx": split.l_idx.tolist(),
        "z_idx": split.z_idx.tolist(),
        "V_idx": split.V_idx.tolist(),
        "lss_idx": split.lss_idx.tolist(),
        "b0": float(split.b0),
        "background": matrix_to_list(split.background),
        "basis": matrix_to_list(split.basis),
        "k_skew_residual": float(split.k_skew_residual),
        "weights": [
            {"alpha": vector_to_list(w.alpha),
             "alpha_mu": vector_to_list(w.alpha_mu),
             "idx": w.idx.tolist()}
            for w in split.weights
        ],
    }


def weight_decomposition_to_dict(wd: WeightDecomposition) -> dict:
    return {
        "metricV": matrix_to_list(wd.metricV),
        "weights": [
            {"alpha": vector_to_list(w.alpha),
             "basis": matrix_to_list(w.basis),
             "J": [matrix_to_list(Jk) for Jk in w.J]}
            for w in wd.weights
        ],
    }


def curvature_report_to_dict(rep: CurvatureReport) -> dict:
    return {
        "ric": matrix_to_list(rep.ric),
        "ric_star": matrix_to_list(rep.ric_star),
        "H": vector_to_list(rep.H),
        "M": matrix_to_list(rep.M),
        "B": matrix_to_list(rep.B),
        "scal": float(rep.scal),
        "scal_star": float(rep.scal_star),
    }


def stability_verdict_to_dict(v) -> dict:
    return {
        "stable": bool(v.stable),
        "witness_Q": matrix_to_list(v.witness_Q),
        "residual": float(v.residual),
        "certified": bool(v.certified),
        "note": v.note,
    }


def nilsoliton_fit_to_dict(fit) -> dict:
    return {"c": float(fit.c), "D": matrix_to_list(fit.D), "residual": float(fit.residual)}


def dumps(obj) -> str:
    """JSON text for any of the package's dict-convertible objects."""
    if isinstance(obj, LieAlgebra):
        obj = algebra_to_dict(obj)
    elif isinstance(obj, ReductiveSplit):
        obj = split_to_dict(obj)
    elif isinstance(obj, WeightDecomposition):
        obj = weight_decomposition_to_dict(obj)
    elif isinstance(obj, CurvatureReport):
        obj = curvature_report_to_dict(obj)
    else:
        for attr, conv in (("witness_Q", stability_verdict_to_dict),
                           ("D", nilsoliton_fit_to_dict)):
            if hasattr(obj, attr):
                obj = conv(obj)
                break
    return json.dumps(obj, indent=2, sort_keys=True)


def loads_algebra(text: str) -> LieAlgebra:
    return algebra_from_dict(json.loads(text))


def trajectory_columns(traj: FlowTrajectory):
    m = traj.split.dim_m
    iu = np.triu_indices(m)
    cols = ["t"] + [f"P_{i + 1}_{j + 1}" for i, j in zip(*iu)] + list(traj.channel_order)
    return cols, iu


def trajectory_rows(traj: FlowTrajectory):
    cols, iu = trajectory_columns(traj)
    for k in range(len(traj.times)):
        row = [traj.times[k]]
        row.extend(traj.metrics[k][iu])
        row.extend(traj.monitors[name][k] for name in traj.channel_order)
        yield row


def write_trajectory_csv(traj: FlowTrajectory, path):
    cols, _ = trajectory_columns(traj)
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in trajectory_rows(traj):
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
    return cols


def write_channel_csvs(traj: FlowTrajectory, directory):
    """One (t, value) CSV per monitor channel, for plotting."""
    import os

    os.makedirs(directory, exist_ok=True)
    written = []
    for name in traj.channel_order:
        path = os.path.join(directory, f"{name}.csv")
        with open(path, "w") as fh:
            fh.write("t,%s\n" % name)
            for t, v in zip(traj.times, traj.monitors[name]):
                fh.write(f"{t!r},{float(v)!r}\n")
        written.append(path)
    return written


GNUPLOT_HEADER = """# gnuplot script for the monitor channels; run from the output directory
set datafile separator ','
set key autotitle columnhead
set xlabel 't'
"""


def write_gnuplot_script(traj: FlowTrajectory, path, plots_dir="plots"):
    with open(path, "w") as fh:
        fh.write(GNUPLOT_HEADER)
        for name in traj.channel_order:
            fh.write(f"set output; set title '{name}'\n")
            fh.write(f"plot '{plots_dir}/{name}.csv' using 1:2 with lines\n")
            fh.write("pause -1\n")
    return path
