import json

import numpy as np

from ricciflow.catalog import catalog, heisenberg
from ricciflow.curvature import ricci
from ricciflow.deform import nilsoliton_fit
from ricciflow.flow import FlowControls, integrate
from ricciflow.homspace import weight_split
from ricciflow.serialize import dumps, trajectory_columns, write_trajectory_csv
from ricciflow.stability import is_stable


def test_split_round_trips_through_json(e1_split):
    text = dumps(e1_split)
    data = json.loads(text)
    assert data["b0"] == 2.0
    assert data["l_idx"] == [0, 1, 2]
    assert data["weights"][0]["alpha"] == [0.0, 0.0, 0.0, 1.0]
    np.testing.assert_array_equal(np.array(data["background"]), np.eye(7))


def test_weight_decomposition_serializes():
    wd = weight_split(catalog("E5_two_weights").semidirect)
    data = json.loads(dumps(wd))
    assert len(data["weights"]) == 2
    assert len(data["weights"][0]["J"]) == 4


def test_curvature_report_exact_round_trip(e2_split):
    rep = ricci(e2_split, np.eye(3))
    data = json.loads(dumps(rep))
    # repr floats survive the round trip bit-exactly
    np.testing.assert_array_equal(np.array(data["ric"]), rep.ric)
    assert data["scal"] == rep.scal


def test_verdict_and_fit_serialize():
    v = is_stable(catalog("E1_su2xR_R3").semidirect)
    data = json.loads(dumps(v))
    assert data["stable"] is True
    fit = nilsoliton_fit(heisenberg(), np.eye(3))
    data = json.loads(dumps(fit))
    assert data["c"] == -1.5


def test_trajectory_csv_columns_stable(e4_split, tmp_path):
    traj = integrate(e4_split, np.eye(3), FlowControls(kind="ricci", t_max=0.5))
    cols, _ = trajectory_columns(traj)
    assert cols[0] == "t"
    assert cols[1:7] == ["P_1_1", "P_1_2", "P_1_3", "P_2_2", "P_2_3", "P_3_3"]
    assert cols[7:] == traj.channel_order
    path = tmp_path / "traj.csv"
    write_trajectory_csv(traj, path)
    lines = path.read_text().splitlines()
    assert lines[0].split(",") == cols
    assert len(lines) == len(traj.times) + 1
    # values parse back exactly
    row = [float(x) for x in lines[1].split(",")]
    assert row[0] == traj.times[0]
