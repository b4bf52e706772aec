"""Smoke tests for the pybind11 module: the core pipeline driven from Python."""

import numpy as np
import pytest

import skelkit as sk


def test_icosphere_counts():
    mesh = sk.make_icosphere(2)
    assert mesh.n_vertices == 162
    assert mesh.n_faces == 320
    assert mesh.n_edges == 480
    assert mesh.vertices.shape == (162, 3)
    assert mesh.faces.shape == (320, 3)


def test_trimesh_from_numpy_and_volume():
    vertices = np.array(
        [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float
    )
    faces = np.array([[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]], dtype=np.int32)
    mesh = sk.TriMesh(vertices, faces)
    assert mesh.n_edges == 6
    assert sk.signed_volume(mesh) == pytest.approx(1.0 / 6.0)


def test_laplacian_rows_sum_to_zero():
    mesh = sk.make_icosphere(1)
    lap = sk.cotan_laplacian(mesh)
    assert np.abs(lap.sum(axis=1)).max() < 1e-9


def test_contract_and_surgery():
    mesh = sk.make_icosphere(1)
    contracted = sk.contract(mesh)
    assert abs(sk.signed_volume(contracted)) < 1e-3 * abs(sk.signed_volume(mesh))
    graph = sk.connectivity_surgery(contracted)
    assert graph.nodes.shape[1] == 3


def test_skinning_rows_sum_to_one():
    spec = sk.SynthSpec.make_chain([1.0, 1.0], [0.25, 0.25], 2)
    mesh, gt = sk.generate(spec)
    weights = sk.compute_skinning_weights(mesh, gt.skeleton)
    assert weights.w.shape[1] == 2
    assert np.allclose(weights.w.sum(axis=1), 1.0, atol=1e-6)
    rigidity = sk.rigidity_coefficients(weights, mesh)
    assert len(rigidity) == mesh.n_edges
    assert all(0 < r <= 100.0 for r in rigidity)


def test_blend_skin_round_trip():
    spec = sk.SynthSpec.make_chain([1.0, 1.0], [0.25, 0.25], 2)
    mesh, gt = sk.generate(spec)
    weights = sk.compute_skinning_weights(mesh, gt.skeleton)
    pose = sk.PoseFrame(2)
    pose.bones = [
        sk.RigidTransform.about_point(np.zeros(3), np.array([0.0, 0.0, 1.0]), 0.3),
        sk.RigidTransform.identity(),
    ]
    posed = sk.blend_skin(mesh, weights, pose)
    back = sk.backward_blend_skin(posed, weights, pose)
    assert np.abs(back - mesh.vertices).max() < 1e-9


def test_skeleton_serialization_round_trip():
    spec = sk.SynthSpec.make_chain([1.0, 0.8], [0.2, 0.2], 2)
    _, gt = sk.generate(spec)
    text = sk.serialize_skeleton(gt.skeleton)
    back = sk.deserialize_skeleton(text)
    assert sk.serialize_skeleton(back) == text


def test_sios2_rigid_tube_merges(tmp_path):
    spec = sk.SynthSpec.make_chain([1.0, 1.0], [0.25, 0.25], 6)
    motion = []
    for f in range(6):
        motion.append(
            sk.RigidTransform(
                np.array([1.0, 0, 0, 0]), np.array([0.15 * f, 0.1 * np.sin(0.8 * f), 0.0])
            )
        )
    spec.root_motion = motion
    mesh, gt = sk.generate(spec)
    cfg = sk.RefineConfig()
    cfg.seed = 11
    result = sk.sios2(mesh, gt, cfg)
    assert result.skeleton.n_bones == 1

    run = tmp_path / "run"
    run.mkdir()
    sk.save_skeleton(result.skeleton, str(run / "skeleton.json"))
    sk.save_weights(result.weights, str(run / "weights.bin"))
    gt_dir = tmp_path / "gt"
    sk.save_dataset(mesh, gt, str(gt_dir))
    loaded = sk.load_skeleton(str(run / "skeleton.json"))
    assert loaded.n_bones == 1


def test_errors_are_python_exceptions():
    with pytest.raises(sk.IoError):
        sk.load_mesh("/nonexistent/path.obj")
    with pytest.raises(Exception):
        sk.cosine_similarity(np.zeros(2), np.ones(2))
