import math

import numpy as np
import pytest

import fieldcalib as fc


def broadcast_camera():
    return fc.CameraParams(
        fov=fc.deg2rad(40.0),
        pan=fc.deg2rad(8.0),
        tilt=fc.deg2rad(70.0),
        roll=fc.deg2rad(0.5),
        position=[-3.0, 60.0, -15.0],
    )


def test_version_and_labels():
    assert fc.__version__.count(".") == 2
    labels = fc.segment_labels()
    assert "Middle line" in labels
    assert "Circle central" in labels
    assert len(labels) == len(set(labels))


def test_projection_of_field_center():
    phi = broadcast_camera()
    px = fc.project(phi, [0.0, 0.0, 0.0])
    assert px is not None
    h = fc.homography_from_camera(phi)
    q = h @ np.array([0.0, 0.0, 1.0])
    np.testing.assert_allclose(px, q[:2] / q[2], atol=1e-9)
    # A point behind the camera has no pixel.
    assert fc.project(phi, [0.0, 200.0, 0.0]) is None


def test_decompose_round_trip():
    phi = broadcast_camera()
    d = fc.decompose(fc.homography_from_camera(phi) * -2.5)
    assert not d.rejected
    assert d.refined
    assert math.isclose(d.phi.tilt, phi.tilt, abs_tol=1e-7)
    assert math.isclose(d.phi.fov, phi.fov, rel_tol=1e-7)
    np.testing.assert_allclose(d.phi.position, phi.position, atol=1e-5)


def test_calibrate_synthetic_scene():
    phi = broadcast_camera()
    ann = fc.render_annotations(phi, seed=1)
    assert len(ann) >= 4
    r = fc.calibrate(ann, steps=600, trace=True)
    assert r.hypothesis in ("center", "left", "right")
    assert set(r.candidate_losses) == {"center", "left", "right"}
    assert r.final_loss == min(r.candidate_losses.values())
    assert len(r.loss_trace) == 600
    assert r.verified == (r.final_loss <= 0.019)
    counts = fc.ac_at_t(r.phi, r.psi, ann, 20.0)
    assert counts.tp + counts.fp > 0


def test_metrics():
    assert math.isclose(fc.compound_score(1, 1, 1, 1), 1 - math.exp(-4), abs_tol=1e-12)
    assert fc.completeness_ratio(3, 4) == 0.75
    h = fc.homography_from_camera(broadcast_camera())
    assert math.isclose(fc.iou(h, h, whole=True), 1.0, abs_tol=1e-9)
    phi = broadcast_camera()
    counts = fc.ac_at_t(phi, fc.RadialDistortion(), fc.render_annotations(phi), 5.0)
    assert counts.fp == 0 and counts.fn == 0


def test_sampling_is_seeded():
    a = fc.sample_camera("left", seed=3)
    b = fc.sample_camera("left", seed=3)
    assert a.position.tolist() == b.position.tolist()
    assert a.position[0] < -19.0


def test_errors_are_translated():
    with pytest.raises(fc.FieldCalibError):
        fc.calibrate({})
    with pytest.raises(fc.FieldCalibError):
        fc.sample_camera("north")
    with pytest.raises(fc.FieldCalibError):
        fc.calibrate({"Middle line": [[1.0, 2.0], [3.0, 4.0]]}, steps=0)
