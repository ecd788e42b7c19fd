import math

import numpy as np
import pytest

import rgbdtrack as rt


def test_box_basics():
    b = rt.BoundingBox(0, 0, 2.5, 4)
    assert rt.box_area(b) == pytest.approx(10.0)
    assert rt.box_center(rt.BoundingBox(1, 1, 3, 5)) == pytest.approx((2.5, 3.5))
    assert rt.clip_to_frame(rt.BoundingBox(200, 200, 5, 5), 100, 100) is None
    clipped = rt.clip_to_frame(rt.BoundingBox(-5, -5, 10, 10), 100, 100)
    assert (clipped.x, clipped.y, clipped.w, clipped.h) == pytest.approx((0, 0, 5, 5))
    with pytest.raises(rt.ToolkitError):
        rt.BoundingBox(0, 0, -1, 5)


def test_iou_and_f_measure():
    assert rt.iou(rt.BoundingBox(0, 0, 2, 2), rt.BoundingBox(1, 0, 2, 2)) == pytest.approx(1 / 3)
    assert rt.f_measure(0.5, 0.5) == pytest.approx(0.5)
    assert rt.f_measure(0.545, 0.578) == pytest.approx(0.561, abs=1e-3)
    assert rt.f_measure(0.0, 0.0) == 0.0


def test_precision_recall_sweep():
    gts = [rt.GroundTruthEntry.present(rt.BoundingBox(0, 0, 10, 10)) for _ in range(3)]
    preds = [
        rt.Prediction(rt.BoundingBox(0, 0, 10, 10), 0.9),
        rt.Prediction(rt.BoundingBox(0, 0, 10, 5), 0.9),
        rt.Prediction(rt.BoundingBox(0, 0, 10, 10), 0.1),
    ]
    assert rt.precision(preds, gts, 0.5) == pytest.approx(0.75)
    assert rt.recall(preds, gts, 0.5) == pytest.approx(0.5)

    sweep = rt.sweep_thresholds([preds], [gts])
    assert sweep["best_f"] >= rt.f_measure(0.75, 0.5) - 1e-12
    assert len(sweep["thresholds"]) == len(sweep["f_curve"])


def test_attribute_flags_and_window():
    assert rt.attribute_window(50, 200) == (40, 60)
    assert rt.attribute_window(0, 200) == (0, 10)
    gts = [rt.GroundTruthEntry.present(rt.BoundingBox(0, 0, 10, 10)) for _ in range(5)]
    gts[3] = rt.GroundTruthEntry.present(rt.BoundingBox(0, 0, 20, 10))
    flags = rt.compute_attribute_flags(gts)
    assert flags["ac"] == [True] * 5  # ratio 2.0 within every clamped window
    assert flags["fm"] == [False, False, False, True, True]  # center jumps by 5 with size 10


def test_mean_box_depth():
    depth = np.full((8, 8), 1000, dtype=np.uint16)
    depth[0, 0] = 0
    mean = rt.mean_box_depth(depth, rt.BoundingBox(0, 0, 2, 2))
    assert mean == pytest.approx(1000.0)
    assert rt.mean_box_depth(np.zeros((4, 4), dtype=np.uint16), rt.BoundingBox(0, 0, 2, 2)) is None


def test_soft_argmax():
    uniform = np.full((4, 4), 1 / 16.0)
    assert rt.soft_argmax(uniform) == pytest.approx((1.5, 1.5))
    hot = np.zeros((4, 4))
    hot[3, 2] = 1.0
    assert rt.soft_argmax(hot) == pytest.approx((2.0, 3.0))


def test_box_loss():
    pred = rt.BoundingBox(0.0, 0.0, 0.2, 0.2)
    gt = rt.BoundingBox(0.1, 0.0, 0.2, 0.2)
    expected = 2.0 * (2.0 / 3.0) + 5.0 * 0.025
    assert rt.box_loss(pred, gt, 2.0, 5.0) == pytest.approx(expected, abs=1e-9)
    assert rt.box_loss(gt, gt, 2.0, 5.0) == pytest.approx(0.0, abs=1e-9)


def test_end_to_end_oracle(tmp_path):
    root = tmp_path / "data"
    results = tmp_path / "results"
    rt.write_default_dataset(root, count=2, seed=11)

    report = rt.validate_dataset(root)
    assert report["all_passed"], report["entries"]

    ids = rt.list_sequences(root, "test")
    assert len(ids) == 2
    seq = rt.load_sequence(root / "test" / ids[0])
    assert seq.frame_count == len(seq.groundtruth) == len(seq.rgb_paths)

    rt.track_oracle(root, results)
    preds = rt.read_results(results / f"{ids[0]}.txt")
    assert len(preds) == seq.frame_count

    scores = rt.evaluate_dataset(results, root)
    assert scores["f"] == pytest.approx(1.0)
    assert scores["pr"] == pytest.approx(1.0)
    assert scores["re"] == pytest.approx(1.0)
    assert "FO" not in scores["attribute_overlap"]
    assert math.isfinite(scores["best_threshold"])
