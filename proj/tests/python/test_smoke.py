import math

import numpy as np
import pytest

import svmr


def test_tiou_examples():
    assert svmr.tiou((0.0, 2.0), (1.0, 3.0)) == pytest.approx(1.0 / 3.0)
    assert svmr.tiou((0.0, 1.0), (2.0, 3.0)) == 0.0


def test_empty_interval_raises():
    with pytest.raises(svmr.Error):
        svmr.tiou((1.0, 1.0), (0.0, 2.0))


def test_soft_nms_decay():
    out = svmr.soft_nms([("v", 0.0, 2.0, 0.9), ("v", 0.0, 2.0, 0.8)], sigma=0.4)
    assert out[0][3] == pytest.approx(0.9)
    assert out[1][3] == pytest.approx(0.8 * math.exp(-2.5))


def test_ar_and_auc():
    recall = svmr.ar_at_an([([(0.0, 1.0)], [(0.0, 1.0)])], max_an=10)
    assert recall == pytest.approx([1.0] * 10)
    assert svmr.auc([0.5] * 100) == pytest.approx(49.5)


def test_bm_sample_and_mask():
    mask = svmr.bm_mask(4)
    assert mask.shape == (4, 4)
    assert mask.sum() == 10
    feats = np.arange(8.0).reshape(2, 4)
    fmap = svmr.bm_sample(feats, 3)
    assert fmap.shape == (6, 16)
    assert fmap[:, mask.reshape(-1) == 0].sum() == 0.0
    assert fmap[1, 0 * 4 + 2] == pytest.approx(1.0)


def test_max_cos_similarity():
    q = np.array([1.0, 0.0])
    r = np.array([[1.0, 0.0], [1.0, -1.0]])
    assert svmr.max_cos_similarity(q, r) == pytest.approx(1.0 / math.sqrt(2.0))


def test_gallery_search_order():
    g = svmr.GalleryIndex.build([("b", np.eye(2)[:, :1]), ("a", np.eye(2)[:, 1:])])
    hits = g.search(np.array([1.0, 0.2]), 2)
    assert [h[0] for h in hits] == ["b", "a"]


def test_stage2_forward_is_masked_and_bounded():
    cfg = svmr.Stage2Config()
    cfg.feature_channels, cfg.reference_length = 4, 6
    cfg.base_hidden, cfg.channels, cfg.samples, cfg.head_channels = 5, 3, 3, 4
    model = svmr.Stage2Model(cfg, 3)
    rng = np.random.default_rng(0)
    mc, mr = model.forward(rng.normal(size=(4, 4)), rng.normal(size=(4, 6)))
    invalid = svmr.bm_mask(6) == 0
    for m in (mc, mr):
        assert m.shape == (6, 6)
        assert np.all(m[invalid] == 0.0)
        assert np.all((m >= 0.0) & (m <= 1.0))


def test_synth_corpus_roundtrip(tmp_path):
    queries, refs = svmr.synth_corpus(str(tmp_path), seed=1, query_videos=30, reference_videos=30,
                                      feature_channels=8)
    assert queries > 0 and refs > 0
    svmf = sorted((tmp_path / "features" / "references").glob("*.svmf"))
    assert len(svmf) == refs
    vid, dur, feats = svmr.load_features(str(svmf[0]))
    assert dur > 0 and feats.shape[0] == 8


def test_grad_suite_single_seed():
    entries = svmr.run_grad_suite([1])
    assert entries and all(e["passed"] for e in entries)
