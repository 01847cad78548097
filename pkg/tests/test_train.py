import dataclasses

import numpy as np
import pytest

from cxdenoise.ctensor import Tensor
from cxdenoise.signal import AudioClip, StftConfig, write_wav
from cxdenoise.train import (
    CELLS,
    Adam,
    AblationResult,
    CheckpointError,
    ConfigError,
    DataValidationError,
    NonFiniteGradientError,
    Pair,
    TrainConfig,
    Trainer,
    clip_by_global_norm,
    global_norm,
    load_checkpoint,
    load_pair_dirs,
    read_checkpoint,
    save_checkpoint,
    synthetic_pairs,
)
from cxdenoise.train.optim import flat_grads
from conftest import tiny_swin_config

STFT = StftConfig.for_image_size(64)


def make_trainer(pairs=None, model_kw=None, **kw):
    base = dict(batch_size=4, max_steps=10)
    base.update(kw)
    return Trainer(TrainConfig(**base), tiny_swin_config(**(model_kw or {})), STFT,
                   synthetic_pairs(4) if pairs is None else pairs)


# -- config ------------------------------------------------------------------------

@pytest.mark.parametrize("kw, field", [
    (dict(enable_image_loss=False, enable_audio_loss=False), "enable_image_loss"),
    (dict(batch_size=0), "batch_size"),
    (dict(learning_rate=0.0), "learning_rate"),
    (dict(alpha=1.2), "alpha"),
    (dict(core="vit"), "core"),
])
def test_train_config_validation(kw, field):
    with pytest.raises(ConfigError) as exc:
        TrainConfig(**kw)
    assert exc.value.field == field


def test_train_config_defaults():
    c = TrainConfig()
    assert (c.batch_size, c.epochs, c.learning_rate, c.alpha) == (16, 100, 1e-3, 0.5)


# -- Adam --------------------------------------------------------------------------

def named(value):
    return [("w", Tensor(np.array(value, dtype=np.float64), requires_grad=True))]


def test_adam_zero_gradient_keeps_params():
    params = named([1.0, -2.0])
    opt = Adam(params)
    opt.step([np.zeros(2)])
    np.testing.assert_array_equal(params[0][1].data, [1.0, -2.0])


def test_adam_moments_decay_on_zero_gradient():
    opt = Adam(named([1.0]))
    opt.step([np.array([2.0])])
    m, v = opt.m["w"].copy(), opt.v["w"].copy()
    opt.step([np.array([0.0])])
    np.testing.assert_allclose(opt.m["w"], 0.9 * m)
    np.testing.assert_allclose(opt.v["w"], 0.999 * v)


def test_adam_first_step_is_lr_sign():
    params = named([0.5, 0.5, 0.5])
    Adam(params, lr=0.01).step([np.array([3.0, -0.2, 1e-3])])
    np.testing.assert_allclose(params[0][1].data, 0.5 - 0.01 * np.array([1, -1, 1]), rtol=1e-4)


def test_adam_quadratic_converges():
    params = named([5.0])
    p = params[0][1]
    opt = Adam(params, lr=0.05)
    for _ in range(500):
        opt.step([2 * (p.data - 1.5)])
    assert abs(float(p.data[0]) - 1.5) < 1e-3


def test_adam_nan_names_parameter():
    with pytest.raises(NonFiniteGradientError, match="'w'"):
        Adam(named([1.0])).step([np.array([np.nan])])


def test_clip_by_global_norm():
    grads = [np.array([3.0]), np.array([4.0])]
    clipped, norm = clip_by_global_norm(grads, 1.0)
    assert norm == pytest.approx(5.0)
    assert global_norm(clipped) == pytest.approx(1.0)
    same, _ = clip_by_global_norm(grads, 10.0)
    assert same is grads


# -- data ----------------------------------------------------------------------------

def test_length_mismatch_rejected_before_training():
    good = synthetic_pairs(2)
    bad = Pair("x.wav", AudioClip(np.ones(2048) * 0.1, 8000), AudioClip(np.ones(2000) * 0.1, 8000))
    with pytest.raises(DataValidationError, match="x.wav"):
        make_trainer(pairs=good + [bad])


def test_unmatched_files_listed(tmp_path):
    clip = AudioClip(np.linspace(-0.5, 0.5, 1000), 8000)
    for sub, names in (("noisy", ["a", "b", "c"]), ("clean", ["a", "d"])):
        (tmp_path / sub).mkdir()
        for n in names:
            write_wav(clip, tmp_path / sub / f"{n}.wav")
    with pytest.raises(DataValidationError) as exc:
        load_pair_dirs(tmp_path / "noisy", tmp_path / "clean")
    assert len(exc.value.problems) == 3
    assert any("b.wav" in p for p in exc.value.problems)
    assert any("d.wav" in p for p in exc.value.problems)


def test_batches_cover_each_epoch():
    tr = make_trainer(pairs=synthetic_pairs(5), batch_size=2)
    assert tr.steps_per_epoch == 3
    seen = np.concatenate([tr.batch_indices(s) for s in range(3)])
    assert sorted(seen) == list(range(5))


# -- training behaviour ------------------------------------------------------------

def test_audio_only_total_is_weighted_recon():
    tr = make_trainer(enable_image_loss=False, alpha=0.3)
    rep = tr.step()
    assert rep.l_im_total == 0
    assert rep.total == pytest.approx(0.7 * rep.l_r, rel=1e-6)


def test_image_only_total_is_weighted_image():
    tr = make_trainer(enable_audio_loss=False)
    rep = tr.step()
    assert rep.l_r == 0 and rep.l_sdr == 0
    assert rep.total == pytest.approx(0.5 * rep.l_im_total, rel=1e-6)


def test_reports_satisfy_invariants():
    for rep in make_trainer().run(3):
        rep.check(tol=1e-5)


def test_fixed_seed_is_reproducible():
    a = [r.total for r in make_trainer().run(3)]
    b = [r.total for r in make_trainer().run(3)]
    assert a == b


def test_batch_gradient_is_mean_of_single_gradients():
    tr = make_trainer(model_kw=dict(dtype="float64"))
    batch = tr.examples[:3]
    tr.opt.zero_grad()
    tr.loss(batch)[0].backward()
    full = flat_grads(tr.named)
    singles = []
    for ex in batch:
        tr.opt.zero_grad()
        tr.loss([ex])[0].backward()
        singles.append(flat_grads(tr.named))
    mean = np.mean(singles, axis=0)
    assert np.max(np.abs(full - mean)) <= 1e-5 * max(1.0, np.max(np.abs(mean)))


def test_checkpoint_continue_is_bit_identical(tmp_path):
    kw = dict(model_kw=dict(drop_rate=0.1, attn_drop_rate=0.1))
    ref = make_trainer(**kw)
    ref.run(2)
    ref_next = ref.step()

    tr = make_trainer(**kw)
    tr.run(2)
    save_checkpoint(tr, tmp_path / "c.ckpt")
    fresh = make_trainer(**kw)
    load_checkpoint(fresh, tmp_path / "c.ckpt")
    assert fresh.step_count == 2
    nxt = fresh.step()
    assert nxt.as_dict() == ref_next.as_dict()
    for (n, p), (_, q) in zip(ref.named, fresh.named):
        assert np.array_equal(p.data, q.data), n
        assert np.array_equal(ref.opt.m[n], fresh.opt.m[n])


def test_checkpoint_header_and_errors(tmp_path):
    tr = make_trainer()
    path = tmp_path / "c.ckpt"
    save_checkpoint(tr, path)
    header, tensors = read_checkpoint(path)
    assert header["config"]["model"]["embed_dim"] == 8
    assert header["config_hash"] == tr.config_hash
    assert set(k.split("/")[0] for k in tensors) == {"param", "adam_m", "adam_v"}

    data = path.read_bytes()
    (tmp_path / "bad").write_bytes(b"NOTACKPT" + data[8:])
    with pytest.raises(CheckpointError, match="magic"):
        read_checkpoint(tmp_path / "bad")
    (tmp_path / "short").write_bytes(data[: len(data) // 2])
    with pytest.raises(CheckpointError, match="truncated"):
        read_checkpoint(tmp_path / "short")

    other = make_trainer(learning_rate=0.01)
    with pytest.raises(CheckpointError, match="learning_rate"):
        load_checkpoint(other, path)


def test_non_finite_loss_aborts():
    tr = make_trainer()
    p = tr.named[0][1]
    p.data[...] = np.nan
    with pytest.raises(FloatingPointError):
        tr.step()


def test_unet_image_loss_overfits_two_images():
    pairs = synthetic_pairs(2, seed=7)
    tr = make_trainer(pairs=pairs, core="unet", enable_audio_loss=False, batch_size=2, max_steps=200)
    reps = tr.run()
    assert reps[-1].l_im_total < 0.1 * reps[0].l_im_total


def test_ablation_layout():
    assert [c[0] for c in CELLS] == ["U+I", "U+A", "U+I+A", "C+I", "C+A", "C+I+A"]
    res = AblationResult(dict(zip([c[0] for c in CELLS], [1.0, 2, 3, 4, 5, 6])), 0.5, [])
    assert res.header() == r"U+I & U+A & U+I+A & C+I & C+A & C+I+A \\"
    assert res.all_above_baseline()
    assert not dataclasses.replace(res, noisy_sdr=4.5).all_above_baseline()
