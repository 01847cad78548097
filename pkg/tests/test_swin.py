import numpy as np
import pytest

from cxdenoise.ctensor import ComplexTensor, ShapeError, Tensor, gradcheck
from cxdenoise.swin import (
    ComplexSwinUNet,
    ComplexUNet,
    PatchExpand,
    PatchMerge,
    SwinBlock,
    SwinConfig,
    SwinStage,
    WindowAttention,
    build_model,
    cwindow_attention,
    relative_position_index,
    shift_attention_mask,
)
from cxdenoise.swin.attention import window_partition, window_reverse
from conftest import tiny_swin_config

F64 = np.float64


def crand(rng, *shape, dtype=F64):
    return ComplexTensor.from_numpy(rng.normal(size=shape) + 1j * rng.normal(size=shape), dtype)


def creal(rng, *shape, dtype=F64):
    return ComplexTensor(Tensor(rng.normal(size=shape).astype(dtype)))


def zero_(t: Tensor):
    t.data[...] = 0


# -- window bookkeeping ----------------------------------------------------------

@pytest.mark.parametrize("m", [2, 3, 4])
def test_relative_position_index_brute_force(m):
    idx = relative_position_index(m)
    coords = [(i, j) for i in range(m) for j in range(m)]
    for a, (i1, j1) in enumerate(coords):
        for b, (i2, j2) in enumerate(coords):
            assert idx[a, b] == (i1 - i2 + m - 1) * (2 * m - 1) + (j1 - j2 + m - 1)
    assert idx.max() == (2 * m - 1) ** 2 - 1 and idx.min() == 0


def test_bias_table_covers_all_offsets():
    attn = WindowAttention(8, 4, 2, rng=np.random.default_rng(0))
    assert attn.bias_table.shape == ((2 * 4 - 1) ** 2, 2)


def test_partition_reverse_inverse(rng):
    x = crand(rng, 2, 8, 12, 3)
    w = window_partition(x, 4)
    assert w.shape == (2 * 2 * 3, 16, 3)
    np.testing.assert_array_equal(window_reverse(w, 4, 8, 12).numpy(), x.numpy())


def test_shift_mask_brute_force():
    h = w = 8
    m, s = 4, 2
    mask = shift_attention_mask(h, w, m, s)
    # region of each position in the rolled map: which of the three bands per axis
    def band(p, n):
        return 0 if p < n - m else (1 if p < n - s else 2)
    label = np.array([[band(i, h) * 3 + band(j, w) for j in range(w)] for i in range(h)])
    wins = label.reshape(2, m, 2, m).transpose(0, 2, 1, 3).reshape(4, m * m)
    for k in range(4):
        for a in range(m * m):
            for b in range(m * m):
                expect = 0.0 if wins[k, a] == wins[k, b] else -1e9
                assert mask[k, a, b] == expect


def test_wrapped_pairs_get_negligible_attention(rng):
    attn = WindowAttention(4, 4, 1, rng=np.random.default_rng(0), dtype=F64)
    attn.record = True
    cwindow_attention(crand(rng, 1, 64, 4), attn, (8, 8), shifted=True)
    weights = attn.last_attention
    mask = shift_attention_mask(8, 8, 4, 2) != 0
    assert np.abs(weights.real.data[:, 0][mask]).max() <= 1e-6
    assert np.abs(weights.imag.data[:, 0][mask]).max() <= 1e-6


def test_attention_uniform_scores_average_values():
    m, dim = 2, 4
    attn = WindowAttention(dim, m, 1, rng=np.random.default_rng(0), dtype=F64)
    zero_(attn.bias_table)
    w = np.zeros((dim, 3 * dim))
    w[:, 2 * dim :] = np.eye(dim)  # q = k = 0, v = x
    attn.qkv.weight.data[...] = w
    attn.proj.weight.data[...] = np.eye(dim)
    v = ComplexTensor(Tensor(np.eye(4)[None]), Tensor(2 * np.eye(4)[None]))
    out = attn(v)
    np.testing.assert_allclose(out.real.data[0], np.full((4, 4), 0.25))
    np.testing.assert_allclose(out.imag.data[0], np.full((4, 4), 0.5))


def test_attention_real_input_real_output(rng):
    attn = WindowAttention(8, 4, 2, rng=np.random.default_rng(0), dtype=F64)
    for shifted in (False, True):
        out = cwindow_attention(creal(rng, 2, 64, 8), attn, (8, 8), shifted)
        assert np.all(out.imag.data == 0)


def test_shifted_equals_unshifted_on_constant_input():
    attn = WindowAttention(4, 4, 2, rng=np.random.default_rng(3), dtype=F64)
    const = ComplexTensor(Tensor(np.full((1, 64, 4), 0.7)), Tensor(np.full((1, 64, 4), -0.2)))
    a = cwindow_attention(const, attn, (8, 8), shifted=False)
    b = cwindow_attention(const, attn, (8, 8), shifted=True)
    np.testing.assert_allclose(a.numpy(), b.numpy(), atol=1e-12)


def test_attention_rejects_indivisible_resolution(rng):
    attn = WindowAttention(4, 4, 1, rng=np.random.default_rng(0))
    with pytest.raises(ShapeError):
        cwindow_attention(crand(rng, 1, 36, 4), attn, (6, 6), shifted=False)


# -- blocks ------------------------------------------------------------------------

def make_block(shifted, **kw):
    return SwinBlock(4, (4, 4), 2, 2, shifted, rng=np.random.default_rng(0), dtype=F64, **kw)


@pytest.mark.parametrize("shifted", [False, True])
def test_block_with_zeroed_outputs_is_identity(shifted, rng):
    blk = make_block(shifted)
    for t in (blk.attn.proj.weight, blk.attn.proj.bias, blk.mlp.fc2.weight, blk.mlp.fc2.bias):
        zero_(t)
    z = crand(rng, 2, 16, 4)
    out = blk(z)
    assert out.shape == z.shape
    np.testing.assert_array_equal(out.numpy(), z.numpy())


def test_block_pair_gradcheck(rng):
    stage = SwinStage(4, (4, 4), 2, 2, 2, rng=np.random.default_rng(0), dtype=F64)
    assert stage.blocks[1].shifted and not stage.blocks[0].shifted
    z = crand(rng, 1, 16, 4)
    for t in (z.real, z.imag):
        t.requires_grad = True
    w = crand(rng, 1, 16, 4)

    def f():
        out = stage(z)
        return (out.real * w.real + out.imag * w.imag).sum()

    inputs = [z.real, z.imag] + stage.parameters()
    assert gradcheck(f, inputs, n_points=10) < 1e-4


def test_window_clamped_to_small_maps():
    blk = SwinBlock(4, (2, 2), 1, 4, True, rng=np.random.default_rng(0))
    assert blk.attn.window == 2 and not blk.shifted


# -- patch merge / expand -----------------------------------------------------------

def test_merge_and_expand_shapes(rng):
    c = 6
    merge = PatchMerge((8, 8), c, rng=np.random.default_rng(0), dtype=F64, centered=True)
    z = merge(crand(rng, 1, 64, c))
    assert z.shape == (1, 16, 2 * c)
    expand = PatchExpand((4, 4), 2 * c, rng=np.random.default_rng(0), dtype=F64, centered=True)
    assert expand(z).shape == (1, 64, c)


def test_merge_rejects_odd_dims(rng):
    merge = PatchMerge((5, 5), 2, rng=np.random.default_rng(0), dtype=F64, centered=True)
    with pytest.raises(ShapeError):
        merge(crand(rng, 1, 25, 2))


def test_merge_averaging_weights_keep_constants():
    c = 3
    merge = PatchMerge((4, 4), c, rng=np.random.default_rng(0), dtype=F64, centered=True)
    merge.reduction.weight.data[...] = 1.0 / (4 * c)
    const = ComplexTensor(Tensor(np.full((1, 16, c), 2.5)), Tensor(np.full((1, 16, c), -1.0)))
    out = merge(const)
    np.testing.assert_allclose(out.real.data, 2.5)
    np.testing.assert_allclose(out.imag.data, -1.0)


def test_expand_is_pixel_shuffle():
    c = 2
    expand = PatchExpand((1, 1), 4 * c, out_dim=c, rng=np.random.default_rng(0), dtype=F64, centered=True)
    expand.expand.weight.data[...] = np.eye(4 * c)
    x = np.arange(4 * c, dtype=F64).reshape(1, 1, 4 * c)
    out = expand(ComplexTensor(Tensor(x))).real.data.reshape(2, 2, c)
    np.testing.assert_array_equal(out, x.reshape(2, 2, c))


# -- whole model -------------------------------------------------------------------

def test_default_parameter_count_is_stable():
    assert ComplexSwinUNet(SwinConfig()).num_parameters() == 41_350_549


def test_tiny_trace_and_shape(rng, tiny_cfg):
    model = ComplexSwinUNet(tiny_cfg)
    x = crand(rng, 2, 1, 64, 64, dtype=np.float32)
    out = model(x)
    assert out.shape == x.shape
    assert model.stage_shapes() == [(16, 16, 8), (8, 8, 16), (4, 4, 32), (2, 2, 64),
                                    (2, 2, 64), (4, 4, 32), (8, 8, 16), (16, 16, 8)]


def test_wrong_input_size(rng, tiny_cfg):
    with pytest.raises(ShapeError):
        ComplexSwinUNet(tiny_cfg)(crand(rng, 1, 1, 32, 32))


def test_config_validation():
    with pytest.raises(ValueError):
        SwinConfig(image_size=100)
    with pytest.raises(ValueError):
        SwinConfig(heads=(5, 6, 12, 24))


@pytest.mark.parametrize("core", ["swin", "unet"])
def test_real_subspace_whole_model(core, rng):
    model = build_model(tiny_swin_config(dtype="float64"), core)
    out = model(creal(rng, 1, 1, 64, 64))
    assert np.all(out.imag.data == 0)


@pytest.mark.parametrize("core", ["swin", "unet"])
def test_forward_is_deterministic(core, rng, tiny_cfg):
    model = build_model(tiny_cfg, core)
    x = crand(rng, 1, 1, 64, 64, dtype=np.float32)
    a, b = model(x).numpy(), model(x).numpy()
    assert np.array_equal(a, b)


def test_unet_shape(rng, tiny_cfg):
    x = crand(rng, 2, 1, 64, 64, dtype=np.float32)
    assert ComplexUNet(tiny_cfg)(x).shape == x.shape


def test_build_model_rejects_unknown_core(tiny_cfg):
    with pytest.raises(ValueError):
        build_model(tiny_cfg, "resnet")


def test_tiny_model_end_to_end_gradcheck(rng):
    model = ComplexSwinUNet(tiny_swin_config(dtype="float64", global_residual=False))
    x = crand(rng, 1, 1, 64, 64)
    w = crand(rng, 1, 1, 64, 64)

    def f():
        out = model(x)
        return (out.real * w.real + out.imag * w.imag).mean()

    assert gradcheck(f, model.parameters(), n_points=5, eps=1e-5) < 1e-3
