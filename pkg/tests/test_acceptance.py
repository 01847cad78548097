"""End-to-end acceptance checks; each prints one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s`` (the lines are also
shown without ``-s``).
"""
import time

import numpy as np
import pytest

from cxdenoise.ctensor import ComplexTensor, Tensor, cabs, cmatmul, gradcheck, no_grad
from cxdenoise.ctensor.layers import CConv2d, CGELU, CLayerNorm, CLinear, CMaxPool2d, CMLP, CReLU, CUpsample, csoftmax
from cxdenoise.losses import (
    RandomConvFeatures,
    detail_loss,
    image_loss,
    l1_audio,
    l1_image,
    reconstruction_loss,
    sdr,
    sdr_loss,
    ssim,
    ssim_loss,
)
from cxdenoise.signal import AudioClip, StftConfig, hop_length_for, istft_audio, istft_matrix, stft_image, stft_matrix
from cxdenoise.swin import ComplexSwinUNet, ComplexUNet, SwinConfig, SwinStage, WindowAttention, cwindow_attention
from cxdenoise.swin.model import PatchEmbed, PatchExpand, PatchMerge
from cxdenoise.train import TrainConfig, Trainer, ablate, load_checkpoint, save_checkpoint, synthetic_pairs
from conftest import tiny_swin_config

F64 = np.float64
TOY_STFT = StftConfig.for_image_size(64)


@pytest.fixture
def report(capsys):
    def emit(label: str, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
        assert ok, f"{label}: {detail}"

    return emit


def crand(rng, *shape, grad=False):
    z = ComplexTensor.from_numpy(rng.normal(size=shape) + 1j * rng.normal(size=shape), F64)
    z.real.requires_grad = z.imag.requires_grad = grad
    return z


def pairing(out, w):
    return (out.real * w.real + out.imag * w.imag).sum()


# 1 -------------------------------------------------------------------------------

def test_ac1_gradient_correctness(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    r = np.random.default_rng(0)
    fe = RandomConvFeatures(dtype=F64)
    errors = {}

    def layer_case(name, layer, shape):
        z = crand(rng, *shape, grad=True)
        w = crand(rng, *layer(z).shape)
        errors[name] = gradcheck(lambda: pairing(layer(z), w), [z.real, z.imag] + layer.parameters(), 10)

    layer_case("CLinear", CLinear(4, 3, rng=r, dtype=F64, std=0.5), (2, 4))
    layer_case("CLayerNorm", CLayerNorm(4, dtype=F64), (2, 4))
    layer_case("CGELU", CGELU(), (2, 4))
    layer_case("CReLU", CReLU(), (2, 4))
    layer_case("CMLP", CMLP(4, 8, rng=r, dtype=F64), (2, 4))
    layer_case("CConv2d", CConv2d(2, 3, 3, padding=1, rng=r, dtype=F64), (1, 2, 5, 5))
    layer_case("CMaxPool2d+CUpsample", lambda_module(lambda z: CUpsample(2)(CMaxPool2d(2)(z))), (1, 2, 4, 4))
    layer_case("PatchMerge", PatchMerge((4, 4), 3, rng=r, dtype=F64, centered=True), (1, 16, 3))
    layer_case("PatchExpand", PatchExpand((2, 2), 4, rng=r, dtype=F64, centered=True), (1, 4, 4))
    layer_case("PatchEmbed", PatchEmbed(1, 4, 2, rng=r, dtype=F64, centered=True), (1, 1, 4, 4))
    layer_case("attention pair", SwinStage(4, (4, 4), 2, 2, 2, rng=r, dtype=F64), (1, 16, 4))

    a, b = crand(rng, 3, 4, grad=True), crand(rng, 4, 2, grad=True)
    w = crand(rng, 3, 2)
    errors["cmatmul"] = gradcheck(lambda: pairing(cmatmul(a, b), w), [a.real, a.imag, b.real, b.imag], 10)
    s = crand(rng, 3, 4, grad=True)
    ws = crand(rng, 3, 4)
    errors["csoftmax"] = gradcheck(lambda: pairing(csoftmax(s, -1), ws), [s.real, s.imag], 10)
    c = ComplexTensor(Tensor(rng.uniform(0.3, 1, (3, 3)), requires_grad=True),
                      Tensor(rng.uniform(0.3, 1, (3, 3)), requires_grad=True))
    wc = Tensor(rng.normal(size=(3, 3)))
    errors["cabs"] = gradcheck(lambda: (cabs(c) * wc).sum(), [c.real, c.imag], 10)

    p = Tensor(rng.normal(size=(1, 1, 12, 12)), requires_grad=True)
    t = Tensor(rng.normal(size=(1, 1, 12, 12)))
    errors["L_F"] = gradcheck(lambda: l1_image(p, t), [p], 10)
    errors["L_S"] = gradcheck(lambda: ssim_loss(p, t), [p], 10)
    errors["L_D"] = gradcheck(lambda: detail_loss(p, t, fe), [p], 10)
    pc, tc = crand(rng, 1, 1, 12, 12, grad=True), crand(rng, 1, 1, 12, 12)
    errors["L_im_total"] = gradcheck(lambda: image_loss(pc, tc, fe)[0], [pc.real, pc.imag], 10)
    y = Tensor(rng.normal(size=64))
    yh = Tensor(y.data + 0.3 * rng.normal(size=64), requires_grad=True)
    errors["L_A"] = gradcheck(lambda: l1_audio(yh, y), [yh], 10)
    errors["L_SDR"] = gradcheck(lambda: sdr_loss(yh, y), [yh], 10)
    errors["L_R"] = gradcheck(lambda: reconstruction_loss(yh, y)[0], [yh], 10)
    worst_op = max(errors, key=errors.get)

    model = ComplexSwinUNet(tiny_swin_config(dtype="float64", global_residual=False))
    x, wm = crand(rng, 1, 1, 64, 64), crand(rng, 1, 1, 64, 64)
    e2e = gradcheck(lambda: pairing(model(x), wm) / x.real.data.size, model.parameters(), 10, eps=1e-5)
    dt = time.perf_counter() - t0
    ok = errors[worst_op] < 1e-4 and e2e < 1e-3 and dt < 120
    report("AC1 gradient correctness", ok,
           f"{len(errors)} ops, worst {worst_op}={errors[worst_op]:.2e} (<1e-4); "
           f"tiny model end-to-end {e2e:.2e} (<1e-3); {dt:.1f}s")


class lambda_module:
    def __init__(self, fn):
        self.fn = fn

    def __call__(self, z):
        return self.fn(z)

    def parameters(self):
        return []


# 2 -------------------------------------------------------------------------------

def test_ac2_stft_round_trip(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(22)
    cfg = StftConfig()
    worst_free = worst_resized = 0.0
    for length in (4096, 5120, 16000, 48000):
        for _ in range(5):
            x = rng.uniform(-0.5, 0.5, length)
            hop = hop_length_for(length)
            free = istft_matrix(stft_matrix(x, cfg, hop), cfg, hop, length)
            resized = istft_audio(stft_image(AudioClip(x, 16000), cfg, F64)).samples
            core = slice(1023, -1023)
            ref = np.linalg.norm(x[core])
            worst_free = max(worst_free, np.linalg.norm(free[core] - x[core]) / ref)
            worst_resized = max(worst_resized, np.linalg.norm(resized[core] - x[core]) / ref)
    dt = time.perf_counter() - t0
    ok = worst_free < 1e-3 and worst_resized < 5e-2 and dt < 30
    report("AC2 STFT/ISTFT round trip", ok,
           f"20 clips, resize-free {worst_free:.2e} (<1e-3), with 512x512 resize {worst_resized:.2e} (<5e-2); {dt:.1f}s")


# 3 -------------------------------------------------------------------------------

def test_ac3_shape_contract(report):
    model = ComplexSwinUNet(SwinConfig())
    x = ComplexTensor.zeros((1, 1, 512, 512))
    with no_grad():
        out = model(x)
    h, c = 512, 96
    down = [(h // 4, h // 4, c), (h // 8, h // 8, 2 * c), (h // 16, h // 16, 4 * c), (h // 32, h // 32, 8 * c)]
    expected = down + down[::-1]
    trace = model.stage_shapes()
    ok = trace == expected and out.shape == x.shape
    report("AC3 shape contract", ok, f"trace {trace}; output {out.shape}")


# 4 -------------------------------------------------------------------------------

def test_ac4_metric_axioms(report):
    rng = np.random.default_rng(44)
    x = Tensor(rng.normal(size=(1, 1, 32, 32)))
    y = Tensor(rng.normal(size=(1, 1, 32, 32)))
    self_ssim = float(ssim(x, x).data)
    asym = abs(float(ssim(x, y).data) - float(ssim(y, x).data))
    clean = rng.normal(size=4000)
    half = sdr(0.5 * clean, clean)
    e = rng.normal(size=4000)
    e *= np.linalg.norm(clean) / np.linalg.norm(e) / 10.0
    at20 = float(sdr_loss(Tensor(clean + e), Tensor(clean)).data)

    trainer = Trainer(TrainConfig(batch_size=2, max_steps=4), tiny_swin_config(), TOY_STFT, synthetic_pairs(4))
    reports = trainer.run()
    sums_ok = True
    for rep in reports:
        try:
            rep.check(tol=1e-6)
        except AssertionError:
            sums_ok = False
    ok = abs(self_ssim - 1) <= 1e-6 and asym <= 1e-6 and abs(half - 6.0206) <= 1e-3 and abs(at20) < 1e-9 and sums_ok
    report("AC4 metric axioms", ok,
           f"ssim(x,x)={self_ssim:.8f}, |ssim(x,y)-ssim(y,x)|={asym:.1e}, SDR(0.5y,y)={half:.4f} dB, "
           f"L_SDR(SDR=20)={at20:.1e}, LossReport sums hold on {len(reports)} steps: {sums_ok}")


# 5 -------------------------------------------------------------------------------

@pytest.mark.slow
def test_ac5_toy_overfit(report):
    t0 = time.perf_counter()
    pairs = synthetic_pairs(4)
    trainer = Trainer(TrainConfig(batch_size=4, max_steps=200), tiny_swin_config(), TOY_STFT, pairs)
    reps = trainer.run()
    rows = trainer.evaluate(pairs)
    denoised = float(np.mean([r["sdr"] for r in rows]))
    noisy = float(np.mean([r["sdr_noisy"] for r in rows]))
    ratio = reps[-1].total / reps[0].total
    im_ratio = reps[-1].l_im_total / reps[0].l_im_total
    dt = time.perf_counter() - t0
    ok = ratio < 0.1 and denoised - noisy >= 3.0 and dt < 900
    report("AC5 toy overfit", ok,
           f"total {reps[0].total:.3f} -> {reps[-1].total:.3f} (ratio {ratio:.3f} < 0.1; image-loss ratio "
           f"{im_ratio:.3f}, final L_SDR {reps[-1].l_sdr:.2f}); SDR {noisy:.2f} -> {denoised:.2f} dB "
           f"(+{denoised - noisy:.2f} >= 3); {dt:.0f}s")


# 6 -------------------------------------------------------------------------------

@pytest.mark.slow
def test_ac6_ablation_structure(report):
    t0 = time.perf_counter()
    notes = []
    result = ablate(TrainConfig(batch_size=4, max_steps=200), tiny_swin_config(), TOY_STFT,
                    synthetic_pairs(4), log=notes.append)
    dt = time.perf_counter() - t0
    layout = result.header() == r"U+I & U+A & U+I+A & C+I & C+A & C+I+A \\"
    ok = layout and result.all_above_baseline() and dt < 5400
    report("AC6 ablation structure", ok,
           f"{result.row()} vs noisy {result.noisy_sdr:.2f} dB; {'; '.join(result.notes)}; {dt:.0f}s")


# 7 -------------------------------------------------------------------------------

def test_ac7_real_subspace(report):
    rng = np.random.default_rng(77)
    r = np.random.default_rng(0)

    def real(*shape):
        return ComplexTensor(Tensor(rng.normal(size=shape)))

    attn = WindowAttention(8, 4, 2, rng=r, dtype=F64)
    cases = {
        "CLinear": lambda: CLinear(4, 6, rng=r, dtype=F64)(real(3, 4)),
        "CLayerNorm": lambda: CLayerNorm(4, dtype=F64)(real(3, 4)),
        "CGELU": lambda: CGELU()(real(3, 4)),
        "CReLU": lambda: CReLU()(real(3, 4)),
        "CMLP": lambda: CMLP(4, 8, rng=r, dtype=F64)(real(3, 4)),
        "CSoftmax": lambda: csoftmax(real(3, 4), -1),
        "CSoftmax masked": lambda: csoftmax(real(3, 4), -1, np.array([0, -1e9, 0, 0.0])),
        "CConv2d": lambda: CConv2d(2, 3, 3, padding=1, rng=r, dtype=F64)(real(1, 2, 4, 4)),
        "CMaxPool2d": lambda: CMaxPool2d(2)(real(1, 2, 4, 4)),
        "CUpsample": lambda: CUpsample(2)(real(1, 2, 4, 4)),
        "cmatmul": lambda: cmatmul(real(2, 3), real(3, 2)),
        "W-MSA": lambda: cwindow_attention(real(1, 64, 8), attn, (8, 8), False),
        "SW-MSA": lambda: cwindow_attention(real(1, 64, 8), attn, (8, 8), True),
        "Swin pair": lambda: SwinStage(8, (8, 8), 2, 2, 4, rng=r, dtype=F64)(real(1, 64, 8)),
        "PatchMerge": lambda: PatchMerge((4, 4), 3, rng=r, dtype=F64, centered=True)(real(1, 16, 3)),
        "PatchExpand": lambda: PatchExpand((2, 2), 4, rng=r, dtype=F64, centered=True)(real(1, 4, 4)),
        "Swin model": lambda: ComplexSwinUNet(tiny_swin_config(dtype="float64"))(real(1, 1, 64, 64)),
        "U-Net model": lambda: ComplexUNet(tiny_swin_config(dtype="float64"))(real(1, 1, 64, 64)),
    }
    bad = [name for name, fn in cases.items() if np.any(fn().imag.data != 0)]
    report("AC7 real-subspace consistency", not bad,
           f"{len(cases) - len(bad)}/{len(cases)} lifted ops give exactly zero imag" + (f"; failing {bad}" if bad else ""))


# 8 -------------------------------------------------------------------------------

def test_ac8_determinism_and_checkpointing(report, tmp_path):
    def trainer():
        return Trainer(TrainConfig(batch_size=2, max_steps=6), tiny_swin_config(drop_rate=0.1, attn_drop_rate=0.1),
                       TOY_STFT, synthetic_pairs(4))

    a, b = trainer(), trainer()
    curve_a = [r.total for r in a.run()]
    curve_b = [r.total for r in b.run()]
    same_run = curve_a == curve_b and all(np.array_equal(p.data, q.data) for (_, p), (_, q) in zip(a.named, b.named))

    c = trainer()
    c.run(3)
    save_checkpoint(c, tmp_path / "mid.ckpt")
    d = trainer()
    load_checkpoint(d, tmp_path / "mid.ckpt")
    curve_d = curve_a[:3] + [r.total for r in d.run()]
    resumed = curve_d == curve_a and all(np.array_equal(p.data, q.data) for (_, p), (_, q) in zip(a.named, d.named))
    report("AC8 determinism & checkpointing", same_run and resumed,
           f"two seeded runs bit-identical: {same_run}; save@3 -> load -> continue to 6 bit-identical: {resumed}")
