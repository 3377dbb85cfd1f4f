import numpy as np
import pytest

from dreamblend.errors import OptimizerError
from dreamblend.objectives import (
    GuidedRequest,
    L2Request,
    StyleContentRequest,
    build_objective,
    evaluate,
)
from dreamblend.optimizer import (
    RunConfig,
    default_clip,
    dream,
    octave_pyramid,
    style_transfer,
)

from nethelpers import NetBuilder, small_dream_net


def l2_objective(net, layer="relu2"):
    return build_objective(net, L2Request(layer=layer))


def style_objective(net, style, content, **kw):
    req = StyleContentRequest(
        style_layers=kw.pop("style_layers", ("conv1", "relu2")),
        content_layer=kw.pop("content_layer", "relu1"),
        **kw,
    )
    return build_objective(net, req, style_image=style, content_image=content)


# ---------------------------------------------------------------------------
# RunConfig

@pytest.mark.parametrize(
    "field, value, match",
    [
        ("iterations", -1, "iterations"),
        ("step_size", 0.0, "step_size"),
        ("step_size", -1.0, "step_size"),
        ("octaves", 0, "octaves"),
        ("octave_scale", 1.0, "octave_scale"),
        ("jitter", -3, "jitter"),
        ("seed", -1, "seed"),
        ("seed", 1 << 64, "seed"),
        ("decay1", 1.0, "decay1"),
        ("decay2", -0.1, "decay2"),
        ("epsilon", 0.0, "epsilon"),
    ],
)
def test_run_config_rejects_bad_values(field, value, match):
    with pytest.raises(OptimizerError, match=match):
        RunConfig(**{field: value})


def test_run_config_accepts_zero_iterations():
    assert RunConfig(iterations=0).iterations == 0


# ---------------------------------------------------------------------------
# Octave pyramid

def test_pyramid_single_octave_is_the_image(rng):
    img = rng.standard_normal((3, 10, 10))
    levels = octave_pyramid(img, 1, 1.4)
    assert len(levels) == 1
    np.testing.assert_array_equal(levels[0], img)


def test_pyramid_64px_three_octaves_scale_1_4():
    img = np.zeros((3, 64, 64))
    sizes = [lvl.shape[1:] for lvl in octave_pyramid(img, 3, 1.4)]
    assert sizes == [(33, 33), (46, 46), (64, 64)]


def test_pyramid_rectangular_sizes():
    img = np.zeros((1, 40, 64))
    sizes = [lvl.shape[1:] for lvl in octave_pyramid(img, 2, 2.0)]
    assert sizes == [(20, 32), (40, 64)]


def test_pyramid_largest_level_is_bit_exact():
    img = np.linspace(0, 1, 3 * 32 * 32).reshape(3, 32, 32)
    levels = octave_pyramid(img, 4, 1.4)
    np.testing.assert_array_equal(levels[-1], img)


def test_pyramid_preserves_constant_images():
    img = np.full((3, 37, 23), 0.625)
    for lvl in octave_pyramid(img, 5, 1.3):
        np.testing.assert_array_equal(lvl, np.full(lvl.shape, 0.625))


def test_pyramid_never_collapses_below_one_pixel():
    img = np.zeros((1, 3, 3))
    sizes = [lvl.shape[1:] for lvl in octave_pyramid(img, 6, 2.0)]
    assert sizes[0] == (1, 1)
    assert all(h >= 1 and w >= 1 for h, w in sizes)


def test_pyramid_input_validation():
    with pytest.raises(OptimizerError, match="rank-3"):
        octave_pyramid(np.zeros((4, 4)), 2, 1.4)
    with pytest.raises(OptimizerError, match="octaves"):
        octave_pyramid(np.zeros((1, 4, 4)), 0, 1.4)
    with pytest.raises(OptimizerError, match="octave_scale"):
        octave_pyramid(np.zeros((1, 4, 4)), 2, 1.0)


# ---------------------------------------------------------------------------
# Clip bounds

def test_default_clip_three_channels():
    b = NetBuilder(in_channels=3, mean=(10.0, 20.0, 30.0), scale=0.5)
    b.conv("c", 1, k=1, pad=0, kernel=np.ones((1, 3, 1, 1)), bias=np.zeros(1))
    net = b.build("clipnet")
    lo, hi = default_clip(net, 3)
    np.testing.assert_array_equal(lo, [-10.0, -20.0, -30.0])
    np.testing.assert_array_equal(hi, [127.5 - 10.0, 127.5 - 20.0, 127.5 - 30.0])


def test_default_clip_other_channel_counts_use_widest_range(rng):
    b = NetBuilder(in_channels=2, mean=(10.0, 20.0, 30.0), scale=1.0)
    b.relu("r")
    net = b.build("clipnet2")
    lo, hi = default_clip(net, 2)
    np.testing.assert_array_equal(lo, [-30.0, -30.0])
    np.testing.assert_array_equal(hi, [245.0, 245.0])


def test_clip_bounds_must_be_ordered(rng):
    net = small_dream_net(rng)
    cfg = RunConfig(iterations=1, octaves=1, jitter=0, clip_lo=0.6, clip_hi=0.5)
    with pytest.raises(OptimizerError, match="strictly below"):
        dream(net, l2_objective(net), np.zeros((3, 8, 8)), cfg)


# ---------------------------------------------------------------------------
# Dream

def test_dream_zero_iterations_returns_source_bit_exact(rng):
    # Octave transitions re-add exactly the detail the downscale lost, so a
    # run with no update steps must reproduce an in-range source verbatim.
    net = small_dream_net(rng)
    src = rng.uniform(0.0, 255.0, size=(3, 21, 17))
    cfg = RunConfig(iterations=0, octaves=4, octave_scale=1.4, jitter=8)
    out = dream(net, l2_objective(net), src, cfg)
    np.testing.assert_array_equal(out, src)


def test_dream_zero_iterations_still_clips_out_of_range_sources(rng):
    # Boundedness outranks reproduction: a source outside the clip window
    # comes back clamped into it even when no ascent steps run.
    net = small_dream_net(rng)
    src = rng.uniform(-100.0, 150.0, size=(3, 16, 16))
    cfg = RunConfig(iterations=0, octaves=3, octave_scale=1.4)
    out = dream(net, l2_objective(net), src, cfg)
    assert out.min() >= 0.0 and out.max() <= 255.0


def test_dream_same_seed_is_byte_identical(rng):
    net = small_dream_net(rng)
    src = rng.uniform(0.0, 255.0, size=(3, 16, 16))
    cfg = RunConfig(iterations=5, octaves=2, jitter=4, seed=123, step_size=1.0)
    a = dream(net, l2_objective(net), src, cfg)
    b = dream(net, l2_objective(net), src, cfg)
    assert a.tobytes() == b.tobytes()


def test_dream_different_seed_changes_jitter_path(rng):
    net = small_dream_net(rng)
    src = rng.uniform(0.0, 255.0, size=(3, 16, 16))
    a = dream(net, l2_objective(net), src, RunConfig(iterations=5, octaves=1, jitter=4, seed=1))
    b = dream(net, l2_objective(net), src, RunConfig(iterations=5, octaves=1, jitter=4, seed=2))
    assert not np.array_equal(a, b)


def test_dream_loss_mostly_non_decreasing_without_jitter(rng):
    net = small_dream_net(rng)
    src = rng.uniform(0.0, 255.0, size=(3, 16, 16))
    cfg = RunConfig(iterations=50, octaves=1, jitter=0, step_size=1e-3)
    losses = []
    dream(net, l2_objective(net), src, cfg, progress=lambda k, it, loss, c: losses.append(loss))
    assert len(losses) == 50
    diffs = np.diff(losses)
    assert (diffs >= 0).mean() >= 0.95
    assert losses[-1] > losses[0]


def test_dream_jitter_is_neutral_for_pointwise_nets(rng):
    # A net of 1x1 convs and relus commutes with circular shifts, so the
    # translation-invariant loss must not care about the jitter offsets.
    b = NetBuilder(in_channels=2)
    b.conv("c1", 3, k=1, pad=0, rng=rng)
    b.relu("r1")
    b.conv("c2", 2, k=1, pad=0, rng=rng)
    net = b.build("pointwise")
    src = rng.uniform(-1.0, 1.0, size=(2, 12, 12))
    obj = l2_objective(net, layer="c2")

    def run(jitter, seed):
        losses = []
        cfg = RunConfig(
            iterations=12, octaves=1, jitter=jitter, seed=seed, step_size=0.05,
            clip_lo=-3.0, clip_hi=3.0,
        )
        dream(net, obj, src, cfg, progress=lambda k, it, loss, c: losses.append(loss))
        return np.asarray(losses)

    np.testing.assert_allclose(run(6, seed=11), run(0, seed=99), rtol=1e-10)


def test_dream_respects_clip_bounds(rng):
    net = small_dream_net(rng)
    src = rng.uniform(-0.4, 0.4, size=(3, 12, 12))
    cfg = RunConfig(iterations=20, octaves=2, jitter=2, step_size=5.0, clip_lo=-0.5, clip_hi=0.5)
    out = dream(net, l2_objective(net), src, cfg)
    assert out.min() >= -0.5 and out.max() <= 0.5


def test_dream_guided_objective_runs(rng):
    net = small_dream_net(rng)
    src = rng.uniform(0.0, 255.0, size=(3, 12, 12))
    guide = rng.uniform(0.0, 255.0, size=(3, 10, 10))
    obj = build_objective(net, GuidedRequest(layer="relu1"), style_image=guide)
    cfg = RunConfig(iterations=8, octaves=2, jitter=2, step_size=1.0)
    before, _ = evaluate(obj, net, src)
    out = dream(net, obj, src, cfg)
    after, _ = evaluate(obj, net, out)
    assert out.shape == src.shape
    assert after > before


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_dream_aborts_on_non_finite_loss(rng):
    net = small_dream_net(rng)
    src = np.full((3, 8, 8), 1e200)
    cfg = RunConfig(iterations=1, octaves=1, jitter=0, clip_lo=-1e210, clip_hi=1e210)
    with pytest.raises(OptimizerError, match="octave 0 iteration 0"):
        dream(net, l2_objective(net), src, cfg)


def test_dream_rejects_style_objective(rng):
    net = small_dream_net(rng)
    img = rng.uniform(0.0, 1.0, size=(3, 8, 8))
    obj = style_objective(net, img, img)
    with pytest.raises(OptimizerError, match="activation or guided"):
        dream(net, obj, img, RunConfig(iterations=1, octaves=1))


def test_dream_progress_sees_every_octave_and_iteration(rng):
    net = small_dream_net(rng)
    src = rng.uniform(0.0, 255.0, size=(3, 12, 12))
    cfg = RunConfig(iterations=3, octaves=2, jitter=1)
    seen = []
    dream(net, l2_objective(net), src, cfg, progress=lambda k, it, loss, c: seen.append((k, it)))
    assert seen == [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]


# ---------------------------------------------------------------------------
# Style transfer

def test_style_transfer_fixed_point_stays_put(rng):
    net = small_dream_net(rng)
    image = rng.uniform(10.0, 240.0, size=(3, 10, 10))
    obj = style_objective(net, image, image)
    losses = []
    cfg = RunConfig(iterations=10, step_size=1.0)
    out = style_transfer(
        net, obj, image, cfg, initial_canvas=image,
        progress=lambda k, it, loss, c: losses.append(loss),
    )
    assert all(loss < 1e-8 for loss in losses)
    assert float(np.abs(out - image).max()) < 1e-6


def test_style_transfer_same_seed_is_byte_identical(rng):
    net = small_dream_net(rng)
    style = rng.uniform(0.0, 255.0, size=(3, 10, 10))
    content = rng.uniform(0.0, 255.0, size=(3, 10, 10))
    obj = style_objective(net, style, content, beta=10.0)
    cfg = RunConfig(iterations=8, step_size=1.0, seed=42)
    a = style_transfer(net, obj, content, cfg)
    b = style_transfer(net, obj, content, cfg)
    assert a.tobytes() == b.tobytes()


def test_style_transfer_seed_selects_the_noise_start(rng):
    net = small_dream_net(rng)
    style = rng.uniform(0.0, 255.0, size=(3, 10, 10))
    content = rng.uniform(0.0, 255.0, size=(3, 10, 10))
    obj = style_objective(net, style, content, beta=10.0)
    a = style_transfer(net, obj, content, RunConfig(iterations=2, step_size=1.0, seed=1))
    b = style_transfer(net, obj, content, RunConfig(iterations=2, step_size=1.0, seed=2))
    assert not np.array_equal(a, b)


def test_style_transfer_noise_start_respects_clip_bounds(rng):
    net = small_dream_net(rng)
    content = np.zeros((3, 9, 9))
    obj = style_objective(net, content, content)
    cfg = RunConfig(iterations=1, step_size=1e-6, clip_lo=-0.25, clip_hi=0.75, seed=5)
    out = style_transfer(net, obj, content, cfg)
    assert out.min() >= -0.25 and out.max() <= 0.75


def test_style_transfer_loss_decreases(rng):
    net = small_dream_net(rng)
    style = rng.uniform(0.0, 255.0, size=(3, 12, 12))
    content = rng.uniform(0.0, 255.0, size=(3, 12, 12))
    obj = style_objective(net, style, content, alpha=1.0, beta=100.0)
    losses = []
    cfg = RunConfig(iterations=60, step_size=2.0, seed=0)
    style_transfer(net, obj, content, cfg, progress=lambda k, it, loss, c: losses.append(loss))
    assert len(losses) == 60
    assert losses[-1] < losses[0]


def test_style_transfer_rejects_dream_objective(rng):
    net = small_dream_net(rng)
    with pytest.raises(OptimizerError, match="style-content"):
        style_transfer(net, l2_objective(net), np.zeros((3, 8, 8)), RunConfig(iterations=1))


def test_style_transfer_rejects_mismatched_initial_canvas(rng):
    net = small_dream_net(rng)
    img = rng.uniform(0.0, 1.0, size=(3, 8, 8))
    obj = style_objective(net, img, img)
    with pytest.raises(OptimizerError, match="initial canvas shape"):
        style_transfer(net, obj, img, RunConfig(iterations=1), initial_canvas=np.zeros((3, 9, 9)))
