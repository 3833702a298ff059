#include "fixtures.hpp"

#include "geostyle/error.hpp"
#include "geostyle/guidance.hpp"

#include <doctest.h>

#include <cmath>

using namespace geostyle;
using fixtures::error_kind;

namespace {

Tensor uniform_image(Rng& rng, Shape shape)
{
    Tensor t(shape, 0.0);
    for (double& v : t.values()) v = rng.uniform(-1.0, 1.0);
    return t;
}

ObjectiveSetup small_setup(std::uint64_t seed, const LossWeights& w)
{
    Rng rng(seed);
    ObjectiveSetup setup;
    setup.source_image = uniform_image(rng, {3, 16, 16});
    setup.weights = w;
    const auto p = plan(16, 16, w.n);
    setup.extractors = make_toy_extractors(3, p.side, seed, 16);
    setup.target_text = fixtures::normal_tensor(rng, {16});
    setup.source_text = fixtures::normal_tensor(rng, {16});
    return setup;
}

LossWeights small_weights()
{
    LossWeights w;
    w.n = 9;
    return w;
}

} // namespace

TEST_CASE("linear encoder backward is the transpose")
{
    Rng rng(1);
    const LinearPatchEncoder enc(12, 5, 3);
    const Tensor x = fixtures::normal_tensor(rng, {3, 2, 2});
    const Tensor g = fixtures::normal_tensor(rng, {5});
    const Tensor y = enc.encode(x);
    const Tensor back = enc.backward(x, g);
    double lhs = 0, rhs = 0;
    for (std::size_t i = 0; i < 5; ++i) lhs += y[i] * g[i];
    for (std::size_t i = 0; i < 12; ++i) rhs += x[i] * back[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));
    CHECK(back.shape() == x.shape());
    CHECK(error_kind([&] { (void)enc.encode(Tensor({5})); }) == ErrorKind::shape);
}

TEST_CASE("pooling encoder backward matches finite differences")
{
    Rng rng(2);
    const PoolingLayerEncoder enc(2, {{1, 3}, {2, 4}, {4, 2}}, {1, 2}, 5);
    const Tensor x = uniform_image(rng, {2, 9, 9});
    const auto feats = enc.encode(x);
    REQUIRE(feats.size() == 2);
    CHECK(feats[0].shape() == Shape{4, 4, 4});
    CHECK(feats[1].shape() == Shape{2, 2, 2});
    LayerFeatures cot;
    for (const auto& f : feats) cot.push_back(fixtures::normal_tensor(rng, f.shape()));
    const auto pairing = [&](const Tensor& img) {
        const auto fs = enc.encode(img);
        double s = 0;
        for (std::size_t l = 0; l < fs.size(); ++l) {
            for (std::size_t i = 0; i < fs[l].size(); ++i) s += fs[l][i] * cot[l][i];
        }
        return s;
    };
    const Tensor g = enc.backward(x, cot);
    for (std::size_t i = 0; i < x.size(); i += 7) {
        Tensor p = x, m = x;
        p[i] += 1e-6;
        m[i] -= 1e-6;
        const double fd = (pairing(p) - pairing(m)) / 2e-6;
        CHECK(fd == doctest::Approx(g[i]).epsilon(1e-6).scale(1.0));
    }
    CHECK(error_kind([] { PoolingLayerEncoder(2, {{1, 3}}, {1}, 0); }) == ErrorKind::index);
    CHECK(error_kind([&] { (void)enc.encode(Tensor({3, 9, 9})); }) == ErrorKind::shape);
}

TEST_CASE("toy extractors are seeded")
{
    const auto a = make_toy_extractors(3, 8, 4);
    const auto b = make_toy_extractors(3, 8, 4);
    Rng rng(3);
    const Tensor patch = fixtures::normal_tensor(rng, {3, 8, 8});
    CHECK(bit_equal(a.patch->encode(patch), b.patch->encode(patch)));
    CHECK(a.patch->encode(patch).size() == 64);
    CHECK(a.zecon->encode(patch).size() == 32);
    CHECK(!bit_equal(make_toy_extractors(3, 8, 5).patch->encode(patch), a.patch->encode(patch)));
    CHECK(error_kind([] { (void)make_toy_extractors(3, 8, 1, 5); }) == ErrorKind::config);
}

TEST_CASE("objective value is the total loss of its inputs")
{
    const auto setup = small_setup(5, small_weights());
    const StyleTransferObjective obj(setup);
    CHECK(obj.patch_plan().n == 9);
    Rng rng(6);
    const Tensor x = uniform_image(rng, {3, 16, 16});
    const auto in = obj.inputs_at(x);
    CHECK(in.style.target_patches.size() == 9);
    CHECK(obj.value(x) == loss_value(LossId::total, in, setup.weights));
    CHECK(obj.evaluate(x).value == obj.value(x));
    CHECK(error_kind([&] { (void)obj.value(Tensor({3, 8, 8})); }) == ErrorKind::shape);
}

TEST_CASE("objective gradient matches finite differences on the image")
{
    LossWeights w = small_weights();
    const auto setup = small_setup(7, w);
    const StyleTransferObjective obj(setup);
    Rng rng(8);
    Tensor x = setup.source_image;
    for (double& v : x.values()) v += 0.3 * rng.normal();
    const auto ev = obj.evaluate(x);
    double scale = 0;
    for (double v : ev.grad.values()) scale = std::max(scale, std::fabs(v));
    double worst = 0;
    for (int probe = 0; probe < 40; ++probe) {
        const std::size_t i = rng.next() % x.size();
        Tensor p = x, m = x;
        p[i] += 1e-6;
        m[i] -= 1e-6;
        const double fd = (obj.value(p) - obj.value(m)) / 2e-6;
        worst = std::max(worst, std::fabs(fd - ev.grad[i]) / std::max({std::fabs(fd), std::fabs(ev.grad[i]), scale}));
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("descent with a small step lowers the total loss")
{
    const auto setup = small_setup(9, small_weights());
    const StyleTransferObjective obj(setup);
    Rng rng(10);
    Tensor x = setup.source_image;
    for (double& v : x.values()) v += 0.2 * rng.normal();
    const auto ev = obj.evaluate(x);
    double sq = 0;
    for (double v : ev.grad.values()) sq += v * v;
    REQUIRE(sq > 0.0);
    Tensor moved = x;
    const double eta = 1e-3 / std::sqrt(sq);
    for (std::size_t i = 0; i < x.size(); ++i) moved[i] -= eta * ev.grad[i];
    CHECK(obj.value(moved) < ev.value);
}

TEST_CASE("zero weights reduce a guided step to the plain step")
{
    const auto setup = small_setup(11, [] {
        LossWeights w = LossWeights::zero();
        w.n = 9;
        return w;
    }());
    const StyleTransferObjective obj(setup);
    const Schedule s = build_schedule();
    const auto pred = toy_predictor(Tensor({3, 16, 16}, 0.5), 0.6, s);
    Rng rng(12);
    const Tensor xt = fixtures::normal_tensor(rng, {3, 16, 16});
    GuidanceConfig cfg;
    cfg.weights = setup.weights;
    Rng a(3), b(3);
    const auto plain = guided_step(xt, 20, pred, s, cfg, nullptr, a);
    const auto guided = guided_step(xt, 20, pred, s, cfg, &obj, b);
    CHECK(bit_equal(plain.x_prev, guided.x_prev));
    CHECK(guided.loss == 0.0);
}
