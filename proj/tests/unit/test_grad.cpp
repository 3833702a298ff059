#include "fixtures.hpp"

#include "geostyle/error.hpp"
#include "geostyle/grad.hpp"

#include <doctest.h>

#include <cmath>

using namespace geostyle;
using fixtures::error_kind;

namespace {

double dot(const Tensor& a, const Tensor& b)
{
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(const Tensor& a)
{
    return std::sqrt(dot(a, a));
}

} // namespace

TEST_CASE("loss id names")
{
    CHECK(all_loss_ids().size() == 9);
    for (LossId id : all_loss_ids()) CHECK(parse_loss_id(to_string(id)) == id);
    CHECK(parse_loss_id("vgg") == LossId::feature_mse);
    CHECK(parse_loss_id("zecon") == LossId::patch_contrastive);
    CHECK(error_kind([] { (void)parse_loss_id("bogus"); }) == ErrorKind::config);
}

TEST_CASE("input names and lookup")
{
    const LossInputs in = make_random_inputs(1);
    const auto pc = input_names(LossId::pc, in);
    CHECK(pc.size() == 5);
    CHECK(pc.front() == "target_patches[0]");
    CHECK(pc.back() == "target_text");
    CHECK(input_names(LossId::total, in).size() == 4 + 4 + 2 + 4 + 8 + 4 + 2);
    CHECK(bit_equal(input_tensor(in, "source_layers[1]"), in.content.source_layers[1]));
    CHECK(bit_equal(input_tensor(in, "target_image"), in.content.target_image));
    CHECK(error_kind([&] { (void)input_tensor(in, "target_patches[9]"); }) == ErrorKind::index);
    CHECK(error_kind([&] { (void)input_tensor(in, "nothing"); }) == ErrorKind::config);
}

TEST_CASE("gradient values bit-match the plain loss and shapes match the inputs")
{
    const LossWeights w;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const LossInputs in = make_random_inputs(seed);
        for (LossId id : all_loss_ids()) {
            const auto r = grad_eval(id, in, w);
            CHECK(r.value == loss_value(id, in, w));
            const auto names = input_names(id, in);
            CHECK(r.grads.size() == names.size());
            for (const auto& name : names) {
                REQUIRE(r.grads.count(name) == 1);
                CHECK(r.grads.at(name).shape() == input_tensor(in, name).shape());
                CHECK(r.grads.at(name).all_finite());
            }
        }
    }
}

TEST_CASE("gradient vanishes at the pc minimum")
{
    LossInputs in = make_random_inputs(2);
    for (auto& p : in.style.target_patches) p = in.style.target_text;
    const auto r = grad_eval(LossId::pc, in, LossWeights{});
    CHECK(r.value == 0.0);
    double sq = 0;
    for (const auto& [name, g] : r.grads) sq += dot(g, g);
    CHECK(std::sqrt(sq) <= 1e-8);
    CHECK(r.clamp_boundary);
}

TEST_CASE("mse gradient closed form")
{
    Rng rng(3);
    const Tensor a = fixtures::normal_tensor(rng, {2, 3, 5});
    const Tensor b = fixtures::normal_tensor(rng, {2, 3, 5});
    const auto g = mse_gradient(a, b);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(g.a[i] == doctest::Approx(2 * (a[i] - b[i]) / 30.0).epsilon(1e-15));
        CHECK(g.b[i] == -g.a[i]);
    }
    LossInputs in = make_random_inputs(4);
    CHECK(fd_check(LossId::mse, in, LossWeights{}).max_rel < 1e-8);
}

TEST_CASE("finite differences agree for every loss")
{
    const LossWeights w;
    for (std::uint64_t seed = 10; seed < 13; ++seed) {
        const LossInputs in = make_random_inputs(seed);
        for (LossId id : all_loss_ids()) {
            FdOptions opts;
            opts.seed = seed;
            const auto rep = fd_check(id, in, w, opts);
            INFO(to_string(id), " seed ", seed);
            CHECK(!rep.clamp_boundary);
            CHECK(rep.max_rel < 1e-5);
            CHECK(rep.inputs.size() == input_names(id, in).size());
        }
    }
}

TEST_CASE("finite differences on larger features with subsampling")
{
    RandomInputShape shape;
    shape.feature_size = 300;
    shape.patches = 3;
    const LossInputs in = make_random_inputs(21, shape);
    FdOptions opts;
    opts.coords_per_input = 200;
    const auto rep = fd_check(LossId::pd, in, LossWeights{}, opts);
    CHECK(rep.inputs.front().checked == 200);
    CHECK(rep.max_rel < 1e-5);
}

TEST_CASE("fd option validation")
{
    const LossInputs in = make_random_inputs(5);
    FdOptions opts;
    opts.h = 0;
    CHECK(error_kind([&] { (void)fd_check(LossId::mse, in, LossWeights{}, opts); }) == ErrorKind::config);
    opts.h = 1e-6;
    opts.coords_per_input = 0;
    CHECK(error_kind([&] { (void)fd_check(LossId::mse, in, LossWeights{}, opts); }) == ErrorKind::config);
}

TEST_CASE("scale-invariant losses have gradients orthogonal to their inputs")
{
    for (std::uint64_t seed = 30; seed < 35; ++seed) {
        const LossInputs in = make_random_inputs(seed);
        for (LossId id : {LossId::pc, LossId::pd, LossId::psc}) {
            const auto r = grad_eval(id, in, LossWeights{});
            for (const auto& [name, g] : r.grads) {
                const Tensor& x = input_tensor(in, name);
                const double n = norm(g) * norm(x);
                if (n == 0.0) continue;
                INFO(to_string(id), " ", name);
                CHECK(std::fabs(dot(g, x)) / n <= 1e-6);
            }
        }
    }
}

TEST_CASE("weighted gradients scale linearly")
{
    const LossInputs in = make_random_inputs(40);
    const auto pc = grad_eval(LossId::pc, in, LossWeights{});
    const auto pd = grad_eval(LossId::pd, in, LossWeights{});
    LossWeights w;
    w.pc = 3;
    w.pd = 5;
    const auto style = grad_eval(LossId::style, in, w);
    const Tensor& g = style.grads.at("target_patches[1]");
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double expect = 3 * pc.grads.at("target_patches[1]")[i] + 5 * pd.grads.at("target_patches[1]")[i];
        CHECK(g[i] == doctest::Approx(expect).epsilon(1e-12));
    }

    const auto zero = grad_eval(LossId::total, in, LossWeights::zero());
    CHECK(zero.value == 0.0);
    for (const auto& [name, t] : zero.grads) {
        for (double v : t.values()) CHECK(v == 0.0);
    }
}

TEST_CASE("fd report JSON")
{
    const LossInputs in = make_random_inputs(6);
    const auto j = to_json(fd_check(LossId::psc, in, LossWeights{}));
    CHECK(j.at("loss") == "psc");
    CHECK(j.at("inputs").size() == 4);
    CHECK(j.at("inputs")[0].at("name") == "source_layers[0]");
}
