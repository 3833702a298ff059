#include "fixtures.hpp"
#include "oracles.hpp"

#include "geostyle/error.hpp"
#include "geostyle/swc.hpp"

#include <doctest.h>

#include <cmath>

#include <algorithm>

using namespace geostyle;
using fixtures::error_kind;

TEST_CASE("paper-literal 256 / 49")
{
    const auto p = plan(256, 256, 49, CoverageMode::paper_literal);
    CHECK(p.n_w == 7);
    CHECK(p.side == 32);
    CHECK(p.stride == 16);
    CHECK(p.patches[8] == Patch{8, 16, 16, 32});
}

TEST_CASE("paper-literal matches the direct formula")
{
    for (std::size_t n : {4u, 9u, 25u, 49u, 64u}) {
        const auto p = plan(256, 256, n, CoverageMode::paper_literal);
        const auto ref = oracle::swc_literal(256, n);
        REQUIRE(p.patches.size() == ref.size());
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(p.patches[i].index == i);
            CHECK(p.patches[i].e == ref[i].e);
            CHECK(p.patches[i].f == ref[i].f);
        }
    }
}

TEST_CASE("full-coverage 256 / 49")
{
    const auto p = plan(256, 256, 49);
    CHECK(p.mode == CoverageMode::full_coverage);
    CHECK(p.side == 64);
    CHECK(p.stride == 32);
    CHECK(p.patches[48] == Patch{48, 192, 192, 64});
    CHECK(p.patches[48].e + p.side == 256);
}

TEST_CASE("full coverage covers every pixel with half-side overlap")
{
    for (std::size_t H : {64u, 96u, 128u, 256u, 100u, 77u}) {
        for (std::size_t n : {4u, 9u, 25u, 49u}) {
            const PatchPlan p = plan(H, H, n);
            const Tensor counts = coverage_counts(p);
            const double lo = *std::min_element(counts.values().begin(), counts.values().end());
            CHECK(lo >= 1.0);
            for (const auto& patch : p.patches) {
                CHECK(patch.e + patch.side <= H);
                CHECK(patch.f + patch.side <= H);
                CHECK(patch.index == &patch - p.patches.data());
            }
            // Neighbours overlap by side / 2; the pair at the snapped border by at least that.
            CHECK(p.side == 2 * p.stride);
            for (std::size_t i = 0; i + 1 < p.n_w; ++i) {
                const std::size_t overlap = p.patches[i].f + p.side - p.patches[i + 1].f;
                if (i + 2 < p.n_w) {
                    CHECK(overlap == p.side / 2);
                } else {
                    CHECK(overlap >= p.side / 2);
                }
            }
            const std::size_t mid = p.stride + p.stride / 2;
            CHECK(counts[mid * H + mid] >= 2.0);
        }
    }
}

TEST_CASE("plan preconditions")
{
    CHECK(error_kind([] { (void)plan(256, 256, 5); }) == ErrorKind::config);
    CHECK(error_kind([] { (void)plan(256, 128, 49); }) == ErrorKind::config);
    CHECK(error_kind([] { (void)plan(256, 256, 1); }) == ErrorKind::config);
    CHECK(error_kind([] { (void)plan(8, 8, 49, CoverageMode::paper_literal); }) == ErrorKind::config);
    CHECK(parse_coverage_mode("paper-literal") == CoverageMode::paper_literal);
    CHECK(to_string(CoverageMode::full_coverage) == "full-coverage");
    CHECK(error_kind([] { (void)parse_coverage_mode("half"); }) == ErrorKind::config);
}

TEST_CASE("extract on a 6x6 ramp")
{
    std::vector<double> v(36);
    for (int i = 0; i < 36; ++i) v[static_cast<std::size_t>(i)] = i;
    const Tensor img({1, 6, 6}, v);
    const auto p = plan(6, 6, 4);
    CHECK(p.side == 4);
    CHECK(p.stride == 2);
    const auto patches = extract(img, p);
    REQUIRE(patches.size() == 4);
    CHECK(patches[0].shape() == Shape{1, 4, 4});
    CHECK(patches[0].storage() == std::vector<double>{0, 1, 2, 3, 6, 7, 8, 9, 12, 13, 14, 15, 18, 19, 20, 21});
    CHECK(p.patches[3] == Patch{3, 2, 2, 4});
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& q = p.patches[i];
        for (std::size_t r = 0; r < 4; ++r) {
            for (std::size_t c = 0; c < 4; ++c) CHECK(patches[i][r * 4 + c] == v[(q.e + r) * 6 + q.f + c]);
        }
    }
}

TEST_CASE("full coverage on a size the grid does not divide")
{
    // 256 / 6 is fractional: the stride rounds up and the last column snaps back.
    const auto p = plan(256, 256, 25);
    CHECK(p.stride == 43);
    CHECK(p.side == 86);
    CHECK(p.patches[3].f == 129);
    CHECK(p.patches[4].f == 170);
    const Tensor counts = coverage_counts(p);
    for (std::size_t y = p.stride; y < 256 - p.stride; ++y) {
        for (std::size_t x = p.stride; x < 256 - p.stride; ++x) CHECK(counts[y * 256 + x] >= 2.0);
    }
}

TEST_CASE("extract rejects mismatched images")
{
    const auto p = plan(256, 256, 49);
    CHECK(error_kind([&] { (void)extract(Tensor({3, 128, 128}), p); }) == ErrorKind::shape);
    CHECK(error_kind([&] { (void)extract(Tensor({256, 256}), p); }) == ErrorKind::shape);
}

TEST_CASE("average re-assembly of a constant image is exact")
{
    const Tensor img({3, 64, 64}, 0.375);
    const auto p = plan(64, 64, 9);
    const Tensor back = assemble_average(extract(img, p), p, 3);
    CHECK(bit_equal(back, img));

    Rng rng(2);
    const Tensor noise = fixtures::normal_tensor(rng, {2, 30, 30});
    const auto q = plan(30, 30, 16);
    CHECK(assemble_average(extract(noise, q), q, 2) == noise);

    // Three-way overlaps at a snapped border average with one rounding.
    const Tensor odd = fixtures::normal_tensor(rng, {2, 32, 32});
    const auto r = plan(32, 32, 16);
    const Tensor back_odd = assemble_average(extract(odd, r), r, 2);
    for (std::size_t i = 0; i < odd.size(); ++i) CHECK(std::fabs(back_odd[i] - odd[i]) <= 1e-15 * std::fabs(odd[i]));
}

TEST_CASE("scatter_add is the adjoint of extract")
{
    Rng rng(4);
    const auto p = plan(48, 48, 9);
    const Tensor x = fixtures::normal_tensor(rng, {2, 48, 48});
    std::vector<Tensor> ys;
    for (std::size_t i = 0; i < p.n; ++i) ys.push_back(fixtures::normal_tensor(rng, {2, p.side, p.side}));
    const auto ex = extract(x, p);
    double lhs = 0;
    for (std::size_t i = 0; i < p.n; ++i) {
        for (std::size_t k = 0; k < ex[i].size(); ++k) lhs += ex[i][k] * ys[i][k];
    }
    const Tensor back = scatter_add(ys, p, 2);
    double rhs = 0;
    for (std::size_t k = 0; k < x.size(); ++k) rhs += x[k] * back[k];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("plan JSON round trip")
{
    const auto p = plan(256, 256, 49);
    const auto j = to_json(p);
    CHECK(j.at("H") == 256);
    CHECK(j.at("n") == 49);
    CHECK(j.at("mode") == "full-coverage");
    CHECK(j.at("patches").size() == 49);
    CHECK(j.at("patches")[8].at("i") == 8);
    const auto back = plan_from_json(j);
    CHECK(back.patches == p.patches);
    CHECK(back.stride == p.stride);

    auto bad = j;
    bad["patches"][3]["e"] = 1;
    CHECK(error_kind([&] { (void)plan_from_json(bad); }) == ErrorKind::format);
    CHECK(error_kind([] { (void)plan_from_json(nlohmann::json::object()); }) == ErrorKind::format);
}
