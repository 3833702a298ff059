#include "fixtures.hpp"

#include "cli.hpp"

#include "geostyle/grad.hpp"
#include "geostyle/styleloss.hpp"
#include "geostyle/tensor.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace geostyle;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;

    [[nodiscard]] json out_json() const { return json::parse(out); }
    [[nodiscard]] json err_json() const { return json::parse(err); }
};

Result run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// A scratch directory with a small fixture set on disk.
class Workspace {
public:
    Workspace()
    {
        dir_ = fs::temp_directory_path() / ("geostyle_cli_" + std::to_string(counter_++));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        const LossInputs in = make_random_inputs(3);
        json cfg;
        const auto put = [&](const std::string& name, const Tensor& t) {
            save_tensor(t, dir_ / (name + ".tnsr"));
            return name + ".tnsr";
        };
        const auto put_list = [&](const std::string& group, const std::vector<Tensor>& ts) {
            json a = json::array();
            for (std::size_t i = 0; i < ts.size(); ++i) a.push_back(put(group + std::to_string(i), ts[i]));
            cfg[group] = a;
        };
        put_list("target_patches", in.style.target_patches);
        put_list("source_patches", in.style.source_patches);
        cfg["target_text"] = put("target_text", in.style.target_text);
        cfg["source_text"] = put("source_text", in.style.source_text);
        put_list("source_layers", in.content.source_layers);
        put_list("target_layers", in.content.target_layers);
        put_list("source_vgg", in.content.source_vgg);
        put_list("target_vgg", in.content.target_vgg);
        put_list("source_zecon", in.content.source_zecon);
        put_list("target_zecon", in.content.target_zecon);
        cfg["source_image"] = put("source_image", in.content.source_image);
        cfg["target_image"] = put("target_image", in.content.target_image);
        std::ofstream(dir_ / "inputs.json") << cfg.dump(2);
        inputs_ = in;

        Rng rng(4);
        save_tensor(fixtures::normal_tensor(rng, {8}), dir_ / "a.tnsr");
        save_tensor(fixtures::normal_tensor(rng, {8}), dir_ / "b.tnsr");
        save_tensor(fixtures::normal_tensor(rng, {8}), dir_ / "c.tnsr");
        save_tensor(fixtures::normal_tensor(rng, {3, 4, 4}), dir_ / "layer.tnsr");
        Tensor img({3, 16, 16});
        for (double& v : img.values()) v = rng.uniform(-1, 1);
        save_tensor(img, dir_ / "img.tnsr");
        Tensor img2 = img;
        for (double& v : img2.values()) v += 0.1;
        save_tensor(img2, dir_ / "img2.tnsr");
        save_tensor(fixtures::normal_tensor(rng, {3, 16, 16}), dir_ / "eps.tnsr");

        json runcfg = {{"source_image", "img.tnsr"},
                       {"schedule", {{"T", 100}, {"T_prime", 10}, {"t0", 4}}},
                       {"weights", {{"n", 9}}},
                       {"extractors", {{"feature_size", 16}, {"seed", 2}}},
                       {"seed", 5},
                       {"output_dir", "guide_out"}};
        std::ofstream(dir_ / "run.json") << runcfg.dump(2);
    }
    ~Workspace() { fs::remove_all(dir_); }

    [[nodiscard]] std::string path(const std::string& name) const { return (dir_ / name).string(); }
    [[nodiscard]] const LossInputs& inputs() const { return inputs_; }

private:
    static inline int counter_ = 0;
    fs::path dir_;
    LossInputs inputs_;
};

} // namespace

TEST_CASE("usage errors exit 2 with a JSON error")
{
    for (const auto& args : std::vector<std::vector<std::string>>{
             {}, {"frobnicate"}, {"swc-plan"}, {"swc-plan", "--height", "x", "--width", "4"}, {"metrics"}}) {
        const auto r = run(args);
        CHECK(r.code == cli::kExitUsage);
        CHECK(r.err_json().at("error").at("kind") == "usage");
        CHECK(r.out.empty());
    }
}

TEST_CASE("domain errors exit 1 with the error kind")
{
    const auto r = run({"swc-plan", "--height", "256", "--width", "256", "--n", "5"});
    CHECK(r.code == cli::kExitDomain);
    CHECK(r.err_json().at("error").at("kind") == "config");

    const auto missing = run({"inspect", "/nonexistent/file.tnsr"});
    CHECK(missing.code == cli::kExitDomain);
    CHECK(missing.err_json().at("error").at("kind") == "io");
}

TEST_CASE("swc-plan output")
{
    const auto r = run({"swc-plan", "--height", "256", "--width", "256", "--n", "49", "--mode", "full-coverage"});
    REQUIRE(r.code == 0);
    const auto j = r.out_json();
    CHECK(j.at("patches").size() == 49);
    CHECK(j.at("side") == 64);
    CHECK(j.at("stride") == 32);
    CHECK(j.at("patches")[48].at("e") == 192);
}

TEST_CASE("numbers are printed with 17 significant digits")
{
    CHECK(cli::format_json(json(0.1)) == "0.10000000000000001");
    CHECK(cli::format_json(json(2.0)) == "2.0");
    CHECK(cli::format_json(json(3)) == "3");
    CHECK(cli::format_json(json{{"a", {1.5, 2}}}, -1) == "{\"a\":[1.5, 2]}");
}

TEST_CASE("loss values equal the library recomposition")
{
    Workspace ws;
    const auto& in = ws.inputs();
    const LossWeights w;
    const auto style = run({"loss", "style", "--config", ws.path("inputs.json")});
    REQUIRE(style.code == 0);
    CHECK(style.out_json().at("value").get<double>() == w.pc * loss_pc(in.style) + w.pd * loss_pd(in.style));
    for (LossId id : all_loss_ids()) {
        const auto r = run({"loss", std::string(to_string(id)), "--config", ws.path("inputs.json")});
        REQUIRE(r.code == 0);
        CHECK(r.out_json().at("value").get<double>() == loss_value(id, in, w));
    }
    CHECK(run({"loss", "vgg", "--config", ws.path("inputs.json")}).out_json().at("loss") == "feature_mse");
    CHECK(run({"loss", "nope", "--config", ws.path("inputs.json")}).code == cli::kExitDomain);
}

TEST_CASE("identical arguments produce identical bytes")
{
    Workspace ws;
    const std::vector<std::vector<std::string>> cases = {
        {"gradcheck", "--loss", "total", "--seed", "4"},
        {"weights", "--n", "5", "--scheme", "dirichlet", "--seed", "9"},
        {"guide", "--config", ws.path("run.json")},
        {"--threads", "1", "loss", "total", "--config", ws.path("inputs.json")},
    };
    for (const auto& args : cases) {
        const auto a = run(args);
        const auto b = run(args);
        REQUIRE(a.code == 0);
        CHECK(a.out == b.out);
    }
    const auto first = slurp(ws.path("guide_out/stylized.tnsr"));
    REQUIRE(run({"guide", "--config", ws.path("run.json")}).code == 0);
    CHECK(slurp(ws.path("guide_out/stylized.tnsr")) == first);

    // Worker count does not change results.
    const auto one = run({"--threads", "1", "gradcheck", "--loss", "psc", "--seed", "2"});
    const auto four = run({"--threads", "4", "gradcheck", "--loss", "psc", "--seed", "2"});
    CHECK(one.out == four.out);
}

TEST_CASE("every operation is reachable")
{
    Workspace ws;
    const auto p = [&](const char* n) { return ws.path(n); };
    const std::vector<std::vector<std::string>> calls = {
        {"inspect", p("a.tnsr")},
        {"convert", p("a.tnsr"), p("a32.tnsr"), "--dtype", "f32"},
        {"landmarks", p("a.tnsr")},
        {"project", p("a.tnsr"), "-o", p("pa.tnsr")},
        {"gdist", p("a.tnsr"), p("b.tnsr")},
        {"curve", p("a.tnsr"), p("b.tnsr"), "-s", "0.3"},
        {"surface", p("a.tnsr"), p("b.tnsr"), p("c.tnsr"), "-w", "1,2,3"},
        {"weights", "--n", "4", "--m", "4"},
        {"augment", p("a.tnsr"), p("b.tnsr"), p("c.tnsr"), "--out-dir", p("aug")},
        {"swc-plan", "--height", "16", "--width", "16", "--n", "9", "--coverage-out", p("cov.tnsr")},
        {"swc-extract", p("img.tnsr"), "--n", "9", "--out-dir", p("patches")},
        {"selfcorr", p("layer.tnsr"), "--u", "1", "--v", "2"},
        {"loss", "total", "--config", p("inputs.json")},
        {"grad", "total", "--config", p("inputs.json"), "--out-dir", p("grads")},
        {"gradcheck", "--loss", "pc", "--config", p("inputs.json")},
        {"schedule", "--sigma", "ddim"},
        {"qsample", p("img.tnsr"), p("eps.tnsr"), "--t", "500", "-o", p("xt.tnsr")},
        {"toy-eps", p("xt.tnsr"), "--t", "500", "-o", p("e.tnsr")},
        {"denoise", p("xt.tnsr"), "--t", "500", "--mode", "eq3-literal", "-o", p("d.tnsr")},
        {"invert", p("img.tnsr"), "--t-stop", "5", "--sigma", "ddim", "-o", p("inv.tnsr")},
        {"step", p("inv.tnsr"), "--k", "5", "-o", p("s.tnsr")},
        {"step", p("inv.tnsr"), "--k", "3", "--config", p("run.json"), "-o", p("sg.tnsr")},
        {"guide", "--config", p("run.json")},
        {"metrics", "psnr", p("img.tnsr"), p("img2.tnsr"), "--peak", "1"},
        {"metrics", "ssim", p("img.tnsr"), p("img2.tnsr"), "--peak", "1"},
        {"metrics", "clip-i", p("a.tnsr"), p("b.tnsr")},
        {"metrics", "clip-p", p("c.tnsr"), p("a.tnsr"), p("b.tnsr")},
        {"metrics", "tiles", "--height", "128", "--width", "128"},
    };
    std::set<std::string> seen;
    for (const auto& args : calls) {
        const auto r = run(args);
        INFO(args[0], " -> ", r.err);
        CHECK(r.code == 0);
        CHECK_NOTHROW((void)r.out_json());
        seen.insert(args[0] == "metrics" ? "metrics " + args[1] : args[0]);
    }
    for (const auto& name : cli::subcommands()) {
        INFO(name);
        CHECK(seen.count(name) == 1);
    }
    CHECK(seen.size() == cli::subcommands().size());
}

TEST_CASE("subcommand outputs carry the expected content")
{
    Workspace ws;
    const auto p = [&](const char* n) { return ws.path(n); };

    CHECK(run({"convert", p("a.tnsr"), p("a32.tnsr"), "--dtype", "f32"}).out_json().at("bytes") == 20 + 32);
    CHECK(load_tensor(p("a32.tnsr")).dtype() == DType::f32);
    CHECK(run({"inspect", p("layer.tnsr")}).out_json().at("shape") == json::array({3, 4, 4}));

    const auto proj = run({"project", p("a.tnsr")}).out_json();
    CHECK(proj.at("landmarks") == 4);
    CHECK(proj.at("invariant_violation").get<double>() <= 1e-12);

    const auto gd = run({"gdist", p("a.tnsr"), p("a.tnsr")}).out_json();
    CHECK(gd.at("distance").get<double>() == 0.0);

    const auto w = run({"weights", "--n", "4", "--m", "4"}).out_json();
    CHECK(w.at("weight_sets")[1] == json::array({0.125, 0.625, 0.125, 0.125}));

    const auto aug = run({"augment", p("a.tnsr"), p("b.tnsr"), "--out-dir", p("aug")}).out_json();
    CHECK(aug.at("count") == 2);
    CHECK(fs::exists(p("aug/aug_1.tnsr")));

    const auto ex = run({"swc-extract", p("img.tnsr"), "--n", "9", "--out-dir", p("patches")}).out_json();
    CHECK(ex.at("count") == 9);
    CHECK(load_tensor(p("patches/patch_8.tnsr")).shape() == Shape{3, 8, 8});

    REQUIRE(run({"grad", "mse", "--config", p("inputs.json"), "--out-dir", p("grads")}).code == 0);
    const Tensor g = load_tensor(p("grads/target_image.tnsr"));
    const auto& in = ws.inputs();
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(g[i] == doctest::Approx(2 * (in.content.target_image[i] - in.content.source_image[i]) / 48.0).epsilon(1e-14));
    }

    const auto gc = run({"gradcheck", "--loss", "total", "--seed", "1"}).out_json();
    CHECK(gc.at("max_rel").get<double>() < 1e-5);
    CHECK(run({"gradcheck", "--loss", "mse", "--fd-step", "0"}).code == cli::kExitDomain);

    const auto guide = run({"guide", "--config", p("run.json")}).out_json();
    CHECK(guide.at("steps") == 4);
    CHECK(guide.at("trace").size() == 4);
    CHECK(fs::exists(p("guide_out/trace.json")));
    CHECK(fs::exists(p("guide_out/x_t0.tnsr")));

    const auto psnr = run({"metrics", "psnr", p("img.tnsr"), p("img.tnsr")}).out_json();
    CHECK(psnr.at("psnr") == "identical");
    const auto tiles = run({"metrics", "tiles", "--height", "128", "--width", "128"}).out_json();
    CHECK(tiles.at("tiles").size() == 4);
}
