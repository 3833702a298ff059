#include "cli.hpp"

#include "geostyle/contentloss.hpp"
#include "geostyle/diffusion.hpp"
#include "geostyle/error.hpp"
#include "geostyle/geodesic.hpp"
#include "geostyle/grad.hpp"
#include "geostyle/guidance.hpp"
#include "geostyle/metrics.hpp"
#include "geostyle/parallel.hpp"
#include "geostyle/preshape.hpp"
#include "geostyle/random.hpp"
#include "geostyle/styleloss.hpp"
#include "geostyle/swc.hpp"
#include "geostyle/tensor.hpp"
#include "geostyle/weights.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

namespace geostyle::cli {

namespace fs = std::filesystem;
using nlohmann::json;

// ---- JSON output -----------------------------------------------------------

namespace {

std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s(buf);
    // keep the value recognisably floating so it round-trips as a double
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

void emit(const json& j, int indent, int depth, std::string& out)
{
    const auto newline = [&](int d) {
        if (indent < 0) return;
        out += '\n';
        out.append(static_cast<std::size_t>(indent * d), ' ');
    };
    switch (j.type()) {
    case json::value_t::object: {
        if (j.empty()) {
            out += "{}";
            return;
        }
        out += '{';
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first) out += ',';
            first = false;
            newline(depth + 1);
            out += json(it.key()).dump();
            out += indent < 0 ? ":" : ": ";
            emit(it.value(), indent, depth + 1, out);
        }
        newline(depth);
        out += '}';
        return;
    }
    case json::value_t::array: {
        if (j.empty()) {
            out += "[]";
            return;
        }
        // flat numeric arrays stay on one line
        const bool flat = std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_number(); });
        out += '[';
        bool first = true;
        for (const auto& e : j) {
            if (!first) out += flat ? ", " : ",";
            first = false;
            if (!flat) newline(depth + 1);
            emit(e, indent, depth + 1, out);
        }
        if (!flat) newline(depth);
        out += ']';
        return;
    }
    case json::value_t::number_float: out += format_double(j.get<double>()); return;
    default: out += j.dump(); return;
    }
}

} // namespace

std::string format_json(const json& j, int indent)
{
    std::string out;
    emit(j, indent, 0, out);
    return out;
}

// ---- helpers ---------------------------------------------------------------

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json tensor_summary(const Tensor& t)
{
    return {{"shape", t.shape()}, {"dtype", t.dtype() == DType::f32 ? "f32" : "f64"}, {"elements", t.size()}};
}

json values_json(std::span<const double> v)
{
    json a = json::array();
    for (double x : v) a.push_back(x);
    return a;
}

json read_json_file(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorKind::config, "malformed JSON in " + path.string() + ": " + e.what());
    }
}

/// Paths inside a config file are relative to that file's directory.
struct ConfigFile {
    json data;
    fs::path base;

    static ConfigFile load(const std::string& path)
    {
        ConfigFile c;
        c.data = read_json_file(path);
        if (!c.data.is_object()) fail(ErrorKind::config, "config root must be an object");
        c.base = fs::path(path).parent_path();
        return c;
    }

    [[nodiscard]] fs::path resolve(const std::string& p) const
    {
        const fs::path path(p);
        return path.is_absolute() ? path : base / path;
    }

    [[nodiscard]] bool has(const char* key) const { return data.contains(key) && !data[key].is_null(); }

    [[nodiscard]] Tensor tensor(const char* key) const
    {
        if (!data[key].is_string()) fail(ErrorKind::config, std::string("config key '") + key + "' must be a path");
        return load_tensor(resolve(data[key].get<std::string>()));
    }

    [[nodiscard]] std::vector<Tensor> tensors(const char* key) const
    {
        std::vector<Tensor> out;
        if (!has(key)) return out;
        if (!data[key].is_array()) fail(ErrorKind::config, std::string("config key '") + key + "' must be a list of paths");
        for (const auto& p : data[key]) {
            if (!p.is_string()) fail(ErrorKind::config, std::string("config key '") + key + "' must hold paths");
            out.push_back(load_tensor(resolve(p.get<std::string>())));
        }
        return out;
    }

    template <typename T>
    T get(const json& obj, const char* key, T fallback) const
    {
        if (!obj.is_object() || !obj.contains(key) || obj[key].is_null()) return fallback;
        try {
            return obj[key].get<T>();
        } catch (const json::exception& e) {
            fail(ErrorKind::config, std::string("config key '") + key + "': " + e.what());
        }
    }
};

AugmentConfig augment_from_json(const ConfigFile& c, const json& j)
{
    AugmentConfig a;
    if (j.is_object()) {
        if (j.contains("m") && !j["m"].is_null()) a.m = c.get<std::size_t>(j, "m", 0);
        a.gamma = c.get<double>(j, "gamma", a.gamma);
        a.scheme = parse_weight_scheme(c.get<std::string>(j, "scheme", "emphasis"));
        a.seed = c.get<std::uint64_t>(j, "seed", 0);
    }
    a.validate();
    return a;
}

LossInputs inputs_from_config(const ConfigFile& c)
{
    LossInputs in;
    in.style.target_patches = c.tensors("target_patches");
    in.style.source_patches = c.tensors("source_patches");
    if (c.has("target_text")) in.style.target_text = c.tensor("target_text");
    if (c.has("source_text")) in.style.source_text = c.tensor("source_text");
    in.style.augment = augment_from_json(c, c.has("augment") ? c.data["augment"] : json());
    in.content.source_layers = c.tensors("source_layers");
    in.content.target_layers = c.tensors("target_layers");
    in.content.source_vgg = c.tensors("source_vgg");
    in.content.target_vgg = c.tensors("target_vgg");
    in.content.source_zecon = c.tensors("source_zecon");
    in.content.target_zecon = c.tensors("target_zecon");
    if (c.has("source_image")) in.content.source_image = c.tensor("source_image");
    if (c.has("target_image")) in.content.target_image = c.tensor("target_image");
    in.content.temperature = c.get<double>(c.data, "temperature", kDefaultTemperature);
    return in;
}

LossWeights weights_from_config(const ConfigFile& c)
{
    return c.has("weights") ? weights_from_json(c.data["weights"]) : LossWeights{};
}

std::string file_stem_for(const std::string& input_name)
{
    std::string s;
    for (char ch : input_name) {
        if (ch == '[') {
            s += '_';
        } else if (ch != ']') {
            s += ch;
        }
    }
    return s;
}

std::vector<double> parse_number_list(const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError("not a number: '" + item + "'");
        }
    }
    return out;
}

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorKind::io, "cannot create directory " + dir.string() + ": " + ec.message());
}

// Schedule options shared by the diffusion subcommands.
struct ScheduleOpts {
    ScheduleConfig cfg;
    std::string sigma = "ddpm";

    void add(CLI::App* app)
    {
        app->add_option("--T", cfg.T, "base diffusion steps")->capture_default_str();
        app->add_option("--T-prime", cfg.T_prime, "respaced steps")->capture_default_str();
        app->add_option("--t0", cfg.t0, "respaced start step")->capture_default_str();
        app->add_option("--beta-start", cfg.beta.start)->capture_default_str();
        app->add_option("--beta-end", cfg.beta.end)->capture_default_str();
        app->add_option("--sigma", sigma, "ddim | ddpm")->capture_default_str();
    }

    Schedule build()
    {
        cfg.sigma = parse_sigma_mode(sigma);
        return build_schedule(cfg);
    }
};

ScheduleConfig schedule_from_json(const ConfigFile& c, const json& j)
{
    ScheduleConfig s;
    s.T = c.get<std::size_t>(j, "T", s.T);
    s.T_prime = c.get<std::size_t>(j, "T_prime", s.T_prime);
    s.t0 = c.get<std::size_t>(j, "t0", s.t0);
    s.beta.start = c.get<double>(j, "beta_start", s.beta.start);
    s.beta.end = c.get<double>(j, "beta_end", s.beta.end);
    s.sigma = parse_sigma_mode(c.get<std::string>(j, "sigma", "ddpm"));
    return s;
}

// Toy predictor options shared by the diffusion subcommands.
struct PredictorOpts {
    std::string mean_path;
    double mean_value = 0.5;
    double scale = 0.6;

    void add(CLI::App* app)
    {
        app->add_option("--mean", mean_path, "TNSR mean image of the toy data distribution");
        app->add_option("--mean-value", mean_value, "constant mean when --mean is absent")->capture_default_str();
        app->add_option("--scale", scale, "toy data standard deviation")->capture_default_str();
    }

    NoisePredictor build(const Shape& shape, const Schedule& s) const
    {
        Tensor mean = mean_path.empty() ? Tensor(shape, mean_value) : load_tensor(mean_path);
        return toy_predictor(std::move(mean), scale, s);
    }
};

// ---- the guide run ---------------------------------------------------------

struct GuideRun {
    Tensor source_image;
    Schedule schedule;
    NoisePredictor predictor;
    GuidanceConfig guidance;
    std::unique_ptr<StyleTransferObjective> objective; // null when guidance is off
    fs::path output_dir;
};

GuideRun load_guide_run(const std::string& path)
{
    const auto c = ConfigFile::load(path);
    GuideRun run;
    if (!c.has("source_image")) fail(ErrorKind::config, "run config needs 'source_image'");
    run.source_image = c.tensor("source_image");
    if (run.source_image.rank() != 3) fail(ErrorKind::shape, "source image must be c x H x W");
    run.schedule = build_schedule(schedule_from_json(c, c.has("schedule") ? c.data["schedule"] : json()));

    const json pj = c.has("predictor") ? c.data["predictor"] : json::object();
    const auto kind = c.get<std::string>(pj, "kind", "toy");
    if (kind != "toy") fail(ErrorKind::config, "only the toy predictor is available in-core, got '" + kind + "'");
    Tensor mean = pj.contains("mean") && pj["mean"].is_string()
                      ? load_tensor(c.resolve(pj["mean"].get<std::string>()))
                      : Tensor(run.source_image.shape(), c.get<double>(pj, "mean_value", 0.5));
    run.predictor = toy_predictor(std::move(mean), c.get<double>(pj, "scale", 0.6), run.schedule);

    const std::uint64_t seed = c.get<std::uint64_t>(c.data, "seed", 0);
    run.guidance.weights = weights_from_config(c);
    const json gj = c.has("guidance") ? c.data["guidance"] : json::object();
    run.guidance.eta = c.get<double>(gj, "eta", 1.0);
    run.guidance.sign = parse_gradient_sign(c.get<std::string>(gj, "sign", "descent"));
    run.guidance.denoise = parse_denoise_mode(c.get<std::string>(gj, "denoise", "standard"));
    run.guidance.seed = seed;
    run.guidance.validate();

    if (c.get<bool>(gj, "enabled", true)) {
        const json ej = c.has("extractors") ? c.data["extractors"] : json::object();
        const auto ekind = c.get<std::string>(ej, "kind", "toy");
        if (ekind != "toy") fail(ErrorKind::config, "only toy extractors are available in-core, got '" + ekind + "'");
        const std::size_t feature_size = c.get<std::size_t>(ej, "feature_size", 64);
        const std::uint64_t ex_seed = c.get<std::uint64_t>(ej, "seed", seed);

        ObjectiveSetup setup;
        setup.source_image = run.source_image;
        setup.weights = run.guidance.weights;
        const json sj = c.has("swc") ? c.data["swc"] : json::object();
        setup.swc_mode = parse_coverage_mode(c.get<std::string>(sj, "mode", "full-coverage"));
        setup.augment = augment_from_json(c, c.has("augment") ? c.data["augment"] : json());
        setup.temperature = c.get<double>(c.data, "temperature", kDefaultTemperature);
        const auto p = plan(run.source_image.shape()[1], run.source_image.shape()[2], setup.weights.n, setup.swc_mode);
        setup.extractors = make_toy_extractors(run.source_image.shape()[0], p.side, ex_seed, feature_size);
        Rng text_rng(ex_seed + 0x5eed);
        const auto random_text = [&] {
            std::vector<double> v(feature_size);
            for (double& x : v) x = text_rng.normal();
            return Tensor({feature_size}, std::move(v));
        };
        setup.target_text = c.has("target_text") ? c.tensor("target_text") : random_text();
        setup.source_text = c.has("source_text") ? c.tensor("source_text") : random_text();
        run.objective = std::make_unique<StyleTransferObjective>(std::move(setup));
    }
    run.output_dir = c.resolve(c.get<std::string>(c.data, "output_dir", "out"));
    return run;
}

// ---- subcommand table ------------------------------------------------------

using Handler = std::function<json()>;

struct Registry {
    CLI::App& app;
    std::vector<std::pair<CLI::App*, Handler>> entries;
    std::vector<std::string> names;

    CLI::App* add(CLI::App* parent, const std::string& name, const std::string& help, Handler h = {})
    {
        auto* sub = parent->add_subcommand(name, help);
        if (h) {
            entries.emplace_back(sub, std::move(h));
            names.push_back(parent == &app ? name : parent->get_name() + " " + name);
        }
        return sub;
    }
};

struct State {
    // shared scratch bound to options; each subcommand owns its own fields
    std::string in, in2, out, config, plan_path, out_dir, dtype = "f64", mode = "full-coverage", scheme = "emphasis";
    std::string loss_id, weights_text, tensor_path, coverage_out, denoise = "standard", sign = "descent";
    std::vector<std::string> inputs;
    std::size_t height = 0, width = 0, n = 49, u = 0, v = 0, t = 0, k = 0, coords = 200, side = 64, stride = 64;
    std::optional<std::size_t> m;
    std::size_t t_stop = 0, refine = InvertOptions{}.refine;
    std::uint64_t seed = 0, fd_seed = 0;
    double s = 0.0, gamma = 0.5, h = 1e-6, peak = 255.0, temperature = kDefaultTemperature, eta = 1.0;
    ScheduleOpts sched;
    PredictorOpts pred;
};

void build(Registry& r, State& st, std::ostream& out)
{
    auto& app = r.app;
    (void)out;

    // tensor
    auto* inspect = r.add(&app, "inspect", "describe a TNSR file", [&] {
        const Tensor t = load_tensor(st.in);
        json j = tensor_summary(t);
        j["header_bytes"] = tnsr_header_size(t.rank());
        return j;
    });
    inspect->add_option("file", st.in)->required();

    auto* convert = r.add(&app, "convert", "rewrite a TNSR file in another dtype", [&] {
        const Tensor t = load_tensor(st.in);
        const DType d = st.dtype == "f32" ? DType::f32 : st.dtype == "f64" ? DType::f64 : throw UsageError("bad dtype");
        std::ofstream o(st.out, std::ios::binary);
        if (!o) fail(ErrorKind::io, "cannot open " + st.out + " for writing");
        const std::size_t bytes = write_tensor(t, o, d);
        o.flush();
        if (!o) fail(ErrorKind::io, "failed writing " + st.out);
        return json{{"output", st.out}, {"bytes", bytes}, {"dtype", st.dtype}};
    });
    convert->add_option("input", st.in)->required();
    convert->add_option("output", st.out)->required();
    convert->add_option("--dtype", st.dtype, "f32 | f64")->check(CLI::IsMember({"f32", "f64"}))->capture_default_str();

    // preshape
    auto* landmarks = r.add(&app, "landmarks", "split-half 2 x L/2 landmark matrix", [&] {
        const Tensor l = reshape_to_landmarks(load_tensor(st.in));
        if (!st.out.empty()) save_tensor(l, st.out);
        return json{{"shape", l.shape()}, {"values", values_json(l.values())}};
    });
    landmarks->add_option("input", st.in)->required();
    landmarks->add_option("-o,--output", st.out);

    auto* project_cmd = r.add(&app, "project", "project a tensor onto the pre-shape sphere", [&] {
        const PreShape p = project(load_tensor(st.in));
        if (!st.out.empty()) save_tensor(p.to_tensor(), st.out);
        return json{{"landmarks", p.landmarks()},
                    {"invariant_violation", invariant_violation(p)},
                    {"values", values_json(p.values())}};
    });
    project_cmd->add_option("input", st.in)->required();
    project_cmd->add_option("-o,--output", st.out);

    auto* gdist = r.add(&app, "gdist", "geodesic distance between two projected tensors", [&] {
        return json{{"distance", geodesic_distance(project(load_tensor(st.in)), project(load_tensor(st.in2)))}};
    });
    gdist->add_option("a", st.in)->required();
    gdist->add_option("b", st.in2)->required();

    // geodesic
    auto* curve = r.add(&app, "curve", "point at arc length s from a toward b", [&] {
        const auto a = project(load_tensor(st.in));
        const auto b = project(load_tensor(st.in2));
        const auto c = curve_point(a, b, st.s);
        if (!st.out.empty()) save_tensor(c.point.to_tensor(), st.out);
        return json{{"distance_ab", geodesic_distance(a, b)},
                    {"distance_from_a", geodesic_distance(a, c.point)},
                    {"beyond_arc", c.beyond_arc},
                    {"values", values_json(c.point.values())}};
    });
    curve->add_option("a", st.in)->required();
    curve->add_option("b", st.in2)->required();
    curve->add_option("-s,--s", st.s, "arc length in radians")->required();
    curve->add_option("-o,--output", st.out);

    auto* surface = r.add(&app, "surface", "weighted geodesic surface point", [&] {
        std::vector<PreShape> taus;
        for (const auto& p : st.inputs) taus.push_back(project(load_tensor(p)));
        const WeightSet w(parse_number_list(st.weights_text));
        const auto mu = surface_point(taus, w);
        if (!st.out.empty()) save_tensor(mu.to_tensor(), st.out);
        return json{{"values", values_json(mu.values())}};
    });
    surface->add_option("inputs", st.inputs)->required();
    surface->add_option("-w,--weights", st.weights_text, "comma-separated, one per input")->required();
    surface->add_option("-o,--output", st.out);

    const auto add_augment_opts = [&](CLI::App* sub) {
        sub->add_option("--m", st.m, "augmented count (default n)");
        sub->add_option("--gamma", st.gamma)->capture_default_str();
        sub->add_option("--scheme", st.scheme, "emphasis | dirichlet")->capture_default_str();
        sub->add_option("--seed", st.seed)->capture_default_str();
    };
    const auto augment_cfg = [&st] {
        AugmentConfig a;
        a.m = st.m;
        a.gamma = st.gamma;
        a.scheme = parse_weight_scheme(st.scheme);
        a.seed = st.seed;
        a.validate();
        return a;
    };

    auto* weights = r.add(&app, "weights", "generate augmentation weight sets", [&, augment_cfg] {
        const auto sets = generate_weight_sets(st.n, augment_cfg());
        json a = json::array();
        for (const auto& w : sets) a.push_back(values_json(w.values()));
        return json{{"n", st.n}, {"weight_sets", a}};
    });
    weights->add_option("--n", st.n, "number of inputs")->required();
    add_augment_opts(weights);

    auto* augment_cmd = r.add(&app, "augment", "augmented features on the geodesic surface", [&, augment_cfg] {
        std::vector<PreShape> taus;
        for (const auto& p : st.inputs) taus.push_back(project(load_tensor(p)));
        const auto points = augment(taus, augment_cfg());
        json files = json::array();
        if (!st.out_dir.empty()) ensure_dir(st.out_dir);
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (st.out_dir.empty()) continue;
            const auto path = fs::path(st.out_dir) / ("aug_" + std::to_string(i) + ".tnsr");
            save_tensor(points[i].to_tensor(), path);
            files.push_back(path.string());
        }
        json vals = json::array();
        for (const auto& p : points) vals.push_back(values_json(p.values()));
        return json{{"count", points.size()}, {"files", files}, {"values", vals}};
    });
    augment_cmd->add_option("inputs", st.inputs)->required();
    augment_cmd->add_option("--out-dir", st.out_dir);
    add_augment_opts(augment_cmd);

    // swc
    auto* swc_plan = r.add(&app, "swc-plan", "sliding-window crop plan", [&] {
        const auto p = plan(st.height, st.width, st.n, parse_coverage_mode(st.mode));
        json j = to_json(p);
        if (!st.coverage_out.empty()) {
            const Tensor counts = coverage_counts(p);
            save_tensor(counts, st.coverage_out);
            double lo = counts[0];
            double hi = counts[0];
            for (double c : counts.values()) lo = std::min(lo, c), hi = std::max(hi, c);
            j["coverage"] = {{"min", lo}, {"max", hi}, {"file", st.coverage_out}};
        }
        return j;
    });
    swc_plan->add_option("--height", st.height)->required();
    swc_plan->add_option("--width", st.width)->required();
    swc_plan->add_option("--n", st.n)->capture_default_str();
    swc_plan->add_option("--mode", st.mode, "paper-literal | full-coverage")->capture_default_str();
    swc_plan->add_option("--coverage-out", st.coverage_out, "write per-pixel cover counts");

    auto* swc_extract = r.add(&app, "swc-extract", "crop an image by a plan", [&] {
        const Tensor image = load_tensor(st.in);
        PatchPlan p;
        if (!st.plan_path.empty()) {
            p = plan_from_json(read_json_file(st.plan_path));
        } else {
            if (image.rank() != 3) fail(ErrorKind::shape, "image must be c x H x W");
            p = plan(image.shape()[1], image.shape()[2], st.n, parse_coverage_mode(st.mode));
        }
        const auto patches = extract(image, p);
        ensure_dir(st.out_dir);
        json files = json::array();
        for (std::size_t i = 0; i < patches.size(); ++i) {
            const auto path = fs::path(st.out_dir) / ("patch_" + std::to_string(i) + ".tnsr");
            save_tensor(patches[i], path);
            files.push_back(path.string());
        }
        return json{{"count", patches.size()}, {"side", p.side}, {"files", files}};
    });
    swc_extract->add_option("image", st.in)->required();
    swc_extract->add_option("--plan", st.plan_path, "plan JSON from swc-plan");
    swc_extract->add_option("--n", st.n)->capture_default_str();
    swc_extract->add_option("--mode", st.mode)->capture_default_str();
    swc_extract->add_option("--out-dir", st.out_dir)->required();

    // content
    auto* selfcorr = r.add(&app, "selfcorr", "self-correlation map of a projected layer at (u, v)", [&] {
        const Tensor c = self_correlation(project_layout(load_tensor(st.in)), st.u, st.v);
        if (!st.out.empty()) save_tensor(c, st.out);
        return json{{"shape", c.shape()}, {"values", values_json(c.values())}};
    });
    selfcorr->add_option("layer", st.in)->required();
    selfcorr->add_option("--u", st.u)->required();
    selfcorr->add_option("--v", st.v)->required();
    selfcorr->add_option("-o,--output", st.out);

    // losses and gradients
    auto* loss = r.add(&app, "loss", "evaluate a loss over TNSR inputs named in a config", [&] {
        const auto c = ConfigFile::load(st.config);
        const LossId id = parse_loss_id(st.loss_id);
        const auto in = inputs_from_config(c);
        const auto w = weights_from_config(c);
        json j{{"loss", to_string(id)}, {"value", loss_value(id, in, w)}};
        if (id == LossId::content || id == LossId::total) {
            const auto parts = content_parts(in.content, w);
            j["content_parts"] = {{"psc", parts.psc}, {"zecon", parts.zecon}, {"vgg", parts.vgg}, {"mse", parts.mse}};
        }
        return j;
    });
    loss->add_option("id", st.loss_id, "pc|pd|psc|mse|vgg|zecon|feature_mse|patch_contrastive|style|content|total")
        ->required();
    loss->add_option("--config", st.config, "inputs JSON")->required();

    auto* grad = r.add(&app, "grad", "analytic gradients of a loss, one TNSR per input", [&] {
        const auto c = ConfigFile::load(st.config);
        const LossId id = parse_loss_id(st.loss_id);
        const auto res = grad_eval(id, inputs_from_config(c), weights_from_config(c));
        json files = json::object();
        if (!st.out_dir.empty()) {
            ensure_dir(st.out_dir);
            for (const auto& [name, g] : res.grads) {
                const auto path = fs::path(st.out_dir) / (file_stem_for(name) + ".tnsr");
                save_tensor(g, path);
                files[name] = path.string();
            }
        }
        json norms = json::object();
        for (const auto& [name, g] : res.grads) {
            double sq = 0.0;
            for (double x : g.values()) sq += x * x;
            norms[name] = std::sqrt(sq);
        }
        return json{{"loss", to_string(id)},
                    {"value", res.value},
                    {"clamp_boundary", res.clamp_boundary},
                    {"grad_norms", norms},
                    {"files", files}};
    });
    grad->add_option("id", st.loss_id)->required();
    grad->add_option("--config", st.config)->required();
    grad->add_option("--out-dir", st.out_dir);

    auto* gradcheck = r.add(&app, "gradcheck", "central finite-difference check of a loss gradient", [&] {
        const LossId id = parse_loss_id(st.loss_id);
        LossInputs in;
        LossWeights w;
        if (!st.config.empty()) {
            const auto c = ConfigFile::load(st.config);
            in = inputs_from_config(c);
            w = weights_from_config(c);
        } else {
            in = make_random_inputs(st.seed);
        }
        FdOptions o;
        o.h = st.h;
        o.coords_per_input = st.coords;
        o.seed = st.fd_seed;
        return to_json(fd_check(id, in, w, o));
    });
    gradcheck->add_option("--loss", st.loss_id)->required();
    gradcheck->add_option("--seed", st.seed, "seed for random inputs")->capture_default_str();
    gradcheck->add_option("--config", st.config, "inputs JSON instead of random inputs");
    gradcheck->add_option("--fd-step", st.h, "central-difference step h")->capture_default_str();
    gradcheck->add_option("--coords", st.coords, "coordinates per input")->capture_default_str();
    gradcheck->add_option("--fd-seed", st.fd_seed, "coordinate subset seed")->capture_default_str();

    // diffusion
    auto* schedule = r.add(&app, "schedule", "noise schedule per respaced step", [&] { return to_json(st.sched.build()); });
    st.sched.add(schedule);

    auto* qsample = r.add(&app, "qsample", "forward-noise x0 to timestep t", [&] {
        const auto s = st.sched.build();
        const Tensor x = q_sample(load_tensor(st.in), st.t, load_tensor(st.in2), s);
        save_tensor(x, st.out);
        return json{{"t", st.t}, {"alpha_bar", s.alpha_bar(st.t)}, {"output", st.out}};
    });
    qsample->add_option("x0", st.in)->required();
    qsample->add_option("eps", st.in2)->required();
    qsample->add_option("--t", st.t, "base timestep")->required();
    qsample->add_option("-o,--output", st.out)->required();
    st.sched.add(qsample);

    auto* toy_eps = r.add(&app, "toy-eps", "toy Gaussian noise prediction", [&] {
        const auto s = st.sched.build();
        const Tensor x = load_tensor(st.in);
        const Tensor e = st.pred.build(x.shape(), s)(x, st.t);
        save_tensor(e, st.out);
        return json{{"t", st.t}, {"output", st.out}};
    });
    toy_eps->add_option("x_t", st.in)->required();
    toy_eps->add_option("--t", st.t)->required();
    toy_eps->add_option("-o,--output", st.out)->required();
    st.sched.add(toy_eps);
    st.pred.add(toy_eps);

    auto* denoise = r.add(&app, "denoise", "denoised estimate under the toy predictor", [&] {
        const auto s = st.sched.build();
        const Tensor x = load_tensor(st.in);
        const Tensor d = denoised_estimate(x, st.t, st.pred.build(x.shape(), s), s, parse_denoise_mode(st.denoise));
        save_tensor(d, st.out);
        return json{{"t", st.t}, {"mode", st.denoise}, {"output", st.out}};
    });
    denoise->add_option("x_t", st.in)->required();
    denoise->add_option("--t", st.t)->required();
    denoise->add_option("--mode", st.denoise, "standard | eq3-literal")->capture_default_str();
    denoise->add_option("-o,--output", st.out)->required();
    st.sched.add(denoise);
    st.pred.add(denoise);

    auto* invert = r.add(&app, "invert", "deterministic inversion to respaced step t-stop", [&] {
        const auto s = st.sched.build();
        const Tensor x = load_tensor(st.in);
        InvertOptions o;
        o.refine = st.refine;
        const Tensor xt = ddim_invert(x, st.pred.build(x.shape(), s), s, st.t_stop, o);
        save_tensor(xt, st.out);
        return json{{"t_stop", st.t_stop}, {"timestep", s.timestep(st.t_stop)}, {"output", st.out}};
    });
    invert->add_option("x0", st.in)->required();
    invert->add_option("--t-stop", st.t_stop, "respaced steps to invert")->required();
    invert->add_option("--refine", st.refine, "fixed-point refinements per step")->capture_default_str();
    invert->add_option("-o,--output", st.out)->required();
    st.sched.add(invert);
    st.pred.add(invert);

    auto* step = r.add(&app, "step", "one reverse step from respaced step k (guided with --config)", [&] {
        const Tensor x = load_tensor(st.in);
        GuidanceConfig g;
        g.seed = st.seed;
        g.eta = st.eta;
        g.sign = parse_gradient_sign(st.sign);
        g.denoise = parse_denoise_mode(st.denoise);
        Schedule s;
        NoisePredictor pred;
        std::unique_ptr<StyleTransferObjective> objective;
        if (!st.config.empty()) {
            auto run = load_guide_run(st.config);
            s = std::move(run.schedule);
            pred = std::move(run.predictor);
            objective = std::move(run.objective);
            g = run.guidance;
        } else {
            s = st.sched.build();
            pred = st.pred.build(x.shape(), s);
        }
        Rng rng(g.seed);
        const auto r = guided_step(x, st.k, pred, s, g, objective.get(), rng);
        save_tensor(r.x_prev, st.out);
        return json{{"k", st.k}, {"timestep", s.timestep(st.k)}, {"sigma", s.sigma(st.k)}, {"guided", r.guided},
                    {"loss", r.loss}, {"output", st.out}};
    });
    step->add_option("x_t", st.in)->required();
    step->add_option("--k", st.k, "respaced step index")->required();
    step->add_option("--config", st.config, "run JSON enabling guidance");
    step->add_option("--eta", st.eta)->capture_default_str();
    step->add_option("--sign", st.sign, "descent | paper-plus")->capture_default_str();
    step->add_option("--mode", st.denoise, "standard | eq3-literal")->capture_default_str();
    step->add_option("--seed", st.seed)->capture_default_str();
    step->add_option("-o,--output", st.out)->required();
    st.sched.add(step);
    st.pred.add(step);

    auto* guide = r.add(&app, "guide", "full guided stylisation run", [&] {
        auto run = load_guide_run(st.config);
        const auto res = sample_loop(run.source_image, run.predictor, run.schedule, run.guidance, run.objective.get());
        ensure_dir(run.output_dir);
        save_tensor(res.image, run.output_dir / "stylized.tnsr");
        save_tensor(res.x_t0, run.output_dir / "x_t0.tnsr");
        json j{{"steps", res.trace.size()},
               {"t0", run.schedule.t0},
               {"guided", run.objective != nullptr},
               {"trace", values_json(res.trace)},
               {"stylized", (run.output_dir / "stylized.tnsr").string()},
               {"x_t0", (run.output_dir / "x_t0.tnsr").string()}};
        std::ofstream(run.output_dir / "trace.json") << format_json(j) << '\n';
        return j;
    });
    guide->add_option("--config", st.config, "run JSON")->required();

    // metrics
    auto* metrics = app.add_subcommand("metrics", "image and embedding metrics");
    metrics->require_subcommand(1);
    auto* m_psnr = r.add(metrics, "psnr", "peak signal-to-noise ratio in dB", [&] {
        MetricReport rep;
        rep.psnr = psnr(load_tensor(st.in), load_tensor(st.in2), st.peak);
        rep.psnr_identical = !rep.psnr;
        return to_json(rep);
    });
    m_psnr->add_option("a", st.in)->required();
    m_psnr->add_option("b", st.in2)->required();
    m_psnr->add_option("--peak", st.peak, "255 for 8-bit range, 1 for unit range")->capture_default_str();

    auto* m_ssim = r.add(metrics, "ssim", "structural similarity", [&] {
        MetricReport rep;
        rep.ssim = ssim(load_tensor(st.in), load_tensor(st.in2), st.peak);
        return to_json(rep);
    });
    m_ssim->add_option("a", st.in)->required();
    m_ssim->add_option("b", st.in2)->required();
    m_ssim->add_option("--peak", st.peak)->capture_default_str();

    auto* m_clip_i = r.add(metrics, "clip-i", "whole-image embedding vs prompt embedding", [&] {
        MetricReport rep;
        rep.clip_i = clip_i(load_tensor(st.in), load_tensor(st.in2));
        return to_json(rep);
    });
    m_clip_i->add_option("image_feature", st.in)->required();
    m_clip_i->add_option("text_feature", st.in2)->required();

    auto* m_clip_p = r.add(metrics, "clip-p", "mean patch embedding vs prompt embedding", [&] {
        std::vector<Tensor> patches;
        for (const auto& p : st.inputs) patches.push_back(load_tensor(p));
        MetricReport rep;
        rep.clip_p = clip_p(patches, load_tensor(st.in2));
        rep.clip_p_side = st.side;
        return to_json(rep);
    });
    m_clip_p->add_option("text_feature", st.in2)->required();
    m_clip_p->add_option("patch_features", st.inputs)->required();
    m_clip_p->add_option("--side", st.side, "patch side the embeddings were taken at")->capture_default_str();

    auto* m_tiles = r.add(metrics, "tiles", "crop grid for patch-level scoring", [&] {
        json a = json::array();
        for (const auto& t : clip_p_tiles(st.height, st.width, st.side, st.stride)) a.push_back({{"e", t.e}, {"f", t.f}});
        return json{{"side", st.side}, {"stride", st.stride}, {"tiles", a}};
    });
    m_tiles->add_option("--height", st.height)->required();
    m_tiles->add_option("--width", st.width)->required();
    m_tiles->add_option("--side", st.side)->capture_default_str();
    m_tiles->add_option("--stride", st.stride)->capture_default_str();
}

json error_json(std::string_view kind, const std::string& message, std::optional<std::size_t> index = std::nullopt)
{
    json e{{"kind", kind}, {"message", message}};
    if (index) e["index"] = *index;
    return json{{"error", e}};
}

} // namespace

std::vector<std::string> subcommands()
{
    CLI::App app;
    Registry r{app, {}, {}};
    State st;
    std::ostringstream sink;
    build(r, st, sink);
    return r.names;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app("Pre-shape geodesic style-transfer toolkit", "geostyle");
    app.require_subcommand(1);
    std::optional<std::size_t> threads;
    app.add_option("--threads", threads, "worker cap (overrides FAG_THREADS)");
    Registry r{app, {}, {}};
    State st;
    build(r, st, out);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << format_json(error_json("usage", e.what()), -1) << '\n';
        return kExitUsage;
    }

    try {
        if (threads) set_thread_count(*threads);
        for (auto& [sub, handler] : r.entries) {
            if (sub->parsed()) {
                out << format_json(handler()) << '\n';
                return kExitOk;
            }
        }
        err << format_json(error_json("usage", "no subcommand selected"), -1) << '\n';
        return kExitUsage;
    } catch (const UsageError& e) {
        err << format_json(error_json("usage", e.what()), -1) << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << format_json(error_json(to_string(e.kind()), e.what(), e.index()), -1) << '\n';
        return kExitDomain;
    } catch (const std::exception& e) {
        err << format_json(error_json("internal", e.what()), -1) << '\n';
        return kExitDomain;
    }
}

} // namespace geostyle::cli
