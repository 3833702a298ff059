#include "geostyle/weights.hpp"

#include "geostyle/error.hpp"

#include <cmath>
#include <string>

namespace geostyle {

void LossWeights::validate() const
{
    const std::pair<const char*, double> entries[] = {{"pc", pc}, {"pd", pd}, {"ps", ps},
                                                      {"z", z},   {"v", v},   {"m", m}};
    for (const auto& [name, value] : entries) {
        if (!std::isfinite(value) || value < 0.0) {
            fail(ErrorKind::config, std::string("loss weight ") + name + " must be finite and >= 0");
        }
    }
}

LossWeights LossWeights::zero()
{
    LossWeights w;
    w.pc = w.pd = w.ps = w.z = w.v = w.m = 0.0;
    return w;
}

nlohmann::json to_json(const LossWeights& w)
{
    return {{"n", w.n}, {"pc", w.pc}, {"pd", w.pd}, {"ps", w.ps}, {"z", w.z}, {"v", w.v}, {"m", w.m}};
}

LossWeights weights_from_json(const nlohmann::json& j)
{
    LossWeights w;
    try {
        w.n = j.value("n", w.n);
        w.pc = j.value("pc", w.pc);
        w.pd = j.value("pd", w.pd);
        w.ps = j.value("ps", w.ps);
        w.z = j.value("z", w.z);
        w.v = j.value("v", w.v);
        w.m = j.value("m", w.m);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::config, std::string("malformed weights: ") + e.what());
    }
    w.validate();
    return w;
}

} // namespace geostyle
