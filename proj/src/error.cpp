#include "geostyle/error.hpp"

namespace geostyle {

std::string_view to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::io: return "io";
    case ErrorKind::format: return "format";
    case ErrorKind::validation: return "validation";
    case ErrorKind::shape: return "shape";
    case ErrorKind::degenerate_input: return "degenerate_input";
    case ErrorKind::degenerate_geodesic: return "degenerate_geodesic";
    case ErrorKind::degenerate_direction: return "degenerate_direction";
    case ErrorKind::degenerate_feature: return "degenerate_feature";
    case ErrorKind::config: return "config";
    case ErrorKind::index: return "index";
    case ErrorKind::schedule: return "schedule";
    }
    return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message, std::optional<std::size_t> index)
    : std::runtime_error(message), kind_(kind), index_(index)
{
}

void fail(ErrorKind kind, const std::string& message, std::optional<std::size_t> index)
{
    throw Error(kind, message, index);
}

} // namespace geostyle
