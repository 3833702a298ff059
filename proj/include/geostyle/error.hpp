#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace geostyle {

enum class ErrorKind {
    io,
    format,
    validation,
    shape,
    degenerate_input,
    degenerate_geodesic,
    degenerate_direction,
    degenerate_feature,
    config,
    index,
    schedule,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every domain failure in the library is reported as an Error. The kind is
/// stable and machine-readable (the CLI prints it); index, when present,
/// names the offending element (patch, layer, chain step).
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, std::optional<std::size_t> index = std::nullopt);

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }
    [[nodiscard]] std::optional<std::size_t> index() const noexcept { return index_; }

private:
    ErrorKind kind_;
    std::optional<std::size_t> index_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message,
                       std::optional<std::size_t> index = std::nullopt);

} // namespace geostyle
