#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace geostyle {

using Shape = std::vector<std::size_t>;

/// Wire precision of a tensor. Values are always held as double in memory;
/// f32 tensors are widened on read and narrowed on write.
enum class DType : std::uint8_t { f32 = 1, f64 = 2 };

std::size_t element_count(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major real tensor. Rank 1..8, every dimension >= 1.
class Tensor {
public:
    static constexpr std::size_t max_rank = 8;

    Tensor();
    Tensor(Shape shape, std::vector<double> values, DType dtype = DType::f64);
    explicit Tensor(Shape shape, double fill = 0.0);

    [[nodiscard]] const Shape& shape() const noexcept { return shape_; }
    [[nodiscard]] std::size_t rank() const noexcept { return shape_.size(); }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] DType dtype() const noexcept { return dtype_; }

    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::span<double> values() noexcept { return values_; }
    [[nodiscard]] const std::vector<double>& storage() const noexcept { return values_; }

    double operator[](std::size_t i) const noexcept { return values_[i]; }
    double& operator[](std::size_t i) noexcept { return values_[i]; }

    /// Same values under a new shape with equal element count.
    [[nodiscard]] Tensor reshaped(Shape shape) const;
    [[nodiscard]] Tensor with_dtype(DType dtype) const;

    [[nodiscard]] bool all_finite() const noexcept;

    friend bool operator==(const Tensor& a, const Tensor& b) noexcept;

private:
    Shape shape_;
    std::vector<double> values_;
    DType dtype_ = DType::f64;
};

/// Bit-level equality of shape, dtype and every value (distinguishes -0.0, 0.0).
bool bit_equal(const Tensor& a, const Tensor& b) noexcept;

// ---- TNSR interchange format --------------------------------------------
//
//   magic    "TNSR"            4 bytes
//   version  u32 = 1           4 bytes, little-endian
//   dtype    u8 (1=f32, 2=f64)
//   ndim     u8 (1..8)
//   reserved 2 zero bytes
//   dims     ndim x u64        little-endian
//   payload  row-major values  little-endian, in the declared dtype

std::size_t tnsr_header_size(std::size_t ndim) noexcept;

std::vector<std::byte> encode_tensor(const Tensor& t);
std::vector<std::byte> encode_tensor(const Tensor& t, DType dtype);
Tensor decode_tensor(std::span<const std::byte> bytes);

/// Writes t in its own dtype; returns the number of bytes emitted.
std::size_t write_tensor(const Tensor& t, std::ostream& out);
std::size_t write_tensor(const Tensor& t, std::ostream& out, DType dtype);
/// Consumes the whole stream; the payload must match the header exactly.
Tensor read_tensor(std::istream& in);

void save_tensor(const Tensor& t, const std::filesystem::path& path);
Tensor load_tensor(const std::filesystem::path& path);

} // namespace geostyle
