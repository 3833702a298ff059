#include "geostyle/tensor.hpp"

#include "geostyle/error.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>
#include <sstream>

namespace geostyle {

namespace {

constexpr std::array<char, 4> kMagic = {'T', 'N', 'S', 'R'};
constexpr std::uint32_t kVersion = 1;

void check_shape(const Shape& shape)
{
    if (shape.empty() || shape.size() > Tensor::max_rank) {
        fail(ErrorKind::shape, "tensor rank must be in 1.." + std::to_string(Tensor::max_rank) +
                                   ", got " + std::to_string(shape.size()));
    }
    for (std::size_t d : shape) {
        if (d == 0) {
            fail(ErrorKind::shape, "tensor dimensions must be >= 1, got " + shape_string(shape));
        }
    }
}

template <typename U>
void put_le(std::vector<std::byte>& out, U value)
{
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        out.push_back(static_cast<std::byte>((value >> (8 * i)) & 0xFFu));
    }
}

template <typename U>
U get_le(std::span<const std::byte> bytes, std::size_t offset)
{
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        value |= static_cast<U>(std::to_integer<unsigned>(bytes[offset + i])) << (8 * i);
    }
    return value;
}

} // namespace

std::size_t element_count(const Shape& shape)
{
    std::size_t n = 1;
    for (std::size_t d : shape) {
        if (d != 0 && n > std::numeric_limits<std::size_t>::max() / d) {
            fail(ErrorKind::shape, "tensor element count overflows");
        }
        n *= d;
    }
    return n;
}

std::string shape_string(const Shape& shape)
{
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

Tensor::Tensor() : shape_{1}, values_(1, 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> values, DType dtype)
    : shape_(std::move(shape)), values_(std::move(values)), dtype_(dtype)
{
    check_shape(shape_);
    if (element_count(shape_) != values_.size()) {
        fail(ErrorKind::shape, "tensor of shape " + shape_string(shape_) + " needs " +
                                   std::to_string(element_count(shape_)) + " values, got " +
                                   std::to_string(values_.size()));
    }
    if (dtype_ == DType::f32) {
        // f32 tensors only carry f32-representable values so write/read is lossless.
        for (double& v : values_) v = static_cast<double>(static_cast<float>(v));
    }
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape))
{
    check_shape(shape_);
    values_.assign(element_count(shape_), fill);
}

Tensor Tensor::reshaped(Shape shape) const
{
    return Tensor(std::move(shape), values_, dtype_);
}

Tensor Tensor::with_dtype(DType dtype) const
{
    return Tensor(shape_, values_, dtype);
}

bool Tensor::all_finite() const noexcept
{
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

bool operator==(const Tensor& a, const Tensor& b) noexcept
{
    return a.shape_ == b.shape_ && a.values_ == b.values_;
}

bool bit_equal(const Tensor& a, const Tensor& b) noexcept
{
    if (a.shape() != b.shape() || a.dtype() != b.dtype()) return false;
    return std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(double)) == 0;
}

std::size_t tnsr_header_size(std::size_t ndim) noexcept
{
    return 4 + 4 + 1 + 1 + 2 + 8 * ndim;
}

std::vector<std::byte> encode_tensor(const Tensor& t)
{
    return encode_tensor(t, t.dtype());
}

std::vector<std::byte> encode_tensor(const Tensor& t, DType dtype)
{
    if (!t.all_finite()) {
        fail(ErrorKind::validation, "refusing to write a tensor with non-finite values");
    }
    const std::size_t width = dtype == DType::f32 ? 4 : 8;
    std::vector<std::byte> out;
    out.reserve(tnsr_header_size(t.rank()) + width * t.size());
    for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
    put_le<std::uint32_t>(out, kVersion);
    out.push_back(static_cast<std::byte>(dtype));
    out.push_back(static_cast<std::byte>(t.rank()));
    out.push_back(std::byte{0});
    out.push_back(std::byte{0});
    for (std::size_t d : t.shape()) put_le<std::uint64_t>(out, d);
    for (double v : t.values()) {
        if (dtype == DType::f32) {
            put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
        } else {
            put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
        }
    }
    return out;
}

Tensor decode_tensor(std::span<const std::byte> bytes)
{
    if (bytes.size() < tnsr_header_size(0)) {
        fail(ErrorKind::format, "truncated TNSR header");
    }
    for (std::size_t i = 0; i < kMagic.size(); ++i) {
        if (std::to_integer<char>(bytes[i]) != kMagic[i]) fail(ErrorKind::format, "bad TNSR magic");
    }
    const auto version = get_le<std::uint32_t>(bytes, 4);
    if (version != kVersion) {
        fail(ErrorKind::format, "unsupported TNSR version " + std::to_string(version));
    }
    const auto dtype_code = std::to_integer<unsigned>(bytes[8]);
    if (dtype_code != 1 && dtype_code != 2) {
        fail(ErrorKind::format, "unknown TNSR dtype code " + std::to_string(dtype_code));
    }
    const auto dtype = static_cast<DType>(dtype_code);
    const std::size_t ndim = std::to_integer<std::size_t>(bytes[9]);
    if (ndim < 1 || ndim > Tensor::max_rank) {
        fail(ErrorKind::format, "TNSR ndim must be 1..8, got " + std::to_string(ndim));
    }
    if (bytes[10] != std::byte{0} || bytes[11] != std::byte{0}) {
        fail(ErrorKind::format, "TNSR reserved bytes must be zero");
    }
    if (bytes.size() < tnsr_header_size(ndim)) {
        fail(ErrorKind::format, "truncated TNSR dimension block");
    }
    Shape shape(ndim);
    for (std::size_t i = 0; i < ndim; ++i) {
        const auto d = get_le<std::uint64_t>(bytes, 12 + 8 * i);
        if (d == 0) fail(ErrorKind::format, "TNSR dimension " + std::to_string(i) + " is zero");
        shape[i] = static_cast<std::size_t>(d);
    }
    std::size_t count = 0;
    try {
        count = element_count(shape);
    } catch (const Error&) {
        fail(ErrorKind::format, "TNSR dimensions overflow");
    }
    const std::size_t width = dtype == DType::f32 ? 4 : 8;
    const std::size_t payload = bytes.size() - tnsr_header_size(ndim);
    if (count > std::numeric_limits<std::size_t>::max() / width || payload != count * width) {
        fail(ErrorKind::format, "TNSR payload is " + std::to_string(payload) + " bytes, shape " +
                                    shape_string(shape) + " requires " + std::to_string(count * width));
    }
    std::vector<double> values(count);
    std::size_t offset = tnsr_header_size(ndim);
    for (std::size_t i = 0; i < count; ++i, offset += width) {
        const double v = dtype == DType::f32
                             ? static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(bytes, offset)))
                             : std::bit_cast<double>(get_le<std::uint64_t>(bytes, offset));
        if (!std::isfinite(v)) {
            fail(ErrorKind::validation, "non-finite value at element " + std::to_string(i), i);
        }
        values[i] = v;
    }
    return Tensor(std::move(shape), std::move(values), dtype);
}

std::size_t write_tensor(const Tensor& t, std::ostream& out)
{
    return write_tensor(t, out, t.dtype());
}

std::size_t write_tensor(const Tensor& t, std::ostream& out, DType dtype)
{
    const auto bytes = encode_tensor(t, dtype);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::io, "failed writing TNSR stream");
    return bytes.size();
}

Tensor read_tensor(std::istream& in)
{
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) fail(ErrorKind::io, "failed reading TNSR stream");
    return decode_tensor(std::as_bytes(std::span<const char>(raw)));
}

void save_tensor(const Tensor& t, const std::filesystem::path& path)
{
    const auto bytes = encode_tensor(t);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::io, "failed writing " + path.string());
}

Tensor load_tensor(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot open " + path.string());
    return read_tensor(in);
}

} // namespace geostyle
