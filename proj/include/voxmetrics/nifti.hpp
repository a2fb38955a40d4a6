#pragma once

// NIfTI-1 single-file (.nii / .nii.gz) reader and writer.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <zlib.h>

#include "error.hpp"
#include "volume.hpp"

namespace voxmetrics::nifti {

inline constexpr std::size_t header_size = 348;
inline constexpr float default_vox_offset = 352.0f;

enum class Datatype : std::int16_t {
    uint8 = 2,
    int16 = 4,
    int32 = 8,
    float32 = 16,
    float64 = 64,
};

constexpr std::optional<int> bits_per_voxel(int datatype) noexcept
{
    switch (datatype) {
    case 2: return 8;
    case 4: return 16;
    case 8: return 32;
    case 16: return 32;
    case 64: return 64;
    default: return std::nullopt;
    }
}

struct NiftiHeader {
    std::int32_t sizeof_hdr = 348;
    std::array<std::int16_t, 8> dim{};
    std::int16_t datatype = 0;
    std::int16_t bitpix = 0;
    std::array<float, 8> pixdim{};
    float vox_offset = default_vox_offset;
    float scl_slope = 1.0f;
    float scl_inter = 0.0f;
    std::uint8_t xyzt_units = 0;
    std::int16_t qform_code = 0;
    std::int16_t sform_code = 0;
    float quatern_b = 0.0f;
    float quatern_c = 0.0f;
    float quatern_d = 0.0f;
    float qoffset_x = 0.0f;
    float qoffset_y = 0.0f;
    float qoffset_z = 0.0f;
    std::array<float, 4> srow_x{};
    std::array<float, 4> srow_y{};
    std::array<float, 4> srow_z{};
    std::array<char, 80> descrip{};
    std::array<char, 4> magic{'n', '+', '1', '\0'};

    Dims dims() const noexcept
    {
        return {static_cast<std::size_t>(dim[1]), static_cast<std::size_t>(dim[2]),
                static_cast<std::size_t>(dim[3])};
    }
    Spacing spacing() const noexcept { return {pixdim[1], pixdim[2], pixdim[3]}; }
    std::size_t payload_bytes() const noexcept
    {
        return dims().count() * static_cast<std::size_t>(bitpix / 8);
    }

    friend bool operator==(const NiftiHeader&, const NiftiHeader&) = default;
};

namespace detail {

// Byte offsets of the fields used here within the 348-byte header.
namespace off {
inline constexpr std::size_t sizeof_hdr = 0;
inline constexpr std::size_t dim = 40;
inline constexpr std::size_t datatype = 70;
inline constexpr std::size_t bitpix = 72;
inline constexpr std::size_t pixdim = 76;
inline constexpr std::size_t vox_offset = 108;
inline constexpr std::size_t scl_slope = 112;
inline constexpr std::size_t scl_inter = 116;
inline constexpr std::size_t xyzt_units = 123;
inline constexpr std::size_t descrip = 148;
inline constexpr std::size_t qform_code = 252;
inline constexpr std::size_t sform_code = 254;
inline constexpr std::size_t quatern_b = 256;
inline constexpr std::size_t srow_x = 280;
inline constexpr std::size_t srow_y = 296;
inline constexpr std::size_t srow_z = 312;
inline constexpr std::size_t magic = 344;
} // namespace off

template <typename T>
T load(std::span<const std::uint8_t> buf, std::size_t at, bool swap) noexcept
{
    std::array<std::uint8_t, sizeof(T)> raw;
    std::memcpy(raw.data(), buf.data() + at, sizeof(T));
    if (swap)
        std::reverse(raw.begin(), raw.end());
    return std::bit_cast<T>(raw);
}

template <typename T>
void store(std::span<std::uint8_t> buf, std::size_t at, T value, bool swap) noexcept
{
    auto raw = std::bit_cast<std::array<std::uint8_t, sizeof(T)>>(value);
    if (swap)
        std::reverse(raw.begin(), raw.end());
    std::memcpy(buf.data() + at, raw.data(), sizeof(T));
}

inline bool is_gzip(std::span<const std::uint8_t> bytes) noexcept
{
    return bytes.size() >= 2 && bytes[0] == 0x1F && bytes[1] == 0x8B;
}

inline std::vector<std::uint8_t> gunzip(std::span<const std::uint8_t> in)
{
    std::vector<std::uint8_t> out;
    std::array<std::uint8_t, 1 << 16> chunk;
    z_stream zs{};
    if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK)
        throw Error(Errc::io, "inflateInit2 failed");
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    int rc = Z_OK;
    for (;;) {
        zs.next_out = chunk.data();
        zs.avail_out = static_cast<uInt>(chunk.size());
        rc = inflate(&zs, Z_NO_FLUSH);
        out.insert(out.end(), chunk.data(), chunk.data() + (chunk.size() - zs.avail_out));
        if (rc == Z_STREAM_END) {
            // concatenated gzip members
            if (zs.avail_in > 0 && inflateReset(&zs) == Z_OK)
                continue;
            break;
        }
        if (rc != Z_OK) {
            inflateEnd(&zs);
            if (rc == Z_BUF_ERROR)
                throw Error(Errc::truncated_data, "gzip stream ends early");
            throw Error(Errc::io, "corrupt gzip stream");
        }
    }
    inflateEnd(&zs);
    return out;
}

inline std::vector<std::uint8_t> gzip(std::span<const std::uint8_t> in)
{
    z_stream zs{};
    // windowBits 31 selects the gzip wrapper; zlib writes mtime 0 so output is deterministic.
    if (deflateInit2(&zs, 6, Z_DEFLATED, 16 + MAX_WBITS, 8, Z_DEFAULT_STRATEGY) != Z_OK)
        throw Error(Errc::io, "deflateInit2 failed");
    std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(in.size())) + 32);
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = deflate(&zs, Z_FINISH);
    deflateEnd(&zs);
    if (rc != Z_STREAM_END)
        throw Error(Errc::io, "deflate failed");
    out.resize(zs.total_out);
    return out;
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(Errc::io, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(Errc::io, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw Error(Errc::io, "write failed for " + path.string());
}

} // namespace detail

/// Byte order of a raw header, decided by which interpretation of sizeof_hdr reads 348.
inline std::endian detect_byte_order(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < header_size)
        throw Error(Errc::truncated_data, "header shorter than 348 bytes");
    const auto le = detail::load<std::int32_t>(bytes, 0, std::endian::native != std::endian::little);
    if (le == 348)
        return std::endian::little;
    const auto be = detail::load<std::int32_t>(bytes, 0, std::endian::native != std::endian::big);
    if (be == 348)
        return std::endian::big;
    throw Error(Errc::magic_mismatch, "sizeof_hdr is not 348 in either byte order");
}

inline NiftiHeader parse_header(std::span<const std::uint8_t> bytes)
{
    using namespace detail;
    if (bytes.size() != header_size)
        throw Error(Errc::truncated_data, "header buffer must be exactly 348 bytes");
    const bool swap = detect_byte_order(bytes) != std::endian::native;

    NiftiHeader h;
    h.sizeof_hdr = load<std::int32_t>(bytes, off::sizeof_hdr, swap);
    std::memcpy(h.magic.data(), bytes.data() + off::magic, 4);
    if (h.magic != std::array<char, 4>{'n', '+', '1', '\0'}) {
        if (h.magic == std::array<char, 4>{'n', 'i', '1', '\0'})
            throw Error(Errc::magic_mismatch, "paired .hdr/.img files are not supported");
        throw Error(Errc::magic_mismatch, "magic is not \"n+1\"");
    }
    for (std::size_t d = 0; d < 8; ++d) {
        h.dim[d] = load<std::int16_t>(bytes, off::dim + 2 * d, swap);
        h.pixdim[d] = load<float>(bytes, off::pixdim + 4 * d, swap);
    }
    h.datatype = load<std::int16_t>(bytes, off::datatype, swap);
    h.bitpix = load<std::int16_t>(bytes, off::bitpix, swap);
    h.vox_offset = load<float>(bytes, off::vox_offset, swap);
    h.scl_slope = load<float>(bytes, off::scl_slope, swap);
    h.scl_inter = load<float>(bytes, off::scl_inter, swap);
    h.xyzt_units = bytes[off::xyzt_units];
    h.qform_code = load<std::int16_t>(bytes, off::qform_code, swap);
    h.sform_code = load<std::int16_t>(bytes, off::sform_code, swap);
    h.quatern_b = load<float>(bytes, off::quatern_b, swap);
    h.quatern_c = load<float>(bytes, off::quatern_b + 4, swap);
    h.quatern_d = load<float>(bytes, off::quatern_b + 8, swap);
    h.qoffset_x = load<float>(bytes, off::quatern_b + 12, swap);
    h.qoffset_y = load<float>(bytes, off::quatern_b + 16, swap);
    h.qoffset_z = load<float>(bytes, off::quatern_b + 20, swap);
    for (std::size_t c = 0; c < 4; ++c) {
        h.srow_x[c] = load<float>(bytes, off::srow_x + 4 * c, swap);
        h.srow_y[c] = load<float>(bytes, off::srow_y + 4 * c, swap);
        h.srow_z[c] = load<float>(bytes, off::srow_z + 4 * c, swap);
    }
    std::memcpy(h.descrip.data(), bytes.data() + off::descrip, h.descrip.size());

    const auto bits = bits_per_voxel(h.datatype);
    if (!bits)
        throw Error(Errc::unsupported_datatype, "datatype code " + std::to_string(h.datatype));
    if (h.bitpix != *bits)
        throw Error(Errc::unsupported_datatype,
                    "bitpix " + std::to_string(h.bitpix) + " does not match datatype " +
                        std::to_string(h.datatype));

    int rank = h.dim[0];
    if (rank < 1 || rank > 7)
        throw Error(Errc::bad_dim, "dim[0] = " + std::to_string(rank));
    while (rank > 3 && h.dim[static_cast<std::size_t>(rank)] == 1)
        --rank;
    if (rank != 3)
        throw Error(Errc::bad_dim, "rank " + std::to_string(h.dim[0]) + " is not reducible to 3");
    for (std::size_t d = 1; d <= 3; ++d)
        if (h.dim[d] < 1)
            throw Error(Errc::bad_dim, "dim[" + std::to_string(d) + "] must be positive");
    h.dim[0] = 3;
    for (std::size_t d = 4; d < 8; ++d)
        h.dim[d] = 1;

    for (std::size_t d = 1; d <= 3; ++d)
        if (!(h.pixdim[d] > 0.0f) || !std::isfinite(h.pixdim[d]))
            throw Error(Errc::non_positive_spacing, "pixdim[" + std::to_string(d) + "] must be > 0");
    if (!(h.vox_offset >= static_cast<float>(header_size)) || h.vox_offset != std::floor(h.vox_offset))
        throw Error(Errc::bad_format, "vox_offset must be an integer >= 348");
    return h;
}

inline std::array<std::uint8_t, header_size> serialize_header(const NiftiHeader& h,
                                                             std::endian order = std::endian::little)
{
    using namespace detail;
    std::array<std::uint8_t, header_size> buf{};
    const bool swap = order != std::endian::native;
    store<std::int32_t>(buf, off::sizeof_hdr, h.sizeof_hdr, swap);
    buf[38] = 'r'; // "regular"
    for (std::size_t d = 0; d < 8; ++d) {
        store<std::int16_t>(buf, off::dim + 2 * d, h.dim[d], swap);
        store<float>(buf, off::pixdim + 4 * d, h.pixdim[d], swap);
    }
    store<std::int16_t>(buf, off::datatype, h.datatype, swap);
    store<std::int16_t>(buf, off::bitpix, h.bitpix, swap);
    store<float>(buf, off::vox_offset, h.vox_offset, swap);
    store<float>(buf, off::scl_slope, h.scl_slope, swap);
    store<float>(buf, off::scl_inter, h.scl_inter, swap);
    buf[off::xyzt_units] = h.xyzt_units;
    store<std::int16_t>(buf, off::qform_code, h.qform_code, swap);
    store<std::int16_t>(buf, off::sform_code, h.sform_code, swap);
    store<float>(buf, off::quatern_b, h.quatern_b, swap);
    store<float>(buf, off::quatern_b + 4, h.quatern_c, swap);
    store<float>(buf, off::quatern_b + 8, h.quatern_d, swap);
    store<float>(buf, off::quatern_b + 12, h.qoffset_x, swap);
    store<float>(buf, off::quatern_b + 16, h.qoffset_y, swap);
    store<float>(buf, off::quatern_b + 20, h.qoffset_z, swap);
    for (std::size_t c = 0; c < 4; ++c) {
        store<float>(buf, off::srow_x + 4 * c, h.srow_x[c], swap);
        store<float>(buf, off::srow_y + 4 * c, h.srow_y[c], swap);
        store<float>(buf, off::srow_z + 4 * c, h.srow_z[c], swap);
    }
    std::memcpy(buf.data() + off::descrip, h.descrip.data(), h.descrip.size());
    std::memcpy(buf.data() + off::magic, h.magic.data(), 4);
    return buf;
}

/// Voxel-to-world rows: sform when present, otherwise qform, otherwise pixdim scaling.
inline Affine header_affine(const NiftiHeader& h)
{
    if (h.sform_code > 0) {
        Affine a;
        for (std::size_t c = 0; c < 4; ++c) {
            a[0][c] = h.srow_x[c];
            a[1][c] = h.srow_y[c];
            a[2][c] = h.srow_z[c];
        }
        return a;
    }
    if (h.qform_code > 0) {
        const double b = h.quatern_b, c = h.quatern_c, d = h.quatern_d;
        const double a = std::sqrt(std::max(0.0, 1.0 - (b * b + c * c + d * d)));
        const double qfac = h.pixdim[0] < 0.0f ? -1.0 : 1.0;
        const double sx = h.pixdim[1], sy = h.pixdim[2], sz = h.pixdim[3] * qfac;
        return {{{(a * a + b * b - c * c - d * d) * sx, 2 * (b * c - a * d) * sy, 2 * (b * d + a * c) * sz,
                  h.qoffset_x},
                 {2 * (b * c + a * d) * sx, (a * a + c * c - b * b - d * d) * sy, 2 * (c * d - a * b) * sz,
                  h.qoffset_y},
                 {2 * (b * d - a * c) * sx, 2 * (c * d + a * b) * sy, (a * a + d * d - c * c - b * b) * sz,
                  h.qoffset_z}}};
    }
    return scaling_affine(h.spacing());
}

struct RawImage {
    NiftiHeader header;
    std::endian byte_order = std::endian::little;
    std::vector<double> values; // decoded, unscaled
};

/// Decodes header and payload from an in-memory file image (gzip detected by magic bytes).
inline RawImage decode(std::span<const std::uint8_t> file_bytes)
{
    std::vector<std::uint8_t> inflated;
    if (detail::is_gzip(file_bytes)) {
        inflated = detail::gunzip(file_bytes);
        file_bytes = inflated;
    }
    if (file_bytes.size() < header_size)
        throw Error(Errc::truncated_data, "file shorter than the 348-byte header");
    const auto head = file_bytes.first(header_size);

    RawImage img;
    img.header = parse_header(head);
    img.byte_order = detect_byte_order(head);
    const bool swap = img.byte_order != std::endian::native;

    const auto start = static_cast<std::size_t>(img.header.vox_offset);
    const std::size_t n = img.header.dims().count();
    const std::size_t bytes = img.header.payload_bytes();
    if (file_bytes.size() < start || file_bytes.size() - start < bytes)
        throw Error(Errc::truncated_data, "expected " + std::to_string(bytes) + " payload bytes at offset " +
                                              std::to_string(start) + ", file has " +
                                              std::to_string(file_bytes.size()));
    const auto payload = file_bytes.subspan(start, bytes);
    img.values.resize(n);
    auto decode_as = [&]<typename T>(T) {
        for (std::size_t v = 0; v < n; ++v)
            img.values[v] = static_cast<double>(detail::load<T>(payload, v * sizeof(T), swap));
    };
    switch (static_cast<Datatype>(img.header.datatype)) {
    case Datatype::uint8: decode_as(std::uint8_t{}); break;
    case Datatype::int16: decode_as(std::int16_t{}); break;
    case Datatype::int32: decode_as(std::int32_t{}); break;
    case Datatype::float32: decode_as(float{}); break;
    case Datatype::float64: decode_as(double{}); break;
    }
    return img;
}

inline RawImage read_raw(const std::filesystem::path& path)
{
    const auto bytes = detail::read_file(path);
    return decode(bytes);
}

inline Volume to_volume(const RawImage& img)
{
    const auto& h = img.header;
    std::vector<double> data = img.values;
    if (h.scl_slope != 0.0f) {
        const double slope = h.scl_slope, inter = h.scl_inter;
        for (auto& v : data)
            v = slope * v + inter;
    }
    for (double v : data)
        if (!std::isfinite(v))
            throw Error(Errc::bad_format, "non-finite voxel value");
    return Volume(h.dims(), h.spacing(), header_affine(h), std::move(data));
}

inline LabelVolume to_labels(const RawImage& img)
{
    const auto& h = img.header;
    if (!(h.scl_slope == 0.0f || h.scl_slope == 1.0f) || h.scl_inter != 0.0f)
        throw Error(Errc::non_integer_labels, "label files need identity intensity scaling");
    std::vector<std::uint8_t> data(img.values.size());
    for (std::size_t v = 0; v < data.size(); ++v) {
        const double x = img.values[v];
        if (x != std::floor(x) || !std::isfinite(x))
            throw Error(Errc::non_integer_labels, "voxel value " + std::to_string(x) + " is not integral");
        if (x < 0.0 || x > max_label)
            throw Error(Errc::invalid_label, "voxel value " + std::to_string(x) + " outside 0..6");
        data[v] = static_cast<std::uint8_t>(x);
    }
    return LabelVolume(h.dims(), h.spacing(), header_affine(h), std::move(data));
}

inline Volume read_volume(const std::filesystem::path& path) { return to_volume(read_raw(path)); }
inline LabelVolume read_labels(const std::filesystem::path& path) { return to_labels(read_raw(path)); }

struct WriteOptions {
    std::endian byte_order = std::endian::little;
    /// Unset: compress when the path ends in ".gz".
    std::optional<bool> compress;
};

template <typename T>
NiftiHeader make_header(const Grid<T>& g)
{
    NiftiHeader h;
    constexpr bool is_label = std::is_same_v<T, std::uint8_t>;
    h.datatype = static_cast<std::int16_t>(is_label ? Datatype::uint8 : Datatype::float32);
    h.bitpix = is_label ? 8 : 32;
    h.dim = {3,
             static_cast<std::int16_t>(g.dims().x),
             static_cast<std::int16_t>(g.dims().y),
             static_cast<std::int16_t>(g.dims().z),
             1, 1, 1, 1};
    h.pixdim = {1.0f,
                static_cast<float>(g.spacing().x),
                static_cast<float>(g.spacing().y),
                static_cast<float>(g.spacing().z),
                0.0f, 0.0f, 0.0f, 0.0f};
    h.xyzt_units = 2; // mm
    h.sform_code = 1;
    for (std::size_t c = 0; c < 4; ++c) {
        h.srow_x[c] = static_cast<float>(g.affine()[0][c]);
        h.srow_y[c] = static_cast<float>(g.affine()[1][c]);
        h.srow_z[c] = static_cast<float>(g.affine()[2][c]);
    }
    return h;
}

/// Full single-file image: header, 4 zero extension bytes, payload.
template <typename T>
std::vector<std::uint8_t> encode(const Grid<T>& g, std::endian order = std::endian::little)
{
    constexpr std::int32_t limit = 32767;
    if (g.dims().x > limit || g.dims().y > limit || g.dims().z > limit)
        throw Error(Errc::bad_dim, "dims exceed the NIfTI-1 16-bit limit");
    const NiftiHeader h = make_header(g);
    const auto head = serialize_header(h, order);
    const bool swap = order != std::endian::native;
    using Stored = std::conditional_t<std::is_same_v<T, std::uint8_t>, std::uint8_t, float>;

    std::vector<std::uint8_t> out(static_cast<std::size_t>(default_vox_offset) + g.size() * sizeof(Stored), 0);
    std::copy(head.begin(), head.end(), out.begin());
    std::span<std::uint8_t> payload(out.data() + static_cast<std::size_t>(default_vox_offset), g.size() * sizeof(Stored));
    for (std::size_t v = 0; v < g.size(); ++v)
        detail::store<Stored>(payload, v * sizeof(Stored), static_cast<Stored>(g[v]), swap);
    return out;
}

template <typename T>
void write_volume(const Grid<T>& g, const std::filesystem::path& path, WriteOptions opts = {})
{
    auto bytes = encode(g, opts.byte_order);
    const bool compress = opts.compress.value_or(path.extension() == ".gz");
    if (compress)
        bytes = detail::gzip(bytes);
    detail::write_file(path, bytes);
}

/// True for ".nii" and ".nii.gz" paths.
inline bool has_nifti_extension(const std::filesystem::path& p)
{
    const auto name = p.filename().string();
    auto ends_with = [&](std::string_view s) {
        return name.size() >= s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0;
    };
    return ends_with(".nii") || ends_with(".nii.gz");
}

} // namespace voxmetrics::nifti
