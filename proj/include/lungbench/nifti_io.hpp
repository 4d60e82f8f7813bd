#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lungbench/errors.hpp"
#include "lungbench/geometry.hpp"

namespace lungbench {

// Dense 3D scalar volume, x-fastest storage. Values are Hounsfield units
// before normalization and dimensionless afterwards.
struct VolumeGrid {
    GridFrame frame;
    std::vector<double> data;

    std::size_t index(std::int64_t i, std::int64_t j, std::int64_t k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(frame.dims[0]) *
                   (static_cast<std::size_t>(j) +
                    static_cast<std::size_t>(frame.dims[1]) * static_cast<std::size_t>(k));
    }
    double at(std::int64_t i, std::int64_t j, std::int64_t k) const { return data[index(i, j, k)]; }
    double& at(std::int64_t i, std::int64_t j, std::int64_t k) { return data[index(i, j, k)]; }
    std::size_t voxel_count() const { return data.size(); }

    // frame valid and data length = nx*ny*nz
    bool valid() const;
};

class NiftiError : public InputError {
public:
    using InputError::InputError;
};

enum class NiftiDatatype : std::int16_t {
    Int16 = 4,
    Float32 = 16,
};

struct NiftiWriteOptions {
    NiftiDatatype datatype = NiftiDatatype::Float32;
    bool gzip = false;
    // Intensity rescale written to the header. Int16 payloads store
    // round((value - intercept) / slope) clamped to the int16 range.
    double slope = 1.0;
    double intercept = 0.0;
};

// Parses a single-file NIfTI-1 byte stream (raw or gzip; little- or
// big-endian). Voxel values come back as stored*slope + intercept in doubles.
// Distinct diagnostics for: bad magic, wrong header size, unsupported
// datatype, truncated payload (expected vs actual bytes), non-positive
// spacing, non-axis-aligned orientation.
VolumeGrid decode_volume(std::span<const std::uint8_t> bytes);

// Serializes a volume as little-endian single-file NIfTI-1. Deterministic:
// identical input yields identical bytes (gzip output carries no timestamp).
// Rejects non-finite data and empty dims.
std::vector<std::uint8_t> encode_volume(const VolumeGrid& v, const NiftiWriteOptions& options = {});

// File helpers; write infers gzip from a ".gz" suffix when options.gzip is false.
VolumeGrid read_volume_file(const std::filesystem::path& path);
void write_volume_file(const std::filesystem::path& path, const VolumeGrid& v,
                       NiftiWriteOptions options = {});

// gzip helpers (zlib, fixed level, zeroed timestamp so bytes are reproducible)
std::vector<std::uint8_t> gzip_compress(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> gzip_decompress(std::span<const std::uint8_t> bytes);
bool looks_gzip(std::span<const std::uint8_t> bytes);

}  // namespace lungbench
