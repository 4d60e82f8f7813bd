#include "lungbench/nifti_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "lungbench/util.hpp"

namespace lungbench {

namespace {

// NIfTI-1 header field offsets (348-byte header, single-file layout).
constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kExtensionPad = 4;
constexpr std::size_t kOffSizeofHdr = 0;
constexpr std::size_t kOffDim = 40;        // int16[8]
constexpr std::size_t kOffDatatype = 70;   // int16
constexpr std::size_t kOffBitpix = 72;     // int16
constexpr std::size_t kOffPixdim = 76;     // float[8]
constexpr std::size_t kOffVoxOffset = 108; // float
constexpr std::size_t kOffSclSlope = 112;  // float
constexpr std::size_t kOffSclInter = 116;  // float
constexpr std::size_t kOffXyztUnits = 123; // char
constexpr std::size_t kOffDescrip = 148;   // char[80]
constexpr std::size_t kOffQformCode = 252; // int16
constexpr std::size_t kOffSformCode = 254; // int16
constexpr std::size_t kOffQuaternB = 256;  // float
constexpr std::size_t kOffQoffsetX = 268;  // float[3]
constexpr std::size_t kOffSrowX = 280;     // float[4] x 3
constexpr std::size_t kOffMagic = 344;     // char[4]

std::uint16_t bswap16(std::uint16_t v) { return static_cast<std::uint16_t>((v >> 8) | (v << 8)); }
std::uint32_t bswap32(std::uint32_t v) {
    return (v >> 24) | ((v >> 8) & 0x0000FF00u) | ((v << 8) & 0x00FF0000u) | (v << 24);
}

class FieldReader {
public:
    FieldReader(std::span<const std::uint8_t> bytes, bool swap) : bytes_(bytes), swap_(swap) {}

    std::int16_t i16(std::size_t off) const {
        std::uint16_t v;
        std::memcpy(&v, bytes_.data() + off, 2);
        if (swap_) v = bswap16(v);
        std::int16_t out;
        std::memcpy(&out, &v, 2);
        return out;
    }
    std::int32_t i32(std::size_t off) const {
        std::uint32_t v;
        std::memcpy(&v, bytes_.data() + off, 4);
        if (swap_) v = bswap32(v);
        std::int32_t out;
        std::memcpy(&out, &v, 4);
        return out;
    }
    float f32(std::size_t off) const {
        std::uint32_t v;
        std::memcpy(&v, bytes_.data() + off, 4);
        if (swap_) v = bswap32(v);
        float out;
        std::memcpy(&out, &v, 4);
        return out;
    }

private:
    std::span<const std::uint8_t> bytes_;
    bool swap_;
};

void put_i16(std::vector<std::uint8_t>& buf, std::size_t off, std::int16_t v) {
    std::memcpy(buf.data() + off, &v, 2);
}
void put_i32(std::vector<std::uint8_t>& buf, std::size_t off, std::int32_t v) {
    std::memcpy(buf.data() + off, &v, 4);
}
void put_f32(std::vector<std::uint8_t>& buf, std::size_t off, float v) {
    std::memcpy(buf.data() + off, &v, 4);
}

bool nearly_zero(float v, double scale) { return std::abs(v) <= 1e-6 * std::max(1.0, scale); }

}  // namespace

bool VolumeGrid::valid() const {
    if (!frame.valid()) return false;
    std::size_t n = static_cast<std::size_t>(frame.dims[0]) *
                    static_cast<std::size_t>(frame.dims[1]) *
                    static_cast<std::size_t>(frame.dims[2]);
    return data.size() == n && n > 0;
}

bool looks_gzip(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= 2 && bytes[0] == 0x1F && bytes[1] == 0x8B;
}

std::vector<std::uint8_t> gzip_compress(std::span<const std::uint8_t> bytes) {
    z_stream zs{};
    if (deflateInit2(&zs, 6, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK)
        throw InvariantError("zlib deflateInit2 failed");
    gz_header header{};
    header.time = 0;  // keep output bytes independent of wall clock
    header.os = 255;
    deflateSetHeader(&zs, &header);

    std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(bytes.size())) + 32);
    zs.next_in = const_cast<Bytef*>(bytes.data());
    zs.avail_in = static_cast<uInt>(bytes.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    int rc = deflate(&zs, Z_FINISH);
    if (rc != Z_STREAM_END) {
        deflateEnd(&zs);
        throw InvariantError("zlib deflate failed");
    }
    out.resize(zs.total_out);
    deflateEnd(&zs);
    return out;
}

std::vector<std::uint8_t> gzip_decompress(std::span<const std::uint8_t> bytes) {
    z_stream zs{};
    if (inflateInit2(&zs, 15 + 32) != Z_OK) throw InvariantError("zlib inflateInit2 failed");
    std::vector<std::uint8_t> out;
    out.resize(std::max<std::size_t>(bytes.size() * 4, 4096));
    zs.next_in = const_cast<Bytef*>(bytes.data());
    zs.avail_in = static_cast<uInt>(bytes.size());
    std::size_t written = 0;
    for (;;) {
        zs.next_out = out.data() + written;
        zs.avail_out = static_cast<uInt>(out.size() - written);
        int rc = inflate(&zs, Z_NO_FLUSH);
        written = out.size() - zs.avail_out;
        if (rc == Z_STREAM_END) break;
        if (rc == Z_OK || rc == Z_BUF_ERROR) {
            if (zs.avail_out == 0) {
                out.resize(out.size() * 2);
                continue;
            }
            if (rc == Z_BUF_ERROR) {
                inflateEnd(&zs);
                throw NiftiError("gzip stream ended prematurely");
            }
            continue;
        }
        inflateEnd(&zs);
        throw NiftiError("corrupt gzip stream");
    }
    inflateEnd(&zs);
    out.resize(written);
    return out;
}

VolumeGrid decode_volume(std::span<const std::uint8_t> raw) {
    std::vector<std::uint8_t> inflated;
    std::span<const std::uint8_t> bytes = raw;
    if (looks_gzip(raw)) {
        inflated = gzip_decompress(raw);
        bytes = inflated;
    }
    if (bytes.size() < kHeaderSize + kExtensionPad)
        throw NiftiError("not a NIfTI-1 file: only " + std::to_string(bytes.size()) +
                         " bytes, need at least 352");

    // Endianness is detected from the header-size field.
    FieldReader le(bytes, false);
    bool swap = false;
    if (le.i32(kOffSizeofHdr) != 348) {
        FieldReader be(bytes, true);
        if (be.i32(kOffSizeofHdr) == 348) {
            swap = true;
        } else {
            throw NiftiError("bad header: size field is not 348 in either byte order");
        }
    }
    FieldReader r(bytes, swap);

    const char* magic = reinterpret_cast<const char*>(bytes.data() + kOffMagic);
    if (std::memcmp(magic, "n+1\0", 4) != 0) {
        if (std::memcmp(magic, "ni1\0", 4) == 0)
            throw NiftiError("bad magic: two-file (.hdr/.img) NIfTI-1 is not supported");
        throw NiftiError("bad magic: not a single-file NIfTI-1 stream");
    }

    std::int16_t ndim = r.i16(kOffDim);
    if (ndim < 1 || ndim > 7) throw NiftiError("bad header: dim[0] = " + std::to_string(ndim));
    std::array<std::int64_t, 3> dims{1, 1, 1};
    for (int a = 0; a < 3; ++a) {
        std::int16_t d = a < ndim ? r.i16(kOffDim + 2 * (a + 1)) : 1;
        if (d < 1)
            throw NiftiError("bad header: dim[" + std::to_string(a + 1) +
                             "] = " + std::to_string(d));
        dims[a] = d;
    }
    for (int a = 3; a < ndim; ++a) {
        std::int16_t d = r.i16(kOffDim + 2 * (a + 1));
        if (d > 1) throw NiftiError("unsupported dimensionality: only 3-D volumes are handled");
    }

    std::int16_t datatype = r.i16(kOffDatatype);
    std::int16_t bitpix = r.i16(kOffBitpix);
    std::size_t value_size = 0;
    if (datatype == static_cast<std::int16_t>(NiftiDatatype::Int16) && bitpix == 16) {
        value_size = 2;
    } else if (datatype == static_cast<std::int16_t>(NiftiDatatype::Float32) && bitpix == 32) {
        value_size = 4;
    } else {
        throw NiftiError("unsupported datatype: code " + std::to_string(datatype) + " with " +
                         std::to_string(bitpix) + " bits (int16 and float32 are supported)");
    }

    std::array<double, 3> spacing{};
    for (int a = 0; a < 3; ++a) {
        float s = r.f32(kOffPixdim + 4 * (a + 1));
        if (!(s > 0) || !std::isfinite(s))
            throw NiftiError("non-positive spacing: pixdim[" + std::to_string(a + 1) + "] = " +
                             format_double(s));
        spacing[a] = s;
    }

    Point3 origin{0, 0, 0};
    std::int16_t sform = r.i16(kOffSformCode);
    std::int16_t qform = r.i16(kOffQformCode);
    if (sform > 0) {
        // Accept only a positive-diagonal affine: spacing on the diagonal,
        // translation in the last column.
        double srow[3][4];
        for (int row = 0; row < 3; ++row)
            for (int col = 0; col < 4; ++col)
                srow[row][col] = r.f32(kOffSrowX + 16 * row + 4 * col);
        for (int row = 0; row < 3; ++row) {
            for (int col = 0; col < 3; ++col) {
                if (row == col) continue;
                if (!nearly_zero(static_cast<float>(srow[row][col]), spacing[row]))
                    throw NiftiError("unsupported orientation: sform affine is not axis-aligned");
            }
            if (!(srow[row][row] > 0))
                throw NiftiError("unsupported orientation: sform affine flips or collapses axis " +
                                 std::to_string(row));
        }
        spacing = {srow[0][0], srow[1][1], srow[2][2]};
        for (int a = 0; a < 3; ++a)
            if (!(spacing[a] > 0))
                throw NiftiError("non-positive spacing: sform diagonal " + std::to_string(a));
        origin = {srow[0][3], srow[1][3], srow[2][3]};
    } else if (qform > 0) {
        for (int i = 0; i < 3; ++i) {
            float q = r.f32(kOffQuaternB + 4 * i);
            if (!nearly_zero(q, 1.0))
                throw NiftiError("unsupported orientation: qform quaternion encodes a rotation");
        }
        float qfac = r.f32(kOffPixdim);
        if (qfac < 0)
            throw NiftiError("unsupported orientation: qform flips the z axis (qfac < 0)");
        origin = {r.f32(kOffQoffsetX), r.f32(kOffQoffsetX + 4), r.f32(kOffQoffsetX + 8)};
    }

    double slope = r.f32(kOffSclSlope);
    double inter = r.f32(kOffSclInter);
    if (slope == 0.0) slope = 1.0;
    if (!std::isfinite(slope) || !std::isfinite(inter))
        throw NiftiError("bad header: non-finite scl_slope/scl_inter");

    float vox_offset_f = r.f32(kOffVoxOffset);
    if (!(vox_offset_f >= static_cast<float>(kHeaderSize + kExtensionPad)))
        throw NiftiError("bad header: vox_offset " + format_double(vox_offset_f) + " < 352");
    std::size_t vox_offset = static_cast<std::size_t>(vox_offset_f);

    std::size_t n = static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
                    static_cast<std::size_t>(dims[2]);
    std::size_t expected = n * value_size;
    if (vox_offset > bytes.size() || bytes.size() - vox_offset < expected)
        throw NiftiError("truncated payload: expected " + std::to_string(expected) +
                         " bytes, got " +
                         std::to_string(vox_offset > bytes.size() ? 0 : bytes.size() - vox_offset));

    VolumeGrid v;
    v.frame.origin = origin;
    v.frame.spacing = spacing;
    v.frame.dims = dims;
    v.data.resize(n);
    const std::uint8_t* p = bytes.data() + vox_offset;
    if (value_size == 2) {
        for (std::size_t i = 0; i < n; ++i) {
            std::uint16_t u;
            std::memcpy(&u, p + 2 * i, 2);
            if (swap) u = bswap16(u);
            std::int16_t s;
            std::memcpy(&s, &u, 2);
            v.data[i] = static_cast<double>(s) * slope + inter;
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            std::uint32_t u;
            std::memcpy(&u, p + 4 * i, 4);
            if (swap) u = bswap32(u);
            float f;
            std::memcpy(&f, &u, 4);
            v.data[i] = static_cast<double>(f) * slope + inter;
        }
    }
    return v;
}

std::vector<std::uint8_t> encode_volume(const VolumeGrid& v, const NiftiWriteOptions& options) {
    if (!v.frame.valid() || v.data.empty())
        throw NiftiError("cannot write volume: empty dims or invalid frame");
    if (!v.valid()) throw NiftiError("cannot write volume: data length does not match dims");
    for (int a = 0; a < 3; ++a)
        if (v.frame.dims[a] > 32767)
            throw NiftiError("cannot write volume: dim exceeds the NIfTI-1 int16 limit");
    for (double x : v.data)
        if (!std::isfinite(x)) throw NiftiError("cannot write volume: non-finite voxel value");

    bool int16_payload = options.datatype == NiftiDatatype::Int16;
    double slope = options.slope;
    double inter = options.intercept;
    if (!int16_payload) {
        // float32 payloads are written verbatim so roundtrips stay bit-exact
        slope = 1.0;
        inter = 0.0;
    } else if (!(slope != 0.0) || !std::isfinite(slope) || !std::isfinite(inter)) {
        throw NiftiError("cannot write volume: invalid slope/intercept");
    }

    std::size_t n = v.data.size();
    std::size_t value_size = int16_payload ? 2 : 4;
    std::vector<std::uint8_t> out(kHeaderSize + kExtensionPad + n * value_size, 0);

    put_i32(out, kOffSizeofHdr, 348);
    put_i16(out, kOffDim, 3);
    for (int a = 0; a < 3; ++a)
        put_i16(out, kOffDim + 2 * (a + 1), static_cast<std::int16_t>(v.frame.dims[a]));
    for (int a = 4; a <= 7; ++a) put_i16(out, kOffDim + 2 * a, 1);
    put_i16(out, kOffDatatype, static_cast<std::int16_t>(options.datatype));
    put_i16(out, kOffBitpix, int16_payload ? 16 : 32);
    put_f32(out, kOffPixdim, 1.0f);  // qfac
    for (int a = 0; a < 3; ++a)
        put_f32(out, kOffPixdim + 4 * (a + 1), static_cast<float>(v.frame.spacing[a]));
    put_f32(out, kOffVoxOffset, static_cast<float>(kHeaderSize + kExtensionPad));
    put_f32(out, kOffSclSlope, static_cast<float>(slope));
    put_f32(out, kOffSclInter, static_cast<float>(inter));
    out[kOffXyztUnits] = 2;  // NIFTI_UNITS_MM
    const char* descrip = "lungbench";
    std::memcpy(out.data() + kOffDescrip, descrip, std::strlen(descrip));
    put_i16(out, kOffQformCode, 0);
    put_i16(out, kOffSformCode, 1);
    put_f32(out, kOffSrowX + 0, static_cast<float>(v.frame.spacing[0]));
    put_f32(out, kOffSrowX + 12, static_cast<float>(v.frame.origin.x));
    put_f32(out, kOffSrowX + 16 + 4, static_cast<float>(v.frame.spacing[1]));
    put_f32(out, kOffSrowX + 16 + 12, static_cast<float>(v.frame.origin.y));
    put_f32(out, kOffSrowX + 32 + 8, static_cast<float>(v.frame.spacing[2]));
    put_f32(out, kOffSrowX + 32 + 12, static_cast<float>(v.frame.origin.z));
    std::memcpy(out.data() + kOffMagic, "n+1\0", 4);

    std::uint8_t* p = out.data() + kHeaderSize + kExtensionPad;
    if (int16_payload) {
        for (std::size_t i = 0; i < n; ++i) {
            double stored = std::round((v.data[i] - inter) / slope);
            stored = std::clamp(stored, -32768.0, 32767.0);
            std::int16_t s = static_cast<std::int16_t>(stored);
            std::memcpy(p + 2 * i, &s, 2);
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            float f = static_cast<float>(v.data[i]);
            std::memcpy(p + 4 * i, &f, 4);
        }
    }

    if (options.gzip) return gzip_compress(out);
    return out;
}

VolumeGrid read_volume_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open volume file: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    try {
        return decode_volume(bytes);
    } catch (const NiftiError& e) {
        throw NiftiError(path.string() + ": " + e.what());
    }
}

void write_volume_file(const std::filesystem::path& path, const VolumeGrid& v,
                       NiftiWriteOptions options) {
    if (path.extension() == ".gz") options.gzip = true;
    auto bytes = encode_volume(v, options);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot open output file: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InputError("failed to write: " + path.string());
}

}  // namespace lungbench
