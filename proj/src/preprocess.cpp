#include "lungbench/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "lungbench/util.hpp"

namespace lungbench {

namespace {

std::int64_t output_dim(std::int64_t n, double spacing_in, double spacing_out) {
    double ratio = static_cast<double>(n) * spacing_in / spacing_out;
    double rounded = std::round(ratio);
    // identity resamples must keep their dims despite float rounding
    if (std::abs(ratio - rounded) < 1e-9) return static_cast<std::int64_t>(rounded);
    return static_cast<std::int64_t>(std::ceil(ratio));
}

double sample_trilinear(const VolumeGrid& v, double fx, double fy, double fz) {
    const auto& d = v.frame.dims;
    // clamp-to-edge for out-of-grid samples
    fx = std::clamp(fx, 0.0, static_cast<double>(d[0] - 1));
    fy = std::clamp(fy, 0.0, static_cast<double>(d[1] - 1));
    fz = std::clamp(fz, 0.0, static_cast<double>(d[2] - 1));
    auto i0 = static_cast<std::int64_t>(std::floor(fx));
    auto j0 = static_cast<std::int64_t>(std::floor(fy));
    auto k0 = static_cast<std::int64_t>(std::floor(fz));
    std::int64_t i1 = std::min(i0 + 1, d[0] - 1);
    std::int64_t j1 = std::min(j0 + 1, d[1] - 1);
    std::int64_t k1 = std::min(k0 + 1, d[2] - 1);
    double tx = fx - static_cast<double>(i0);
    double ty = fy - static_cast<double>(j0);
    double tz = fz - static_cast<double>(k0);

    double c000 = v.at(i0, j0, k0), c100 = v.at(i1, j0, k0);
    double c010 = v.at(i0, j1, k0), c110 = v.at(i1, j1, k0);
    double c001 = v.at(i0, j0, k1), c101 = v.at(i1, j0, k1);
    double c011 = v.at(i0, j1, k1), c111 = v.at(i1, j1, k1);

    double c00 = c000 + tx * (c100 - c000);
    double c10 = c010 + tx * (c110 - c010);
    double c01 = c001 + tx * (c101 - c001);
    double c11 = c011 + tx * (c111 - c011);
    double c0 = c00 + ty * (c10 - c00);
    double c1 = c01 + ty * (c11 - c01);
    return c0 + tz * (c1 - c0);
}

}  // namespace

void PreprocessConfig::validate() const {
    for (double s : target_spacing)
        if (!(s > 0) || !std::isfinite(s)) throw InputError("preprocess: spacing must be positive");
    if (!(clip_lo < clip_hi)) throw InputError("preprocess: clip_lo must be below clip_hi");
    if (!(epsilon_std > 0)) throw InputError("preprocess: epsilon_std must be positive");
}

std::string PreprocessConfig::describe() const {
    return "spacing=" + format_double(target_spacing[0]) + "x" + format_double(target_spacing[1]) +
           "x" + format_double(target_spacing[2]) + ";clip=[" + format_double(clip_lo) + "," +
           format_double(clip_hi) + "];normalize=" +
           (normalize == NormalizeMode::PerVolumeZscore ? "per-volume-zscore" : "none");
}

VolumeGrid resample(const VolumeGrid& v, const std::array<double, 3>& target_spacing) {
    if (!v.valid()) throw InputError("resample: invalid volume");
    for (double s : target_spacing)
        if (!(s > 0) || !std::isfinite(s)) throw InputError("resample: spacing must be positive");

    VolumeGrid out;
    out.frame.origin = v.frame.origin;
    out.frame.spacing = target_spacing;
    for (int a = 0; a < 3; ++a)
        out.frame.dims[a] = output_dim(v.frame.dims[a], v.frame.spacing[a], target_spacing[a]);
    out.data.resize(static_cast<std::size_t>(out.frame.dims[0]) *
                    static_cast<std::size_t>(out.frame.dims[1]) *
                    static_cast<std::size_t>(out.frame.dims[2]));

    // Shared origin makes the source coordinate a pure per-axis scale of the
    // output index.
    std::array<double, 3> scale{target_spacing[0] / v.frame.spacing[0],
                                target_spacing[1] / v.frame.spacing[1],
                                target_spacing[2] / v.frame.spacing[2]};
    std::size_t idx = 0;
    for (std::int64_t k = 0; k < out.frame.dims[2]; ++k) {
        double fz = static_cast<double>(k) * scale[2];
        for (std::int64_t j = 0; j < out.frame.dims[1]; ++j) {
            double fy = static_cast<double>(j) * scale[1];
            for (std::int64_t i = 0; i < out.frame.dims[0]; ++i, ++idx) {
                double fx = static_cast<double>(i) * scale[0];
                out.data[idx] = sample_trilinear(v, fx, fy, fz);
            }
        }
    }
    return out;
}

VolumeGrid clip_normalize(const VolumeGrid& v, const PreprocessConfig& cfg) {
    if (!v.valid()) throw InputError("clip_normalize: invalid volume");
    cfg.validate();

    VolumeGrid out = v;
    for (double& x : out.data) x = std::clamp(x, cfg.clip_lo, cfg.clip_hi);
    if (cfg.normalize == NormalizeMode::None) return out;

    double n = static_cast<double>(out.data.size());
    double mean = 0.0;
    for (double x : out.data) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : out.data) var += (x - mean) * (x - mean);
    var /= n;  // population variance
    double sd = std::sqrt(var);
    if (sd < cfg.epsilon_std) {
        std::fill(out.data.begin(), out.data.end(), 0.0);
        return out;
    }
    for (double& x : out.data) x = (x - mean) / sd;
    return out;
}

}  // namespace lungbench
