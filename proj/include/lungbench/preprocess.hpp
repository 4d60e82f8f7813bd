#pragma once

#include <array>
#include <string>

#include "lungbench/nifti_io.hpp"

namespace lungbench {

enum class NormalizeMode { PerVolumeZscore, None };

// Deterministic CT intensity pipeline, applied in the fixed order
// resample -> clip -> normalize (echoed into every run report).
struct PreprocessConfig {
    std::array<double, 3> target_spacing{0.7, 0.7, 1.25};
    double clip_lo = -1000.0;
    double clip_hi = 500.0;
    NormalizeMode normalize = NormalizeMode::PerVolumeZscore;
    double epsilon_std = 1e-6;

    void validate() const;  // clip_lo < clip_hi, spacing > 0
    std::string describe() const;
};

// Trilinear resample onto a grid with the given spacing. Output origin equals
// the input origin; output dims are ceil(extent_mm / target_spacing) per axis;
// sample positions outside the source take the nearest-edge value. Exact on
// constant and affine intensity fields.
VolumeGrid resample(const VolumeGrid& v, const std::array<double, 3>& target_spacing);

// Clamp to [clip_lo, clip_hi], then (optionally) z-score with the clipped
// volume's mean and population standard deviation. A std below epsilon_std
// yields an all-zero volume.
VolumeGrid clip_normalize(const VolumeGrid& v, const PreprocessConfig& cfg);

}  // namespace lungbench
