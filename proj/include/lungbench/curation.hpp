#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lungbench/detect_eval.hpp"
#include "lungbench/preprocess.hpp"
#include "lungbench/tabular_io.hpp"

namespace lungbench {

// How per-slice 2D boxes are linked into one nodule: boxes on slices within
// max_slice_gap of each other join when their in-plane IoU reaches min_2d_iou.
struct GroupingParams {
    double min_2d_iou = 0.2;
    int max_slice_gap = 1;
    double slice_thickness_mm = 1.25;

    void validate() const;
};

// Aggregates one scan's slice boxes into 3D annotations: width/height are the
// maxima across the linked slices, depth is the slice coverage times the
// thickness, the center is the midpoint of the union extents in-plane and of
// the slice span in z. Mixed scan ids throw.
std::vector<Annotation> aggregate_slices(std::span<const SliceBox2D> boxes,
                                         const GroupingParams& params);

// Selection rule for mined negatives: keep the top_k highest-probability
// non-hitting candidates, or all with probability >= min_probability.
struct NegativeSelector {
    std::optional<std::size_t> top_k;
    std::optional<double> min_probability;
};

// Candidates that hit no annotation under crit, ordered by probability
// descending with (scan_id, x, y, z) tie-breaks, then truncated per selector.
std::vector<Candidate> derive_negatives(std::span<const Candidate> candidates,
                                        std::span<const Annotation> annotations,
                                        const HitCriterion& crit,
                                        const NegativeSelector& selector);

// Confidence-stratified negative sampling. Strata partition [0,1] as
// [0,0.40), [0.40,0.70), [0.70,1.0] with equal per-stratum shares of the
// ratio * n_positive target.
struct SwsConfig {
    int neg_pos_ratio = 3;
    std::array<double, 2> bin_edges{0.40, 0.70};
    std::uint64_t seed = 0;

    void validate() const;
};

struct PatchManifestRow {
    std::string path;
    std::string scan_id;
    Point3 center;
    std::string patch_class;              // "nodule" | "non-nodule"
    std::optional<double> probability;    // source candidate confidence
};

struct SwsResult {
    std::vector<PatchManifestRow> rows;   // positives first, then negatives by stratum
    std::array<std::size_t, 3> stratum_targets{};
    std::array<std::size_t, 3> stratum_counts{};   // sampled from their own stratum
    std::array<std::size_t, 3> stratum_deficits{}; // shortfall before backfill
    std::size_t backfilled = 0;
    std::size_t unmet = 0;                // target still short after backfill
};

// Positives are all annotations (class "nodule"); negatives are sampled
// uniformly without replacement per stratum from the non-hitting candidates.
// Short strata are backfilled from the nearest bins and every deficit is
// reported. Deterministic for a given seed. Throws when no negatives exist.
SwsResult sws_sample(std::span<const Candidate> candidates,
                     std::span<const Annotation> annotations,
                     const HitCriterion& crit, const SwsConfig& cfg);

std::string emit_patch_manifest(std::span<const PatchManifestRow> rows);
std::vector<PatchManifestRow> parse_patch_manifest(std::string_view text);

// Resamples to cfg.target_spacing, crops patch_dims voxels centered on the
// voxel nearest to the world center (out-of-grid voxels pad with clip_lo
// before normalization), then applies clip_normalize to the patch. Throws
// when the patch would contain no in-bounds voxels.
VolumeGrid extract_patch(const VolumeGrid& volume, const Point3& center,
                         const PreprocessConfig& cfg,
                         const std::array<std::int64_t, 3>& patch_dims = {64, 64, 64});

// Same, for a volume already on the target grid (one resample per scan when
// extracting many patches).
VolumeGrid extract_patch_resampled(const VolumeGrid& resampled, const Point3& center,
                                   const PreprocessConfig& cfg,
                                   const std::array<std::int64_t, 3>& patch_dims = {64, 64, 64});

}  // namespace lungbench
