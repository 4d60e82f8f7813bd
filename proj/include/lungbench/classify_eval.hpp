#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lungbench/tabular_io.hpp"

namespace lungbench {

enum class CiMethod { Delong, Bootstrap };

struct AucEstimate {
    double auc = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    CiMethod method = CiMethod::Delong;
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
    bool degenerate_variance = false;  // DeLong variance was zero; CI collapsed
    double level = 0.95;
};

// Mann-Whitney AUC: concordant positive/negative pairs count 1, ties 0.5,
// divided by n_pos * n_neg. Throws InputError on single-class input.
double auc(std::span<const ScoredRecord> records);

// Analytic CI from the DeLong structural components: per-positive V10 and
// per-negative V01 placement means, variance = var(V10)/n_pos + var(V01)/n_neg
// (sample variances), normal-approximation interval clamped to [0,1].
// Requires n_pos >= 2 and n_neg >= 2.
AucEstimate delong_ci(std::span<const ScoredRecord> records, double level = 0.95);

// Percentile bootstrap, stratified to preserve n_pos/n_neg per replicate.
// Deterministic in seed and independent of thread count.
AucEstimate bootstrap_auc_ci(std::span<const ScoredRecord> records, int n_resamples,
                             std::uint64_t seed, int threads = 1, double level = 0.95);

struct SubgroupRow {
    std::string group;
    std::size_t n = 0;
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
    std::optional<AucEstimate> estimate;  // absent when the group is insufficient
    std::string status;                   // "ok" | "insufficient"
};

// One row per distinct value of the given attribute (missing/empty values
// group under "(missing)"). Groups failing the CI method's preconditions are
// reported as "insufficient" rather than dropped. Unknown attribute throws.
std::vector<SubgroupRow> subgroup_report(std::span<const ScoredRecord> records,
                                         std::span<const SubjectMeta> meta,
                                         std::string_view group_by, CiMethod method,
                                         int n_resamples = 2000, std::uint64_t seed = 0,
                                         int threads = 1, double level = 0.95);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

// Empirical ROC polyline (threshold swept over unique scores, descending),
// starting at (0,0) and ending at (1,1).
std::vector<RocPoint> roc_points(std::span<const ScoredRecord> records);

}  // namespace lungbench
