#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "lungbench/geometry.hpp"
#include "lungbench/tabular_io.hpp"

namespace lungbench {

enum class CandidateStatus { TruePositive, FalsePositive, Ignored };

// Outcome of candidate/lesion matching for one scan: the best candidate
// probability per lesion (kMissed when none) and the probabilities of the
// false-positive candidates.
struct ScanOutcome {
    std::vector<double> lesion_scores;
    std::vector<double> fp_probs;
};

inline constexpr double kMissed = -1.0;

struct MatchResult {
    std::vector<ScanOutcome> scans;            // manifest order
    std::vector<CandidateStatus> statuses;     // parallel to the candidate input
    std::size_t scan_count = 0;
    std::size_t annotation_count = 0;

    std::size_t count(CandidateStatus s) const;
    std::size_t missed_count() const;
};

// Per scan, each candidate is tested against that scan's annotations under
// crit. A candidate hitting at least one annotation is assigned to the single
// annotation with greatest overlap (ties: nearest center, then smallest
// nodule_id) and is TP; a non-hitting candidate that hits an exclusion entry
// is ignored; everything else is FP. Scan ids absent from the manifest throw.
MatchResult match(std::span<const Candidate> candidates,
                  std::span<const Annotation> annotations,
                  std::span<const Annotation> exclusions,
                  const ScanManifest& manifest,
                  const HitCriterion& crit);

struct FrocPoint {
    double threshold = 0.0;
    double fp_per_scan = 0.0;
    double sensitivity = 0.0;
};

inline constexpr std::array<double, 7> kFixedFpRates{0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0};

struct FrocCurve {
    std::vector<FrocPoint> points;                 // descending threshold
    std::array<double, 7> rate_sensitivities{};    // at kFixedFpRates
    double cpm = 0.0;                              // mean of the seven
};

// Threshold sweep over the descending unique positive probabilities present
// (lesion hit scores and FP candidates). Zero-probability candidates are
// inert: they contribute no threshold and never count as hits or FPs, so the
// curve is unchanged by adding them. Requires >= 1 annotation and >= 1 scan.
FrocCurve froc(const MatchResult& m);

// Piecewise-linear sensitivity at a target FP/scan rate. Below the smallest
// achieved rate the smallest point's sensitivity is scaled linearly from
// (0,0); above the largest the largest sensitivity extends as a constant.
// Duplicate-rate operating points collapse to the highest sensitivity.
double interpolate_sensitivity(std::span<const FrocPoint> points, double target_fp_per_scan);

struct FrocBootstrap {
    std::array<std::pair<double, double>, 7> rate_ci{};  // percentile 2.5/97.5
    std::pair<double, double> cpm_ci{};
    int resamples = 0;
    std::uint64_t seed = 0;
    int redraws = 0;  // degenerate zero-annotation replicates that were redrawn
};

// Scan-level bootstrap: resamples scans with replacement, recomputes the seven
// fixed-rate sensitivities and CPM per replicate, and reports percentile
// bounds. Fully determined by seed; replicate substreams make the result
// independent of thread count.
FrocBootstrap froc_bootstrap(const MatchResult& m, int n_resamples, std::uint64_t seed,
                             int threads = 1);

}  // namespace lungbench
