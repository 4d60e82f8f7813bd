#include "lungbench/detect_eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "lungbench/errors.hpp"
#include "lungbench/util.hpp"

namespace lungbench {

namespace {

// Seven fixed-rate sensitivities and CPM from the pooled lesion scores and FP
// probabilities; shared by froc() and the bootstrap replicates.
struct SweepResult {
    std::vector<FrocPoint> points;
    std::array<double, 7> rate_sensitivities{};
    double cpm = 0.0;
};

SweepResult sweep(std::vector<double> lesion_scores, std::vector<double> fp_probs,
                  std::size_t scan_count, std::size_t annotation_count) {
    SweepResult out;

    // Zero-probability candidates are inert: they provide no threshold and can
    // never be counted, so appending them leaves the curve unchanged.
    std::vector<double> thresholds;
    thresholds.reserve(lesion_scores.size() + fp_probs.size());
    for (double s : lesion_scores)
        if (s > 0.0) thresholds.push_back(s);
    for (double p : fp_probs)
        if (p > 0.0) thresholds.push_back(p);
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    if (!thresholds.empty()) {
        std::vector<double> scores_desc;
        scores_desc.reserve(lesion_scores.size());
        for (double s : lesion_scores)
            if (s > 0.0) scores_desc.push_back(s);
        std::sort(scores_desc.begin(), scores_desc.end(), std::greater<>());
        std::vector<double> fps_desc;
        fps_desc.reserve(fp_probs.size());
        for (double p : fp_probs)
            if (p > 0.0) fps_desc.push_back(p);
        std::sort(fps_desc.begin(), fps_desc.end(), std::greater<>());

        std::size_t hit_cursor = 0, fp_cursor = 0;
        out.points.reserve(thresholds.size());
        for (double t : thresholds) {
            while (hit_cursor < scores_desc.size() && scores_desc[hit_cursor] >= t) ++hit_cursor;
            while (fp_cursor < fps_desc.size() && fps_desc[fp_cursor] >= t) ++fp_cursor;
            FrocPoint p;
            p.threshold = t;
            p.sensitivity =
                static_cast<double>(hit_cursor) / static_cast<double>(annotation_count);
            p.fp_per_scan = static_cast<double>(fp_cursor) / static_cast<double>(scan_count);
            out.points.push_back(p);
        }
    }

    for (std::size_t i = 0; i < kFixedFpRates.size(); ++i)
        out.rate_sensitivities[i] = interpolate_sensitivity(out.points, kFixedFpRates[i]);
    double sum = 0.0;
    for (double s : out.rate_sensitivities) sum += s;
    out.cpm = sum / 7.0;
    return out;
}

struct LesionRef {
    const Annotation* annotation;
    std::size_t global_index;
};

}  // namespace

std::size_t MatchResult::count(CandidateStatus s) const {
    return static_cast<std::size_t>(std::count(statuses.begin(), statuses.end(), s));
}

std::size_t MatchResult::missed_count() const {
    std::size_t n = 0;
    for (const auto& scan : scans)
        for (double s : scan.lesion_scores)
            if (s == kMissed) ++n;
    return n;
}

MatchResult match(std::span<const Candidate> candidates,
                  std::span<const Annotation> annotations,
                  std::span<const Annotation> exclusions,
                  const ScanManifest& manifest,
                  const HitCriterion& crit) {
    MatchResult result;
    result.scan_count = manifest.size();
    result.annotation_count = annotations.size();
    result.scans.resize(manifest.size());
    result.statuses.assign(candidates.size(), CandidateStatus::FalsePositive);

    std::map<std::string_view, std::size_t> scan_index;
    for (std::size_t i = 0; i < manifest.scan_ids.size(); ++i)
        scan_index[manifest.scan_ids[i]] = i;
    auto lookup = [&](std::string_view id, const char* what) {
        auto it = scan_index.find(id);
        if (it == scan_index.end())
            throw InputError(std::string(what) + " references scan '" + std::string(id) +
                             "' absent from the scan manifest");
        return it->second;
    };

    std::vector<std::vector<LesionRef>> lesions_by_scan(manifest.size());
    std::vector<std::vector<const Annotation*>> exclusions_by_scan(manifest.size());
    std::vector<std::size_t> lesion_slot(annotations.size());
    for (std::size_t i = 0; i < annotations.size(); ++i) {
        std::size_t s = lookup(annotations[i].scan_id, "annotation");
        lesion_slot[i] = lesions_by_scan[s].size();
        lesions_by_scan[s].push_back({&annotations[i], i});
    }
    for (const auto& e : exclusions)
        exclusions_by_scan[lookup(e.scan_id, "exclusion")].push_back(&e);
    for (std::size_t s = 0; s < manifest.size(); ++s)
        result.scans[s].lesion_scores.assign(lesions_by_scan[s].size(), kMissed);

    for (std::size_t c = 0; c < candidates.size(); ++c) {
        const Candidate& cand = candidates[c];
        std::size_t s = lookup(cand.scan_id, "candidate");

        // best lesion: greatest overlap, then nearest center, then smallest id
        const LesionRef* best = nullptr;
        double best_overlap = -1.0;
        double best_dist = 0.0;
        for (const auto& lesion : lesions_by_scan[s]) {
            double overlap = hit_overlap(cand.location, lesion.annotation->geometry, crit);
            if (overlap < 0.0) continue;
            double dist = distance(cand.location, lesion.annotation->geometry.box.center);
            bool better = false;
            if (!best) {
                better = true;
            } else if (overlap != best_overlap) {
                better = overlap > best_overlap;
            } else if (dist != best_dist) {
                better = dist < best_dist;
            } else {
                better = lesion.annotation->nodule_id < best->annotation->nodule_id;
            }
            if (better) {
                best = &lesion;
                best_overlap = overlap;
                best_dist = dist;
            }
        }

        if (best) {
            result.statuses[c] = CandidateStatus::TruePositive;
            double& score = result.scans[s].lesion_scores[lesion_slot[best->global_index]];
            score = std::max(score, cand.probability);
            continue;
        }
        bool ignored = false;
        for (const auto* e : exclusions_by_scan[s]) {
            if (hit(cand.location, e->geometry, crit)) {
                ignored = true;
                break;
            }
        }
        if (ignored) {
            result.statuses[c] = CandidateStatus::Ignored;
        } else {
            result.statuses[c] = CandidateStatus::FalsePositive;
            result.scans[s].fp_probs.push_back(cand.probability);
        }
    }
    return result;
}

double interpolate_sensitivity(std::span<const FrocPoint> points, double target_fp_per_scan) {
    if (points.empty()) return 0.0;

    // Collapse duplicate rates to their best sensitivity; points arrive in
    // descending-threshold order, so rate and sensitivity are non-decreasing.
    std::vector<std::pair<double, double>> nodes;
    nodes.reserve(points.size());
    for (const auto& p : points) {
        if (!nodes.empty() && nodes.back().first == p.fp_per_scan)
            nodes.back().second = std::max(nodes.back().second, p.sensitivity);
        else
            nodes.emplace_back(p.fp_per_scan, p.sensitivity);
    }

    double f = target_fp_per_scan;
    if (f <= nodes.front().first) {
        if (nodes.front().first == 0.0) return nodes.front().second;
        return nodes.front().second * (f / nodes.front().first);
    }
    if (f >= nodes.back().first) return nodes.back().second;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        if (f <= nodes[i + 1].first) {
            double t = (f - nodes[i].first) / (nodes[i + 1].first - nodes[i].first);
            return nodes[i].second + t * (nodes[i + 1].second - nodes[i].second);
        }
    }
    return nodes.back().second;
}

FrocCurve froc(const MatchResult& m) {
    if (m.annotation_count == 0) throw InputError("froc: zero annotations in the match result");
    if (m.scan_count == 0) throw InputError("froc: zero scans in the manifest");

    std::vector<double> lesion_scores;
    std::vector<double> fp_probs;
    for (const auto& scan : m.scans) {
        for (double s : scan.lesion_scores)
            if (s != kMissed) lesion_scores.push_back(s);
        fp_probs.insert(fp_probs.end(), scan.fp_probs.begin(), scan.fp_probs.end());
    }

    SweepResult sw = sweep(std::move(lesion_scores), std::move(fp_probs), m.scan_count,
                           m.annotation_count);
    FrocCurve curve;
    curve.points = std::move(sw.points);
    curve.rate_sensitivities = sw.rate_sensitivities;
    curve.cpm = sw.cpm;
    return curve;
}

FrocBootstrap froc_bootstrap(const MatchResult& m, int n_resamples, std::uint64_t seed,
                             int threads) {
    if (n_resamples < 1) throw InputError("froc_bootstrap: need at least one resample");
    if (m.annotation_count == 0) throw InputError("froc_bootstrap: zero annotations");
    if (m.scan_count == 0) throw InputError("froc_bootstrap: zero scans");

    constexpr int kMaxRedraws = 100;
    std::size_t n_scans = m.scan_count;
    std::vector<std::array<double, 8>> replicate_values(static_cast<std::size_t>(n_resamples));
    std::vector<int> redraw_counts(static_cast<std::size_t>(n_resamples), 0);

    parallel_for(static_cast<std::size_t>(n_resamples), threads, [&](std::size_t r) {
        Rng rng(mix_seed(seed, r));
        for (int attempt = 0;; ++attempt) {
            std::vector<double> lesion_scores;
            std::vector<double> fp_probs;
            std::size_t annotations = 0;
            for (std::size_t d = 0; d < n_scans; ++d) {
                const ScanOutcome& scan = m.scans[rng.next_index(n_scans)];
                annotations += scan.lesion_scores.size();
                for (double s : scan.lesion_scores)
                    if (s != kMissed) lesion_scores.push_back(s);
                fp_probs.insert(fp_probs.end(), scan.fp_probs.begin(), scan.fp_probs.end());
            }
            if (annotations == 0) {
                if (attempt + 1 >= kMaxRedraws)
                    throw InputError(
                        "froc_bootstrap: replicate kept drawing zero annotations after " +
                        std::to_string(kMaxRedraws) + " retries; too few annotated scans");
                ++redraw_counts[r];
                continue;
            }
            SweepResult sw = sweep(std::move(lesion_scores), std::move(fp_probs), n_scans,
                                   annotations);
            for (std::size_t i = 0; i < 7; ++i) replicate_values[r][i] = sw.rate_sensitivities[i];
            replicate_values[r][7] = sw.cpm;
            break;
        }
    });

    FrocBootstrap out;
    out.resamples = n_resamples;
    out.seed = seed;
    out.redraws = std::accumulate(redraw_counts.begin(), redraw_counts.end(), 0);
    for (std::size_t i = 0; i < 8; ++i) {
        std::vector<double> values(replicate_values.size());
        for (std::size_t r = 0; r < replicate_values.size(); ++r) values[r] = replicate_values[r][i];
        double lo = percentile(values, 0.025);
        double hi = percentile(std::move(values), 0.975);
        if (i < 7)
            out.rate_ci[i] = {lo, hi};
        else
            out.cpm_ci = {lo, hi};
    }
    return out;
}

}  // namespace lungbench
