#include "lungbench/classify_eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "lungbench/errors.hpp"
#include "lungbench/util.hpp"

namespace lungbench {

namespace {

constexpr double kZ975 = 1.959963984540054;  // Phi^-1(0.975)

void split_scores(std::span<const ScoredRecord> records, std::vector<double>& pos,
                  std::vector<double>& neg) {
    for (const auto& r : records) {
        if (!std::isfinite(r.score)) throw InputError("auc: non-finite score");
        if (r.label == 1)
            pos.push_back(r.score);
        else if (r.label == 0)
            neg.push_back(r.score);
        else
            throw InputError("auc: label must be 0 or 1");
    }
}

// placement of x against a sorted sample: (#below + 0.5 * #ties) / n
double placement(const std::vector<double>& sorted, double x) {
    auto lo = std::lower_bound(sorted.begin(), sorted.end(), x);
    auto hi = std::upper_bound(sorted.begin(), sorted.end(), x);
    double below = static_cast<double>(lo - sorted.begin());
    double ties = static_cast<double>(hi - lo);
    return (below + 0.5 * ties) / static_cast<double>(sorted.size());
}

double sample_variance(const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return acc / static_cast<double>(v.size() - 1);
}

double z_for_level(double level) {
    if (level == 0.95) return kZ975;
    // Acklam/Beasley-Springer rational approximation of Phi^-1, good to ~1e-9.
    double p = 1.0 - (1.0 - level) / 2.0;
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double plow = 0.02425;
    double q, r;
    if (p < plow) {
        q = std::sqrt(-2 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    if (p <= 1 - plow) {
        q = p - 0.5;
        r = q * q;
        return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
               (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
    }
    q = std::sqrt(-2 * std::log(1 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
}

double auc_from_split(const std::vector<double>& pos, std::vector<double> neg_sorted) {
    std::sort(neg_sorted.begin(), neg_sorted.end());
    double acc = 0.0;  // concordant + 0.5*ties, accumulated as exact halves
    for (double x : pos) {
        auto lo = std::lower_bound(neg_sorted.begin(), neg_sorted.end(), x);
        auto hi = std::upper_bound(neg_sorted.begin(), neg_sorted.end(), x);
        acc += static_cast<double>(lo - neg_sorted.begin()) +
               0.5 * static_cast<double>(hi - lo);
    }
    return acc / (static_cast<double>(pos.size()) * static_cast<double>(neg_sorted.size()));
}

}  // namespace

double auc(std::span<const ScoredRecord> records) {
    std::vector<double> pos, neg;
    split_scores(records, pos, neg);
    if (pos.empty() || neg.empty())
        throw InputError("undefined AUC: need at least one positive and one negative record");
    return auc_from_split(pos, std::move(neg));
}

AucEstimate delong_ci(std::span<const ScoredRecord> records, double level) {
    if (!(level > 0.0 && level < 1.0)) throw InputError("delong_ci: level must be in (0,1)");
    std::vector<double> pos, neg;
    split_scores(records, pos, neg);
    if (pos.empty() || neg.empty())
        throw InputError("undefined AUC: need at least one positive and one negative record");
    if (pos.size() < 2 || neg.size() < 2)
        throw InputError("delong_ci: need at least two positives and two negatives, got " +
                         std::to_string(pos.size()) + "/" + std::to_string(neg.size()));

    std::vector<double> pos_sorted = pos, neg_sorted = neg;
    std::sort(pos_sorted.begin(), pos_sorted.end());
    std::sort(neg_sorted.begin(), neg_sorted.end());

    // structural components: V10 per positive, V01 per negative
    std::vector<double> v10(pos.size()), v01(neg.size());
    for (std::size_t i = 0; i < pos.size(); ++i) v10[i] = placement(neg_sorted, pos[i]);
    for (std::size_t j = 0; j < neg.size(); ++j) v01[j] = 1.0 - placement(pos_sorted, neg[j]);

    AucEstimate est;
    est.method = CiMethod::Delong;
    est.level = level;
    est.n_pos = pos.size();
    est.n_neg = neg.size();
    est.auc = auc_from_split(pos, neg);

    double variance = sample_variance(v10) / static_cast<double>(pos.size()) +
                      sample_variance(v01) / static_cast<double>(neg.size());
    if (variance < 0) variance = 0;
    if (variance == 0.0) {
        est.ci_low = est.auc;
        est.ci_high = est.auc;
        est.degenerate_variance = true;
        return est;
    }
    double half = z_for_level(level) * std::sqrt(variance);
    est.ci_low = std::max(0.0, est.auc - half);
    est.ci_high = std::min(1.0, est.auc + half);
    return est;
}

AucEstimate bootstrap_auc_ci(std::span<const ScoredRecord> records, int n_resamples,
                             std::uint64_t seed, int threads, double level) {
    if (n_resamples < 1) throw InputError("bootstrap_auc_ci: need at least one resample");
    if (!(level > 0.0 && level < 1.0)) throw InputError("bootstrap_auc_ci: level must be in (0,1)");
    std::vector<double> pos, neg;
    split_scores(records, pos, neg);
    if (pos.empty() || neg.empty())
        throw InputError("undefined AUC: need at least one positive and one negative record");

    std::vector<double> replicate_auc(static_cast<std::size_t>(n_resamples));
    parallel_for(static_cast<std::size_t>(n_resamples), threads, [&](std::size_t r) {
        Rng rng(mix_seed(seed, r));
        // stratified: class counts are preserved, so replicates are never
        // single-class
        std::vector<double> rpos(pos.size()), rneg(neg.size());
        for (std::size_t i = 0; i < pos.size(); ++i) rpos[i] = pos[rng.next_index(pos.size())];
        for (std::size_t j = 0; j < neg.size(); ++j) rneg[j] = neg[rng.next_index(neg.size())];
        replicate_auc[r] = auc_from_split(rpos, std::move(rneg));
    });

    AucEstimate est;
    est.method = CiMethod::Bootstrap;
    est.level = level;
    est.n_pos = pos.size();
    est.n_neg = neg.size();
    est.auc = auc_from_split(pos, std::move(neg));
    double alpha = (1.0 - level) / 2.0;
    est.ci_low = percentile(replicate_auc, alpha);
    est.ci_high = percentile(std::move(replicate_auc), 1.0 - alpha);
    return est;
}

std::vector<SubgroupRow> subgroup_report(std::span<const ScoredRecord> records,
                                         std::span<const SubjectMeta> meta,
                                         std::string_view group_by, CiMethod method,
                                         int n_resamples, std::uint64_t seed, int threads,
                                         double level) {
    bool attribute_known = false;
    std::map<std::string, const SubjectMeta*> by_scan;
    for (const auto& m : meta) {
        by_scan[m.scan_id] = &m;
        if (m.attribute(group_by)) attribute_known = true;
    }
    if (!attribute_known)
        throw InputError("unknown subgroup attribute '" + std::string(group_by) + "'");

    std::map<std::string, std::vector<ScoredRecord>> groups;
    for (const auto& r : records) {
        std::string value = "(missing)";
        if (auto it = by_scan.find(r.scan_id); it != by_scan.end())
            if (const std::string* v = it->second->attribute(group_by); v && !v->empty())
                value = *v;
        groups[value].push_back(r);
    }

    std::vector<SubgroupRow> rows;
    std::uint64_t group_index = 0;
    for (auto& [value, members] : groups) {
        SubgroupRow row;
        row.group = value;
        row.n = members.size();
        for (const auto& r : members) (r.label == 1 ? row.n_pos : row.n_neg)++;
        bool feasible = method == CiMethod::Delong ? (row.n_pos >= 2 && row.n_neg >= 2)
                                                   : (row.n_pos >= 1 && row.n_neg >= 1);
        if (!feasible) {
            row.status = "insufficient";
        } else {
            row.status = "ok";
            row.estimate = method == CiMethod::Delong
                               ? delong_ci(members, level)
                               : bootstrap_auc_ci(members, n_resamples,
                                                  mix_seed(seed, 0x5B5B + group_index), threads,
                                                  level);
        }
        rows.push_back(std::move(row));
        ++group_index;
    }
    // "(missing)" sorts to the end; everything else stays lexicographic
    std::stable_partition(rows.begin(), rows.end(),
                          [](const SubgroupRow& r) { return r.group != "(missing)"; });
    return rows;
}

std::vector<RocPoint> roc_points(std::span<const ScoredRecord> records) {
    std::vector<double> pos, neg;
    split_scores(records, pos, neg);
    if (pos.empty() || neg.empty())
        throw InputError("undefined AUC: need at least one positive and one negative record");

    std::vector<double> thresholds;
    thresholds.reserve(records.size());
    for (const auto& r : records) thresholds.push_back(r.score);
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    std::sort(pos.begin(), pos.end(), std::greater<>());
    std::sort(neg.begin(), neg.end(), std::greater<>());
    std::vector<RocPoint> points;
    points.push_back({0.0, 0.0});
    std::size_t tp = 0, fp = 0;
    for (double t : thresholds) {
        while (tp < pos.size() && pos[tp] >= t) ++tp;
        while (fp < neg.size() && neg[fp] >= t) ++fp;
        points.push_back({static_cast<double>(fp) / static_cast<double>(neg.size()),
                          static_cast<double>(tp) / static_cast<double>(pos.size())});
    }
    if (points.back().fpr != 1.0 || points.back().tpr != 1.0) points.push_back({1.0, 1.0});
    return points;
}

}  // namespace lungbench
