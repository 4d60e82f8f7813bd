#include "doctest.h"

#include <cmath>

#include "lungbench/classify_eval.hpp"
#include "lungbench/util.hpp"
#include "oracles/auc_oracle.hpp"

using namespace lungbench;

namespace {

std::vector<ScoredRecord> records_of(std::initializer_list<std::pair<double, int>> rows) {
    std::vector<ScoredRecord> out;
    int i = 0;
    for (auto [score, label] : rows) {
        ScoredRecord r;
        r.record_id = "r" + std::to_string(++i);
        r.scan_id = "s" + std::to_string(i);
        r.score = score;
        r.label = label;
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<ScoredRecord> gaussian_shift_records(Rng& rng, std::size_t n_pos, std::size_t n_neg,
                                                 double shift) {
    std::vector<ScoredRecord> out;
    auto sigmoid = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    for (std::size_t i = 0; i < n_pos; ++i) {
        ScoredRecord r;
        r.record_id = "p" + std::to_string(i);
        r.scan_id = r.record_id;
        r.score = sigmoid(rng.next_gaussian() + shift);
        r.label = 1;
        out.push_back(std::move(r));
    }
    for (std::size_t i = 0; i < n_neg; ++i) {
        ScoredRecord r;
        r.record_id = "n" + std::to_string(i);
        r.scan_id = r.record_id;
        r.score = sigmoid(rng.next_gaussian());
        r.label = 0;
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace

TEST_CASE("auc basics") {
    CHECK(auc(records_of({{0.1, 0}, {0.9, 1}})) == 1.0);
    CHECK(auc(records_of({{0.5, 0}, {0.5, 1}, {0.5, 0}, {0.5, 1}})) == 0.5);
    CHECK(auc(records_of({{0.8, 1}, {0.7, 0}, {0.6, 1}, {0.5, 0}})) == 0.75);
    CHECK_THROWS_WITH_AS(auc(records_of({{0.4, 1}, {0.6, 1}})),
                         doctest::Contains("undefined AUC"), InputError);
}

TEST_CASE("auc equals exhaustive pair counting for small n") {
    Rng rng(61);
    for (int trial = 0; trial < 300; ++trial) {
        std::size_t n = 2 + rng.next_index(11);
        std::vector<ScoredRecord> recs;
        bool has_pos = false, has_neg = false;
        for (std::size_t i = 0; i < n; ++i) {
            ScoredRecord r;
            r.record_id = std::to_string(i);
            r.score = 0.1 * static_cast<double>(rng.next_index(11));  // ties likely
            r.label = static_cast<int>(rng.next_index(2));
            has_pos |= r.label == 1;
            has_neg |= r.label == 0;
            recs.push_back(std::move(r));
        }
        if (!has_pos || !has_neg) continue;
        CHECK(auc(recs) == oracle::pair_counting_auc(recs));

        // label flip complements the statistic exactly
        auto flipped = recs;
        for (auto& r : flipped) r.label = 1 - r.label;
        CHECK(auc(recs) + auc(flipped) == 1.0);
    }
}

TEST_CASE("auc is invariant under strictly increasing transforms") {
    Rng rng(62);
    auto recs = gaussian_shift_records(rng, 40, 60, 0.8);
    double base = auc(recs);
    auto transformed = [&](double (*f)(double)) {
        auto copy = recs;
        for (auto& r : copy) r.score = f(r.score);
        return auc(copy);
    };
    CHECK(transformed([](double s) { return s * 0.5 + 0.25; }) == base);
    CHECK(transformed([](double s) { return s * s * s; }) == base);
    CHECK(transformed([](double s) { return std::atan(4.0 * s); }) == base);
}

// Expected values evaluated with the textbook DeLong formulas before this
// module was built: V10 = {1.0, 0.5}, V01 = {0.5, 1.0}, variance 0.125,
// CI [0.05704808782516102, 1.0] at the 0.95 level.
TEST_CASE("delong_ci on the four-record fixture") {
    auto recs = records_of({{0.8, 1}, {0.7, 0}, {0.6, 1}, {0.5, 0}});
    AucEstimate est = delong_ci(recs);
    CHECK(est.auc == 0.75);
    CHECK(est.n_pos == 2);
    CHECK(est.n_neg == 2);
    CHECK(est.ci_low == doctest::Approx(0.05704808782516102).epsilon(1e-12));
    CHECK(est.ci_high == 1.0);
    CHECK_FALSE(est.degenerate_variance);

    oracle::DelongRef ref = oracle::textbook_delong(recs);
    CHECK(est.ci_low == doctest::Approx(ref.ci_low).epsilon(1e-12));
    CHECK(est.ci_high == doctest::Approx(ref.ci_high).epsilon(1e-12));
}

TEST_CASE("delong_ci matches the textbook evaluation on random data") {
    Rng rng(63);
    for (int trial = 0; trial < 50; ++trial) {
        auto recs = gaussian_shift_records(rng, 5 + rng.next_index(30), 5 + rng.next_index(30),
                                           0.2 + rng.next_unit());
        AucEstimate est = delong_ci(recs);
        oracle::DelongRef ref = oracle::textbook_delong(recs);
        CHECK(est.auc == doctest::Approx(ref.auc).epsilon(1e-12));
        CHECK(est.ci_low == doctest::Approx(ref.ci_low).epsilon(1e-12));
        CHECK(est.ci_high == doctest::Approx(ref.ci_high).epsilon(1e-12));
        CHECK(est.ci_low <= est.auc);
        CHECK(est.ci_high >= est.auc);
    }
}

TEST_CASE("delong_ci degenerate cases") {
    SUBCASE("perfect separation collapses the interval") {
        auto recs = records_of({{0.9, 1}, {0.8, 1}, {0.2, 0}, {0.1, 0}});
        AucEstimate est = delong_ci(recs);
        CHECK(est.auc == 1.0);
        CHECK(est.degenerate_variance);
        CHECK(est.ci_low == 1.0);
        CHECK(est.ci_high == 1.0);
    }
    SUBCASE("transform invariance carries to the CI") {
        auto recs = records_of({{0.8, 1}, {0.7, 0}, {0.6, 1}, {0.5, 0}});
        auto scaled = recs;
        for (auto& r : scaled) r.score = r.score * 0.1 + 0.5;
        AucEstimate a = delong_ci(recs), b = delong_ci(scaled);
        CHECK(a.auc == b.auc);
        CHECK(a.ci_low == b.ci_low);
        CHECK(a.ci_high == b.ci_high);
    }
    SUBCASE("too few records per class") {
        CHECK_THROWS_AS(delong_ci(records_of({{0.8, 1}, {0.2, 0}, {0.3, 0}})), InputError);
        CHECK_THROWS_WITH_AS(delong_ci(records_of({{0.8, 1}, {0.9, 1}})),
                             doctest::Contains("undefined AUC"), InputError);
    }
}

TEST_CASE("bootstrap_auc_ci basics") {
    SUBCASE("one replicate collapses to that replicate") {
        auto recs = records_of({{0.8, 1}, {0.7, 0}, {0.6, 1}, {0.5, 0}});
        AucEstimate est = bootstrap_auc_ci(recs, 1, 99);
        CHECK(est.ci_low == est.ci_high);
    }
    SUBCASE("perfect separation gives [1,1]") {
        auto recs = records_of({{0.9, 1}, {0.8, 1}, {0.2, 0}, {0.1, 0}});
        AucEstimate est = bootstrap_auc_ci(recs, 200, 5);
        CHECK(est.ci_low == 1.0);
        CHECK(est.ci_high == 1.0);
    }
    SUBCASE("seed-reproducible and schedule-independent") {
        Rng rng(64);
        auto recs = gaussian_shift_records(rng, 50, 70, 0.9);
        AucEstimate a = bootstrap_auc_ci(recs, 500, 42, 1);
        AucEstimate b = bootstrap_auc_ci(recs, 500, 42, 1);
        AucEstimate c = bootstrap_auc_ci(recs, 500, 42, 8);
        CHECK(a.ci_low == b.ci_low);
        CHECK(a.ci_high == b.ci_high);
        CHECK(a.ci_low == c.ci_low);
        CHECK(a.ci_high == c.ci_high);
        AucEstimate d = bootstrap_auc_ci(recs, 500, 43, 1);
        CHECK((d.ci_low != a.ci_low || d.ci_high != a.ci_high));
    }
}

TEST_CASE("delong and bootstrap agree on a 200-record Gaussian-shift fixture") {
    Rng rng(65);
    auto recs = gaussian_shift_records(rng, 100, 100, 1.0);
    AucEstimate delong = delong_ci(recs);
    AucEstimate boot = bootstrap_auc_ci(recs, 2000, 7);

    // intervals overlap
    CHECK(delong.ci_low <= boot.ci_high);
    CHECK(boot.ci_low <= delong.ci_high);
    // widths agree within 25% relative
    double wd = delong.ci_high - delong.ci_low;
    double wb = boot.ci_high - boot.ci_low;
    CHECK(std::abs(wd - wb) / wd < 0.25);
}

TEST_CASE("subgroup_report") {
    auto meta = parse_metadata(
        "scan_id,gender\n"
        "s1,F\ns2,F\ns3,F\ns4,F\ns5,M\ns6,M\ns7,M\ns8,M\ns9,\n");
    std::vector<ScoredRecord> recs;
    auto add = [&](const std::string& scan, double score, int label) {
        ScoredRecord r;
        r.record_id = scan + "-r";
        r.scan_id = scan;
        r.score = score;
        r.label = label;
        recs.push_back(std::move(r));
    };
    // F: perfectly separated; M: random-ish
    add("s1", 0.9, 1);
    add("s2", 0.8, 1);
    add("s3", 0.2, 0);
    add("s4", 0.1, 0);
    add("s5", 0.6, 1);
    add("s6", 0.6, 0);
    add("s7", 0.4, 1);
    add("s8", 0.4, 0);

    SUBCASE("one group per value, missing last") {
        add("s9", 0.5, 1);  // meta value empty -> (missing)
        auto rows = subgroup_report(recs, meta, "gender", CiMethod::Delong);
        REQUIRE(rows.size() == 3);
        CHECK(rows[0].group == "F");
        CHECK(rows[1].group == "M");
        CHECK(rows[2].group == "(missing)");
        CHECK(rows[0].estimate->auc == 1.0);
        CHECK(rows[1].estimate->auc == 0.5);
        CHECK(rows[2].status == "insufficient");  // single record
    }
    SUBCASE("single-value attribute reproduces the ungrouped estimate") {
        auto meta_one = parse_metadata(
            "scan_id,site\ns1,A\ns2,A\ns3,A\ns4,A\ns5,A\ns6,A\ns7,A\ns8,A\n");
        auto rows = subgroup_report(recs, meta_one, "site", CiMethod::Delong);
        REQUIRE(rows.size() == 1);
        AucEstimate whole = delong_ci(recs);
        CHECK(rows[0].estimate->auc == whole.auc);
        CHECK(rows[0].estimate->ci_low == whole.ci_low);
        CHECK(rows[0].estimate->ci_high == whole.ci_high);
    }
    SUBCASE("all-positive group is insufficient, not dropped") {
        auto meta_skew =
            parse_metadata("scan_id,flag\ns1,yes\ns2,yes\ns5,no\ns6,no\ns7,no\ns8,no\n");
        std::vector<ScoredRecord> skew(recs.begin(), recs.begin() + 2);  // s1,s2: both positive
        skew.insert(skew.end(), recs.begin() + 4, recs.end());           // s5..s8: mixed
        auto rows = subgroup_report(skew, meta_skew, "flag", CiMethod::Delong);
        REQUIRE(rows.size() == 2);
        CHECK(rows[0].group == "no");
        CHECK(rows[1].group == "yes");
        CHECK(rows[1].status == "insufficient");
        CHECK_FALSE(rows[1].estimate.has_value());
    }
    SUBCASE("unknown attribute throws") {
        CHECK_THROWS_AS(subgroup_report(recs, meta, "age", CiMethod::Delong), InputError);
    }
}

TEST_CASE("roc_points spans (0,0) to (1,1) and areas match") {
    auto recs = records_of({{0.8, 1}, {0.7, 0}, {0.6, 1}, {0.5, 0}});
    auto pts = roc_points(recs);
    REQUIRE(pts.size() >= 2);
    CHECK(pts.front().fpr == 0.0);
    CHECK(pts.front().tpr == 0.0);
    CHECK(pts.back().fpr == 1.0);
    CHECK(pts.back().tpr == 1.0);

    // trapezoidal area under the empirical ROC equals the Mann-Whitney AUC
    double area = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i)
        area += (pts[i].fpr - pts[i - 1].fpr) * (pts[i].tpr + pts[i - 1].tpr) / 2.0;
    CHECK(area == doctest::Approx(auc(recs)).epsilon(1e-12));
}
