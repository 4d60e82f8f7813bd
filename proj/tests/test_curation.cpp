#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "lungbench/curation.hpp"
#include "lungbench/util.hpp"

using namespace lungbench;

namespace {

SliceBox2D slice_box(std::string scan, double slice, double x0, double y0, double x1, double y1) {
    SliceBox2D b;
    b.scan_id = std::move(scan);
    b.slice = slice;
    b.unit = SliceUnit::Index;
    b.x_min = x0;
    b.y_min = y0;
    b.x_max = x1;
    b.y_max = y1;
    return b;
}

Annotation sphere_annotation(std::string scan, std::string id, Point3 center, double diameter) {
    Annotation a;
    a.scan_id = std::move(scan);
    a.nodule_id = std::move(id);
    a.geometry.box = Box3::cube(center, diameter);
    a.geometry.diameter = diameter;
    return a;
}

const HitCriterion kSphere = HitCriterion::parse("center-sphere");

GroupingParams params_125() {
    GroupingParams p;
    p.slice_thickness_mm = 1.25;
    return p;
}

}  // namespace

TEST_CASE("aggregate_slices: one slice box becomes a one-slice nodule") {
    std::vector<SliceBox2D> boxes{slice_box("s1", 10, 0, 0, 4, 6)};
    auto nodules = aggregate_slices(boxes, params_125());
    REQUIRE(nodules.size() == 1);
    CHECK(nodules[0].geometry.box.size_x == 4.0);
    CHECK(nodules[0].geometry.box.size_y == 6.0);
    CHECK(nodules[0].geometry.box.size_z == 1.25);
    CHECK(nodules[0].geometry.box.center.z == doctest::Approx(12.5));
}

TEST_CASE("aggregate_slices: three stacked boxes use max extents and slice coverage") {
    // widths {4,6,5}, heights {3,3,4} across slices 10..12
    std::vector<SliceBox2D> boxes{
        slice_box("s1", 10, 0, 0, 4, 3),
        slice_box("s1", 11, -1, 0, 5, 3),
        slice_box("s1", 12, 0, -0.5, 5, 3.5),
    };
    auto nodules = aggregate_slices(boxes, params_125());
    REQUIRE(nodules.size() == 1);
    const Box3& box = nodules[0].geometry.box;
    CHECK(box.size_x == 6.0);
    CHECK(box.size_y == 4.0);
    CHECK(box.size_z == doctest::Approx(3.75).epsilon(1e-12));
    CHECK(box.center.x == 2.0);   // union [-1, 5]
    CHECK(box.center.y == 1.5);   // union [-0.5, 3.5]
    CHECK(box.center.z == doctest::Approx(11 * 1.25));
}

TEST_CASE("aggregate_slices: slice gaps beyond the limit split nodules") {
    std::vector<SliceBox2D> boxes{slice_box("s1", 10, 0, 0, 4, 4),
                                  slice_box("s1", 20, 0, 0, 4, 4)};
    auto nodules = aggregate_slices(boxes, params_125());
    CHECK(nodules.size() == 2);

    // a single missing slice is bridged by default (max_slice_gap = 1)
    std::vector<SliceBox2D> bridged{slice_box("s1", 10, 0, 0, 4, 4),
                                    slice_box("s1", 12, 0, 0, 4, 4)};
    auto joined = aggregate_slices(bridged, params_125());
    REQUIRE(joined.size() == 1);
    CHECK(joined[0].geometry.box.size_z == doctest::Approx(3 * 1.25));
}

TEST_CASE("aggregate_slices: low overlap starts a new nodule") {
    std::vector<SliceBox2D> boxes{slice_box("s1", 10, 0, 0, 4, 4),
                                  slice_box("s1", 11, 3.5, 3.5, 7.5, 7.5)};
    auto nodules = aggregate_slices(boxes, params_125());
    CHECK(nodules.size() == 2);  // IoU = 0.25/31.75 << 0.2
}

TEST_CASE("aggregate_slices: mixed scans and unit conversion") {
    std::vector<SliceBox2D> mixed{slice_box("s1", 10, 0, 0, 4, 4),
                                  slice_box("s2", 11, 0, 0, 4, 4)};
    CHECK_THROWS_AS(aggregate_slices(mixed, params_125()), InputError);

    std::vector<SliceBox2D> mm{slice_box("s1", 12.5, 0, 0, 4, 4),
                               slice_box("s1", 13.75, 0, 0, 4, 4)};
    for (auto& b : mm) b.unit = SliceUnit::PositionMm;
    auto nodules = aggregate_slices(mm, params_125());
    REQUIRE(nodules.size() == 1);  // 12.5/1.25 = slice 10, 13.75/1.25 = slice 11
    CHECK(nodules[0].geometry.box.size_z == doctest::Approx(2.5));
}

TEST_CASE("aggregate_slices: row order never matters and outputs contain inputs") {
    Rng rng(19);
    for (int trial = 0; trial < 50; ++trial) {
        // stack of nested boxes within a containing extent, one slice full-size
        std::vector<SliceBox2D> boxes;
        double cx = rng.next_unit() * 60 - 30, cy = rng.next_unit() * 60 - 30;
        double w = 6 + rng.next_unit() * 10, h = 6 + rng.next_unit() * 10;
        std::size_t n_slices = 2 + rng.next_index(6);
        std::size_t full = rng.next_index(n_slices);
        for (std::size_t s = 0; s < n_slices; ++s) {
            double fw = s == full ? 1.0 : 0.6 + 0.4 * rng.next_unit();
            double fh = s == full ? 1.0 : 0.6 + 0.4 * rng.next_unit();
            double ox = (rng.next_unit() - 0.5) * 0.2 * w * (1 - fw);
            double oy = (rng.next_unit() - 0.5) * 0.2 * h * (1 - fh);
            boxes.push_back(slice_box("s1", 30 + static_cast<double>(s), cx + ox - fw * w / 2,
                                      cy + oy - fh * h / 2, cx + ox + fw * w / 2,
                                      cy + oy + fh * h / 2));
        }
        auto sorted_out = aggregate_slices(boxes, params_125());

        auto shuffled = boxes;
        shuffle(shuffled, rng);
        auto shuffled_out = aggregate_slices(shuffled, params_125());

        REQUIRE(sorted_out.size() == shuffled_out.size());
        CHECK(sorted_out.size() <= boxes.size());
        for (std::size_t i = 0; i < sorted_out.size(); ++i) {
            CHECK(sorted_out[i].geometry.box.center.x == shuffled_out[i].geometry.box.center.x);
            CHECK(sorted_out[i].geometry.box.size_x == shuffled_out[i].geometry.box.size_x);
        }

        // containment: every contributing box lies inside the nodule in-plane
        REQUIRE(sorted_out.size() == 1);
        const Box3& out = sorted_out[0].geometry.box;
        for (const auto& b : boxes) {
            CHECK(b.x_min >= out.center.x - out.size_x / 2 - 1e-9);
            CHECK(b.x_max <= out.center.x + out.size_x / 2 + 1e-9);
            CHECK(b.y_min >= out.center.y - out.size_y / 2 - 1e-9);
            CHECK(b.y_max <= out.center.y + out.size_y / 2 + 1e-9);
        }
    }
}

TEST_CASE("derive_negatives") {
    std::vector<Annotation> anns{sphere_annotation("s1", "a", {0, 0, 0}, 10)};
    SUBCASE("every candidate hits: nothing to mine") {
        std::vector<Candidate> cands{{"s1", {0, 0, 0}, 0.9}, {"s1", {1, 0, 0}, 0.8}};
        CHECK(derive_negatives(cands, anns, kSphere, {std::nullopt, std::nullopt}).empty());
    }
    SUBCASE("top-k keeps the highest-probability misses") {
        std::vector<Candidate> cands{
            {"s1", {50, 0, 0}, 0.30}, {"s1", {60, 0, 0}, 0.90}, {"s1", {70, 0, 0}, 0.50},
            {"s1", {80, 0, 0}, 0.70}, {"s1", {90, 0, 0}, 0.10},
        };
        auto mined = derive_negatives(cands, anns, kSphere, {std::size_t{2}, std::nullopt});
        REQUIRE(mined.size() == 2);
        CHECK(mined[0].probability == 0.90);
        CHECK(mined[1].probability == 0.70);
    }
    SUBCASE("threshold selection and deterministic tie-breaks") {
        std::vector<Candidate> cands{
            {"s2", {0, 0, 0}, 0.5}, {"s1", {9, 9, 9}, 0.5}, {"s1", {8, 9, 9}, 0.5},
            {"s1", {50, 0, 0}, 0.2},
        };
        auto mined = derive_negatives(cands, anns, kSphere, {std::nullopt, 0.5});
        REQUIRE(mined.size() == 3);
        CHECK(mined[0].scan_id == "s1");
        CHECK(mined[0].location.x == 8.0);  // scan_id then x break the tie
        CHECK(mined[1].location.x == 9.0);
        CHECK(mined[2].scan_id == "s2");
        auto again = derive_negatives(cands, anns, kSphere, {std::nullopt, 0.5});
        CHECK(emit_candidates(mined) == emit_candidates(again));
    }
}

TEST_CASE("sws_sample: ratio 3 with abundant strata") {
    std::vector<Annotation> anns;
    for (int i = 0; i < 10; ++i)
        anns.push_back(sphere_annotation("s1", "a" + std::to_string(i),
                                         {static_cast<double>(100 * i), 500, 500}, 8));
    std::vector<Candidate> cands;
    for (int i = 0; i < 40; ++i) {  // plenty in every stratum, all far from lesions
        cands.push_back({"s1", {static_cast<double>(i), 0, 0}, 0.01 * i});          // [0, 0.4)
        cands.push_back({"s1", {static_cast<double>(i), 10, 0}, 0.4 + 0.007 * i});  // [0.4, 0.7)
        cands.push_back({"s1", {static_cast<double>(i), 20, 0}, 0.7 + 0.007 * i});  // [0.7, 1]
    }
    SwsConfig cfg;
    cfg.seed = 77;
    SwsResult res = sws_sample(cands, anns, kSphere, cfg);

    CHECK(res.rows.size() == 10 + 30);
    CHECK(res.stratum_targets == std::array<std::size_t, 3>{10, 10, 10});
    CHECK(res.stratum_counts == std::array<std::size_t, 3>{10, 10, 10});
    CHECK(res.stratum_deficits == std::array<std::size_t, 3>{0, 0, 0});
    CHECK(res.backfilled == 0);
    CHECK(res.unmet == 0);

    std::size_t positives = 0;
    std::set<std::string> paths;
    for (const auto& row : res.rows) {
        paths.insert(row.path);
        if (row.patch_class == "nodule") ++positives;
    }
    CHECK(positives == 10);
    CHECK(paths.size() == res.rows.size());  // unique paths

    // no sampled negative hits any annotation
    for (const auto& row : res.rows) {
        if (row.patch_class != "non-nodule") continue;
        for (const auto& a : anns) CHECK_FALSE(hit(row.center, a.geometry, kSphere));
    }

    // same seed, byte-identical manifest; different seed, different sample
    SwsResult again = sws_sample(cands, anns, kSphere, cfg);
    CHECK(emit_patch_manifest(res.rows) == emit_patch_manifest(again.rows));
    SwsConfig other = cfg;
    other.seed = 78;
    SwsResult different = sws_sample(cands, anns, kSphere, other);
    CHECK(emit_patch_manifest(res.rows) != emit_patch_manifest(different.rows));
}

TEST_CASE("sws_sample: deficits are backfilled from the nearest bins and logged") {
    std::vector<Annotation> anns{sphere_annotation("s1", "a", {500, 500, 500}, 8)};
    std::vector<Candidate> cands{
        {"s1", {0, 0, 0}, 0.1}, {"s1", {1, 0, 0}, 0.2}, {"s1", {2, 0, 0}, 0.3}};
    SwsConfig cfg;
    cfg.neg_pos_ratio = 1;
    cfg.seed = 5;
    SwsResult res = sws_sample(cands, anns, kSphere, cfg);
    // target one negative, shared out to stratum 0 (remainder rule)
    CHECK(res.stratum_targets == std::array<std::size_t, 3>{1, 0, 0});
    CHECK(res.rows.size() == 2);
    CHECK(res.unmet == 0);

    SwsConfig cfg3;
    cfg3.neg_pos_ratio = 3;
    cfg3.seed = 5;
    SwsResult res3 = sws_sample(cands, anns, kSphere, cfg3);
    // the single-stratum pool covers the deficits of the other two
    CHECK(res3.stratum_targets == std::array<std::size_t, 3>{1, 1, 1});
    CHECK(res3.stratum_counts == std::array<std::size_t, 3>{1, 0, 0});
    CHECK(res3.stratum_deficits == std::array<std::size_t, 3>{0, 1, 1});
    CHECK(res3.backfilled == 2);
    CHECK(res3.unmet == 0);
    CHECK(res3.rows.size() == 4);

    SUBCASE("no negatives at all is an error") {
        std::vector<Candidate> all_hits{{"s1", {500, 500, 500}, 0.9}};
        CHECK_THROWS_AS(sws_sample(all_hits, anns, kSphere, cfg), InputError);
    }
}

TEST_CASE("extract_patch: constant volume normalizes to zeros at full size") {
    // large enough that the 64-cube patch lies fully inside the volume
    VolumeGrid v;
    v.frame.dims = {70, 70, 80};
    v.frame.spacing = {1.0, 1.0, 1.25};
    v.data.assign(70 * 70 * 80, 250.0);
    PreprocessConfig cfg;
    VolumeGrid patch = extract_patch(v, {35, 35, 50}, cfg);
    CHECK(patch.frame.dims == std::array<std::int64_t, 3>{64, 64, 64});
    CHECK(patch.frame.spacing == cfg.target_spacing);
    for (double x : patch.data) CHECK(x == 0.0);
}

TEST_CASE("extract_patch: corner centers pad with clip_lo before normalization") {
    VolumeGrid v;
    v.frame.dims = {30, 30, 30};
    v.frame.spacing = {1.0, 1.0, 1.0};
    v.data.assign(30 * 30 * 30, 100.0);
    PreprocessConfig cfg;
    cfg.normalize = NormalizeMode::None;
    VolumeGrid patch = extract_patch(v, {0, 0, 0}, cfg, {16, 16, 16});
    CHECK(patch.frame.dims == std::array<std::int64_t, 3>{16, 16, 16});
    CHECK(patch.at(0, 0, 0) == cfg.clip_lo);   // outside the volume
    CHECK(patch.at(8, 8, 8) == 100.0);         // the snapped center voxel
    CHECK(patch.at(15, 15, 15) == 100.0);

    CHECK_THROWS_WITH_AS(extract_patch(v, {-500, -500, -500}, cfg, {16, 16, 16}),
                         doctest::Contains("outside the volume"), InputError);
}

TEST_CASE("extract_patch: center voxel equals the trilinear sample at the center") {
    // affine field over a unit grid
    VolumeGrid v;
    v.frame.dims = {40, 40, 40};
    v.frame.spacing = {1.0, 1.0, 1.0};
    v.data.resize(40 * 40 * 40);
    for (std::int64_t k = 0; k < 40; ++k)
        for (std::int64_t j = 0; j < 40; ++j)
            for (std::int64_t i = 0; i < 40; ++i)
                v.at(i, j, k) = 2.0 * static_cast<double>(i) + 3.0 * static_cast<double>(j) -
                                static_cast<double>(k) + 5.0;

    PreprocessConfig cfg;
    cfg.normalize = NormalizeMode::None;
    cfg.clip_lo = -10000;
    cfg.clip_hi = 10000;
    // world center on the resampled lattice: voxel (20, 20, 10) of the 0.7/1.25 grid
    Point3 center{20 * 0.7, 20 * 0.7, 10 * 1.25};
    VolumeGrid patch = extract_patch(v, center, cfg, {8, 8, 8});
    double expected = 2.0 * center.x + 3.0 * center.y - center.z + 5.0;
    CHECK(patch.at(4, 4, 4) == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("patch manifest round-trip") {
    std::vector<PatchManifestRow> rows;
    PatchManifestRow r;
    r.path = "patch_000001_nodule_s1.nii.gz";
    r.scan_id = "s1";
    r.center = {1.5, -2.0, 3.25};
    r.patch_class = "nodule";
    rows.push_back(r);
    r.path = "patch_000002_non-nodule_s1.nii.gz";
    r.patch_class = "non-nodule";
    r.probability = 0.85;
    rows.push_back(r);

    auto text = emit_patch_manifest(rows);
    auto back = parse_patch_manifest(text);
    REQUIRE(back.size() == 2);
    CHECK(back[0].center.z == 3.25);
    CHECK_FALSE(back[0].probability.has_value());
    CHECK(back[1].probability == 0.85);
    CHECK(emit_patch_manifest(back) == text);

    CHECK_THROWS_AS(parse_patch_manifest("path,scan_id,x\n"), ParseError);
}
