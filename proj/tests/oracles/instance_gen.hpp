// Random detection-instance generator shared by the unit and acceptance
// suites. Coordinates snap to a coarse grid and probabilities to 0.05 steps so
// ties and boundary cases actually occur.
#pragma once

#include <string>
#include <vector>

#include "lungbench/tabular_io.hpp"
#include "lungbench/util.hpp"

namespace oracle {

struct DetectInstance {
    lungbench::ScanManifest manifest;
    std::vector<lungbench::Annotation> annotations;
    std::vector<lungbench::Annotation> exclusions;
    std::vector<lungbench::Candidate> candidates;
    lungbench::HitCriterion criterion;
};

inline DetectInstance random_detect_instance(lungbench::Rng& rng, std::size_t max_scans = 20,
                                             std::size_t max_annotations = 10,
                                             std::size_t max_candidates = 50) {
    using namespace lungbench;
    DetectInstance inst;

    switch (rng.next_index(3)) {
        case 0:
            inst.criterion = HitCriterion::parse("center-sphere");
            break;
        case 1:
            inst.criterion = HitCriterion::parse("center-box");
            break;
        default:
            inst.criterion = HitCriterion::parse("iou:0.1");
            inst.criterion.probe_size_mm = 5.0;
            break;
    }

    std::size_t n_scans = 1 + rng.next_index(max_scans);
    for (std::size_t s = 0; s < n_scans; ++s)
        inst.manifest.scan_ids.push_back("scan" + std::to_string(s));

    auto grid_coord = [&](double lo, double hi) {
        double steps = (hi - lo) / 0.5;
        return lo + 0.5 * static_cast<double>(rng.next_index(static_cast<std::size_t>(steps)));
    };
    auto grid_prob = [&] { return 0.05 * static_cast<double>(rng.next_index(21)); };

    std::size_t n_ann = 1 + rng.next_index(max_annotations);  // froc needs >= 1
    for (std::size_t a = 0; a < n_ann; ++a) {
        Annotation ann;
        ann.scan_id = inst.manifest.scan_ids[rng.next_index(n_scans)];
        ann.nodule_id = "n" + std::to_string(a);
        double d = 4.0 + static_cast<double>(rng.next_index(13));  // 4..16 mm
        Point3 center{grid_coord(-60, 60), grid_coord(-60, 60), grid_coord(-60, 60)};
        ann.geometry.box = Box3::cube(center, d);
        ann.geometry.diameter = d;
        inst.annotations.push_back(std::move(ann));
    }

    std::size_t n_excl = rng.next_index(4);
    for (std::size_t e = 0; e < n_excl; ++e) {
        Annotation ex;
        ex.scan_id = inst.manifest.scan_ids[rng.next_index(n_scans)];
        ex.nodule_id = "x" + std::to_string(e);
        double d = 4.0 + static_cast<double>(rng.next_index(13));
        Point3 center{grid_coord(-80, 80), grid_coord(-80, 80), grid_coord(-80, 80)};
        ex.geometry.box = Box3::cube(center, d);
        ex.geometry.diameter = d;
        inst.exclusions.push_back(std::move(ex));
    }

    std::size_t n_cand = rng.next_index(max_candidates + 1);
    for (std::size_t c = 0; c < n_cand; ++c) {
        Candidate cand;
        cand.probability = grid_prob();  // includes exact 0 and 1
        std::size_t kind = rng.next_index(4);
        if (kind < 2 && !inst.annotations.empty()) {
            // on or near a lesion (sometimes exactly at its center)
            const Annotation& target = inst.annotations[rng.next_index(inst.annotations.size())];
            cand.scan_id = target.scan_id;
            Point3 p = target.geometry.box.center;
            if (kind == 1) {
                p.x += 0.5 * static_cast<double>(rng.next_index(9));
                p.y += 0.5 * static_cast<double>(rng.next_index(9));
            }
            cand.location = p;
        } else if (kind == 2 && !inst.exclusions.empty()) {
            const Annotation& target = inst.exclusions[rng.next_index(inst.exclusions.size())];
            cand.scan_id = target.scan_id;
            cand.location = target.geometry.box.center;
        } else {
            cand.scan_id = inst.manifest.scan_ids[rng.next_index(n_scans)];
            cand.location = {grid_coord(-100, 100), grid_coord(-100, 100), grid_coord(-100, 100)};
        }
        inst.candidates.push_back(std::move(cand));
    }
    return inst;
}

}  // namespace oracle
