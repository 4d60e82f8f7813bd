#include "lungbench/curation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "lungbench/util.hpp"

namespace lungbench {

namespace {

double iou2d(const SliceBox2D& a, const SliceBox2D& b) {
    double ix = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    double iy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    if (ix <= 0 || iy <= 0) return 0.0;
    double inter = ix * iy;
    double uni = a.width() * a.height() + b.width() * b.height() - inter;
    return inter / uni;
}

struct Track {
    std::vector<SliceBox2D> boxes;
    std::int64_t first_slice = 0;
    std::int64_t last_slice = 0;
};

bool candidate_less(const Candidate& a, const Candidate& b) {
    if (a.scan_id != b.scan_id) return a.scan_id < b.scan_id;
    if (a.location.x != b.location.x) return a.location.x < b.location.x;
    if (a.location.y != b.location.y) return a.location.y < b.location.y;
    if (a.location.z != b.location.z) return a.location.z < b.location.z;
    return a.probability < b.probability;
}

bool hits_any(const Candidate& c, std::span<const Annotation> annotations,
              const HitCriterion& crit) {
    for (const auto& a : annotations)
        if (a.scan_id == c.scan_id && hit(c.location, a.geometry, crit)) return true;
    return false;
}

std::string patch_path(std::size_t seq, const std::string& patch_class,
                       const std::string& scan_id) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "patch_%06zu", seq);
    return std::string(buf) + "_" + patch_class + "_" + scan_id + ".nii.gz";
}

}  // namespace

void GroupingParams::validate() const {
    if (!(min_2d_iou > 0.0) || min_2d_iou > 1.0)
        throw InputError("grouping: min_2d_iou must be in (0,1]");
    if (max_slice_gap < 0) throw InputError("grouping: max_slice_gap must be >= 0");
    if (!(slice_thickness_mm > 0)) throw InputError("grouping: slice thickness must be positive");
}

std::vector<Annotation> aggregate_slices(std::span<const SliceBox2D> boxes,
                                         const GroupingParams& params) {
    params.validate();
    if (boxes.empty()) return {};
    const std::string& scan_id = boxes.front().scan_id;
    SliceUnit unit = boxes.front().unit;
    for (const auto& b : boxes) {
        if (b.scan_id != scan_id)
            throw InputError("aggregate_slices: mixed scan ids ('" + scan_id + "' vs '" +
                             b.scan_id + "'); group by scan first");
        if (b.unit != unit) throw InputError("aggregate_slices: mixed slice units");
    }

    // canonical order makes the result independent of input row order
    std::vector<SliceBox2D> sorted(boxes.begin(), boxes.end());
    for (auto& b : sorted) {
        if (b.unit == SliceUnit::PositionMm) {
            b.slice = std::round(b.slice / params.slice_thickness_mm);
            b.unit = SliceUnit::Index;
        }
    }
    std::sort(sorted.begin(), sorted.end(), [](const SliceBox2D& a, const SliceBox2D& b) {
        if (a.slice != b.slice) return a.slice < b.slice;
        if (a.x_min != b.x_min) return a.x_min < b.x_min;
        if (a.y_min != b.y_min) return a.y_min < b.y_min;
        if (a.x_max != b.x_max) return a.x_max < b.x_max;
        return a.y_max < b.y_max;
    });

    std::vector<Track> tracks;
    for (const auto& box : sorted) {
        auto slice = static_cast<std::int64_t>(box.slice);
        Track* best = nullptr;
        double best_iou = 0.0;
        std::int64_t best_gap = 0;
        for (auto& track : tracks) {
            std::int64_t gap = slice - track.last_slice;
            if (gap < 1 || gap > params.max_slice_gap + 1) continue;  // one box per slice per track
            double overlap = iou2d(track.boxes.back(), box);
            if (overlap < params.min_2d_iou) continue;
            bool better =
                !best || overlap > best_iou || (overlap == best_iou && gap < best_gap);
            if (better) {
                best = &track;
                best_iou = overlap;
                best_gap = gap;
            }
        }
        if (best) {
            best->boxes.push_back(box);
            best->last_slice = slice;
        } else {
            tracks.push_back({{box}, slice, slice});
        }
    }

    std::vector<Annotation> out;
    out.reserve(tracks.size());
    std::size_t seq = 0;
    for (const auto& track : tracks) {
        double width = 0.0, height = 0.0;
        double x_lo = track.boxes.front().x_min, x_hi = track.boxes.front().x_max;
        double y_lo = track.boxes.front().y_min, y_hi = track.boxes.front().y_max;
        for (const auto& b : track.boxes) {
            width = std::max(width, b.width());
            height = std::max(height, b.height());
            x_lo = std::min(x_lo, b.x_min);
            x_hi = std::max(x_hi, b.x_max);
            y_lo = std::min(y_lo, b.y_min);
            y_hi = std::max(y_hi, b.y_max);
        }
        double depth =
            static_cast<double>(track.last_slice - track.first_slice + 1) * params.slice_thickness_mm;
        Annotation a;
        a.scan_id = scan_id;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "g%04zu", ++seq);
        a.nodule_id = buf;
        a.geometry.box.center = {(x_lo + x_hi) / 2.0, (y_lo + y_hi) / 2.0,
                                 (static_cast<double>(track.first_slice + track.last_slice) / 2.0) *
                                     params.slice_thickness_mm};
        a.geometry.box.size_x = width;
        a.geometry.box.size_y = height;
        a.geometry.box.size_z = depth;
        out.push_back(std::move(a));
    }
    return out;
}

std::vector<Candidate> derive_negatives(std::span<const Candidate> candidates,
                                        std::span<const Annotation> annotations,
                                        const HitCriterion& crit,
                                        const NegativeSelector& selector) {
    std::vector<Candidate> negatives;
    for (const auto& c : candidates)
        if (!hits_any(c, annotations, crit)) negatives.push_back(c);

    std::sort(negatives.begin(), negatives.end(), [](const Candidate& a, const Candidate& b) {
        if (a.probability != b.probability) return a.probability > b.probability;
        return candidate_less(a, b);
    });
    if (selector.min_probability) {
        auto cut = std::find_if(negatives.begin(), negatives.end(), [&](const Candidate& c) {
            return c.probability < *selector.min_probability;
        });
        negatives.erase(cut, negatives.end());
    }
    if (selector.top_k && negatives.size() > *selector.top_k)
        negatives.resize(*selector.top_k);
    return negatives;
}

void SwsConfig::validate() const {
    if (neg_pos_ratio < 1) throw InputError("sws: negative:positive ratio must be >= 1");
    if (!(bin_edges[0] > 0.0) || !(bin_edges[1] > bin_edges[0]) || !(bin_edges[1] < 1.0))
        throw InputError("sws: stratum edges must satisfy 0 < e0 < e1 < 1");
}

SwsResult sws_sample(std::span<const Candidate> candidates,
                     std::span<const Annotation> annotations,
                     const HitCriterion& crit, const SwsConfig& cfg) {
    cfg.validate();
    if (annotations.empty()) throw InputError("sws: need at least one annotation");
    if (candidates.empty()) throw InputError("sws: candidate set is empty");

    // strata: [0,e0), [e0,e1), [e1,1.0]
    std::array<std::vector<Candidate>, 3> strata;
    for (const auto& c : candidates) {
        if (hits_any(c, annotations, crit)) continue;
        int s = c.probability < cfg.bin_edges[0] ? 0 : (c.probability < cfg.bin_edges[1] ? 1 : 2);
        strata[s].push_back(c);
    }
    std::size_t available = strata[0].size() + strata[1].size() + strata[2].size();
    if (available == 0)
        throw InputError("sws: no negatives available (every candidate hits an annotation)");

    SwsResult result;
    std::size_t total_target =
        static_cast<std::size_t>(cfg.neg_pos_ratio) * annotations.size();
    std::size_t base = total_target / 3;
    std::size_t remainder = total_target - base * 3;
    for (int s = 0; s < 3; ++s)
        result.stratum_targets[s] = base + (static_cast<std::size_t>(s) < remainder ? 1 : 0);

    // single seeded generator; strata are shuffled in order so results are
    // reproducible bit-for-bit
    Rng rng(cfg.seed);
    std::array<std::vector<Candidate>, 3> shuffled;
    for (int s = 0; s < 3; ++s) {
        std::sort(strata[s].begin(), strata[s].end(), candidate_less);
        shuffled[s] = std::move(strata[s]);
        shuffle(shuffled[s], rng);
    }

    std::array<std::size_t, 3> taken{};
    for (int s = 0; s < 3; ++s) {
        taken[s] = std::min(result.stratum_targets[s], shuffled[s].size());
        result.stratum_counts[s] = taken[s];
        result.stratum_deficits[s] = result.stratum_targets[s] - taken[s];
    }

    // backfill deficits from the nearest bins (lower bin wins ties), drawing
    // from the donors' unsampled tails
    std::array<std::array<int, 2>, 3> donors{{{1, 2}, {0, 2}, {1, 0}}};
    std::array<std::size_t, 3> extra{};
    for (int s = 0; s < 3; ++s) {
        std::size_t need = result.stratum_deficits[s];
        for (int d : donors[s]) {
            if (need == 0) break;
            std::size_t spare = shuffled[d].size() - taken[d] - extra[d];
            std::size_t take = std::min(need, spare);
            extra[d] += take;
            need -= take;
            result.backfilled += take;
        }
        result.unmet += need;
    }

    // manifest rows: positives in annotation order, then negatives by stratum
    std::size_t seq = 0;
    for (const auto& a : annotations) {
        PatchManifestRow row;
        row.scan_id = a.scan_id;
        row.center = a.geometry.box.center;
        row.patch_class = "nodule";
        row.path = patch_path(++seq, row.patch_class, row.scan_id);
        result.rows.push_back(std::move(row));
    }
    for (int s = 0; s < 3; ++s) {
        std::size_t count = taken[s] + extra[s];
        for (std::size_t i = 0; i < count; ++i) {
            const Candidate& c = shuffled[s][i];
            PatchManifestRow row;
            row.scan_id = c.scan_id;
            row.center = c.location;
            row.patch_class = "non-nodule";
            row.probability = c.probability;
            row.path = patch_path(++seq, row.patch_class, row.scan_id);
            result.rows.push_back(std::move(row));
        }
    }
    return result;
}

std::string emit_patch_manifest(std::span<const PatchManifestRow> rows) {
    std::ostringstream out;
    out << "path,scan_id,x,y,z,class,probability\n";
    for (const auto& r : rows) {
        out << r.path << ',' << r.scan_id << ',' << format_double(r.center.x) << ','
            << format_double(r.center.y) << ',' << format_double(r.center.z) << ','
            << r.patch_class << ',';
        if (r.probability) out << format_double(*r.probability);
        out << '\n';
    }
    return out.str();
}

std::vector<PatchManifestRow> parse_patch_manifest(std::string_view text) {
    std::vector<PatchManifestRow> rows;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    std::map<std::string, bool> seen_paths;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        std::string line(end == std::string_view::npos ? text.substr(pos)
                                                       : text.substr(pos, end - pos));
        pos = end == std::string_view::npos ? text.size() : end + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ++line_no;
        if (line_no == 1) {
            if (line != "path,scan_id,x,y,z,class,probability")
                throw ParseError(1, "", "unrecognized patch manifest header");
            continue;
        }
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::size_t p = 0;
        while (true) {
            std::size_t comma = line.find(',', p);
            f.push_back(line.substr(p, comma == std::string::npos ? std::string::npos : comma - p));
            if (comma == std::string::npos) break;
            p = comma + 1;
        }
        if (f.size() != 7) throw ParseError(line_no, "", "expected 7 fields");
        PatchManifestRow row;
        row.path = f[0];
        if (seen_paths[row.path]) throw ParseError(line_no, "path", "duplicate patch path");
        seen_paths[row.path] = true;
        row.scan_id = f[1];
        row.center = {std::strtod(f[2].c_str(), nullptr), std::strtod(f[3].c_str(), nullptr),
                      std::strtod(f[4].c_str(), nullptr)};
        if (!is_finite(row.center)) throw ParseError(line_no, "x", "non-finite patch center");
        row.patch_class = f[5];
        if (!f[6].empty()) row.probability = std::strtod(f[6].c_str(), nullptr);
        rows.push_back(std::move(row));
    }
    if (line_no == 0) throw ParseError(1, "", "missing header row");
    return rows;
}

VolumeGrid extract_patch_resampled(const VolumeGrid& resampled, const Point3& center,
                                   const PreprocessConfig& cfg,
                                   const std::array<std::int64_t, 3>& patch_dims) {
    cfg.validate();
    if (!resampled.valid()) throw InputError("extract_patch: invalid volume");
    for (auto d : patch_dims)
        if (d < 1) throw InputError("extract_patch: patch dims must be positive");

    auto voxel = world_to_voxel(center, resampled.frame);
    std::array<std::int64_t, 3> snapped{};
    for (int a = 0; a < 3; ++a) snapped[a] = static_cast<std::int64_t>(std::llround(voxel[a]));

    std::array<std::int64_t, 3> start{};
    for (int a = 0; a < 3; ++a) start[a] = snapped[a] - patch_dims[a] / 2;

    VolumeGrid patch;
    patch.frame.spacing = resampled.frame.spacing;
    patch.frame.dims = patch_dims;
    patch.frame.origin = voxel_to_world(static_cast<double>(start[0]),
                                        static_cast<double>(start[1]),
                                        static_cast<double>(start[2]), resampled.frame);
    patch.data.assign(static_cast<std::size_t>(patch_dims[0]) *
                          static_cast<std::size_t>(patch_dims[1]) *
                          static_cast<std::size_t>(patch_dims[2]),
                      cfg.clip_lo);

    std::size_t in_bounds = 0;
    for (std::int64_t k = 0; k < patch_dims[2]; ++k) {
        std::int64_t sk = start[2] + k;
        if (sk < 0 || sk >= resampled.frame.dims[2]) continue;
        for (std::int64_t j = 0; j < patch_dims[1]; ++j) {
            std::int64_t sj = start[1] + j;
            if (sj < 0 || sj >= resampled.frame.dims[1]) continue;
            for (std::int64_t i = 0; i < patch_dims[0]; ++i) {
                std::int64_t si = start[0] + i;
                if (si < 0 || si >= resampled.frame.dims[0]) continue;
                patch.at(i, j, k) = resampled.at(si, sj, sk);
                ++in_bounds;
            }
        }
    }
    if (in_bounds == 0)
        throw InputError("extract_patch: center (" + format_double(center.x) + "," +
                         format_double(center.y) + "," + format_double(center.z) +
                         ") lies entirely outside the volume");
    return clip_normalize(patch, cfg);
}

VolumeGrid extract_patch(const VolumeGrid& volume, const Point3& center,
                         const PreprocessConfig& cfg,
                         const std::array<std::int64_t, 3>& patch_dims) {
    return extract_patch_resampled(resample(volume, cfg.target_spacing), center, cfg, patch_dims);
}

}  // namespace lungbench
