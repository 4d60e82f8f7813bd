#include "lungbench/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "lungbench/errors.hpp"
#include "lungbench/util.hpp"

namespace lungbench {

bool is_finite(const Point3& p) {
    return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z);
}

double distance(const Point3& a, const Point3& b) {
    double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

bool Box3::valid() const {
    return is_finite(center) && std::isfinite(size_x) && std::isfinite(size_y) &&
           std::isfinite(size_z) && size_x > 0 && size_y > 0 && size_z > 0;
}

bool Box3::contains(const Point3& p) const {
    Point3 a = lo(), b = hi();
    return p.x >= a.x && p.x <= b.x && p.y >= a.y && p.y <= b.y && p.z >= a.z && p.z <= b.z;
}

Box3 Box3::cube(const Point3& center, double side) { return Box3{center, side, side, side}; }

double iou3(const Box3& a, const Box3& b) {
    Point3 alo = a.lo(), ahi = a.hi(), blo = b.lo(), bhi = b.hi();
    double ix = std::min(ahi.x, bhi.x) - std::max(alo.x, blo.x);
    double iy = std::min(ahi.y, bhi.y) - std::max(alo.y, blo.y);
    double iz = std::min(ahi.z, bhi.z) - std::max(alo.z, blo.z);
    if (ix <= 0 || iy <= 0 || iz <= 0) return 0.0;
    double inter = ix * iy * iz;
    // volumes from the same corner differences, so iou3(a,a) is exactly 1
    double vol_a = (ahi.x - alo.x) * (ahi.y - alo.y) * (ahi.z - alo.z);
    double vol_b = (bhi.x - blo.x) * (bhi.y - blo.y) * (bhi.z - blo.z);
    double uni = vol_a + vol_b - inter;
    return inter / uni;
}

bool GridFrame::valid() const {
    if (!is_finite(origin)) return false;
    for (int a = 0; a < 3; ++a) {
        if (!(spacing[a] > 0) || !std::isfinite(spacing[a])) return false;
        if (dims[a] < 1) return false;
    }
    return true;
}

std::array<double, 3> world_to_voxel(const Point3& p, const GridFrame& frame) {
    if (!frame.valid()) throw InputError("world_to_voxel: invalid grid frame");
    if (!is_finite(p)) throw InputError("world_to_voxel: non-finite point");
    return {(p.x - frame.origin.x) / frame.spacing[0],
            (p.y - frame.origin.y) / frame.spacing[1],
            (p.z - frame.origin.z) / frame.spacing[2]};
}

Point3 voxel_to_world(double i, double j, double k, const GridFrame& frame) {
    if (!frame.valid()) throw InputError("voxel_to_world: invalid grid frame");
    return {frame.origin.x + i * frame.spacing[0],
            frame.origin.y + j * frame.spacing[1],
            frame.origin.z + k * frame.spacing[2]};
}

HitCriterion HitCriterion::parse(std::string_view text) {
    HitCriterion crit;
    if (text == "center-box") {
        crit.mode = HitMode::CenterInBox;
        return crit;
    }
    if (text == "center-sphere") {
        crit.mode = HitMode::CenterInSphere;
        return crit;
    }
    constexpr std::string_view prefix = "iou:";
    if (text.substr(0, prefix.size()) == prefix) {
        std::string value(text.substr(prefix.size()));
        char* end = nullptr;
        double t = std::strtod(value.c_str(), &end);
        if (end == value.c_str() || *end != '\0' || !(t > 0.0) || t > 1.0)
            throw InputError("hit criterion: IoU threshold must be in (0,1], got '" + value + "'");
        crit.mode = HitMode::IouThreshold;
        crit.iou_threshold = t;
        return crit;
    }
    throw InputError("unknown hit criterion '" + std::string(text) +
                     "' (expected center-box, center-sphere, or iou:<t>)");
}

std::string HitCriterion::describe() const {
    switch (mode) {
        case HitMode::CenterInBox:
            return "center-box";
        case HitMode::CenterInSphere:
            return "center-sphere";
        case HitMode::IouThreshold:
            return "iou:" + format_double(iou_threshold) + ";probe-mm:" + format_double(probe_size_mm);
    }
    return "?";
}

bool hit(const Point3& candidate, const LesionGeometry& lesion, const HitCriterion& crit) {
    return hit_overlap(candidate, lesion, crit) >= 0.0;
}

double hit_overlap(const Point3& candidate, const LesionGeometry& lesion,
                   const HitCriterion& crit) {
    if (!is_finite(candidate)) throw InputError("hit: non-finite candidate location");
    if (!lesion.box.valid()) throw InputError("hit: invalid lesion geometry");
    switch (crit.mode) {
        case HitMode::CenterInBox:
            return lesion.box.contains(candidate) ? 1.0 : -1.0;
        case HitMode::CenterInSphere: {
            if (!lesion.diameter)
                throw InputError(
                    "hit: center-sphere criterion requires a diameter annotation, got a box");
            // strict inequality at the radius
            return distance(candidate, lesion.box.center) < *lesion.diameter / 2.0 ? 1.0 : -1.0;
        }
        case HitMode::IouThreshold: {
            Box3 probe = Box3::cube(candidate, crit.probe_size_mm);
            double v = iou3(probe, lesion.box);
            return v >= crit.iou_threshold ? v : -1.0;
        }
    }
    throw InvariantError("hit: unreachable criterion mode");
}

}  // namespace lungbench
