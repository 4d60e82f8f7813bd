#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace lungbench {

// World-space position in millimeters.
struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

bool is_finite(const Point3& p);
double distance(const Point3& a, const Point3& b);

// Axis-aligned box: center plus full extents, world millimeters.
struct Box3 {
    Point3 center;
    double size_x = 0.0;
    double size_y = 0.0;
    double size_z = 0.0;

    double volume() const { return size_x * size_y * size_z; }
    Point3 lo() const { return {center.x - size_x / 2, center.y - size_y / 2, center.z - size_z / 2}; }
    Point3 hi() const { return {center.x + size_x / 2, center.y + size_y / 2, center.z + size_z / 2}; }
    bool valid() const;
    bool contains(const Point3& p) const;  // closed box
    static Box3 cube(const Point3& center, double side);
};

// Intersection volume over union volume; 0 for disjoint, 1 for identical boxes.
double iou3(const Box3& a, const Box3& b);

// Voxel lattice embedded in world space. origin is the world position of the
// center of voxel (0,0,0); axis order is (x, y, z) throughout.
struct GridFrame {
    Point3 origin;
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    std::array<std::int64_t, 3> dims{1, 1, 1};

    bool valid() const;
    double extent_mm(int axis) const { return static_cast<double>(dims[axis]) * spacing[axis]; }
};

// Continuous voxel coordinates of a world point. Throws InputError on
// non-finite input or invalid frame.
std::array<double, 3> world_to_voxel(const Point3& p, const GridFrame& frame);
Point3 voxel_to_world(double i, double j, double k, const GridFrame& frame);

enum class HitMode { CenterInBox, CenterInSphere, IouThreshold };

// Rule deciding whether a candidate point counts as detecting a lesion.
// iou_threshold applies only to IouThreshold mode; point candidates are
// expanded to a probe cube of side probe_size_mm for the IoU computation.
struct HitCriterion {
    HitMode mode = HitMode::CenterInSphere;
    double iou_threshold = 0.0;
    double probe_size_mm = 5.0;

    // "center-box" | "center-sphere" | "iou:<t>" with t in (0, 1]
    static HitCriterion parse(std::string_view text);
    std::string describe() const;
};

// Annotation geometry: always carries a box; diameter is present for
// center+diameter style annotations (the box is then a cube of that side).
struct LesionGeometry {
    Box3 box;
    std::optional<double> diameter;
};

// Per-candidate hit decision. Sphere mode uses strict |c - center| < d/2 and
// requires a diameter; box mode tests the closed box; IoU mode compares the
// probe cube against the annotation box. Mode/geometry mismatch throws.
bool hit(const Point3& candidate, const LesionGeometry& lesion, const HitCriterion& crit);

// Assignment measure used to pick the best lesion for a candidate: negative
// when not a hit; the IoU value in IoU mode; 1.0 in the center modes (ties are
// broken by center distance downstream).
double hit_overlap(const Point3& candidate, const LesionGeometry& lesion, const HitCriterion& crit);

}  // namespace lungbench
