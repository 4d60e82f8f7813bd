#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lungbench/errors.hpp"
#include "lungbench/geometry.hpp"

namespace lungbench {

enum class MalignancyLabel { Benign, Malignant };

// One lesion annotation. nodule_id is unique within its scan; rows without an
// id column get sequential generated ids.
struct Annotation {
    std::string scan_id;
    LesionGeometry geometry;
    std::optional<MalignancyLabel> label;
    std::string nodule_id;
};

// Detector output: a world-mm point with a confidence probability in [0,1].
struct Candidate {
    std::string scan_id;
    Point3 location;
    double probability = 0.0;
};

enum class SliceUnit { Index, PositionMm };

// In-plane 2D box on one axial slice; extents in world millimeters.
struct SliceBox2D {
    std::string scan_id;
    double slice = 0.0;  // z index or z position, per unit
    SliceUnit unit = SliceUnit::Index;
    double x_min = 0.0, y_min = 0.0, x_max = 0.0, y_max = 0.0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
};

// Subject attributes for subgroup reporting; names kept verbatim, in column order.
struct SubjectMeta {
    std::string scan_id;
    std::vector<std::pair<std::string, std::string>> attributes;

    const std::string* attribute(std::string_view name) const;
};

// Ordered set of scan ids: the evaluation denominator. Scans with no
// candidates and no annotations still count.
struct ScanManifest {
    std::vector<std::string> scan_ids;

    bool contains(std::string_view id) const;
    std::size_t index_of(std::string_view id) const;  // throws InputError when absent
    std::size_t size() const { return scan_ids.size(); }
};

// Classification sample.
struct ScoredRecord {
    std::string record_id;
    std::string scan_id;
    double score = 0.0;
    int label = 0;
};

// Canonical column name -> actual header name, for inputs whose headers
// differ from the canonical schemas.
using ColumnMap = std::map<std::string, std::string>;

enum class AnnotationSchema { CenterDiameter, CenterSize };

struct AnnotationTable {
    std::vector<Annotation> rows;
    AnnotationSchema schema = AnnotationSchema::CenterDiameter;
};

// Canonical schemas (header row mandatory, comma-separated, UTF-8):
//   annotations:  scan_id,x,y,z,diameter[,label][,nodule_id]
//             or  scan_id,x,y,z,w,h,d[,label][,nodule_id]
//   candidates:   scan_id,x,y,z,probability
//   slice boxes:  scan_id,slice,x_min,y_min,x_max,y_max
//   manifest:     scan_id
//   scores:       record_id,scan_id,score,label
//   metadata:     scan_id,<free-form attribute columns...>
AnnotationTable parse_annotations(std::string_view text, const ColumnMap& columns = {});
AnnotationTable parse_exclusions(std::string_view text, const ColumnMap& columns = {});
std::vector<Candidate> parse_candidates(std::string_view text, const ColumnMap& columns = {});
std::vector<SliceBox2D> parse_slice_boxes(std::string_view text, SliceUnit unit,
                                          const ColumnMap& columns = {});
std::vector<SubjectMeta> parse_metadata(std::string_view text);
ScanManifest parse_manifest(std::string_view text);
std::vector<ScoredRecord> parse_scores(std::string_view text, const ColumnMap& columns = {});

std::string emit_annotations(std::span<const Annotation> rows, AnnotationSchema schema);
std::string emit_candidates(std::span<const Candidate> rows);
std::string emit_slice_boxes(std::span<const SliceBox2D> rows);
std::string emit_metadata(std::span<const SubjectMeta> rows);
std::string emit_manifest(const ScanManifest& manifest);
std::string emit_scores(std::span<const ScoredRecord> rows);

// "a=b,c=d" flag syntax for column remapping
ColumnMap parse_column_map(std::string_view text);

}  // namespace lungbench
