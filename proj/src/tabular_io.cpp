#include "lungbench/tabular_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

#include "lungbench/util.hpp"

namespace lungbench {

namespace {

// Minimal CSV: comma-separated, optional double-quoting with "" escapes.
std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current.push_back(ch);
            }
        } else if (ch == '"' && current.empty()) {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(ch);
        }
    }
    if (quoted) throw ParseError(line_no, "", "unterminated quoted field");
    fields.push_back(std::move(current));
    return fields;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;  // parallel row line numbers below
    std::vector<std::size_t> line_numbers;
};

CsvTable read_csv(std::string_view text) {
    CsvTable table;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        std::string_view line =
            end == std::string_view::npos ? text.substr(pos) : text.substr(pos, end - pos);
        pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;
        if (line.empty() && pos > text.size()) break;  // trailing newline
        if (line_no == 1) {
            if (line.empty()) throw ParseError(1, "", "missing header row");
            table.header = split_csv_line(line, line_no);
            continue;
        }
        if (line.empty()) continue;  // skip blank lines
        table.rows.push_back(split_csv_line(line, line_no));
        table.line_numbers.push_back(line_no);
    }
    if (table.header.empty()) throw ParseError(1, "", "missing header row");
    return table;
}

// Resolves canonical column names against the header, honoring the remap.
class Columns {
public:
    Columns(const CsvTable& table, const ColumnMap& remap) : table_(table), remap_(remap) {}

    std::optional<std::size_t> find(const std::string& canonical) const {
        std::string actual = canonical;
        if (auto it = remap_.find(canonical); it != remap_.end()) actual = it->second;
        for (std::size_t i = 0; i < table_.header.size(); ++i)
            if (table_.header[i] == actual) return i;
        return std::nullopt;
    }

    std::size_t require(const std::string& canonical) const {
        if (auto idx = find(canonical)) return *idx;
        throw ParseError(1, canonical, "missing required column");
    }

    std::string field(const std::vector<std::string>& row, std::size_t col,
                      const std::string& name, std::size_t line) const {
        if (col >= row.size()) throw ParseError(line, name, "row has too few fields");
        return row[col];
    }

    double number(const std::vector<std::string>& row, std::size_t col, const std::string& name,
                  std::size_t line) const {
        std::string s = field(row, col, name, line);
        if (s.empty()) throw ParseError(line, name, "empty numeric field");
        char* end = nullptr;
        double v = std::strtod(s.c_str(), &end);
        if (end != s.c_str() + s.size() || !std::isfinite(v))
            throw ParseError(line, name, "not a finite number: '" + s + "'");
        return v;
    }

private:
    const CsvTable& table_;
    const ColumnMap& remap_;
};

AnnotationTable parse_annotation_like(std::string_view text, const ColumnMap& remap,
                                      bool keep_label) {
    CsvTable table = read_csv(text);
    Columns cols(table, remap);
    std::size_t c_scan = cols.require("scan_id");
    std::size_t c_x = cols.require("x");
    std::size_t c_y = cols.require("y");
    std::size_t c_z = cols.require("z");
    auto c_diam = cols.find("diameter");
    auto c_w = cols.find("w");
    auto c_label = cols.find("label");
    auto c_id = cols.find("nodule_id");

    AnnotationTable out;
    if (c_diam) {
        out.schema = AnnotationSchema::CenterDiameter;
    } else if (c_w) {
        out.schema = AnnotationSchema::CenterSize;
    } else {
        throw ParseError(1, "diameter",
                         "annotation schema not recognized: need a 'diameter' column or 'w','h','d'");
    }
    std::size_t c_h = 0, c_d = 0;
    if (out.schema == AnnotationSchema::CenterSize) {
        c_h = cols.require("h");
        c_d = cols.require("d");
    }

    std::map<std::string, std::set<std::string>> seen_ids;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        std::size_t line = table.line_numbers[r];
        Annotation a;
        a.scan_id = cols.field(row, c_scan, "scan_id", line);
        if (a.scan_id.empty()) throw ParseError(line, "scan_id", "empty scan id");
        Point3 center{cols.number(row, c_x, "x", line), cols.number(row, c_y, "y", line),
                      cols.number(row, c_z, "z", line)};
        if (out.schema == AnnotationSchema::CenterDiameter) {
            double d = cols.number(row, *c_diam, "diameter", line);
            if (!(d > 0)) throw ParseError(line, "diameter", "size must be positive");
            a.geometry.box = Box3::cube(center, d);
            a.geometry.diameter = d;
        } else {
            double w = cols.number(row, *c_w, "w", line);
            double h = cols.number(row, c_h, "h", line);
            double dd = cols.number(row, c_d, "d", line);
            if (!(w > 0)) throw ParseError(line, "w", "size must be positive");
            if (!(h > 0)) throw ParseError(line, "h", "size must be positive");
            if (!(dd > 0)) throw ParseError(line, "d", "size must be positive");
            a.geometry.box = Box3{center, w, h, dd};
        }
        if (keep_label && c_label) {
            std::string v = cols.field(row, *c_label, "label", line);
            std::transform(v.begin(), v.end(), v.begin(),
                           [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
            if (v == "malignant") a.label = MalignancyLabel::Malignant;
            else if (v == "benign") a.label = MalignancyLabel::Benign;
            else if (!v.empty())
                throw ParseError(line, "label", "expected 'malignant', 'benign', or empty");
        }
        if (c_id) {
            a.nodule_id = cols.field(row, *c_id, "nodule_id", line);
            if (a.nodule_id.empty()) throw ParseError(line, "nodule_id", "empty nodule id");
        } else {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "n%06zu", r + 1);
            a.nodule_id = buf;
        }
        auto [it, inserted] = seen_ids[a.scan_id].insert(a.nodule_id);
        if (!inserted)
            throw ParseError(line, "nodule_id",
                             "duplicate nodule id '" + a.nodule_id + "' within scan " + a.scan_id);
        out.rows.push_back(std::move(a));
    }
    return out;
}

}  // namespace

const std::string* SubjectMeta::attribute(std::string_view name) const {
    for (const auto& [key, value] : attributes)
        if (key == name) return &value;
    return nullptr;
}

bool ScanManifest::contains(std::string_view id) const {
    return std::find(scan_ids.begin(), scan_ids.end(), id) != scan_ids.end();
}

std::size_t ScanManifest::index_of(std::string_view id) const {
    auto it = std::find(scan_ids.begin(), scan_ids.end(), id);
    if (it == scan_ids.end())
        throw InputError("scan id '" + std::string(id) + "' is not in the scan manifest");
    return static_cast<std::size_t>(it - scan_ids.begin());
}

AnnotationTable parse_annotations(std::string_view text, const ColumnMap& columns) {
    return parse_annotation_like(text, columns, /*keep_label=*/true);
}

AnnotationTable parse_exclusions(std::string_view text, const ColumnMap& columns) {
    return parse_annotation_like(text, columns, /*keep_label=*/false);
}

std::vector<Candidate> parse_candidates(std::string_view text, const ColumnMap& remap) {
    CsvTable table = read_csv(text);
    Columns cols(table, remap);
    std::size_t c_scan = cols.require("scan_id");
    std::size_t c_x = cols.require("x");
    std::size_t c_y = cols.require("y");
    std::size_t c_z = cols.require("z");
    std::size_t c_p = cols.require("probability");
    std::vector<Candidate> out;
    out.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        std::size_t line = table.line_numbers[r];
        Candidate c;
        c.scan_id = cols.field(row, c_scan, "scan_id", line);
        if (c.scan_id.empty()) throw ParseError(line, "scan_id", "empty scan id");
        c.location = {cols.number(row, c_x, "x", line), cols.number(row, c_y, "y", line),
                      cols.number(row, c_z, "z", line)};
        c.probability = cols.number(row, c_p, "probability", line);
        if (c.probability < 0.0 || c.probability > 1.0)
            throw ParseError(line, "probability",
                             "probability must be in [0,1], got " + format_double(c.probability));
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<SliceBox2D> parse_slice_boxes(std::string_view text, SliceUnit unit,
                                          const ColumnMap& remap) {
    CsvTable table = read_csv(text);
    Columns cols(table, remap);
    std::size_t c_scan = cols.require("scan_id");
    std::size_t c_slice = cols.require("slice");
    std::size_t c_x0 = cols.require("x_min");
    std::size_t c_y0 = cols.require("y_min");
    std::size_t c_x1 = cols.require("x_max");
    std::size_t c_y1 = cols.require("y_max");
    std::vector<SliceBox2D> out;
    out.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        std::size_t line = table.line_numbers[r];
        SliceBox2D b;
        b.scan_id = cols.field(row, c_scan, "scan_id", line);
        if (b.scan_id.empty()) throw ParseError(line, "scan_id", "empty scan id");
        b.slice = cols.number(row, c_slice, "slice", line);
        b.unit = unit;
        if (unit == SliceUnit::Index && b.slice != std::floor(b.slice))
            throw ParseError(line, "slice", "slice index must be an integer");
        b.x_min = cols.number(row, c_x0, "x_min", line);
        b.y_min = cols.number(row, c_y0, "y_min", line);
        b.x_max = cols.number(row, c_x1, "x_max", line);
        b.y_max = cols.number(row, c_y1, "y_max", line);
        if (!(b.x_max > b.x_min)) throw ParseError(line, "x_max", "x_max must exceed x_min");
        if (!(b.y_max > b.y_min)) throw ParseError(line, "y_max", "y_max must exceed y_min");
        out.push_back(std::move(b));
    }
    return out;
}

std::vector<SubjectMeta> parse_metadata(std::string_view text) {
    CsvTable table = read_csv(text);
    if (table.header.empty() || table.header[0] != "scan_id")
        throw ParseError(1, "scan_id", "first metadata column must be scan_id");
    std::vector<SubjectMeta> out;
    std::map<std::string, std::size_t> first_line;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        std::size_t line = table.line_numbers[r];
        if (row.empty() || row[0].empty()) throw ParseError(line, "scan_id", "empty scan id");
        SubjectMeta m;
        m.scan_id = row[0];
        if (auto it = first_line.find(m.scan_id); it != first_line.end())
            throw ParseError(line, "scan_id",
                             "duplicate scan id '" + m.scan_id + "' (first seen on line " +
                                 std::to_string(it->second) + ")");
        first_line[m.scan_id] = line;
        for (std::size_t c = 1; c < table.header.size(); ++c) {
            std::string value = c < row.size() ? row[c] : "";
            m.attributes.emplace_back(table.header[c], std::move(value));
        }
        out.push_back(std::move(m));
    }
    return out;
}

ScanManifest parse_manifest(std::string_view text) {
    CsvTable table = read_csv(text);
    if (table.header.empty() || table.header[0] != "scan_id")
        throw ParseError(1, "scan_id", "manifest header must be scan_id");
    ScanManifest m;
    std::map<std::string, std::size_t> first_line;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        std::size_t line = table.line_numbers[r];
        const std::string& id = table.rows[r].empty() ? std::string() : table.rows[r][0];
        if (id.empty()) throw ParseError(line, "scan_id", "empty scan id");
        if (auto it = first_line.find(id); it != first_line.end())
            throw ParseError(line, "scan_id",
                             "duplicate scan id '" + id + "' (first seen on line " +
                                 std::to_string(it->second) + ")");
        first_line[id] = line;
        m.scan_ids.push_back(id);
    }
    return m;
}

std::vector<ScoredRecord> parse_scores(std::string_view text, const ColumnMap& remap) {
    CsvTable table = read_csv(text);
    Columns cols(table, remap);
    std::size_t c_rec = cols.require("record_id");
    std::size_t c_scan = cols.require("scan_id");
    std::size_t c_score = cols.require("score");
    std::size_t c_label = cols.require("label");
    std::vector<ScoredRecord> out;
    out.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        std::size_t line = table.line_numbers[r];
        ScoredRecord rec;
        rec.record_id = cols.field(row, c_rec, "record_id", line);
        if (rec.record_id.empty()) throw ParseError(line, "record_id", "empty record id");
        rec.scan_id = cols.field(row, c_scan, "scan_id", line);
        rec.score = cols.number(row, c_score, "score", line);
        if (rec.score < 0.0 || rec.score > 1.0)
            throw ParseError(line, "score",
                             "score must be in [0,1], got " + format_double(rec.score));
        double label = cols.number(row, c_label, "label", line);
        if (label != 0.0 && label != 1.0)
            throw ParseError(line, "label", "label must be 0 or 1");
        rec.label = static_cast<int>(label);
        out.push_back(std::move(rec));
    }
    return out;
}

std::string emit_annotations(std::span<const Annotation> rows, AnnotationSchema schema) {
    std::ostringstream out;
    bool any_label = std::any_of(rows.begin(), rows.end(),
                                 [](const Annotation& a) { return a.label.has_value(); });
    out << "scan_id,x,y,z,";
    out << (schema == AnnotationSchema::CenterDiameter ? "diameter" : "w,h,d");
    if (any_label) out << ",label";
    out << ",nodule_id\n";
    for (const auto& a : rows) {
        const Point3& c = a.geometry.box.center;
        out << csv_escape(a.scan_id) << ',' << format_double(c.x) << ',' << format_double(c.y)
            << ',' << format_double(c.z) << ',';
        if (schema == AnnotationSchema::CenterDiameter) {
            if (!a.geometry.diameter)
                throw InputError("annotation " + a.nodule_id +
                                 " has no diameter; emit with the w,h,d schema");
            out << format_double(*a.geometry.diameter);
        } else {
            out << format_double(a.geometry.box.size_x) << ','
                << format_double(a.geometry.box.size_y) << ','
                << format_double(a.geometry.box.size_z);
        }
        if (any_label) {
            out << ',';
            if (a.label)
                out << (*a.label == MalignancyLabel::Malignant ? "malignant" : "benign");
        }
        out << ',' << csv_escape(a.nodule_id) << '\n';
    }
    return out.str();
}

std::string emit_candidates(std::span<const Candidate> rows) {
    std::ostringstream out;
    out << "scan_id,x,y,z,probability\n";
    for (const auto& c : rows)
        out << csv_escape(c.scan_id) << ',' << format_double(c.location.x) << ','
            << format_double(c.location.y) << ',' << format_double(c.location.z) << ','
            << format_double(c.probability) << '\n';
    return out.str();
}

std::string emit_slice_boxes(std::span<const SliceBox2D> rows) {
    std::ostringstream out;
    out << "scan_id,slice,x_min,y_min,x_max,y_max\n";
    for (const auto& b : rows)
        out << csv_escape(b.scan_id) << ',' << format_double(b.slice) << ','
            << format_double(b.x_min) << ',' << format_double(b.y_min) << ','
            << format_double(b.x_max) << ',' << format_double(b.y_max) << '\n';
    return out.str();
}

std::string emit_metadata(std::span<const SubjectMeta> rows) {
    std::ostringstream out;
    out << "scan_id";
    if (!rows.empty())
        for (const auto& [key, value] : rows.front().attributes) out << ',' << csv_escape(key);
    out << '\n';
    for (const auto& m : rows) {
        out << csv_escape(m.scan_id);
        for (const auto& [key, value] : m.attributes) out << ',' << csv_escape(value);
        out << '\n';
    }
    return out.str();
}

std::string emit_manifest(const ScanManifest& manifest) {
    std::ostringstream out;
    out << "scan_id\n";
    for (const auto& id : manifest.scan_ids) out << csv_escape(id) << '\n';
    return out.str();
}

std::string emit_scores(std::span<const ScoredRecord> rows) {
    std::ostringstream out;
    out << "record_id,scan_id,score,label\n";
    for (const auto& r : rows)
        out << csv_escape(r.record_id) << ',' << csv_escape(r.scan_id) << ','
            << format_double(r.score) << ',' << r.label << '\n';
    return out.str();
}

ColumnMap parse_column_map(std::string_view text) {
    ColumnMap map;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find(',', pos);
        std::string_view item =
            end == std::string_view::npos ? text.substr(pos) : text.substr(pos, end - pos);
        pos = end == std::string_view::npos ? text.size() : end + 1;
        if (item.empty()) continue;
        std::size_t eq = item.find('=');
        if (eq == std::string_view::npos || eq == 0 || eq + 1 >= item.size())
            throw InputError("column map entry '" + std::string(item) +
                             "' is not canonical=actual");
        map[std::string(item.substr(0, eq))] = std::string(item.substr(eq + 1));
    }
    return map;
}

}  // namespace lungbench
