#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "lungbench/classify_eval.hpp"
#include "lungbench/detect_eval.hpp"

namespace lungbench {

inline constexpr const char* kToolName = "lungbench";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kReportSchema = "lungbench-report/1";
inline constexpr const char* kInterpolationRule =
    "linear;below-min:scale-from-origin;above-max:constant";

using Json = nlohmann::ordered_json;

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_file(const std::filesystem::path& path);

// Skeleton report: schema/tool/command/argv plus empty inputs and config.
// Callers fill inputs, config, and results; generated_at is added at write
// time unless the run is deterministic.
Json make_report(const std::string& command, const std::vector<std::string>& argv);

void add_input_digest(Json& report, const std::string& key, const std::filesystem::path& path);

// Serializes with 2-space indent and a trailing newline; byte-stable for
// identical payloads. Adds generated_at unless deterministic.
std::string render_report(Json report, bool deterministic);

Json froc_to_json(const FrocCurve& curve);
Json froc_bootstrap_to_json(const FrocBootstrap& b);
Json auc_to_json(const AucEstimate& e);
Json subgroup_rows_to_json(std::span<const SubgroupRow> rows);

// Aligned plain-text projection of a subgroup table (overall row first).
std::string subgroup_table_text(const AucEstimate& overall, std::span<const SubgroupRow> rows,
                                std::string_view attribute);

}  // namespace lungbench
