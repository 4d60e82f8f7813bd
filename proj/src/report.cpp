#include "lungbench/report.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "lungbench/errors.hpp"
#include "lungbench/util.hpp"

namespace lungbench {

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw InvariantError("sha256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file for digest: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return sha256_hex(bytes);
}

Json make_report(const std::string& command, const std::vector<std::string>& argv) {
    Json report;
    report["schema"] = kReportSchema;
    report["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
    report["command"] = command;
    // output destinations do not influence any result; dropping them keeps
    // reports byte-comparable across runs that only differ in where they write
    Json echoed = Json::array();
    for (std::size_t i = 0; i < argv.size(); ++i) {
        if (argv[i] == "--out" || argv[i] == "--svg" || argv[i] == "--report" ||
            argv[i] == "--out-dir") {
            ++i;
            continue;
        }
        echoed.push_back(argv[i]);
    }
    report["argv"] = std::move(echoed);
    report["inputs"] = Json::object();
    report["config"] = Json::object();
    report["results"] = Json::object();
    return report;
}

void add_input_digest(Json& report, const std::string& key, const std::filesystem::path& path) {
    report["inputs"][key] = {{"path", path.string()}, {"sha256", sha256_file(path)}};
}

std::string render_report(Json report, bool deterministic) {
    if (!deterministic) {
        auto now = std::chrono::system_clock::now();
        std::time_t t = std::chrono::system_clock::to_time_t(now);
        std::tm tm{};
        gmtime_r(&t, &tm);
        std::ostringstream stamp;
        stamp << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
        report["generated_at"] = stamp.str();
    }
    return report.dump(2) + "\n";
}

Json froc_to_json(const FrocCurve& curve) {
    Json j;
    Json points = Json::array();
    for (const auto& p : curve.points)
        points.push_back({{"threshold", p.threshold},
                          {"fp_per_scan", p.fp_per_scan},
                          {"sensitivity", p.sensitivity}});
    j["operating_points"] = std::move(points);
    Json rates = Json::object();
    for (std::size_t i = 0; i < kFixedFpRates.size(); ++i)
        rates[format_double(kFixedFpRates[i])] = curve.rate_sensitivities[i];
    j["sensitivity_at_fp_rate"] = std::move(rates);
    j["cpm"] = curve.cpm;
    return j;
}

Json froc_bootstrap_to_json(const FrocBootstrap& b) {
    Json j;
    j["method"] = "percentile-scan-bootstrap";
    j["resamples"] = b.resamples;
    j["seed"] = b.seed;
    j["redraws"] = b.redraws;
    Json rates = Json::object();
    for (std::size_t i = 0; i < kFixedFpRates.size(); ++i)
        rates[format_double(kFixedFpRates[i])] = {{"low", b.rate_ci[i].first},
                                                  {"high", b.rate_ci[i].second}};
    j["sensitivity_ci"] = std::move(rates);
    j["cpm_ci"] = {{"low", b.cpm_ci.first}, {"high", b.cpm_ci.second}};
    return j;
}

Json auc_to_json(const AucEstimate& e) {
    Json j;
    j["auc"] = e.auc;
    j["ci_low"] = e.ci_low;
    j["ci_high"] = e.ci_high;
    j["level"] = e.level;
    j["method"] = e.method == CiMethod::Delong ? "delong" : "bootstrap";
    j["n_pos"] = e.n_pos;
    j["n_neg"] = e.n_neg;
    if (e.degenerate_variance) j["note"] = "degenerate variance";
    return j;
}

Json subgroup_rows_to_json(std::span<const SubgroupRow> rows) {
    Json arr = Json::array();
    for (const auto& row : rows) {
        Json j;
        j["group"] = row.group;
        j["n"] = row.n;
        j["n_pos"] = row.n_pos;
        j["n_neg"] = row.n_neg;
        j["status"] = row.status;
        if (row.estimate) j["estimate"] = auc_to_json(*row.estimate);
        arr.push_back(std::move(j));
    }
    return arr;
}

std::string subgroup_table_text(const AucEstimate& overall, std::span<const SubgroupRow> rows,
                                std::string_view attribute) {
    std::vector<std::array<std::string, 5>> lines;
    lines.push_back({"group", "n", "pos/neg", "auc", "95% ci"});
    auto fmt_row = [](const std::string& group, std::size_t n, std::size_t n_pos,
                      std::size_t n_neg, const std::optional<AucEstimate>& est,
                      const std::string& status) {
        std::array<std::string, 5> line;
        line[0] = group;
        line[1] = std::to_string(n);
        line[2] = std::to_string(n_pos) + "/" + std::to_string(n_neg);
        if (est) {
            line[3] = format_fixed(est->auc, 3);
            line[4] = format_fixed(est->ci_low, 3) + "-" + format_fixed(est->ci_high, 3);
        } else {
            line[3] = "-";
            line[4] = status;
        }
        return line;
    };
    lines.push_back(fmt_row("(overall)", overall.n_pos + overall.n_neg, overall.n_pos,
                            overall.n_neg, overall, "ok"));
    for (const auto& row : rows)
        lines.push_back(fmt_row(row.group, row.n, row.n_pos, row.n_neg, row.estimate, row.status));

    std::array<std::size_t, 5> width{};
    for (const auto& line : lines)
        for (int c = 0; c < 5; ++c) width[c] = std::max(width[c], line[c].size());

    std::ostringstream out;
    out << "AUC by " << attribute << "\n";
    for (const auto& line : lines) {
        for (int c = 0; c < 5; ++c) {
            out << line[c];
            if (c < 4) out << std::string(width[c] - line[c].size() + 2, ' ');
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace lungbench
