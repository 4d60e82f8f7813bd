#pragma once

#include <optional>
#include <span>
#include <string>

#include "lungbench/classify_eval.hpp"
#include "lungbench/detect_eval.hpp"

namespace lungbench {

// Standalone SVG of a FROC curve: log2-scaled FP/scan axis covering
// [0.125, 8], markers at the seven fixed rates, legend with the CPM (and CI
// when a bootstrap ran). Deterministic bytes; empty curves throw.
std::string render_froc_svg(const FrocCurve& curve,
                            const std::optional<FrocBootstrap>& bootstrap,
                            std::string_view title);

// Standalone SVG of an empirical ROC curve with the AUC (and CI) in the
// legend. Deterministic bytes; empty input throws.
std::string render_roc_svg(std::span<const RocPoint> points, const AucEstimate& estimate,
                           std::string_view title);

}  // namespace lungbench
