#include "lungbench/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "lungbench/curation.hpp"
#include "lungbench/report.hpp"
#include "lungbench/svg.hpp"
#include "lungbench/util.hpp"

namespace lungbench {

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spill(const fs::path& path, std::string_view text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot open output file: " + path.string());
    out << text;
    if (!out) throw InputError("failed to write: " + path.string());
}

struct CiChoice {
    CiMethod method = CiMethod::Delong;
    int resamples = 2000;

    static CiChoice parse(const std::string& text) {
        CiChoice choice;
        if (text == "delong") return choice;
        if (text == "bootstrap") {
            choice.method = CiMethod::Bootstrap;
            return choice;
        }
        if (text.rfind("bootstrap:", 0) == 0) {
            choice.method = CiMethod::Bootstrap;
            choice.resamples = std::atoi(text.c_str() + 10);
            if (choice.resamples < 1)
                throw InputError("--ci bootstrap:<n> needs a positive resample count");
            return choice;
        }
        throw InputError("--ci must be 'delong' or 'bootstrap:<n>', got '" + text + "'");
    }
};

void emit_report(const Json& report, const std::optional<std::string>& out_path,
                 bool deterministic, std::ostream& out) {
    std::string text = render_report(report, deterministic);
    if (out_path)
        spill(*out_path, text);
    else
        out << text;
}

// ---- eval-detect ----------------------------------------------------------

struct DetectArgs {
    std::string candidates, annotations, scans;
    std::optional<std::string> exclusions;
    std::string criterion = "center-sphere";
    double probe_mm = 5.0;
    int bootstrap = 0;
    std::uint64_t seed = default_seed();
    int threads = default_thread_count();
    std::optional<std::string> out, svg, columns;
    bool deterministic = false;
};

int run_eval_detect(const DetectArgs& args, const std::vector<std::string>& argv,
                    std::ostream& out) {
    HitCriterion crit = HitCriterion::parse(args.criterion);
    crit.probe_size_mm = args.probe_mm;
    ColumnMap columns = args.columns ? parse_column_map(*args.columns) : ColumnMap{};

    ScanManifest manifest = parse_manifest(slurp(args.scans));
    AnnotationTable annotations = parse_annotations(slurp(args.annotations), columns);
    std::vector<Candidate> candidates = parse_candidates(slurp(args.candidates), columns);
    AnnotationTable exclusions;
    if (args.exclusions) exclusions = parse_exclusions(slurp(*args.exclusions), columns);

    MatchResult m = match(candidates, annotations.rows, exclusions.rows, manifest, crit);
    FrocCurve curve = froc(m);
    std::optional<FrocBootstrap> boot;
    if (args.bootstrap > 0) boot = froc_bootstrap(m, args.bootstrap, args.seed, args.threads);

    Json report = make_report("eval-detect", argv);
    add_input_digest(report, "candidates", args.candidates);
    add_input_digest(report, "annotations", args.annotations);
    add_input_digest(report, "scans", args.scans);
    if (args.exclusions) add_input_digest(report, "exclusions", *args.exclusions);
    report["config"]["criterion"] = args.criterion;
    report["config"]["probe_mm"] = args.probe_mm;
    report["config"]["interpolation"] = kInterpolationRule;
    report["config"]["bootstrap"] = args.bootstrap;
    report["config"]["seed"] = args.seed;

    Json& results = report["results"];
    results["scans"] = m.scan_count;
    results["annotations"] = m.annotation_count;
    results["candidates"] = candidates.size();
    results["candidate_status"] = {{"tp", m.count(CandidateStatus::TruePositive)},
                                   {"fp", m.count(CandidateStatus::FalsePositive)},
                                   {"ignored", m.count(CandidateStatus::Ignored)}};
    results["missed_lesions"] = m.missed_count();
    results["froc"] = froc_to_json(curve);
    if (boot) results["froc_bootstrap"] = froc_bootstrap_to_json(*boot);

    emit_report(report, args.out, args.deterministic, out);
    if (args.svg) spill(*args.svg, render_froc_svg(curve, boot, "FROC"));
    return kExitOk;
}

// ---- eval-classify --------------------------------------------------------

struct ClassifyArgs {
    std::string scores;
    std::optional<std::string> meta, group_by;
    std::string ci = "delong";
    std::uint64_t seed = default_seed();
    int threads = default_thread_count();
    std::optional<std::string> out, svg, columns;
    bool deterministic = false;
};

int run_eval_classify(const ClassifyArgs& args, const std::vector<std::string>& argv,
                      std::ostream& out) {
    CiChoice ci = CiChoice::parse(args.ci);
    ColumnMap columns = args.columns ? parse_column_map(*args.columns) : ColumnMap{};
    std::vector<ScoredRecord> records = parse_scores(slurp(args.scores), columns);
    std::vector<SubjectMeta> meta;
    if (args.meta) meta = parse_metadata(slurp(*args.meta));
    if (args.group_by && !args.meta)
        throw InputError("--group-by requires --meta");

    AucEstimate overall = ci.method == CiMethod::Delong
                              ? delong_ci(records)
                              : bootstrap_auc_ci(records, ci.resamples, args.seed, args.threads);

    Json report = make_report("eval-classify", argv);
    add_input_digest(report, "scores", args.scores);
    if (args.meta) add_input_digest(report, "meta", *args.meta);
    report["config"]["ci"] = args.ci;
    report["config"]["seed"] = args.seed;
    if (args.group_by) report["config"]["group_by"] = *args.group_by;

    Json& results = report["results"];
    results["records"] = records.size();
    results["auc"] = auc_to_json(overall);
    Json roc = Json::array();
    for (const auto& p : roc_points(records)) roc.push_back({p.fpr, p.tpr});
    results["roc"] = std::move(roc);

    std::vector<SubgroupRow> rows;
    if (args.group_by) {
        rows = subgroup_report(records, meta, *args.group_by, ci.method, ci.resamples, args.seed,
                               args.threads);
        results["subgroups"] = subgroup_rows_to_json(rows);
    }

    emit_report(report, args.out, args.deterministic, out);
    if (args.group_by && !args.out)
        out << subgroup_table_text(overall, rows, *args.group_by);
    if (args.svg)
        spill(*args.svg, render_roc_svg(roc_points(records), overall, "ROC"));
    return kExitOk;
}

// ---- curate ----------------------------------------------------------------

struct CurateCommon {
    std::optional<std::string> report_path;
    bool deterministic = false;
};

void write_curate_report(const std::string& subcommand, const std::vector<std::string>& argv,
                         const CurateCommon& common, std::ostream& out,
                         const std::function<void(Json&)>& fill) {
    Json report = make_report("curate " + subcommand, argv);
    fill(report);
    if (common.report_path)
        spill(*common.report_path, render_report(report, common.deterministic));
    else
        out << render_report(report, common.deterministic);
}

// ---- replay ----------------------------------------------------------------

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_replay(const std::string& report_path, const std::optional<std::string>& out_path,
               std::ostream& out, std::ostream& err) {
    Json report = Json::parse(slurp(report_path));
    std::string command = report.at("command").get<std::string>();
    const Json& config = report.at("config");
    const Json& inputs = report.at("inputs");
    auto input_path = [&](const char* key) {
        return inputs.at(key).at("path").get<std::string>();
    };

    std::vector<std::string> argv;
    if (command == "eval-detect") {
        argv = {"eval-detect",
                "--candidates", input_path("candidates"),
                "--annotations", input_path("annotations"),
                "--scans", input_path("scans"),
                "--criterion", config.at("criterion").get<std::string>(),
                "--probe-mm", format_double(config.at("probe_mm").get<double>()),
                "--seed", std::to_string(config.at("seed").get<std::uint64_t>()),
                "--deterministic"};
        if (inputs.contains("exclusions")) {
            argv.push_back("--exclusions");
            argv.push_back(input_path("exclusions"));
        }
        int bootstrap = config.at("bootstrap").get<int>();
        if (bootstrap > 0) {
            argv.push_back("--bootstrap");
            argv.push_back(std::to_string(bootstrap));
        }
    } else if (command == "eval-classify") {
        argv = {"eval-classify", "--scores", input_path("scores"),
                "--ci", config.at("ci").get<std::string>(),
                "--seed", std::to_string(config.at("seed").get<std::uint64_t>()),
                "--deterministic"};
        if (inputs.contains("meta")) {
            argv.push_back("--meta");
            argv.push_back(input_path("meta"));
        }
        if (config.contains("group_by")) {
            argv.push_back("--group-by");
            argv.push_back(config.at("group_by").get<std::string>());
        }
    } else {
        throw InputError("replay: unsupported command '" + command + "'");
    }
    if (out_path) {
        argv.push_back("--out");
        argv.push_back(*out_path);
    }
    return dispatch(argv, out, err);
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"lung-screening AI benchmarking engine", "lungbench"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    // eval-detect
    DetectArgs detect;
    auto* cmd_detect = app.add_subcommand("eval-detect", "FROC/CPM detection benchmark");
    cmd_detect->add_option("--candidates", detect.candidates, "candidate CSV")->required();
    cmd_detect->add_option("--annotations", detect.annotations, "annotation CSV")->required();
    cmd_detect->add_option("--scans", detect.scans, "scan manifest CSV")->required();
    cmd_detect->add_option("--exclusions", detect.exclusions, "exclusion list CSV");
    cmd_detect->add_option("--criterion", detect.criterion,
                           "center-sphere | center-box | iou:<t>");
    cmd_detect->add_option("--probe-mm", detect.probe_mm, "probe cube edge for IoU mode");
    cmd_detect->add_option("--bootstrap", detect.bootstrap, "scan bootstrap resamples");
    cmd_detect->add_option("--seed", detect.seed, "RNG seed");
    cmd_detect->add_option("--threads", detect.threads, "worker threads");
    cmd_detect->add_option("--out", detect.out, "JSON report path (stdout when absent)");
    cmd_detect->add_option("--svg", detect.svg, "FROC curve SVG path");
    cmd_detect->add_option("--columns", detect.columns, "canonical=actual column remap");
    cmd_detect->add_flag("--deterministic", detect.deterministic, "omit timestamps");

    // eval-classify
    ClassifyArgs classify;
    auto* cmd_classify = app.add_subcommand("eval-classify", "ROC/AUC classification benchmark");
    cmd_classify->add_option("--scores", classify.scores, "scored-record CSV")->required();
    cmd_classify->add_option("--meta", classify.meta, "subject metadata CSV");
    cmd_classify->add_option("--group-by", classify.group_by, "metadata attribute for subgroup table");
    cmd_classify->add_option("--ci", classify.ci, "delong | bootstrap:<n>");
    cmd_classify->add_option("--seed", classify.seed, "RNG seed");
    cmd_classify->add_option("--threads", classify.threads, "worker threads");
    cmd_classify->add_option("--out", classify.out, "JSON report path (stdout when absent)");
    cmd_classify->add_option("--svg", classify.svg, "ROC curve SVG path");
    cmd_classify->add_option("--columns", classify.columns, "canonical=actual column remap");
    cmd_classify->add_flag("--deterministic", classify.deterministic, "omit timestamps");

    // curate
    auto* cmd_curate = app.add_subcommand("curate", "dataset-construction algorithms");
    cmd_curate->require_subcommand(1);

    struct {
        std::string slice_boxes, out;
        std::string slice_unit = "index";
        double thickness = 1.25;
        double min_iou = 0.2;
        int max_gap = 1;
        CurateCommon common;
    } nlst3d;
    auto* cmd_nlst3d = cmd_curate->add_subcommand("nlst3d", "aggregate 2D slice boxes into 3D annotations");
    cmd_nlst3d->add_option("--slice-boxes", nlst3d.slice_boxes, "slice box CSV")->required();
    cmd_nlst3d->add_option("--slice-unit", nlst3d.slice_unit, "index | mm");
    cmd_nlst3d->add_option("--thickness", nlst3d.thickness, "slice thickness mm");
    cmd_nlst3d->add_option("--min-iou", nlst3d.min_iou, "in-plane IoU to link slices");
    cmd_nlst3d->add_option("--max-gap", nlst3d.max_gap, "allowed missing slices");
    cmd_nlst3d->add_option("--out", nlst3d.out, "output annotation CSV")->required();
    cmd_nlst3d->add_option("--report", nlst3d.common.report_path, "run report path");
    cmd_nlst3d->add_flag("--deterministic", nlst3d.common.deterministic, "omit timestamps");

    struct {
        std::string candidates, annotations, out;
        std::string criterion = "center-sphere";
        double probe_mm = 5.0;
        std::optional<std::size_t> top_k;
        std::optional<double> min_prob;
        CurateCommon common;
    } negatives;
    auto* cmd_neg = cmd_curate->add_subcommand("negatives", "mine high-confidence false positives");
    cmd_neg->add_option("--candidates", negatives.candidates, "candidate CSV")->required();
    cmd_neg->add_option("--annotations", negatives.annotations, "annotation CSV")->required();
    cmd_neg->add_option("--criterion", negatives.criterion, "hit criterion");
    cmd_neg->add_option("--probe-mm", negatives.probe_mm, "probe cube edge for IoU mode");
    cmd_neg->add_option("--top-k", negatives.top_k, "keep k highest-confidence negatives");
    cmd_neg->add_option("--min-prob", negatives.min_prob, "keep negatives with probability >= t");
    cmd_neg->add_option("--out", negatives.out, "output candidate CSV")->required();
    cmd_neg->add_option("--report", negatives.common.report_path, "run report path");
    cmd_neg->add_flag("--deterministic", negatives.common.deterministic, "omit timestamps");

    struct {
        std::string candidates, annotations, out;
        std::string criterion = "center-sphere";
        double probe_mm = 5.0;
        int ratio = 3;
        std::uint64_t seed = default_seed();
        CurateCommon common;
    } sws;
    auto* cmd_sws = cmd_curate->add_subcommand("sws", "confidence-stratified candidate sampling");
    cmd_sws->add_option("--candidates", sws.candidates, "candidate CSV")->required();
    cmd_sws->add_option("--annotations", sws.annotations, "annotation CSV")->required();
    cmd_sws->add_option("--criterion", sws.criterion, "hit criterion");
    cmd_sws->add_option("--probe-mm", sws.probe_mm, "probe cube edge for IoU mode");
    cmd_sws->add_option("--ratio", sws.ratio, "negatives per positive");
    cmd_sws->add_option("--seed", sws.seed, "RNG seed");
    cmd_sws->add_option("--out", sws.out, "output manifest CSV")->required();
    cmd_sws->add_option("--report", sws.common.report_path, "run report path");
    cmd_sws->add_flag("--deterministic", sws.common.deterministic, "omit timestamps");

    struct {
        std::string manifest, volumes, out_dir;
        std::array<double, 3> spacing{0.7, 0.7, 1.25};
        double clip_lo = -1000, clip_hi = 500;
        std::string normalize = "per-volume-zscore";
        std::array<std::int64_t, 3> dims{64, 64, 64};
        CurateCommon common;
    } patches;
    auto* cmd_patches = cmd_curate->add_subcommand("patches", "extract preprocessed patches");
    cmd_patches->add_option("--manifest", patches.manifest, "patch manifest CSV")->required();
    cmd_patches->add_option("--volumes", patches.volumes, "directory of <scan_id>.nii[.gz]")->required();
    cmd_patches->add_option("--out-dir", patches.out_dir, "patch output directory")->required();
    cmd_patches->add_option("--spacing", [&patches](const auto& v) {
        if (std::sscanf(v[0].c_str(), "%lf,%lf,%lf", &patches.spacing[0], &patches.spacing[1],
                        &patches.spacing[2]) != 3)
            throw CLI::ValidationError("--spacing", "expected sx,sy,sz");
        return true;
    }, "target spacing sx,sy,sz");
    cmd_patches->add_option("--clip-lo", patches.clip_lo, "intensity clip floor");
    cmd_patches->add_option("--clip-hi", patches.clip_hi, "intensity clip ceiling");
    cmd_patches->add_option("--normalize", patches.normalize, "per-volume-zscore | none");
    cmd_patches->add_option("--patch-dims", [&patches](const auto& v) {
        long long a, b, c;
        if (std::sscanf(v[0].c_str(), "%lld,%lld,%lld", &a, &b, &c) != 3)
            throw CLI::ValidationError("--patch-dims", "expected nx,ny,nz");
        patches.dims = {a, b, c};
        return true;
    }, "patch voxel dims nx,ny,nz");
    cmd_patches->add_option("--report", patches.common.report_path, "run report path");
    cmd_patches->add_flag("--deterministic", patches.common.deterministic, "omit timestamps");

    // render
    struct {
        std::string report, out;
        std::string kind = "froc";
    } render;
    auto* cmd_render = app.add_subcommand("render", "render curves from a JSON report");
    cmd_render->add_option("--report", render.report, "JSON report")->required();
    cmd_render->add_option("--kind", render.kind, "froc | roc");
    cmd_render->add_option("--out", render.out, "SVG path")->required();

    // replay
    struct {
        std::string report;
        std::optional<std::string> out;
    } replay;
    auto* cmd_replay = app.add_subcommand("replay", "re-execute a run from its report echo");
    cmd_replay->add_option("--report", replay.report, "JSON report")->required();
    cmd_replay->add_option("--out", replay.out, "new report path");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    }

    if (cmd_detect->parsed()) return run_eval_detect(detect, args, out);
    if (cmd_classify->parsed()) return run_eval_classify(classify, args, out);

    if (cmd_nlst3d->parsed()) {
        GroupingParams params{nlst3d.min_iou, nlst3d.max_gap, nlst3d.thickness};
        SliceUnit unit;
        if (nlst3d.slice_unit == "index") unit = SliceUnit::Index;
        else if (nlst3d.slice_unit == "mm") unit = SliceUnit::PositionMm;
        else throw InputError("--slice-unit must be 'index' or 'mm'");
        auto boxes = parse_slice_boxes(slurp(nlst3d.slice_boxes), unit);

        // aggregate per scan, deterministically ordered by scan id
        std::map<std::string, std::vector<SliceBox2D>> by_scan;
        for (auto& b : boxes) by_scan[b.scan_id].push_back(std::move(b));
        std::vector<Annotation> all;
        for (auto& [scan, scan_boxes] : by_scan) {
            auto nodules = aggregate_slices(scan_boxes, params);
            for (auto& n : nodules) n.nodule_id = scan + "-" + n.nodule_id;
            all.insert(all.end(), nodules.begin(), nodules.end());
        }
        spill(nlst3d.out, emit_annotations(all, AnnotationSchema::CenterSize));
        write_curate_report("nlst3d", args, nlst3d.common, out, [&](Json& r) {
            add_input_digest(r, "slice_boxes", nlst3d.slice_boxes);
            r["config"]["slice_unit"] = nlst3d.slice_unit;
            r["config"]["thickness_mm"] = nlst3d.thickness;
            r["config"]["min_2d_iou"] = nlst3d.min_iou;
            r["config"]["max_slice_gap"] = nlst3d.max_gap;
            r["results"]["slice_boxes"] = boxes.size();
            r["results"]["nodules"] = all.size();
            r["results"]["out"] = nlst3d.out;
        });
        return kExitOk;
    }

    if (cmd_neg->parsed()) {
        HitCriterion crit = HitCriterion::parse(negatives.criterion);
        crit.probe_size_mm = negatives.probe_mm;
        auto cands = parse_candidates(slurp(negatives.candidates));
        auto anns = parse_annotations(slurp(negatives.annotations));
        NegativeSelector selector{negatives.top_k, negatives.min_prob};
        auto mined = derive_negatives(cands, anns.rows, crit, selector);
        spill(negatives.out, emit_candidates(mined));
        write_curate_report("negatives", args, negatives.common, out, [&](Json& r) {
            add_input_digest(r, "candidates", negatives.candidates);
            add_input_digest(r, "annotations", negatives.annotations);
            r["config"]["criterion"] = negatives.criterion;
            r["config"]["probe_mm"] = negatives.probe_mm;
            if (negatives.top_k) r["config"]["top_k"] = *negatives.top_k;
            if (negatives.min_prob) r["config"]["min_prob"] = *negatives.min_prob;
            r["results"]["candidates"] = cands.size();
            r["results"]["negatives"] = mined.size();
            r["results"]["out"] = negatives.out;
        });
        return kExitOk;
    }

    if (cmd_sws->parsed()) {
        HitCriterion crit = HitCriterion::parse(sws.criterion);
        crit.probe_size_mm = sws.probe_mm;
        auto cands = parse_candidates(slurp(sws.candidates));
        auto anns = parse_annotations(slurp(sws.annotations));
        SwsConfig cfg;
        cfg.neg_pos_ratio = sws.ratio;
        cfg.seed = sws.seed;
        SwsResult result = sws_sample(cands, anns.rows, crit, cfg);
        spill(sws.out, emit_patch_manifest(result.rows));
        write_curate_report("sws", args, sws.common, out, [&](Json& r) {
            add_input_digest(r, "candidates", sws.candidates);
            add_input_digest(r, "annotations", sws.annotations);
            r["config"]["criterion"] = sws.criterion;
            r["config"]["probe_mm"] = sws.probe_mm;
            r["config"]["ratio"] = sws.ratio;
            r["config"]["seed"] = sws.seed;
            r["config"]["strata"] = {"[0,0.4)", "[0.4,0.7)", "[0.7,1]"};
            r["results"]["positives"] = anns.rows.size();
            r["results"]["stratum_targets"] = result.stratum_targets;
            r["results"]["stratum_counts"] = result.stratum_counts;
            r["results"]["stratum_deficits"] = result.stratum_deficits;
            r["results"]["backfilled"] = result.backfilled;
            r["results"]["unmet"] = result.unmet;
            r["results"]["rows"] = result.rows.size();
            r["results"]["out"] = sws.out;
        });
        return kExitOk;
    }

    if (cmd_patches->parsed()) {
        PreprocessConfig cfg;
        cfg.target_spacing = patches.spacing;
        cfg.clip_lo = patches.clip_lo;
        cfg.clip_hi = patches.clip_hi;
        if (patches.normalize == "per-volume-zscore") cfg.normalize = NormalizeMode::PerVolumeZscore;
        else if (patches.normalize == "none") cfg.normalize = NormalizeMode::None;
        else throw InputError("--normalize must be 'per-volume-zscore' or 'none'");
        cfg.validate();

        auto rows = parse_patch_manifest(slurp(patches.manifest));
        fs::create_directories(patches.out_dir);

        // one resample per scan, reused across its patches
        std::map<std::string, std::vector<std::size_t>> rows_by_scan;
        for (std::size_t i = 0; i < rows.size(); ++i) rows_by_scan[rows[i].scan_id].push_back(i);
        std::size_t written = 0;
        for (const auto& [scan_id, row_indices] : rows_by_scan) {
            fs::path volume_path = fs::path(patches.volumes) / (scan_id + ".nii.gz");
            if (!fs::exists(volume_path))
                volume_path = fs::path(patches.volumes) / (scan_id + ".nii");
            if (!fs::exists(volume_path))
                throw InputError("no volume for scan '" + scan_id + "' under " + patches.volumes);
            VolumeGrid resampled = resample(read_volume_file(volume_path), cfg.target_spacing);
            for (std::size_t i : row_indices) {
                VolumeGrid patch =
                    extract_patch_resampled(resampled, rows[i].center, cfg, patches.dims);
                NiftiWriteOptions opts;
                opts.gzip = true;
                write_volume_file(fs::path(patches.out_dir) / rows[i].path, patch, opts);
                ++written;
            }
        }
        write_curate_report("patches", args, patches.common, out, [&](Json& r) {
            add_input_digest(r, "manifest", patches.manifest);
            r["config"]["pipeline_order"] = "resample->clip->normalize";
            r["config"]["target_spacing"] = patches.spacing;
            r["config"]["clip"] = {patches.clip_lo, patches.clip_hi};
            r["config"]["normalize"] = patches.normalize;
            r["config"]["patch_dims"] = patches.dims;
            r["results"]["patches_written"] = written;
            r["results"]["out_dir"] = patches.out_dir;
        });
        return kExitOk;
    }

    if (cmd_render->parsed()) {
        Json report = Json::parse(slurp(render.report));
        if (render.kind == "froc") {
            const Json& f = report.at("results").at("froc");
            FrocCurve curve;
            for (const auto& p : f.at("operating_points"))
                curve.points.push_back({p.at("threshold").get<double>(),
                                        p.at("fp_per_scan").get<double>(),
                                        p.at("sensitivity").get<double>()});
            std::size_t i = 0;
            for (const auto& [key, value] : f.at("sensitivity_at_fp_rate").items())
                curve.rate_sensitivities[i++] = value.get<double>();
            curve.cpm = f.at("cpm").get<double>();
            spill(render.out, render_froc_svg(curve, std::nullopt, "FROC"));
        } else if (render.kind == "roc") {
            const Json& results = report.at("results");
            std::vector<RocPoint> points;
            for (const auto& p : results.at("roc"))
                points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
            const Json& a = results.at("auc");
            AucEstimate est;
            est.auc = a.at("auc").get<double>();
            est.ci_low = a.at("ci_low").get<double>();
            est.ci_high = a.at("ci_high").get<double>();
            est.method = a.at("method").get<std::string>() == "delong" ? CiMethod::Delong
                                                                       : CiMethod::Bootstrap;
            spill(render.out, render_roc_svg(points, est, "ROC"));
        } else {
            throw InputError("--kind must be 'froc' or 'roc'");
        }
        return kExitOk;
    }

    if (cmd_replay->parsed()) return run_replay(replay.report, replay.out, out, err);

    throw InputError("no subcommand given");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        return dispatch(args, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const InvariantError& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}

}  // namespace lungbench
