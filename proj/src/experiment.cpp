#include "maptrace/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "maptrace/image_io.hpp"
#include "maptrace/plot.hpp"
#include "maptrace/pseudo_label.hpp"

namespace maptrace {

using nlohmann::json;

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::pre: return "pre";
        case Variant::all: return "all";
        case Variant::trace: return "trace";
    }
    return "?";
}

Variant variant_from_name(const std::string& name) {
    if (name == "pre") return Variant::pre;
    if (name == "all") return Variant::all;
    if (name == "trace") return Variant::trace;
    fail("unknown variant: " + name);
}

std::string ExperimentSpec::derived_run_id() const {
    char buf[96];
    const char* dir = direction == TraceMode::bi ? "bi" : "mono";
    if (variant == Variant::trace)
        std::snprintf(buf, sizeof(buf), "trace_%s_eps%.2f_seed%llu", dir, epsilon,
                      (unsigned long long)seed);
    else
        std::snprintf(buf, sizeof(buf), "%s_%s_seed%llu", variant_name(variant), dir,
                      (unsigned long long)seed);
    return buf;
}

void ExperimentSpec::validate() const {
    require(!manifest_path.empty(), "spec: manifest_path is required");
    require(!output_dir.empty(), "spec: output_dir is required");
    if (variant == Variant::trace)
        require(epsilon > 0.0 && epsilon <= 1.0, "spec: epsilon must be in (0,1]");
    require(base_width >= 1, "spec: base_width must be positive");
    require(eval_tile_size >= 16, "spec: eval_tile_size too small");
    require(eval_batch >= 1, "spec: eval_batch must be positive");
}

namespace {

json train_config_to_json(const TrainConfig& c) {
    return json{{"epochs", c.epochs},
                {"initial_lr", c.initial_lr},
                {"lr_drop_epochs", c.lr_drop_epochs},
                {"lr_drop_factor", c.lr_drop_factor},
                {"weight_decay", c.weight_decay},
                {"batch_size", c.batch_size},
                {"tile_size", c.tile_size},
                {"overlap", c.overlap}};
}

void train_config_from_json(const json& j, TrainConfig& c) {
    if (j.contains("epochs")) c.epochs = j["epochs"];
    if (j.contains("initial_lr")) c.initial_lr = j["initial_lr"];
    if (j.contains("lr_drop_epochs")) c.lr_drop_epochs = j["lr_drop_epochs"].get<std::vector<int>>();
    if (j.contains("lr_drop_factor")) c.lr_drop_factor = j["lr_drop_factor"];
    if (j.contains("weight_decay")) c.weight_decay = j["weight_decay"];
    if (j.contains("batch_size")) c.batch_size = j["batch_size"];
    if (j.contains("tile_size")) c.tile_size = j["tile_size"];
    if (j.contains("overlap")) c.overlap = j["overlap"];
}

json spec_to_json_obj(const ExperimentSpec& s) {
    json j;
    j["variant"] = variant_name(s.variant);
    j["direction"] = trace_mode_name(s.direction);
    j["epsilon"] = s.epsilon;
    j["manifest"] = s.manifest_path.string();
    j["eval_manifest"] = s.eval_manifest_path.string();
    j["eval_years"] = s.eval_years;
    // output_dir is implied by the run directory location and stays out of
    // the persisted identity, so relocated run trees can still resume
    j["seed"] = s.seed;
    j["base_width"] = s.base_width;
    j["pretrain"] = train_config_to_json(s.pretrain_config);
    j["finetune"] = train_config_to_json(s.finetune_config);
    j["eval_tile_size"] = s.eval_tile_size;
    j["eval_batch"] = s.eval_batch;
    return j;
}

}  // namespace

std::string spec_to_json(const ExperimentSpec& spec) { return spec_to_json_obj(spec).dump(2); }

ExperimentSpec spec_from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), "spec: cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        fail("spec: parse error in " + path.string() + ": " + e.what());
    }
    ExperimentSpec s;
    s.pretrain_config = TrainConfig::pretrain_defaults();
    s.finetune_config = TrainConfig::finetune_defaults();
    if (j.contains("variant")) s.variant = variant_from_name(j["variant"]);
    if (j.contains("direction")) s.direction = trace_mode_from_name(j["direction"]);
    if (j.contains("epsilon")) s.epsilon = j["epsilon"];
    if (j.contains("manifest")) s.manifest_path = j["manifest"].get<std::string>();
    if (j.contains("eval_manifest")) s.eval_manifest_path = j["eval_manifest"].get<std::string>();
    if (j.contains("eval_years")) s.eval_years = j["eval_years"].get<std::vector<int>>();
    if (j.contains("output_dir")) s.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("seed")) s.seed = j["seed"];
    if (j.contains("base_width")) s.base_width = j["base_width"];
    if (j.contains("pretrain")) train_config_from_json(j["pretrain"], s.pretrain_config);
    if (j.contains("finetune")) train_config_from_json(j["finetune"], s.finetune_config);
    if (j.contains("eval_tile_size")) s.eval_tile_size = j["eval_tile_size"];
    if (j.contains("eval_batch")) s.eval_batch = j["eval_batch"];
    if (j.contains("run_id")) s.run_id = j["run_id"].get<std::string>();
    if (j.contains("pretrain_from")) s.pretrain_from = j["pretrain_from"].get<std::string>();
    return s;
}

// ---------------------------------------------------------------------------
// journal
// ---------------------------------------------------------------------------

namespace {

std::vector<json> read_journal(const std::filesystem::path& path) {
    std::vector<json> out;
    std::ifstream in(path);
    if (!in.good()) return out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(json::parse(line));
    }
    return out;
}

void append_journal(const std::filesystem::path& path, const json& entry) {
    std::ofstream out(path, std::ios::app);
    require(out.good(), "journal: cannot open " + path.string());
    out << entry.dump() << "\n";
    require(out.good(), "journal: write failed");
}

// ---------------------------------------------------------------------------
// per-patch training data
// ---------------------------------------------------------------------------

struct PatchPlan {
    std::string patch_id;
    std::vector<int> entry_idx;  // manifest entries, year-ascending
    std::vector<int> years;
    int anchor_seq = 0;          // sequence index of the anchor map
    bool anchor_has_gt = false;  // anchor map year == labeled year
};

struct DataCache {
    const Manifest* manifest = nullptr;
    std::map<int, MapSheet> sheets;
    std::map<int, LabelRaster> labels;

    const MapSheet& sheet(int entry_idx) {
        auto it = sheets.find(entry_idx);
        if (it == sheets.end())
            it = sheets.emplace(entry_idx, load_map_sheet(*manifest, entry_idx)).first;
        return it->second;
    }

    const LabelRaster& label(int entry_idx) {
        auto it = labels.find(entry_idx);
        if (it == labels.end())
            it = labels.emplace(entry_idx, load_label_raster(*manifest, entry_idx)).first;
        return it->second;
    }
};

PatchPlan make_patch_plan(const Manifest& manifest, const std::string& patch) {
    PatchPlan plan;
    plan.patch_id = patch;
    plan.entry_idx = manifest.entry_indices(patch);
    for (int idx : plan.entry_idx) plan.years.push_back(manifest.entries[idx].year);
    const int a_y = manifest.anchor_year(patch);
    plan.anchor_seq = select_anchor(plan.years, a_y);
    plan.anchor_has_gt = plan.years[plan.anchor_seq] == a_y;
    return plan;
}

// Supervision raster: the label at the anchor-labeled year when present,
// otherwise the label attached to the anchor entry (a foreign-year label).
const LabelRaster& anchor_supervision(const Manifest& manifest, const PatchPlan& plan,
                                      DataCache& cache) {
    const int a_y = manifest.anchor_year(plan.patch_id);
    for (int idx : plan.entry_idx)
        if (manifest.entries[idx].year == a_y && manifest.entries[idx].label_path)
            return cache.label(idx);
    const int anchor_entry = plan.entry_idx[plan.anchor_seq];
    if (manifest.entries[anchor_entry].label_path) return cache.label(anchor_entry);
    fail("no supervision label for patch " + plan.patch_id);
}

std::string pseudo_file_name(const std::string& patch, int year) {
    return patch + "_" + std::to_string(year) + ".png";
}

}  // namespace

// ---------------------------------------------------------------------------
// inference
// ---------------------------------------------------------------------------

ScoreVolume predict_scores(UNet<float>& net, const MapSheet& sheet, int eval_tile_size,
                           int eval_batch) {
    int tile = std::min({eval_tile_size, sheet.height, sheet.width});
    tile -= tile % 16;
    require(tile >= 16, "predict: raster too small for inference tiles");
    const TileGrid grid = make_tile_grid(sheet.height, sheet.width, tile, 0);
    const auto tiles = extract_tiles(sheet, nullptr, grid);
    std::vector<ScoreVolume> outputs;
    outputs.reserve(tiles.size());
    const size_t plane = (size_t)tile * tile;
    for (size_t start = 0; start < tiles.size(); start += eval_batch) {
        const int bs = (int)std::min((size_t)eval_batch, tiles.size() - start);
        Tensor x(bs, 3, tile, tile);
        for (int b = 0; b < bs; ++b) {
            const auto& img = tiles[start + b].image;
            for (int c = 0; c < 3; ++c) {
                float* dst = x.plane(b, c);
                for (size_t p = 0; p < plane; ++p)
                    dst[p] = (float)img[p * 3 + c] * (1.0f / 255.0f);
            }
        }
        Tensor scores = net.forward_scores(x);
        for (auto& v : to_score_volumes(scores, true)) outputs.push_back(std::move(v));
    }
    return stitch_scores(outputs, grid);
}

// ---------------------------------------------------------------------------
// run_experiment
// ---------------------------------------------------------------------------

ExperimentResult run_experiment(const ExperimentSpec& spec_in) {
    namespace fs = std::filesystem;
    ExperimentSpec spec = spec_in;
    spec.validate();
    if (spec.run_id.empty()) spec.run_id = spec.derived_run_id();

    const fs::path run_dir = spec.output_dir / spec.run_id;
    fs::create_directories(run_dir / "pseudo");
    const fs::path journal_path = run_dir / "trace.json";

    // a resumed run must carry the same spec
    const std::string spec_text = spec_to_json(spec);
    const fs::path spec_path = run_dir / "spec.json";
    if (fs::exists(spec_path)) {
        std::ifstream in(spec_path);
        std::string existing((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
        require(existing == spec_text,
                "run dir " + run_dir.string() + " holds a different spec; refusing to resume");
    } else {
        std::ofstream out(spec_path, std::ios::trunc);
        out << spec_text;
    }

    Manifest manifest = load_manifest(spec.manifest_path);
    DataCache cache;
    cache.manifest = &manifest;
    std::vector<PatchPlan> plans;
    for (const auto& patch : manifest.patches()) plans.push_back(make_patch_plan(manifest, patch));

    UNetConfig ucfg;
    ucfg.in_channels = 3;
    ucfg.num_classes = manifest.scheme.count();
    ucfg.base_width = spec.base_width;

    std::vector<json> journal = read_journal(journal_path);
    auto journal_has = [&journal](const std::string& phase, int step) {
        for (const auto& e : journal)
            if (e.value("phase", "") == phase && e.value("step", -1) == step) return true;
        return false;
    };

    // ---- pre-training (step 0) ----
    UNet<float> net(ucfg);
    const fs::path step0 = run_dir / "step0.ckpt";
    if (journal_has("pretrain", 0)) {
        net = load_checkpoint(step0);
    } else if (!spec.pretrain_from.empty()) {
        net = load_checkpoint(spec.pretrain_from);
        require(net.config().base_width == ucfg.base_width &&
                    net.config().num_classes == ucfg.num_classes,
                "pretrain_from checkpoint does not match the model config");
        save_checkpoint(net, step0);
        append_journal(journal_path,
                       json{{"phase", "pretrain"},
                            {"step", 0},
                            {"checkpoint", "step0.ckpt"},
                            {"reused_from", spec.pretrain_from.string()}});
    } else {
        net = UNet<float>::build(ucfg, derive_seed(spec.seed, {tag("model_init")}));
        std::vector<TrainSample> anchor_pairs;
        for (const auto& plan : plans)
            anchor_pairs.push_back({&cache.sheet(plan.entry_idx[plan.anchor_seq]),
                                    &anchor_supervision(manifest, plan, cache)});
        const auto rows = pretrain(net, anchor_pairs, spec.pretrain_config, spec.seed);
        save_checkpoint(net, step0);
        append_log_csv(run_dir, rows);
        append_journal(journal_path,
                       json{{"phase", "pretrain"}, {"step", 0}, {"checkpoint", "step0.ckpt"}});
    }

    // ---- variant-specific training ----
    if (spec.variant == Variant::all) {
        const fs::path ckpt = run_dir / "step1.ckpt";
        if (journal_has("all", 1)) {
            net = load_checkpoint(ckpt);
        } else {
            std::vector<TrainSample> pooled;
            for (const auto& plan : plans) {
                const LabelRaster& supervision = anchor_supervision(manifest, plan, cache);
                for (int idx : plan.entry_idx) pooled.push_back({&cache.sheet(idx), &supervision});
            }
            TrainConfig cfg = spec.pretrain_config;
            cfg.phase = TrainConfig::Phase::pretrain;
            const auto rows = train_phase(net, pooled, cfg, 1, spec.seed);
            save_checkpoint(net, ckpt);
            append_log_csv(run_dir, rows);
            append_journal(journal_path,
                           json{{"phase", "all"}, {"step", 1}, {"checkpoint", "step1.ckpt"}});
        }
    } else if (spec.variant == Variant::trace) {
        // per-patch tracing frontiers synchronized by step number
        std::vector<TraceState> states;
        for (const auto& plan : plans)
            states.push_back(make_trace_state(plan.years, plan.anchor_seq, spec.direction));

        // pseudo-labels live with the run; regenerate only when missing
        std::map<std::pair<std::string, int>, LabelRaster> pseudo_cache;
        auto ensure_pseudo = [&](const PatchPlan& plan, int seq) -> const LabelRaster& {
            const auto key = std::make_pair(plan.patch_id, seq);
            auto it = pseudo_cache.find(key);
            if (it != pseudo_cache.end()) return it->second;
            const int year = plan.years[seq];
            const fs::path path = run_dir / "pseudo" / pseudo_file_name(plan.patch_id, year);
            LabelRaster raster;
            if (fs::exists(path)) {
                raster = read_label_png(path, manifest.scheme);
                raster.year = year;
                raster.patch_id = plan.patch_id;
            } else {
                const MapSheet& sheet = cache.sheet(plan.entry_idx[seq]);
                const ScoreVolume scores =
                    predict_scores(net, sheet, spec.eval_tile_size, spec.eval_batch);
                raster = generate_pseudo_labels(scores, spec.epsilon, manifest.scheme);
                raster.year = year;
                raster.patch_id = plan.patch_id;
                write_label_png(path, raster);
            }
            return pseudo_cache.emplace(key, std::move(raster)).first->second;
        };

        auto label_for = [&](const PatchPlan& plan, int seq) -> const LabelRaster& {
            if (seq == plan.anchor_seq && plan.anchor_has_gt)
                return anchor_supervision(manifest, plan, cache);
            return ensure_pseudo(plan, seq);
        };

        int completed = 0;
        for (const auto& e : journal)
            if (e.value("phase", "") == "finetune") completed = std::max(completed, e.value("step", 0));
        // replay the scheduler up to the journaled step
        for (int s = 1; s <= completed; ++s)
            for (auto& st : states) next_step(st);
        if (completed > 0)
            net = load_checkpoint(run_dir / ("step" + std::to_string(completed) + ".ckpt"));

        // anchor maps whose labeled year differs get pseudo-labels from the
        // pre-trained model
        for (const auto& plan : plans)
            if (!plan.anchor_has_gt) ensure_pseudo(plan, plan.anchor_seq);

        for (int step = completed + 1;; ++step) {
            json new_entries = json::object();
            json coverage_entries = json::object();
            bool any = false;
            for (size_t p = 0; p < plans.size(); ++p) {
                StepResult r = next_step(states[p]);
                if (r.exhausted) continue;
                any = true;
                json idxs = json::array();
                for (int seq : r.new_indices) {
                    const LabelRaster& raster = ensure_pseudo(plans[p], seq);
                    idxs.push_back(seq);
                    coverage_entries[plans[p].patch_id][std::to_string(plans[p].years[seq])] =
                        coverage(raster);
                }
                new_entries[plans[p].patch_id] = std::move(idxs);
            }
            if (!any) break;

            std::vector<TrainSample> training_set;
            json active_entries = json::object();
            json source_entries = json::object();
            for (size_t p = 0; p < plans.size(); ++p) {
                json act = json::array();
                json sources = json::object();
                for (int seq : training_indices(states[p])) {
                    training_set.push_back(
                        {&cache.sheet(plans[p].entry_idx[seq]), &label_for(plans[p], seq)});
                    act.push_back(seq);
                    const LabelSource& src = states[p].label_sources.at(seq);
                    const bool gt = seq == plans[p].anchor_seq && plans[p].anchor_has_gt;
                    sources[std::to_string(seq)] =
                        gt ? std::string("ground_truth")
                           : "pseudo(step " +
                                 std::to_string(seq == plans[p].anchor_seq ? 0
                                                                           : src.produced_by_step) +
                                 ")";
                }
                active_entries[plans[p].patch_id] = std::move(act);
                source_entries[plans[p].patch_id] = std::move(sources);
            }

            const auto rows = finetune_step(net, training_set, spec.finetune_config, step, spec.seed);
            const std::string ckpt_name = "step" + std::to_string(step) + ".ckpt";
            save_checkpoint(net, run_dir / ckpt_name);
            append_log_csv(run_dir, rows);
            append_journal(journal_path, json{{"phase", "finetune"},
                                              {"step", step},
                                              {"checkpoint", ckpt_name},
                                              {"new", new_entries},
                                              {"active", active_entries},
                                              {"label_sources", source_entries},
                                              {"coverage", coverage_entries}});
        }
    }

    // ---- evaluation ----
    Manifest eval_manifest =
        spec.eval_manifest_path.empty() ? manifest : load_manifest(spec.eval_manifest_path);

    ExperimentResult result;
    result.run_id = spec.run_id;
    result.run_dir = run_dir;
    result.per_year = evaluate_model(net, eval_manifest, spec.eval_years, spec.eval_tile_size,
                                     spec.eval_batch);
    write_reports(run_dir, spec.run_id, result.per_year, eval_manifest.scheme);
    return result;
}

std::vector<YearMetrics> evaluate_model(UNet<float>& net, const Manifest& eval_manifest,
                                        const std::vector<int>& years_filter,
                                        int eval_tile_size, int eval_batch) {
    DataCache cache;
    cache.manifest = &eval_manifest;
    std::vector<int> years = years_filter;
    if (years.empty()) {
        std::set<int> seen;
        for (const auto& e : eval_manifest.entries)
            if (e.label_path) seen.insert(e.year);
        years.assign(seen.begin(), seen.end());
    }
    require(!years.empty(), "eval: no labeled years to evaluate");

    std::set<int> excluded;
    const int uk = eval_manifest.scheme.id_of("UK");
    if (uk >= 0) excluded.insert(uk);

    std::vector<YearMetrics> out;
    for (int year : years) {
        ConfusionMatrix cm(eval_manifest.scheme.count());
        for (int idx = 0; idx < (int)eval_manifest.entries.size(); ++idx) {
            const auto& e = eval_manifest.entries[idx];
            if (e.year != year || !e.label_path) continue;
            const MapSheet& sheet = cache.sheet(idx);
            const ScoreVolume scores = predict_scores(net, sheet, eval_tile_size, eval_batch);
            const std::vector<int8_t> pred = argmax_labels(scores);
            accumulate(cm, std::span<const int8_t>(pred),
                       std::span<const int8_t>(cache.label(idx).labels));
        }
        require(cm.total() > 0, "eval: no labeled pixels for year " + std::to_string(year));
        out.push_back({year, make_report(cm, excluded)});
    }
    return out;
}

void write_reports(const std::filesystem::path& dir, const std::string& model_name,
                   const std::vector<YearMetrics>& per_year, const ClassScheme& scheme) {
    {
        std::ofstream csv(dir / "report.csv", std::ios::trunc);
        require(csv.good(), "report: cannot open report.csv");
        csv << report_csv_header(scheme) << "\n";
        for (const auto& ym : per_year)
            csv << report_csv_row(model_name, ym.year, ym.report, scheme) << "\n";
    }
    json j;
    j["run_id"] = model_name;
    j["years"] = json::array();
    for (const auto& ym : per_year) {
        json y;
        y["year"] = ym.year;
        y["miou"] = ym.report.miou;
        y["oa"] = ym.report.oa;
        json per_class = json::object();
        for (int c = 0; c < scheme.count(); ++c)
            per_class[scheme.names[c]] =
                ym.report.iou[c] ? json(*ym.report.iou[c]) : json(nullptr);
        y["iou"] = std::move(per_class);
        j["years"].push_back(std::move(y));
    }
    std::ofstream out(dir / "report.json", std::ios::trunc);
    out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// epsilon sweep
// ---------------------------------------------------------------------------

std::vector<SweepRow> sweep_epsilon(const ExperimentSpec& base,
                                    const std::vector<double>& epsilons) {
    require(!epsilons.empty(), "sweep: empty epsilon list");
    ExperimentSpec proto = base;
    proto.variant = Variant::trace;

    std::vector<SweepRow> rows;
    std::map<double, ExperimentResult> results;
    std::filesystem::path shared_pretrain;

    for (double eps : epsilons) {
        ExperimentSpec spec = proto;
        spec.epsilon = eps;
        spec.run_id.clear();
        if (!shared_pretrain.empty()) spec.pretrain_from = shared_pretrain;
        ExperimentResult res = run_experiment(spec);
        if (shared_pretrain.empty()) shared_pretrain = res.run_dir / "step0.ckpt";

        // mean pseudo-label coverage per map year, from the run journal
        std::map<int, std::pair<double, int>> cov_by_year;
        for (const auto& e : read_journal(res.run_dir / "trace.json")) {
            if (!e.contains("coverage")) continue;
            for (const auto& [patch, m] : e["coverage"].items())
                for (const auto& [year_s, cov] : m.items()) {
                    auto& slot = cov_by_year[std::stoi(year_s)];
                    slot.first += cov.get<double>();
                    slot.second += 1;
                }
        }
        for (const auto& ym : res.per_year) {
            SweepRow row;
            row.epsilon = eps;
            row.year = ym.year;
            row.miou = ym.report.miou;
            row.oa = ym.report.oa;
            const auto it = cov_by_year.find(ym.year);
            row.mean_coverage = it != cov_by_year.end() && it->second.second > 0
                                    ? it->second.first / it->second.second
                                    : 1.0;  // anchor year: ground truth, full coverage
            rows.push_back(row);
        }
        results.emplace(eps, std::move(res));
    }

    std::filesystem::create_directories(base.output_dir);
    {
        std::ofstream csv(base.output_dir / "sweep.csv", std::ios::trunc);
        require(csv.good(), "sweep: cannot open sweep.csv");
        csv << "epsilon,year,mIoU,OA,mean_coverage\n";
        char buf[128];
        for (const auto& r : rows) {
            std::snprintf(buf, sizeof(buf), "%.2f,%d,%.6f,%.6f,%.6f\n", r.epsilon, r.year,
                          r.miou, r.oa, r.mean_coverage);
            csv << buf;
        }
    }

    // one figure per evaluation year: dashed per-class IoU, solid mIoU and OA
    std::set<int> years;
    for (const auto& r : rows) years.insert(r.year);
    const ClassScheme& scheme = ClassScheme::defaults();
    const std::array<std::array<uint8_t, 3>, 6> class_colors = {{{34, 119, 34},
                                                                 {150, 190, 60},
                                                                 {190, 80, 60},
                                                                 {60, 120, 200},
                                                                 {40, 60, 160},
                                                                 {150, 150, 150}}};
    for (int year : years) {
        std::vector<PlotSeries> series;
        for (int c = 0; c < scheme.count(); ++c) {
            PlotSeries s;
            s.label = scheme.names[c];
            s.color = class_colors[c];
            s.dashed = true;
            for (double eps : epsilons) {
                const auto& res = results.at(eps);
                for (const auto& ym : res.per_year)
                    if (ym.year == year && ym.report.iou[c]) {
                        s.x.push_back(eps);
                        s.y.push_back(*ym.report.iou[c] * 100.0);
                    }
            }
            if (!s.x.empty()) series.push_back(std::move(s));
        }
        PlotSeries miou{"MIOU", {}, {}, {0, 0, 0}, false};
        PlotSeries oa{"OA", {}, {}, {200, 30, 30}, false};
        for (const auto& r : rows)
            if (r.year == year) {
                miou.x.push_back(r.epsilon);
                miou.y.push_back(r.miou * 100.0);
                oa.x.push_back(r.epsilon);
                oa.y.push_back(r.oa * 100.0);
            }
        series.push_back(std::move(miou));
        series.push_back(std::move(oa));
        render_line_plot(base.output_dir / ("sweep_" + std::to_string(year) + ".png"),
                         "METRICS VS EPSILON - YEAR " + std::to_string(year), series, 0.0,
                         100.0);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// label comparison
// ---------------------------------------------------------------------------

LabelComparison compare_labels(const LabelRaster& a, const LabelRaster& b) {
    require(a.height == b.height && a.width == b.width, "compare: shape mismatch");
    const int C = a.scheme.count();
    LabelComparison out;
    out.height = a.height;
    out.width = a.width;
    out.iou.resize(C);
    const size_t n = a.labels.size();
    for (int c = 0; c < C; ++c) {
        uint64_t inter = 0, uni = 0;
        std::vector<uint8_t> overlay(n * 3, 255);
        for (size_t i = 0; i < n; ++i) {
            const bool in_a = a.labels[i] == c;
            const bool in_b = b.labels[i] == c;
            if (in_a && in_b) ++inter;
            if (in_a || in_b) ++uni;
            uint8_t* px = overlay.data() + i * 3;
            if (in_a && in_b) {
                px[0] = 240; px[1] = 200; px[2] = 40;   // both: yellow
            } else if (in_a) {
                px[0] = 60; px[1] = 160; px[2] = 60;    // a only: green
            } else if (in_b) {
                px[0] = 200; px[1] = 60; px[2] = 60;    // b only: red
            }
        }
        out.iou[c] = uni > 0 ? std::optional<double>((double)inter / (double)uni) : std::nullopt;
        out.class_overlays.push_back(std::move(overlay));
    }
    return out;
}

}  // namespace maptrace
