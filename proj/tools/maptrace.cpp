// Command-line driver: dataset generation, the training regimes, the
// uncertainty-threshold sweep, standalone evaluation of a checkpoint, and
// label comparison.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "maptrace/experiment.hpp"
#include "maptrace/image_io.hpp"
#include "maptrace/pseudo_label.hpp"
#include "maptrace/synth.hpp"

using namespace maptrace;

namespace {

std::vector<double> parse_doubles(const std::string& csv) {
    std::vector<double> out;
    size_t pos = 0;
    while (pos < csv.size()) {
        size_t next = csv.find(',', pos);
        if (next == std::string::npos) next = csv.size();
        out.push_back(std::stod(csv.substr(pos, next - pos)));
        pos = next + 1;
    }
    return out;
}

struct SpecCli {
    std::string config;
    std::string manifest, eval_manifest, output_dir, variant, direction, run_id, pretrain_from;
    std::string eval_years;
    double epsilon = -1.0;
    long long seed = -1;
    int base_width = -1;
    int eval_tile = -1, eval_batch = -1;
    int pre_epochs = -1, ft_epochs = -1, batch_size = -1, tile_size = -1, overlap = -1;
    double pre_lr = -1.0, ft_lr = -1.0, weight_decay = -1.0;

    void add_options(CLI::App* cmd) {
        cmd->add_option("--config", config, "JSON spec file; flags override its fields");
        cmd->add_option("--manifest", manifest, "training manifest");
        cmd->add_option("--eval-manifest", eval_manifest, "evaluation manifest");
        cmd->add_option("--output-dir", output_dir, "output directory for runs");
        cmd->add_option("--variant", variant, "pre | all | trace");
        cmd->add_option("--direction", direction, "bi | mono | mono_future");
        cmd->add_option("--epsilon", epsilon, "uncertainty threshold in (0,1]");
        cmd->add_option("--seed", seed, "run seed");
        cmd->add_option("--base-width", base_width, "UNet base channel width");
        cmd->add_option("--eval-years", eval_years, "comma-separated years (default: all labeled)");
        cmd->add_option("--eval-tile", eval_tile, "inference tile size");
        cmd->add_option("--eval-batch", eval_batch, "inference batch size");
        cmd->add_option("--run-id", run_id, "run directory name (default derived)");
        cmd->add_option("--pretrain-from", pretrain_from, "reuse a pre-training checkpoint");
        cmd->add_option("--pretrain-epochs", pre_epochs, "pre-training epochs");
        cmd->add_option("--pretrain-lr", pre_lr, "pre-training initial lr");
        cmd->add_option("--finetune-epochs", ft_epochs, "fine-tuning epochs per step");
        cmd->add_option("--finetune-lr", ft_lr, "fine-tuning initial lr");
        cmd->add_option("--batch-size", batch_size, "training batch size");
        cmd->add_option("--tile-size", tile_size, "training tile size");
        cmd->add_option("--overlap", overlap, "training tile overlap");
        cmd->add_option("--weight-decay", weight_decay, "optimizer weight decay");
    }

    ExperimentSpec build() const {
        ExperimentSpec spec;
        if (!config.empty()) spec = spec_from_json_file(config);
        if (!manifest.empty()) spec.manifest_path = manifest;
        if (!eval_manifest.empty()) spec.eval_manifest_path = eval_manifest;
        if (!output_dir.empty()) spec.output_dir = output_dir;
        if (!variant.empty()) spec.variant = variant_from_name(variant);
        if (!direction.empty()) spec.direction = trace_mode_from_name(direction);
        if (epsilon >= 0.0) spec.epsilon = epsilon;
        if (seed >= 0) spec.seed = (uint64_t)seed;
        if (base_width > 0) spec.base_width = base_width;
        if (!eval_years.empty())
            for (double y : parse_doubles(eval_years)) spec.eval_years.push_back((int)y);
        if (eval_tile > 0) spec.eval_tile_size = eval_tile;
        if (eval_batch > 0) spec.eval_batch = eval_batch;
        if (!run_id.empty()) spec.run_id = run_id;
        if (!pretrain_from.empty()) spec.pretrain_from = pretrain_from;
        if (pre_epochs > 0) spec.pretrain_config.epochs = pre_epochs;
        if (pre_lr > 0) spec.pretrain_config.initial_lr = pre_lr;
        if (ft_epochs > 0) spec.finetune_config.epochs = ft_epochs;
        if (ft_lr > 0) spec.finetune_config.initial_lr = ft_lr;
        for (TrainConfig* c : {&spec.pretrain_config, &spec.finetune_config}) {
            if (batch_size > 0) c->batch_size = batch_size;
            if (tile_size > 0) c->tile_size = tile_size;
            if (overlap >= 0) c->overlap = overlap;
            if (weight_decay >= 0) c->weight_decay = weight_decay;
        }
        return spec;
    }
};

void print_reports(const std::vector<YearMetrics>& per_year, const std::string& model,
                   const ClassScheme& scheme) {
    std::cout << report_csv_header(scheme) << "\n";
    for (const auto& ym : per_year)
        std::cout << report_csv_row(model, ym.year, ym.report, scheme) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"age-tracing segmentation pipeline for sequential historical maps"};
    app.require_subcommand(1);

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "generate a synthetic map sequence dataset");
    std::string synth_out, eval_patch, class_mix, anchor_pos;
    SynthConfig scfg;
    long long synth_seed = 0;
    bool era_break = false;
    synth->add_option("--output", synth_out, "output directory")->required();
    synth->add_option("--years", scfg.num_years, "number of years");
    synth->add_option("--start-year", scfg.start_year, "first year");
    synth->add_option("--year-gap", scfg.year_gap, "gap between years");
    synth->add_option("--size", scfg.raster_size, "raster size in pixels");
    synth->add_option("--patches", scfg.num_patches, "number of patches");
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_option("--drift", scfg.style_drift_rate, "style drift rate per step");
    synth->add_option("--change-rate", scfg.landuse_change_rate, "land-use change rate per step");
    synth->add_option("--noise", scfg.noise_sigma, "rendering noise sigma");
    synth->add_option("--class-mix", class_mix, "six comma-separated target area fractions");
    synth->add_option("--anchor-pos", anchor_pos, "middle | last");
    synth->add_flag("--era-break", era_break, "inject an abrupt style break");
    synth->add_option("--eval-patch", eval_patch, "held-out patch id (default: last patch)");

    // ---- train ----
    auto* train = app.add_subcommand("train", "run one experiment (pre | all | trace)");
    SpecCli train_cli;
    train_cli.add_options(train);

    // ---- sweep ----
    auto* sweep = app.add_subcommand("sweep", "trace runs over a list of epsilon values");
    SpecCli sweep_cli;
    sweep_cli.add_options(sweep);
    std::string eps_list = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9";
    sweep->add_option("--epsilons", eps_list, "comma-separated thresholds");

    // ---- eval ----
    auto* eval = app.add_subcommand("eval", "re-evaluate a checkpoint on a manifest");
    std::string eval_ckpt, eval_manifest_path, eval_out, eval_years_s, eval_name;
    int eval_tile = 1024, eval_batch_n = 2;
    eval->add_option("--checkpoint", eval_ckpt, "model checkpoint")->required();
    eval->add_option("--manifest", eval_manifest_path, "evaluation manifest")->required();
    eval->add_option("--output-dir", eval_out, "where to write report.csv/json");
    eval->add_option("--eval-years", eval_years_s, "comma-separated years");
    eval->add_option("--eval-tile", eval_tile, "inference tile size");
    eval->add_option("--eval-batch", eval_batch_n, "inference batch size");
    eval->add_option("--model-name", eval_name, "model column value (default: checkpoint stem)");

    // ---- compare-labels ----
    auto* cmp = app.add_subcommand("compare-labels", "per-class consistency of two label rasters");
    std::string cmp_a, cmp_b, cmp_out;
    cmp->add_option("--a", cmp_a, "first label PNG")->required();
    cmp->add_option("--b", cmp_b, "second label PNG")->required();
    cmp->add_option("--output-dir", cmp_out, "write per-class overlay PNGs here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            scfg.seed = (uint64_t)synth_seed;
            if (!class_mix.empty()) scfg.class_mix = parse_doubles(class_mix);
            if (!anchor_pos.empty()) scfg.anchor_pos = anchor_pos;
            scfg.era_break = era_break;
            scfg.validate();
            SynthResult result = generate_sequence(scfg);
            if (eval_patch.empty()) eval_patch = result.patch_ids.back();
            write_synth_dataset(result, scfg, synth_out, eval_patch);
            std::cout << "wrote " << scfg.num_patches << " patches x " << scfg.num_years
                      << " years to " << synth_out << " (eval patch " << eval_patch << ")\n";
        } else if (train->parsed()) {
            ExperimentSpec spec = train_cli.build();
            ExperimentResult res = run_experiment(spec);
            print_reports(res.per_year, res.run_id, ClassScheme::defaults());
            std::cout << "run dir: " << res.run_dir.string() << "\n";
        } else if (sweep->parsed()) {
            ExperimentSpec spec = sweep_cli.build();
            const auto rows = sweep_epsilon(spec, parse_doubles(eps_list));
            std::printf("epsilon,year,mIoU,OA,mean_coverage\n");
            for (const auto& r : rows)
                std::printf("%.2f,%d,%.1f,%.1f,%.1f\n", r.epsilon, r.year, r.miou * 100.0,
                            r.oa * 100.0, r.mean_coverage * 100.0);
            std::cout << "sweep table: " << (spec.output_dir / "sweep.csv").string() << "\n";
        } else if (eval->parsed()) {
            UNet<float> net = load_checkpoint(eval_ckpt);
            Manifest manifest = load_manifest(eval_manifest_path);
            std::vector<int> years;
            if (!eval_years_s.empty())
                for (double y : parse_doubles(eval_years_s)) years.push_back((int)y);
            auto per_year = evaluate_model(net, manifest, years, eval_tile, eval_batch_n);
            const std::string name =
                eval_name.empty() ? std::filesystem::path(eval_ckpt).stem().string() : eval_name;
            print_reports(per_year, name, manifest.scheme);
            if (!eval_out.empty()) {
                std::filesystem::create_directories(eval_out);
                write_reports(eval_out, name, per_year, manifest.scheme);
            }
        } else if (cmp->parsed()) {
            const ClassScheme& scheme = ClassScheme::defaults();
            LabelRaster a = read_label_png(cmp_a, scheme);
            LabelRaster b = read_label_png(cmp_b, scheme);
            LabelComparison comparison = compare_labels(a, b);
            for (int c = 0; c < scheme.count(); ++c) {
                if (comparison.iou[c])
                    std::printf("%s: IoU %.1f%%\n", scheme.names[c].c_str(),
                                *comparison.iou[c] * 100.0);
                else
                    std::printf("%s: -\n", scheme.names[c].c_str());
            }
            if (!cmp_out.empty()) {
                std::filesystem::create_directories(cmp_out);
                for (int c = 0; c < scheme.count(); ++c)
                    write_png_rgb8(std::filesystem::path(cmp_out) /
                                       ("overlap_" + scheme.names[c] + ".png"),
                                   a.width, a.height, comparison.class_overlays[c].data());
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
