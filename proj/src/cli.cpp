#include "blockprune/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>

#include <CLI11.hpp>

namespace blockprune::cli {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Reports

RunConfig load_config_or_manifest(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw UsageError("cannot open config: " + path.string());
    json j;
    try {
        j = json::parse(f);
        if (j.is_object() && j.value("format", std::string()).starts_with("blockprune.manifest")) j = j.at("config");
        return run_config_from_json(j);
    } catch (const std::exception& e) {
        throw UsageError("malformed config " + path.string() + ": " + e.what());
    }
}

void write_probe_curve(const ProbeReport& report, const fs::path& path) {
    const ContributionTable t = contributions(report, {});
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << "block_id,accuracy,contribution,degraded\n" << std::setprecision(10);
    for (const auto& row : t.rows)
        f << row.block_id << ',' << report.accuracies.at(row.block_id) << ',' << row.contribution << ','
          << (row.contribution < 0 ? 1 : 0) << '\n';
}

std::vector<ProbeReport> model_probe_reports(const ExperimentManifest& m) {
    std::vector<ProbeReport> out;
    for (const auto& r : m.rounds) out.push_back(r.probe_report);
    if (m.final_probe_report) out.push_back(*m.final_probe_report);
    return out;
}

ResultRow result_row(const ExperimentManifest& m, const std::string& label) {
    ResultRow row{label, m.mode, m.dataset, m.final_accuracy(), m.final_flops(), 0.0, std::nullopt, std::nullopt};
    if (m.rounds.empty()) {
        if (m.baseline.latency) {
            row.mean_ms = m.baseline.latency->mean_ms;
            row.ar = 1.0;
        }
        return row;
    }
    const RoundRecord& last = m.rounds.back();
    row.frr = last.frr;
    if (last.latency) row.mean_ms = last.latency->mean_ms;
    row.ar = last.ar;
    return row;
}

namespace {

std::string opt(const std::optional<double>& v, int precision) {
    if (!v) return "";
    std::ostringstream s;
    s << std::fixed << std::setprecision(precision) << *v;
    return s.str();
}

}  // namespace

void write_results_table(const std::vector<ResultRow>& rows, const fs::path& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << "label,mode,dataset,acc,flops,frr,mean_ms,ar\n";
    for (const auto& r : rows)
        f << r.label << ',' << r.mode << ',' << r.dataset << ',' << std::setprecision(10) << r.accuracy << ','
          << r.flops << ',' << r.frr << ',' << opt(r.mean_ms, 6) << ',' << opt(r.ar, 6) << '\n';
}

void print_results_table(const std::vector<ResultRow>& rows, std::ostream& out) {
    std::size_t w = 5;
    for (const auto& r : rows) w = std::max(w, r.label.size());
    out << std::left << std::setw(static_cast<int>(w)) << "model" << std::right << std::setw(9) << "Acc(%)"
        << std::setw(9) << "Frr(%)" << std::setw(11) << "mean_ms" << std::setw(7) << "AR" << '\n';
    for (const auto& r : rows) {
        out << std::left << std::setw(static_cast<int>(w)) << r.label << std::right << std::fixed
            << std::setprecision(2) << std::setw(9) << 100.0 * r.accuracy << std::setw(9) << 100.0 * r.frr
            << std::setw(11) << (r.mean_ms ? opt(r.mean_ms, 3) : "-") << std::setw(7) << (r.ar ? opt(r.ar, 2) : "-")
            << '\n';
        out.unsetf(std::ios::fixed);
    }
}

void write_census_table(const std::vector<std::pair<std::string, ExperimentManifest>>& manifests,
                        const fs::path& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << "label,model_index,units,degraded_units\n";
    for (const auto& [label, m] : manifests)
        for (const auto& c : m.census) f << label << ',' << c.model_index << ',' << c.units << ',' << c.degraded_units << '\n';
}

void require_same_dataset(const std::vector<std::pair<std::string, ExperimentManifest>>& manifests) {
    for (const auto& [label, m] : manifests)
        if (m.dataset != manifests.front().second.dataset)
            throw UsageError("manifests use different datasets: " + manifests.front().second.dataset + " (" +
                             manifests.front().first + ") vs " + m.dataset + " (" + label + ")");
}

namespace {

struct Series {
    std::string name;
    std::vector<double> y;
};

// Minimal line chart; x is the point index.
void write_svg(const std::vector<Series>& series, const std::string& title, const std::string& x_label,
               const fs::path& path) {
    const double W = 640, H = 400, L = 60, R = 150, T = 40, B = 50;
    double lo = 0.0, hi = 1e-9;
    std::size_t n = 1;
    for (const auto& s : series) {
        for (double v : s.y) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        n = std::max(n, s.y.size());
    }
    auto px = [&](std::size_t i) { return L + (n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0) * (W - L - R); };
    auto py = [&](double v) { return H - B - (v - lo) / (hi - lo) * (H - T - B); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n"
      << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">" << x_label << "</text>\n"
      << "<text x=\"" << L - 6 << "\" y=\"" << py(hi) + 4 << "\" text-anchor=\"end\" font-size=\"11\">" << hi << "</text>\n"
      << "<text x=\"" << L - 6 << "\" y=\"" << py(lo) + 4 << "\" text-anchor=\"end\" font-size=\"11\">" << lo << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const char* c = colors[k % 6];
        f << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < series[k].y.size(); ++i) f << px(i) << ',' << py(series[k].y[i]) << ' ';
        f << "\"/>\n<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 * static_cast<double>(k + 1) << "\" fill=\"" << c
          << "\" font-size=\"12\">" << series[k].name << "</text>\n";
    }
    f << "</svg>\n";
}

}  // namespace

void write_report(const std::vector<std::pair<std::string, ExperimentManifest>>& manifests, const fs::path& dir,
                  bool plots) {
    if (manifests.empty()) throw UsageError("report needs at least one manifest");
    require_same_dataset(manifests);
    fs::create_directories(dir);
    write_census_table(manifests, dir / "census.csv");
    std::vector<ResultRow> rows;
    std::vector<Series> curves, census;
    for (const auto& [label, m] : manifests) {
        rows.push_back(result_row(m, label));
        const auto reports = model_probe_reports(m);
        for (std::size_t k = 0; k < reports.size(); ++k) {
            const std::string stem = (manifests.size() > 1 ? label + "_" : std::string()) + "curve_model" + std::to_string(k);
            write_probe_curve(reports[k], dir / (stem + ".csv"));
            Series s{label + " model " + std::to_string(k), {}};
            for (const auto& [_, acc] : reports[k].accuracies) s.y.push_back(acc);
            curves.push_back(std::move(s));
        }
        Series units{label + " units", {}}, degraded{label + " degraded", {}};
        for (const auto& c : m.census) {
            units.y.push_back(c.units);
            degraded.y.push_back(c.degraded_units);
        }
        census.push_back(std::move(units));
        census.push_back(std::move(degraded));
    }
    write_results_table(rows, dir / "results.csv");
    if (plots) {
        write_svg(curves, "Probe accuracy by block", "block position", dir / "probe_curves.svg");
        write_svg(census, "Units and degraded units", "model (0 = un-pruned)", dir / "census.svg");
    }
}

// ---------------------------------------------------------------------------
// Commands

namespace {

struct Common {
    std::string config;
    std::uint64_t seed = 0;
    bool deterministic = true;
    std::string dataset;
    std::string data_dir;
    std::string out;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* det_opt = nullptr;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config, "JSON run config (a manifest works too)");
    c.seed_opt = sub->add_option("--seed", c.seed, "Base seed");
    c.det_opt = sub->add_flag("--deterministic,!--no-deterministic", c.deterministic, "Seeded data order");
    sub->add_option("--dataset", c.dataset, "cifar10 or synthetic")->check(CLI::IsMember({"cifar10", "synthetic"}));
    sub->add_option("--data-dir", c.data_dir, "CIFAR-10 binary directory");
    sub->add_option("--out", c.out, std::string("Output directory (default $") + kOutputDirEnv + ")");
}

RunConfig resolve(const Common& c) {
    RunConfig rc = c.config.empty() ? RunConfig{} : load_config_or_manifest(c.config);
    if (c.seed_opt->count()) rc.seed = c.seed;
    if (c.det_opt->count()) rc.deterministic = c.deterministic;
    if (!c.dataset.empty()) rc.dataset.kind = c.dataset;
    if (!c.data_dir.empty()) rc.dataset.path = c.data_dir;
    if (!c.out.empty())
        rc.output_dir = c.out;
    else if (const char* env = std::getenv(kOutputDirEnv); env && *env)
        rc.output_dir = env;
    return rc;
}

Dataset load_checked(const RunConfig& c) {
    if (c.dataset.kind == "cifar10") {
        if (c.dataset.path.empty()) throw UsageError("cifar10 needs --data-dir (or dataset.path in the config)");
        if (!fs::is_directory(c.dataset.path)) throw UsageError("dataset directory not found: " + c.dataset.path);
    }
    try {
        return load_dataset(c.dataset);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

BuiltModel load_model(const std::string& dir, const Dataset& data) {
    if (dir.empty()) throw UsageError("no checkpoint given (--checkpoint or baseline_checkpoint in the config)");
    if (!fs::is_directory(dir)) throw UsageError("checkpoint not found: " + dir);
    BuiltModel m = load_checkpoint(dir);
    if (m.graph.meta.num_classes != data.num_classes || m.graph.meta.input_shape != data.image_shape)
        throw UsageError("checkpoint " + dir + " does not match dataset " + data.name);
    return m;
}

void write_json(const json& j, const fs::path& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << j.dump(2) << '\n';
}

int cmd_train_baseline(RunConfig c, int epochs, std::ostream& out) {
    if (epochs > 0) c.baseline.epochs = epochs;
    try {
        validate_schedule(c.baseline);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const Dataset data = load_checked(c);
    c.arch.meta = {data.num_classes, data.image_shape};
    BuiltModel m = build_graph(c.arch, c.seed);
    const fs::path dir = fs::path(c.output_dir) / "baseline";
    fs::create_directories(dir);
    TrainResult r = train_baseline(m.graph, m.weights, data, c.baseline, c.seed, c.deterministic, [&](const EpochLog& l) {
        out << "epoch " << l.epoch << "  loss " << l.train_loss << "  acc " << l.test_accuracy << "  lr " << l.learning_rate
            << std::endl;
    });
    save_checkpoint(dir, m.graph, r.weights);
    write_epoch_log(r.log, dir / "train_log.csv");
    c.baseline_checkpoint = dir.string();
    write_json(to_json(c), dir / "config.json");
    out << "accuracy " << r.accuracy << "\ncheckpoint " << dir.string() << '\n';
    return kExitOk;
}

int cmd_probe(RunConfig c, const std::string& checkpoint, std::ostream& out) {
    const Dataset data = load_checked(c);
    const BuiltModel m = load_model(checkpoint.empty() ? c.baseline_checkpoint : checkpoint, data);
    const ProbeReport report = probe_model(c.probe, m.graph, m.weights, data, c.seed);
    const ContributionTable table = contributions(report, prunable_blocks(m.graph));
    const fs::path dir = c.output_dir;
    fs::create_directories(dir);
    write_json({{"report", to_json(report)}, {"contributions", to_json(table)}}, dir / "probe_report.json");
    write_probe_curve(report, dir / "probe_curve.csv");
    out << "block  scope                 acc     contribution\n";
    for (const auto& row : table.rows)
        out << std::setw(5) << row.block_id << "  " << std::left << std::setw(20) << m.graph.block(row.block_id).scope
            << std::right << std::fixed << std::setprecision(4) << std::setw(8) << report.accuracies.at(row.block_id)
            << std::setw(10) << row.contribution << (row.degraded ? "  degraded" : "") << '\n';
    out.unsetf(std::ios::fixed);
    out << "degraded " << table.degraded_count() << " of " << table.rows.size() << " blocks\n";
    return kExitOk;
}

void check_schedule(const RunConfig& c) {
    if (!(c.global_ratio >= 0.0 && c.global_ratio < 1.0)) throw UsageError("--G must lie in [0, 1)");
    if (c.rounds < 1) throw UsageError("--R must be at least 1");
}

int cmd_run(RunConfig c, PipelineMode mode, const std::string& checkpoint, bool plots, std::ostream& out) {
    check_schedule(c);
    if (!checkpoint.empty()) c.baseline_checkpoint = checkpoint;
    const Dataset data = load_checked(c);
    const BuiltModel base = load_model(c.baseline_checkpoint, data);
    const fs::path dir = c.output_dir;
    fs::create_directories(dir);
    const ExperimentManifest m = run_pipeline(c, mode, data, base, dir);
    write_report({{std::string(to_string(mode)), m}}, dir, plots);
    out << "baseline acc " << m.baseline.accuracy << "  units " << m.baseline.units << '\n';
    for (const auto& r : m.rounds)
        out << "round " << r.round << "  pruned " << r.pruned_ids.size() << "  units " << r.units_after << "  acc "
            << r.accuracy << "  frr " << r.frr << '\n';
    print_results_table({result_row(m, std::string(to_string(mode)))}, out);
    out << "manifest " << (dir / "manifest.json").string() << '\n';
    return kExitOk;
}

int cmd_ablate(RunConfig c, std::vector<std::uint64_t> seeds, const std::string& checkpoint, std::ostream& out) {
    check_schedule(c);
    if (!checkpoint.empty()) c.baseline_checkpoint = checkpoint;
    if (seeds.empty()) seeds = {c.seed};
    const Dataset data = load_checked(c);
    const BuiltModel base = load_model(c.baseline_checkpoint, data);
    const fs::path dir = c.output_dir;
    std::vector<std::pair<std::string, ExperimentManifest>> all;
    for (std::uint64_t s : seeds) {
        c.seed = s;
        for (PipelineMode mode : {PipelineMode::DBP, PipelineMode::RANDOM, PipelineMode::DBP_A, PipelineMode::DBP_B,
                                  PipelineMode::DBP_C}) {
            const std::string label = std::string(to_string(mode)) + "_seed" + std::to_string(s);
            out << "running " << label << std::endl;
            all.emplace_back(label, run_pipeline(c, mode, data, base, dir / label));
        }
    }
    write_report(all, dir, false);
    std::vector<ResultRow> rows;
    for (const auto& [label, m] : all) rows.push_back(result_row(m, label));
    print_results_table(rows, out);
    std::map<std::string, std::pair<double, int>> mean;
    for (const auto& r : rows) {
        mean[r.mode].first += r.accuracy;
        mean[r.mode].second += 1;
    }
    std::ofstream f(dir / "ablation_summary.csv");
    f << "mode,runs,mean_acc\n";
    for (const auto& [mode, v] : mean) {
        f << mode << ',' << v.second << ',' << std::setprecision(10) << v.first / v.second << '\n';
        out << "mean " << mode << ' ' << v.first / v.second << '\n';
    }
    return kExitOk;
}

int cmd_bench(RunConfig c, const std::string& checkpoint, const std::string& reference, int samples, int warmup,
              std::string results, std::ostream& out) {
    if (samples < 1 || warmup < 0) throw UsageError("--samples must be positive and --warmup non-negative");
    const Dataset data = load_checked(c);
    const BuiltModel m = load_model(checkpoint, data);
    MetricsSummary s;
    s.accuracy = evaluate_accuracy(m.graph, m.weights, data.test);
    s.flops = count_flops(m.graph);
    const LatencyReport lat = measure_latency(m.graph, m.weights, samples, 1, warmup);
    json j = {{"model", checkpoint}};
    if (!reference.empty()) {
        const BuiltModel ref = load_model(reference, data);
        s.frr = flops_reduction_ratio(count_flops(ref.graph), s.flops);
        const LatencyReport ref_lat = measure_latency(ref.graph, ref.weights, samples, 1, warmup);
        s.ar = acceleration_ratio(ref_lat.mean_ms, lat.mean_ms);
        j["reference"] = reference;
        j["reference_latency"] = to_json(ref_lat);
    }
    j["summary"] = to_json(s);
    j["latency"] = to_json(lat);
    out << j.dump(2) << '\n';
    if (results.empty()) results = (fs::path(c.output_dir) / "bench_results.csv").string();
    if (fs::path(results).has_parent_path()) fs::create_directories(fs::path(results).parent_path());
    const bool fresh = !fs::exists(results) || fs::file_size(results) == 0;
    std::ofstream f(results, std::ios::app);
    if (!f) throw std::runtime_error("cannot append to " + results);
    if (fresh) f << "model,acc,flops,frr,mean_ms,ar\n";
    f << checkpoint << ',' << std::setprecision(10) << s.accuracy << ',' << s.flops << ',' << s.frr << ',' << lat.mean_ms
      << ',' << s.ar << '\n';
    return kExitOk;
}

int cmd_report(const std::vector<std::string>& paths, std::string out_dir, bool plots, std::ostream& out) {
    std::vector<std::pair<std::string, ExperimentManifest>> ms;
    for (const auto& p : paths) {
        if (!fs::exists(p)) throw UsageError("manifest not found: " + p);
        ExperimentManifest m;
        try {
            m = load_manifest(p);
        } catch (const std::exception& e) {
            throw UsageError("bad manifest " + p + ": " + e.what());
        }
        std::string label = fs::path(p).parent_path().filename().string();
        if (label.empty()) label = m.mode;
        for (const auto& [l, _] : ms)
            if (l == label) label += "_" + std::to_string(ms.size());
        ms.emplace_back(label, std::move(m));
    }
    if (out_dir.empty()) {
        const char* env = std::getenv(kOutputDirEnv);
        out_dir = env && *env ? env : "report";
    }
    write_report(ms, out_dir, plots);
    std::vector<ResultRow> rows;
    for (const auto& [label, m] : ms) rows.push_back(result_row(m, label));
    print_results_table(rows, out);
    out << "\nmodel  units  degraded\n";
    for (const auto& [label, m] : ms)
        for (const auto& c : m.census) out << label << ' ' << c.model_index << "  " << c.units << "  " << c.degraded_units << '\n';
    out << "report written to " << out_dir << '\n';
    return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Block pruning by probe discrimination"};
    app.require_subcommand(1);

    Common tb_c, pr_c, run_c, ab_c, be_c;
    int tb_epochs = 0;
    auto* tb = app.add_subcommand("train-baseline", "Train an un-pruned model");
    add_common(tb, tb_c);
    tb->add_option("--epochs", tb_epochs, "Override baseline epochs");

    std::string pr_ckpt;
    auto* pr = app.add_subcommand("probe", "Probe every block of a checkpoint");
    add_common(pr, pr_c);
    pr->add_option("--checkpoint", pr_ckpt, "Model checkpoint directory");

    const std::vector<std::string> modes{"dbp", "random", "dbp-a", "dbp-b", "dbp-c"};
    std::string run_mode, run_ckpt;
    double run_g = 0.0;
    int run_r = 0;
    bool run_plots = false;
    auto* rn = app.add_subcommand("run", "Iterative prune and fine-tune");
    add_common(rn, run_c);
    rn->add_option("--mode", run_mode, "dbp, random, dbp-a, dbp-b or dbp-c")->check(CLI::IsMember(modes));
    auto* g_opt = rn->add_option("--G", run_g, "Global prune ratio");
    auto* r_opt = rn->add_option("--R", run_r, "Rounds");
    rn->add_option("--checkpoint", run_ckpt, "Baseline checkpoint directory");
    rn->add_flag("--plots", run_plots, "Also write SVG plots");

    std::string ab_ckpt;
    std::vector<std::uint64_t> ab_seeds;
    double ab_g = 0.0;
    int ab_r = 0;
    auto* ab = app.add_subcommand("ablate", "Run all five modes with shared seeds");
    add_common(ab, ab_c);
    ab->add_option("--checkpoint", ab_ckpt, "Baseline checkpoint directory");
    ab->add_option("--seeds", ab_seeds, "Seeds shared across modes");
    auto* abg_opt = ab->add_option("--G", ab_g, "Global prune ratio");
    auto* abr_opt = ab->add_option("--R", ab_r, "Rounds");

    std::string be_ckpt, be_ref, be_results;
    int be_samples = 100, be_warmup = 10;
    auto* be = app.add_subcommand("bench", "FLOPs, accuracy and batch-1 latency of a checkpoint");
    add_common(be, be_c);
    be->add_option("--checkpoint", be_ckpt, "Model checkpoint directory")->required();
    be->add_option("--reference", be_ref, "Un-pruned checkpoint for Frr and AR");
    be->add_option("--samples", be_samples, "Timed forwards");
    be->add_option("--warmup", be_warmup, "Untimed forwards");
    be->add_option("--results", be_results, "Results CSV to append to");

    std::vector<std::string> rp_paths;
    std::string rp_out;
    bool rp_plots = false;
    auto* rp = app.add_subcommand("report", "Tables and curves from manifests");
    rp->add_option("manifests", rp_paths, "manifest.json files")->required()->check(CLI::ExistingFile);
    rp->add_option("--out", rp_out, "Report directory");
    rp->add_flag("--plots", rp_plots, "Also write SVG plots");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*tb) return cmd_train_baseline(resolve(tb_c), tb_epochs, out);
        if (*pr) return cmd_probe(resolve(pr_c), pr_ckpt, out);
        if (*rn) {
            RunConfig c = resolve(run_c);
            if (g_opt->count()) c.global_ratio = run_g;
            if (r_opt->count()) c.rounds = run_r;
            const PipelineMode mode = run_mode.empty() ? c.mode : parse_mode(run_mode);
            return cmd_run(std::move(c), mode, run_ckpt, run_plots, out);
        }
        if (*ab) {
            RunConfig c = resolve(ab_c);
            if (abg_opt->count()) c.global_ratio = ab_g;
            if (abr_opt->count()) c.rounds = ab_r;
            return cmd_ablate(std::move(c), ab_seeds, ab_ckpt, out);
        }
        if (*be) return cmd_bench(resolve(be_c), be_ckpt, be_ref, be_samples, be_warmup, be_results, out);
        if (*rp) return cmd_report(rp_paths, rp_out, rp_plots, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace blockprune::cli
