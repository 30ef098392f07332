#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "lca/error.hpp"
#include "lca/pipeline.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::optional<std::string> mode;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "config file (flat key = value, see FORMAT.md)");
    cmd->add_option("--seed", flags.seed, "override the base random seed");
    cmd->add_option("--jobs", flags.jobs, "parallel workers for per-trip stages");
    cmd->add_option("--mode", flags.mode, "range-rate mode: wls_affine or paper_literal");
}

lca::PipelineConfig resolve_config(const CommonFlags& flags) {
    lca::PipelineConfig cfg =
        flags.config_path.empty() ? lca::default_config() : lca::load_config(flags.config_path);
    if (flags.seed) {
        cfg.seed = *flags.seed;
        cfg.synth.seed = *flags.seed;
    }
    if (flags.jobs) cfg.jobs = *flags.jobs;
    if (flags.mode) cfg.range_rate_mode = lca::gap::range_rate_mode_from_name(*flags.mode);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lane-change analysis toolkit: synthetic corpora, event extraction, gap estimation, "
                 "risk statistics, and cut-in scenario sampling"};
    app.require_subcommand(1);

    CommonFlags synth_flags, extract_flags, estimate_flags, analyze_flags, sample_flags;
    std::string out_dir, in_dir, report_path, out_path, cls_name = "MLC";
    std::size_t n_scenarios = 100;
    std::optional<double> risk_bias;

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic corpus with ground truth");
    add_common(synth, synth_flags);
    synth->add_option("--out", out_dir, "output corpus directory")->required();

    CLI::App* extract = app.add_subcommand("extract", "detect, filter and classify lane changes");
    add_common(extract, extract_flags);
    extract->add_option("--in", in_dir, "corpus directory (trips/)")->required();
    extract->add_option("--out", out_dir, "output directory")->required();

    CLI::App* estimate = app.add_subcommand("estimate", "estimate gaps from annotated frames");
    add_common(estimate, estimate_flags);
    estimate->add_option("--in", in_dir, "corpus directory (frames/, camera.cam, trips/)")->required();
    estimate->add_option("--out", out_dir, "output directory")->required();

    CLI::App* analyze = app.add_subcommand("analyze", "run the full pipeline and write the report");
    add_common(analyze, analyze_flags);
    analyze->add_option("--in", in_dir, "corpus directory")->required();
    analyze->add_option("--out", out_dir, "output directory")->required();

    CLI::App* sample = app.add_subcommand("sample", "sample cut-in scenarios from a fitted model");
    add_common(sample, sample_flags);
    sample->add_option("--report", report_path, "report.json from analyze")->required();
    sample->add_option("--class", cls_name, "behavior model class: MLC or DLC");
    sample->add_option("-n,--count", n_scenarios, "number of scenarios");
    sample->add_option("--risk-bias", risk_bias, "TTC ceiling in seconds for risky sampling");
    sample->add_option("--out", out_path, "scenario file to write")->required();

    CLI::App* report = app.add_subcommand("report", "print a human-readable summary of a report");
    report->add_option("--report", report_path, "report.json from analyze")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) {
            return lca::pipeline::run_synth(resolve_config(synth_flags), out_dir, std::cout);
        }
        if (extract->parsed()) {
            return lca::pipeline::run_extract(resolve_config(extract_flags), in_dir, out_dir, std::cout);
        }
        if (estimate->parsed()) {
            return lca::pipeline::run_estimate(resolve_config(estimate_flags), in_dir, out_dir, std::cout);
        }
        if (analyze->parsed()) {
            return lca::pipeline::run_analyze(resolve_config(analyze_flags), in_dir, out_dir, std::cout);
        }
        if (sample->parsed()) {
            lca::extraction::LaneChangeClass cls;
            if (cls_name == "MLC" || cls_name == "mlc") {
                cls = lca::extraction::LaneChangeClass::MLC;
            } else if (cls_name == "DLC" || cls_name == "dlc") {
                cls = lca::extraction::LaneChangeClass::DLC;
            } else {
                std::cout << "error: --class must be MLC or DLC\n";
                return 1;
            }
            return lca::pipeline::run_sample(resolve_config(sample_flags), report_path, cls, n_scenarios,
                                             risk_bias, out_path, std::cout);
        }
        if (report->parsed()) {
            return lca::pipeline::run_report(report_path, std::cout);
        }
    } catch (const lca::Error& e) {
        std::cout << "error: " << e.what() << '\n';
        return lca::pipeline::exit_code_for(e);
    } catch (const std::exception& e) {
        std::cout << "internal error: " << e.what() << '\n';
        return 3;
    }
    return 1;
}
