#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lca/config.hpp"
#include "lca/error.hpp"
#include "lca/extraction.hpp"
#include "lca/gap.hpp"
#include "lca/risk.hpp"
#include "lca/scenario.hpp"

namespace lca::pipeline {

inline constexpr const char* kToolVersion = "0.1.0";

// One row of the gaps file: an estimated gap keyed by trip and annotation
// anchor time (the crossing-frame timestamp).
struct GapRecord {
    std::string trip_id;
    std::string event_id;
    double t_anchor = 0;
    gap::GapEstimate estimate;
};

void save_gaps(std::span<const GapRecord> gaps, const std::filesystem::path& path);
std::vector<GapRecord> load_gaps(const std::filesystem::path& path);

// Events and gap records pair up when the gap's anchor time falls inside the
// event's head..tail span on the same trip.
std::vector<risk::AnalyzedEvent> join_events_gaps(std::span<const extraction::LaneChangeEvent> events,
                                                  std::span<const GapRecord> gaps);

// Subcommand bodies. All return process exit codes (0 ok, 1 usage, 2 data,
// 3 internal) and log human-readable progress to `log`.
int run_synth(const PipelineConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);
int run_extract(const PipelineConfig& cfg, const std::filesystem::path& in_dir,
                const std::filesystem::path& out_dir, std::ostream& log);
int run_estimate(const PipelineConfig& cfg, const std::filesystem::path& in_dir,
                 const std::filesystem::path& out_dir, std::ostream& log);
int run_analyze(const PipelineConfig& cfg, const std::filesystem::path& in_dir,
                const std::filesystem::path& out_dir, std::ostream& log);
int run_sample(const PipelineConfig& cfg, const std::filesystem::path& report_path,
               extraction::LaneChangeClass cls, std::size_t n, std::optional<double> risk_bias_s,
               const std::filesystem::path& out_path, std::ostream& log);
int run_report(const std::filesystem::path& report_path, std::ostream& log);

int exit_code_for(const Error& err);

}  // namespace lca::pipeline
