#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lca/risk.hpp"
#include "lca/stats.hpp"

namespace lca::scenario {

using extraction::LaneChangeClass;

struct GapSample {
    double range_m = 0;
    double range_rate_mps = 0;  // negative = closing
    double speed_mps = 0;       // SV speed at crossing for the same event
};

enum class GapModelMode { empirical, fitted };

const char* gap_model_mode_name(GapModelMode mode);
GapModelMode gap_model_mode_from_name(const std::string& name);

// Fitted-marginal variant: GEV marginals coupled through a Gaussian copula at
// the rank correlation of the observed pairs. The empirical table remains the
// default; this mode exists for smooth extrapolation beyond observed pairs.
struct FittedGapModel {
    stats::GevParams range_marginal;
    stats::GevParams rate_marginal;
    double rank_corr = 0;  // Spearman's rho of (range, range rate)
};

struct BehaviorModel {
    LaneChangeClass cls = LaneChangeClass::MLC;
    GapModelMode mode = GapModelMode::empirical;
    std::vector<GapSample> gap_table;           // observed (R, Rdot, speed) triples, FAZ events
    std::optional<FittedGapModel> fitted;
    std::array<stats::GevParams, 3> duration;   // head, cross, tail
    std::array<double, 3> duration_ks{};        // KS statistic of each fit vs its sample
    std::size_t n_events = 0;                   // events behind the gap table
    std::size_t n_duration_events = 0;
    double lane_width_m = 3.5;
};

struct ScenarioFitConfig {
    GapModelMode mode = GapModelMode::empirical;
    std::size_t min_events = 20;
    double faz_range_m = 50.0;
    double lane_width_m = 3.5;
};

// Builds the per-class model: the gap table from the class's FAZ events, the
// stage-duration GEV fits from every classified event of the class. Throws
// when fewer than min_events FAZ gap pairs exist.
BehaviorModel fit_behavior_model(std::span<const risk::AnalyzedEvent> events, LaneChangeClass cls,
                                 const ScenarioFitConfig& cfg);

struct ScenarioSpec {
    std::string scenario_id;
    LaneChangeClass cls = LaneChangeClass::MLC;
    double sv_speed_mps = 0;
    double initial_gap_m = 0;       // R0
    double closing_rate_mps = 0;    // signed range rate, negative = closing
    double d_head_s = 0;
    double d_cross_s = 0;
    double d_tail_s = 0;
    double lane_width_m = 0;
    std::uint64_t seed = 0;         // per-scenario derived seed
};

// Durations by GEV quantile transform of uniform draws, gaps from the gap
// model. With risk_bias, gap pairs are rejection-sampled until
// ttc(R0, rate) < risk_bias (cap 10,000 tries per scenario, then an error).
// Scenario i uses the derived stream mix_seed(seed, i), so output is
// independent of batching.
std::vector<ScenarioSpec> sample_scenarios(const BehaviorModel& model, std::size_t n, std::uint64_t seed,
                                           std::optional<double> risk_bias_s = std::nullopt);

void export_scenarios(std::span<const ScenarioSpec> specs, const std::filesystem::path& path);
std::vector<ScenarioSpec> load_scenarios(const std::filesystem::path& path);

}  // namespace lca::scenario
