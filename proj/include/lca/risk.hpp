#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lca/extraction.hpp"
#include "lca/gap.hpp"
#include "lca/stats.hpp"

namespace lca::risk {

// A classified lane change joined with its gap estimate, when one exists.
// Duration statistics use every classified event; gap and TTC statistics only
// the ones with a valid estimate.
struct AnalyzedEvent {
    extraction::LaneChangeEvent event;
    std::optional<gap::GapEstimate> gap;
};

// Time to collision. Non-closing gaps (range rate >= 0) have no collision
// course and come back as +infinity; callers exclude them from "< tau"
// counts by construction.
double ttc(double range_m, double range_rate_mps);

// Events whose POV sits in the fast approach zone (range <= faz_range_m,
// boundary inclusive). Events without a gap estimate are dropped.
std::vector<AnalyzedEvent> faz_filter(std::span<const AnalyzedEvent> events, double faz_range_m = 50.0);

struct Histogram {
    double lo = 0;
    double bin_width = 0;
    std::vector<double> freq;  // normalized, sums to 1 when non-empty
};

Histogram make_histogram(std::span<const double> values, double bin_width);

struct RiskFractionRow {
    double threshold_s = 0;
    std::optional<double> mlc;    // |TTC < tau| / |MLC events supplied|
    std::optional<double> dlc;
    std::optional<double> ratio;  // mlc / dlc
};

struct RiskFractions {
    std::vector<RiskFractionRow> rows;
    std::optional<double> mean_ratio;
};

// Fractions are relative to the per-class event count in the supplied set
// (callers pass the FAZ subset). Zero-denominator entries stay absent.
RiskFractions risk_fractions(std::span<const AnalyzedEvent> faz_events, std::span<const double> thresholds_s);

struct StageComparison {
    std::string stage;
    std::optional<stats::GevParams> mlc_fit;
    std::optional<stats::GevParams> dlc_fit;
    stats::MwwResult mww;
    std::size_t n_mlc = 0, n_dlc = 0;
};

// Per-stage GEV fits and MWW tests for MLC vs DLC durations. Throws when
// either class is empty; fits are absent for classes below min_fit_samples.
std::array<StageComparison, 3> duration_comparison(std::span<const extraction::LaneChangeEvent> mlc,
                                                   std::span<const extraction::LaneChangeEvent> dlc,
                                                   std::size_t min_fit_samples = 20);

struct RiskConfig {
    double faz_range_m = 50.0;
    std::vector<double> ttc_thresholds_s{2.0, 3.0};
    double hist_bin_range_m = 5.0;
    double hist_bin_rate_mps = 1.0;
    std::size_t min_fit_samples = 20;
};

struct ClassCounts {
    std::size_t mlc = 0, dlc = 0, ambiguous = 0, other = 0;
};

struct RiskReport {
    ClassCounts events;
    ClassCounts valid_gaps;
    std::size_t faz_mlc = 0, faz_dlc = 0;
    RiskFractions fractions;
    Histogram range_hist_mlc, range_hist_dlc;
    Histogram rate_hist_mlc, rate_hist_dlc;
    std::vector<StageComparison> stages;  // empty when either class has no events
};

// Ambiguous events are excluded from every MLC/DLC statistic; they only show
// up in the counts.
RiskReport assemble_risk_report(std::span<const AnalyzedEvent> events, const RiskConfig& cfg);

// Values reported by the source naturalistic truck study, kept as documented
// reference context for reports; they are not reproducible from synthetic
// corpora.
namespace reference {
inline constexpr std::size_t mlc_event_count = 640;
inline constexpr std::size_t dlc_event_count = 2035;
inline constexpr std::size_t mlc_faz_count = 135;
inline constexpr std::size_t dlc_faz_count = 156;
inline constexpr double mlc_ttc_lt2_fraction = 0.089;
inline constexpr double mlc_ttc_lt3_fraction = 0.163;
inline constexpr double dlc_ttc_lt2_fraction = 0.019;
inline constexpr double dlc_ttc_lt3_fraction = 0.038;
inline constexpr double risk_ratio = 4.5;
inline constexpr double mww_p_head = 0.4076;
inline constexpr double mww_p_tail = 0.3553;
}  // namespace reference

}  // namespace lca::risk
