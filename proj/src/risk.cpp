#include "lca/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lca/error.hpp"

namespace lca::risk {

using extraction::LaneChangeClass;

double ttc(double range_m, double range_rate_mps) {
    if (!(range_m > 0)) {
        throw Error(Error::Kind::data, "ttc: range must be > 0");
    }
    if (range_rate_mps >= 0) return std::numeric_limits<double>::infinity();
    return range_m / (-range_rate_mps);
}

std::vector<AnalyzedEvent> faz_filter(std::span<const AnalyzedEvent> events, double faz_range_m) {
    std::vector<AnalyzedEvent> out;
    for (const AnalyzedEvent& e : events) {
        if (e.gap && e.gap->range_m <= faz_range_m) out.push_back(e);
    }
    return out;
}

Histogram make_histogram(std::span<const double> values, double bin_width) {
    if (!(bin_width > 0)) {
        throw Error(Error::Kind::data, "make_histogram: bin width must be > 0");
    }
    Histogram h;
    h.bin_width = bin_width;
    if (values.empty()) return h;
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    const long lo_bin = static_cast<long>(std::floor(*mn / bin_width));
    const long hi_bin = static_cast<long>(std::floor(*mx / bin_width));
    h.lo = static_cast<double>(lo_bin) * bin_width;
    h.freq.assign(static_cast<std::size_t>(hi_bin - lo_bin + 1), 0.0);
    for (double v : values) {
        long bin = static_cast<long>(std::floor(v / bin_width)) - lo_bin;
        bin = std::clamp<long>(bin, 0, static_cast<long>(h.freq.size()) - 1);
        h.freq[static_cast<std::size_t>(bin)] += 1.0;
    }
    const double n = static_cast<double>(values.size());
    for (double& f : h.freq) f /= n;
    return h;
}

RiskFractions risk_fractions(std::span<const AnalyzedEvent> faz_events, std::span<const double> thresholds_s) {
    std::size_t n_mlc = 0, n_dlc = 0;
    std::vector<double> ttc_mlc, ttc_dlc;
    for (const AnalyzedEvent& e : faz_events) {
        if (!e.gap) continue;
        const double t = ttc(e.gap->range_m, e.gap->range_rate_mps);
        if (e.event.classification == LaneChangeClass::MLC) {
            ++n_mlc;
            ttc_mlc.push_back(t);
        } else if (e.event.classification == LaneChangeClass::DLC) {
            ++n_dlc;
            ttc_dlc.push_back(t);
        }
    }

    RiskFractions out;
    double ratio_sum = 0;
    std::size_t ratio_count = 0;
    for (double tau : thresholds_s) {
        RiskFractionRow row;
        row.threshold_s = tau;
        auto count_below = [tau](const std::vector<double>& v) {
            return static_cast<double>(std::count_if(v.begin(), v.end(), [tau](double t) { return t < tau; }));
        };
        if (n_mlc > 0) row.mlc = count_below(ttc_mlc) / static_cast<double>(n_mlc);
        if (n_dlc > 0) row.dlc = count_below(ttc_dlc) / static_cast<double>(n_dlc);
        if (row.mlc && row.dlc && *row.dlc > 0) {
            row.ratio = *row.mlc / *row.dlc;
            ratio_sum += *row.ratio;
            ++ratio_count;
        }
        out.rows.push_back(row);
    }
    if (ratio_count == thresholds_s.size() && ratio_count > 0) {
        out.mean_ratio = ratio_sum / static_cast<double>(ratio_count);
    }
    return out;
}

namespace {

std::vector<double> stage_durations(std::span<const extraction::LaneChangeEvent> events, int stage) {
    std::vector<double> out;
    out.reserve(events.size());
    for (const auto& e : events) {
        out.push_back(stage == 0 ? e.stage.d_head() : stage == 1 ? e.stage.d_cross() : e.stage.d_tail());
    }
    return out;
}

}  // namespace

std::array<StageComparison, 3> duration_comparison(std::span<const extraction::LaneChangeEvent> mlc,
                                                   std::span<const extraction::LaneChangeEvent> dlc,
                                                   std::size_t min_fit_samples) {
    if (mlc.empty() || dlc.empty()) {
        throw Error(Error::Kind::data, "duration_comparison: both classes must be non-empty");
    }
    static const char* names[3] = {"head", "cross", "tail"};
    std::array<StageComparison, 3> out;
    for (int stage = 0; stage < 3; ++stage) {
        StageComparison& cmp = out[static_cast<std::size_t>(stage)];
        cmp.stage = names[stage];
        const std::vector<double> a = stage_durations(mlc, stage);
        const std::vector<double> b = stage_durations(dlc, stage);
        cmp.n_mlc = a.size();
        cmp.n_dlc = b.size();
        cmp.mww = stats::mww_test(a, b);
        if (a.size() >= min_fit_samples) cmp.mlc_fit = stats::gev_fit_mle(a, min_fit_samples);
        if (b.size() >= min_fit_samples) cmp.dlc_fit = stats::gev_fit_mle(b, min_fit_samples);
    }
    return out;
}

RiskReport assemble_risk_report(std::span<const AnalyzedEvent> events, const RiskConfig& cfg) {
    RiskReport rep;

    std::vector<extraction::LaneChangeEvent> mlc_events, dlc_events;
    std::vector<AnalyzedEvent> class_events;  // MLC/DLC only, ambiguous eliminated
    for (const AnalyzedEvent& e : events) {
        switch (e.event.classification) {
            case LaneChangeClass::MLC:
                ++rep.events.mlc;
                mlc_events.push_back(e.event);
                class_events.push_back(e);
                if (e.gap) ++rep.valid_gaps.mlc;
                break;
            case LaneChangeClass::DLC:
                ++rep.events.dlc;
                dlc_events.push_back(e.event);
                class_events.push_back(e);
                if (e.gap) ++rep.valid_gaps.dlc;
                break;
            case LaneChangeClass::Ambiguous:
                ++rep.events.ambiguous;
                break;
            default:
                ++rep.events.other;
                break;
        }
    }

    const std::vector<AnalyzedEvent> faz = faz_filter(class_events, cfg.faz_range_m);
    std::vector<double> range_mlc, range_dlc, rate_mlc, rate_dlc;
    for (const AnalyzedEvent& e : faz) {
        if (e.event.classification == LaneChangeClass::MLC) {
            ++rep.faz_mlc;
            range_mlc.push_back(e.gap->range_m);
            rate_mlc.push_back(e.gap->range_rate_mps);
        } else {
            ++rep.faz_dlc;
            range_dlc.push_back(e.gap->range_m);
            rate_dlc.push_back(e.gap->range_rate_mps);
        }
    }

    rep.fractions = risk_fractions(faz, cfg.ttc_thresholds_s);
    rep.range_hist_mlc = make_histogram(range_mlc, cfg.hist_bin_range_m);
    rep.range_hist_dlc = make_histogram(range_dlc, cfg.hist_bin_range_m);
    rep.rate_hist_mlc = make_histogram(rate_mlc, cfg.hist_bin_rate_mps);
    rep.rate_hist_dlc = make_histogram(rate_dlc, cfg.hist_bin_rate_mps);

    if (!mlc_events.empty() && !dlc_events.empty()) {
        const auto stages = duration_comparison(mlc_events, dlc_events, cfg.min_fit_samples);
        rep.stages.assign(stages.begin(), stages.end());
    }
    return rep;
}

}  // namespace lca::risk
