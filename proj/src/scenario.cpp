#include "lca/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "lca/error.hpp"
#include "lca/record.hpp"

namespace lca::scenario {

const char* gap_model_mode_name(GapModelMode mode) {
    return mode == GapModelMode::empirical ? "empirical" : "fitted";
}

GapModelMode gap_model_mode_from_name(const std::string& name) {
    if (name == "empirical") return GapModelMode::empirical;
    if (name == "fitted") return GapModelMode::fitted;
    throw Error(Error::Kind::usage, "unknown gap model mode '" + name + "'");
}

namespace {

double spearman_rho(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    auto ranks = [n](std::span<const double> v) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
        std::vector<double> r(n);
        for (std::size_t k = 0; k < n; ++k) r[idx[k]] = static_cast<double>(k + 1);
        return r;
    };
    const std::vector<double> ra = ranks(a), rb = ranks(b);
    const double mean = 0.5 * static_cast<double>(n + 1);
    double num = 0, da = 0, db = 0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (ra[i] - mean) * (rb[i] - mean);
        da += (ra[i] - mean) * (ra[i] - mean);
        db += (rb[i] - mean) * (rb[i] - mean);
    }
    const double den = std::sqrt(da * db);
    return den > 0 ? num / den : 0.0;
}

double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

}  // namespace

BehaviorModel fit_behavior_model(std::span<const risk::AnalyzedEvent> events, LaneChangeClass cls,
                                 const ScenarioFitConfig& cfg) {
    if (cls != LaneChangeClass::MLC && cls != LaneChangeClass::DLC) {
        throw Error(Error::Kind::usage, "fit_behavior_model: model class must be MLC or DLC");
    }
    BehaviorModel model;
    model.cls = cls;
    model.mode = cfg.mode;
    model.lane_width_m = cfg.lane_width_m;

    std::array<std::vector<double>, 3> durations;
    for (const risk::AnalyzedEvent& e : events) {
        if (e.event.classification != cls) continue;
        durations[0].push_back(e.event.stage.d_head());
        durations[1].push_back(e.event.stage.d_cross());
        durations[2].push_back(e.event.stage.d_tail());
        if (e.gap && e.gap->range_m <= cfg.faz_range_m) {
            model.gap_table.push_back(GapSample{e.gap->range_m, e.gap->range_rate_mps, e.event.speed_at_cross});
        }
    }
    model.n_events = model.gap_table.size();
    model.n_duration_events = durations[0].size();
    if (model.n_events < cfg.min_events) {
        throw Error(Error::Kind::data, "fit_behavior_model: only " + std::to_string(model.n_events) +
                                           " usable gap events for " + extraction::class_name(cls) + " (need " +
                                           std::to_string(cfg.min_events) + ")");
    }

    for (int stage = 0; stage < 3; ++stage) {
        const auto& xs = durations[static_cast<std::size_t>(stage)];
        model.duration[static_cast<std::size_t>(stage)] = stats::gev_fit_mle(xs, cfg.min_events);
        const stats::GevParams p = model.duration[static_cast<std::size_t>(stage)];
        model.duration_ks[static_cast<std::size_t>(stage)] =
            stats::ks_statistic(xs, [p](double x) { return stats::gev_cdf(x, p); });
    }

    if (cfg.mode == GapModelMode::fitted) {
        std::vector<double> rs, rates;
        rs.reserve(model.gap_table.size());
        rates.reserve(model.gap_table.size());
        for (const GapSample& g : model.gap_table) {
            rs.push_back(g.range_m);
            rates.push_back(g.range_rate_mps);
        }
        FittedGapModel fg;
        fg.range_marginal = stats::gev_fit_mle(rs, cfg.min_events);
        fg.rate_marginal = stats::gev_fit_mle(rates, cfg.min_events);
        fg.rank_corr = spearman_rho(rs, rates);
        model.fitted = fg;
    }
    return model;
}

namespace {

GapSample draw_gap(const BehaviorModel& model, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (model.mode == GapModelMode::empirical || !model.fitted) {
        const std::size_t n = model.gap_table.size();
        std::size_t idx = static_cast<std::size_t>(std::floor(unit(rng) * static_cast<double>(n)));
        if (idx >= n) idx = n - 1;
        return model.gap_table[idx];
    }
    const FittedGapModel& fg = *model.fitted;
    const double pearson = 2.0 * std::sin(3.14159265358979323846 * fg.rank_corr / 6.0);
    std::normal_distribution<double> stdnorm(0.0, 1.0);
    for (int tries = 0; tries < 1000; ++tries) {
        const double z1 = stdnorm(rng);
        const double z2 = pearson * z1 + std::sqrt(std::max(0.0, 1.0 - pearson * pearson)) * stdnorm(rng);
        const double u1 = std::clamp(normal_cdf(z1), 1e-12, 1.0 - 1e-12);
        const double u2 = std::clamp(normal_cdf(z2), 1e-12, 1.0 - 1e-12);
        GapSample g;
        g.range_m = stats::gev_quantile(u1, fg.range_marginal);
        g.range_rate_mps = stats::gev_quantile(u2, fg.rate_marginal);
        if (!(g.range_m > 0)) continue;
        // speed has no fitted marginal; resample the observed speeds
        const std::size_t n = model.gap_table.size();
        std::size_t idx = static_cast<std::size_t>(std::floor(unit(rng) * static_cast<double>(n)));
        if (idx >= n) idx = n - 1;
        g.speed_mps = model.gap_table[idx].speed_mps;
        return g;
    }
    throw Error(Error::Kind::numeric, "sample_scenarios: fitted gap model keeps producing non-positive ranges");
}

}  // namespace

std::vector<ScenarioSpec> sample_scenarios(const BehaviorModel& model, std::size_t n, std::uint64_t seed,
                                           std::optional<double> risk_bias_s) {
    if (n < 1) {
        throw Error(Error::Kind::usage, "sample_scenarios: n must be >= 1");
    }
    if (model.gap_table.empty()) {
        throw Error(Error::Kind::data, "sample_scenarios: model has an empty gap table");
    }
    std::vector<ScenarioSpec> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t scen_seed = mix_seed(seed, i);
        std::mt19937_64 rng(scen_seed);
        std::uniform_real_distribution<double> unit(1e-12, 1.0 - 1e-12);

        ScenarioSpec spec;
        spec.scenario_id = "s" + std::to_string(i + 1);
        spec.cls = model.cls;
        spec.d_head_s = stats::gev_quantile(unit(rng), model.duration[0]);
        spec.d_cross_s = stats::gev_quantile(unit(rng), model.duration[1]);
        spec.d_tail_s = stats::gev_quantile(unit(rng), model.duration[2]);
        spec.lane_width_m = model.lane_width_m;
        spec.seed = scen_seed;

        GapSample g;
        bool accepted = false;
        for (int tries = 0; tries < 10000; ++tries) {
            g = draw_gap(model, rng);
            if (!risk_bias_s) {
                accepted = true;
                break;
            }
            const double t = risk::ttc(g.range_m, g.range_rate_mps);
            if (t < *risk_bias_s) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            throw Error(Error::Kind::data,
                        "sample_scenarios: risk bias of " + format_double(*risk_bias_s) +
                            " s is infeasible under the model support (rejection cap hit)");
        }
        spec.initial_gap_m = g.range_m;
        spec.closing_rate_mps = g.range_rate_mps;
        spec.sv_speed_mps = g.speed_mps;
        out.push_back(std::move(spec));
    }
    return out;
}

void export_scenarios(std::span<const ScenarioSpec> specs, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(Error::Kind::io, "cannot write " + path.string());
    RecordLine header("scenarios");
    header.field("count", specs.size());
    f << header.str() << '\n';
    for (const ScenarioSpec& s : specs) {
        RecordLine line("scenario");
        line.field("scenario_id", s.scenario_id)
            .field("class", extraction::class_name(s.cls))
            .field("sv_speed", s.sv_speed_mps)
            .field("initial_gap", s.initial_gap_m)
            .field("closing_rate", s.closing_rate_mps)
            .field("d_head", s.d_head_s)
            .field("d_cross", s.d_cross_s)
            .field("d_tail", s.d_tail_s)
            .field("lane_width", s.lane_width_m)
            .field("seed", s.seed);
        f << line.str() << '\n';
    }
    if (!f) throw Error(Error::Kind::io, "write failed for " + path.string());
}

std::vector<ScenarioSpec> load_scenarios(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(Error::Kind::io, "cannot open " + path.string());
    std::vector<ScenarioSpec> out;
    std::string line;
    long line_no = 0;
    bool have_header = false;
    long expected = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        Record rec = parse_record(line, line_no);
        if (rec.tag == "scenarios") {
            have_header = true;
            expected = rec.get_long("count");
        } else if (rec.tag == "scenario") {
            ScenarioSpec s;
            s.scenario_id = rec.get_str("scenario_id");
            s.cls = extraction::class_from_name(rec.get_str("class"), line_no);
            s.sv_speed_mps = rec.get_double("sv_speed");
            s.initial_gap_m = rec.get_double("initial_gap");
            s.closing_rate_mps = rec.get_double("closing_rate");
            s.d_head_s = rec.get_double("d_head");
            s.d_cross_s = rec.get_double("d_cross");
            s.d_tail_s = rec.get_double("d_tail");
            s.lane_width_m = rec.get_double("lane_width");
            s.seed = rec.get_uint64("seed");
            out.push_back(std::move(s));
        } else {
            rec.fail("unknown record tag '" + rec.tag + "'");
        }
    }
    if (!have_header) {
        throw Error(Error::Kind::parse, path.string() + ": missing scenarios header");
    }
    if (expected != static_cast<long>(out.size())) {
        throw Error(Error::Kind::parse, path.string() + ": header count does not match record count");
    }
    return out;
}

}  // namespace lca::scenario
