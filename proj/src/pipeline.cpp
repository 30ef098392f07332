#include "lca/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "lca/error.hpp"
#include "lca/record.hpp"
#include "lca/synth.hpp"

namespace lca::pipeline {

using extraction::LaneChangeClass;
using extraction::LaneChangeEvent;
using json = nlohmann::json;

int exit_code_for(const Error& err) {
    switch (err.kind()) {
        case Error::Kind::usage: return 1;
        case Error::Kind::internal: return 3;
        default: return 2;
    }
}

namespace {

template <typename Fn>
int guarded(std::ostream& log, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        log << "error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        log << "internal error: " << e.what() << '\n';
        return 3;
    }
}

template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir, const std::string& ext) {
    std::vector<std::filesystem::path> out;
    if (!std::filesystem::is_directory(dir)) return out;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ext) out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

void write_manifest(const PipelineConfig& cfg, const std::vector<std::filesystem::path>& inputs,
                    const std::filesystem::path& out_dir) {
    std::ofstream f(out_dir / "manifest.txt", std::ios::binary);
    if (!f) throw Error(Error::Kind::io, "cannot write manifest in " + out_dir.string());
    const std::string config_dump = dump_config(cfg);
    f << "tool lca " << kToolVersion << '\n';
    std::ostringstream hash;
    hash << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(config_dump);
    f << "config_hash " << hash.str() << '\n';
    for (const auto& path : inputs) {
        std::ostringstream ih;
        ih << std::hex << std::setw(16) << std::setfill('0') << fnv1a64_file(path);
        f << "input " << path.filename().string() << " " << ih.str() << '\n';
    }
    f << "--- config ---\n" << config_dump;
}

std::string pad_id(const char* prefix, std::size_t i, int width) {
    std::ostringstream s;
    s << prefix << std::setw(width) << std::setfill('0') << i;
    return s.str();
}

// ---------------------------------------------------------------- gaps file

}  // namespace

void save_gaps(std::span<const GapRecord> gaps, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(Error::Kind::io, "cannot write " + path.string());
    for (const GapRecord& g : gaps) {
        RecordLine line("gap");
        line.field("trip_id", g.trip_id)
            .field("event_id", g.event_id)
            .field("t_anchor", g.t_anchor)
            .field("R", g.estimate.range_m)
            .field("R_dot", g.estimate.range_rate_mps)
            .field("n_valid", g.estimate.n_valid)
            .field("extrapolated", g.estimate.crossing_frame_extrapolated)
            .field("mode", gap::range_rate_mode_name(g.estimate.mode));
        f << line.str() << '\n';
    }
}

std::vector<GapRecord> load_gaps(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(Error::Kind::io, "cannot open " + path.string());
    std::vector<GapRecord> out;
    std::string line;
    long line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        Record rec = parse_record(line, line_no);
        if (rec.tag != "gap") rec.fail("expected gap record");
        GapRecord g;
        g.trip_id = rec.get_str("trip_id");
        g.event_id = rec.get_str("event_id");
        g.t_anchor = rec.get_double("t_anchor");
        g.estimate.range_m = rec.get_double("R");
        g.estimate.range_rate_mps = rec.get_double("R_dot");
        g.estimate.n_valid = static_cast<int>(rec.get_long("n_valid"));
        g.estimate.crossing_frame_extrapolated = rec.get_bool("extrapolated");
        g.estimate.mode = gap::range_rate_mode_from_name(rec.get_str("mode"));
        out.push_back(std::move(g));
    }
    return out;
}

std::vector<risk::AnalyzedEvent> join_events_gaps(std::span<const LaneChangeEvent> events,
                                                  std::span<const GapRecord> gaps) {
    std::map<std::string, std::vector<const GapRecord*>> by_trip;
    for (const GapRecord& g : gaps) by_trip[g.trip_id].push_back(&g);

    std::vector<risk::AnalyzedEvent> out;
    out.reserve(events.size());
    for (const LaneChangeEvent& ev : events) {
        risk::AnalyzedEvent ae;
        ae.event = ev;
        auto it = by_trip.find(ev.trip_id);
        if (it != by_trip.end()) {
            for (const GapRecord* g : it->second) {
                if (g->t_anchor >= ev.stage.t_head_start && g->t_anchor <= ev.stage.t_tail_end) {
                    ae.gap = g->estimate;
                    break;
                }
            }
        }
        out.push_back(std::move(ae));
    }
    return out;
}

// ------------------------------------------------------------------- synth

int run_synth(const PipelineConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log) {
    return guarded(log, [&] {
        cfg.validate();
        if (cfg.synth_trips < 1) {
            throw Error(Error::Kind::usage, "config: field 'synth_trips' must be >= 1 for synth");
        }
        std::filesystem::create_directories(out_dir / "trips");
        std::filesystem::create_directories(out_dir / "truth");
        std::filesystem::create_directories(out_dir / "frames");

        const CameraIntrinsics cam = synth::default_intrinsics();
        save_camera(cam, out_dir / "camera.cam");

        const std::size_t n_trips = static_cast<std::size_t>(cfg.synth_trips);
        std::vector<std::size_t> event_counts(n_trips, 0);
        parallel_for(n_trips, cfg.jobs, [&](std::size_t k) {
            const std::string trip_id = pad_id("T", k + 1, 4);
            const synth::GeneratedTrip gen =
                synth::generate_trip(cfg.synth, cam, mix_seed(cfg.seed, k), trip_id);
            save_trip(gen.trip, out_dir / "trips" / (trip_id + ".trace"));
            synth::save_truth(gen, out_dir / "truth" / (trip_id + ".truth"));
            synth::save_frames(gen, out_dir / "frames" / (trip_id + ".frames"));
            event_counts[k] = gen.events.size();
        });

        write_manifest(cfg, {}, out_dir);
        std::size_t total = 0;
        for (std::size_t c : event_counts) total += c;
        log << "synth: wrote " << n_trips << " trips with " << total << " planted events to " << out_dir.string()
            << '\n';
        return 0;
    });
}

// ----------------------------------------------------------------- extract

namespace {

struct ExtractResult {
    std::vector<LaneChangeEvent> events;
    extraction::ExtractionCounts counts;
    std::vector<std::filesystem::path> inputs;
};

ExtractResult extract_all(const PipelineConfig& cfg, const std::filesystem::path& in_dir) {
    const std::vector<std::filesystem::path> trip_files = list_files(in_dir / "trips", ".trace");
    if (trip_files.empty()) {
        throw Error(Error::Kind::data, "no trace files under " + (in_dir / "trips").string());
    }
    std::vector<std::vector<LaneChangeEvent>> per_trip(trip_files.size());
    std::vector<extraction::ExtractionCounts> per_counts(trip_files.size());
    parallel_for(trip_files.size(), cfg.jobs, [&](std::size_t i) {
        const Trip trip = load_trip(trip_files[i]);
        per_trip[i] = extraction::extract_events(trip, cfg.extraction, &per_counts[i]);
    });
    ExtractResult out;
    out.inputs = trip_files;
    for (std::size_t i = 0; i < trip_files.size(); ++i) {
        out.counts.candidates += per_counts[i].candidates;
        out.counts.context_filtered += per_counts[i].context_filtered;
        out.counts.incomplete += per_counts[i].incomplete;
        out.events.insert(out.events.end(), per_trip[i].begin(), per_trip[i].end());
    }
    return out;
}

}  // namespace

int run_extract(const PipelineConfig& cfg, const std::filesystem::path& in_dir,
                const std::filesystem::path& out_dir, std::ostream& log) {
    return guarded(log, [&] {
        cfg.validate();
        std::filesystem::create_directories(out_dir);
        const ExtractResult res = extract_all(cfg, in_dir);
        extraction::save_events(res.events, out_dir / "events.events");
        write_manifest(cfg, res.inputs, out_dir);
        log << "extract: " << res.counts.candidates << " candidates, " << res.events.size() << " events kept ("
            << res.counts.context_filtered << " filtered by context, " << res.counts.incomplete
            << " incomplete)\n";
        return 0;
    });
}

// ---------------------------------------------------------------- estimate

namespace {

struct EstimateResult {
    std::vector<GapRecord> gaps;
    std::size_t skipped = 0;
    std::vector<std::string> skip_reasons;
    std::vector<std::filesystem::path> inputs;
};

EstimateResult estimate_all(const PipelineConfig& cfg, const std::filesystem::path& in_dir) {
    const std::filesystem::path cam_path = in_dir / "camera.cam";
    if (!std::filesystem::exists(cam_path)) {
        throw Error(Error::Kind::data, "missing camera intrinsics file " + cam_path.string());
    }
    const CameraIntrinsics cam = load_camera(cam_path);
    const std::vector<std::filesystem::path> frame_files = list_files(in_dir / "frames", ".frames");
    if (frame_files.empty()) {
        throw Error(Error::Kind::data, "no frames files under " + (in_dir / "frames").string());
    }

    EstimateResult out;
    out.inputs = frame_files;
    out.inputs.push_back(cam_path);

    std::vector<EstimateResult> per_file(frame_files.size());
    parallel_for(frame_files.size(), cfg.jobs, [&](std::size_t i) {
        const std::vector<synth::FramesRecord> records = synth::load_frames(frame_files[i]);
        if (records.empty()) return;
        const std::filesystem::path trace =
            in_dir / "trips" / (frame_files[i].stem().string() + ".trace");
        const Trip trip = load_trip(trace);
        for (const synth::FramesRecord& rec : records) {
            try {
                std::vector<std::pair<int, double>> pairs;
                for (const gap::FrameSet& fr : rec.frames) {
                    if (!fr.valid) continue;
                    pairs.emplace_back(fr.frame_index,
                                       gap::frame_range(fr, trip.lane_width_true, trip.cam_to_rear, cam));
                }
                const gap::EventRange er = gap::event_range(rec.frames, trip.lane_width_true, trip.cam_to_rear,
                                                            cam, cfg.min_valid_frames);
                if (!(er.range_at_cross > 0)) {
                    throw Error(Error::Kind::data, "non-positive range estimate");
                }
                GapRecord g;
                g.trip_id = rec.trip_id;
                g.event_id = rec.event_id;
                g.t_anchor = rec.t_anchor;
                g.estimate.range_m = er.range_at_cross;
                g.estimate.range_rate_mps = gap::range_rate(pairs, cfg.range_rate_mode, cfg.frame_rate_hz);
                g.estimate.n_valid = er.n_valid;
                g.estimate.crossing_frame_extrapolated = er.extrapolated;
                g.estimate.mode = cfg.range_rate_mode;
                per_file[i].gaps.push_back(std::move(g));
            } catch (const Error& e) {
                ++per_file[i].skipped;
                per_file[i].skip_reasons.push_back(rec.trip_id + "/" + rec.event_id + ": " + e.what());
            }
        }
    });
    for (EstimateResult& r : per_file) {
        out.gaps.insert(out.gaps.end(), r.gaps.begin(), r.gaps.end());
        out.skipped += r.skipped;
        out.skip_reasons.insert(out.skip_reasons.end(), r.skip_reasons.begin(), r.skip_reasons.end());
    }
    return out;
}

}  // namespace

int run_estimate(const PipelineConfig& cfg, const std::filesystem::path& in_dir,
                 const std::filesystem::path& out_dir, std::ostream& log) {
    return guarded(log, [&] {
        cfg.validate();
        std::filesystem::create_directories(out_dir);
        const EstimateResult res = estimate_all(cfg, in_dir);
        save_gaps(res.gaps, out_dir / "gaps.gaps");
        write_manifest(cfg, res.inputs, out_dir);
        log << "estimate: " << res.gaps.size() << " gap estimates, " << res.skipped << " events skipped\n";
        for (const std::string& reason : res.skip_reasons) log << "  skipped " << reason << '\n';
        return 0;
    });
}

// ----------------------------------------------------------------- analyze

namespace {

json to_json(const stats::GevParams& p) {
    return json{{"shape", p.shape}, {"loc", p.loc}, {"scale", p.scale}};
}

stats::GevParams gev_from_json(const json& j) {
    return stats::GevParams{j.at("shape").get<double>(), j.at("loc").get<double>(), j.at("scale").get<double>()};
}

json to_json(const risk::Histogram& h) {
    return json{{"lo", h.lo}, {"bin_width", h.bin_width}, {"freq", h.freq}};
}

json to_json(const risk::RiskFractions& fr) {
    json rows = json::array();
    for (const risk::RiskFractionRow& r : fr.rows) {
        json row{{"threshold_s", r.threshold_s}};
        row["mlc"] = r.mlc ? json(*r.mlc) : json(nullptr);
        row["dlc"] = r.dlc ? json(*r.dlc) : json(nullptr);
        row["ratio"] = r.ratio ? json(*r.ratio) : json(nullptr);
        rows.push_back(row);
    }
    return json{{"rows", rows}, {"mean_ratio", fr.mean_ratio ? json(*fr.mean_ratio) : json(nullptr)}};
}

json to_json(const risk::StageComparison& sc) {
    json j{{"stage", sc.stage},
           {"n_mlc", sc.n_mlc},
           {"n_dlc", sc.n_dlc},
           {"mww_u", sc.mww.u},
           {"mww_p", sc.mww.p_two_sided},
           {"mww_method", sc.mww.method == stats::MwwMethod::exact ? "exact" : "normal_approx"}};
    j["mlc_fit"] = sc.mlc_fit ? to_json(*sc.mlc_fit) : json(nullptr);
    j["dlc_fit"] = sc.dlc_fit ? to_json(*sc.dlc_fit) : json(nullptr);
    return j;
}

json to_json(const scenario::BehaviorModel& m) {
    json j;
    j["class"] = extraction::class_name(m.cls);
    j["mode"] = scenario::gap_model_mode_name(m.mode);
    j["lane_width_m"] = m.lane_width_m;
    j["n_events"] = m.n_events;
    j["n_duration_events"] = m.n_duration_events;
    j["duration"] = json{{"head", to_json(m.duration[0])}, {"cross", to_json(m.duration[1])}, {"tail", to_json(m.duration[2])}};
    j["duration_ks"] = json{{"head", m.duration_ks[0]}, {"cross", m.duration_ks[1]}, {"tail", m.duration_ks[2]}};
    json table = json::array();
    for (const scenario::GapSample& g : m.gap_table) {
        table.push_back(json::array({g.range_m, g.range_rate_mps, g.speed_mps}));
    }
    j["gap_table"] = table;
    if (m.fitted) {
        j["fitted"] = json{{"range_marginal", to_json(m.fitted->range_marginal)},
                           {"rate_marginal", to_json(m.fitted->rate_marginal)},
                           {"rank_corr", m.fitted->rank_corr}};
    } else {
        j["fitted"] = nullptr;
    }
    return j;
}

scenario::BehaviorModel model_from_json(const json& j) {
    scenario::BehaviorModel m;
    m.cls = extraction::class_from_name(j.at("class").get<std::string>(), 0);
    m.mode = scenario::gap_model_mode_from_name(j.at("mode").get<std::string>());
    m.lane_width_m = j.at("lane_width_m").get<double>();
    m.n_events = j.at("n_events").get<std::size_t>();
    m.n_duration_events = j.at("n_duration_events").get<std::size_t>();
    m.duration[0] = gev_from_json(j.at("duration").at("head"));
    m.duration[1] = gev_from_json(j.at("duration").at("cross"));
    m.duration[2] = gev_from_json(j.at("duration").at("tail"));
    m.duration_ks[0] = j.at("duration_ks").at("head").get<double>();
    m.duration_ks[1] = j.at("duration_ks").at("cross").get<double>();
    m.duration_ks[2] = j.at("duration_ks").at("tail").get<double>();
    for (const json& row : j.at("gap_table")) {
        m.gap_table.push_back(scenario::GapSample{row.at(0).get<double>(), row.at(1).get<double>(), row.at(2).get<double>()});
    }
    if (!j.at("fitted").is_null()) {
        scenario::FittedGapModel fg;
        fg.range_marginal = gev_from_json(j.at("fitted").at("range_marginal"));
        fg.rate_marginal = gev_from_json(j.at("fitted").at("rate_marginal"));
        fg.rank_corr = j.at("fitted").at("rank_corr").get<double>();
        m.fitted = fg;
    }
    return m;
}

void write_csvs(const std::filesystem::path& csv_dir, const risk::RiskReport& rep,
                std::span<const risk::AnalyzedEvent> events, double faz_range_m) {
    std::filesystem::create_directories(csv_dir);

    auto open = [&](const char* name) {
        std::ofstream f(csv_dir / name, std::ios::binary);
        if (!f) throw Error(Error::Kind::io, "cannot write " + (csv_dir / name).string());
        return f;
    };

    {
        std::ofstream f = open("hist_range.csv");
        f << "class,bin_lo,bin_hi,frequency\n";
        auto dump = [&](const char* cls, const risk::Histogram& h) {
            for (std::size_t i = 0; i < h.freq.size(); ++i) {
                const double lo = h.lo + static_cast<double>(i) * h.bin_width;
                f << cls << ',' << format_double(lo) << ',' << format_double(lo + h.bin_width) << ','
                  << format_double(h.freq[i]) << '\n';
            }
        };
        dump("MLC", rep.range_hist_mlc);
        dump("DLC", rep.range_hist_dlc);
    }
    {
        std::ofstream f = open("hist_range_rate.csv");
        f << "class,bin_lo,bin_hi,frequency\n";
        auto dump = [&](const char* cls, const risk::Histogram& h) {
            for (std::size_t i = 0; i < h.freq.size(); ++i) {
                const double lo = h.lo + static_cast<double>(i) * h.bin_width;
                f << cls << ',' << format_double(lo) << ',' << format_double(lo + h.bin_width) << ','
                  << format_double(h.freq[i]) << '\n';
            }
        };
        dump("MLC", rep.rate_hist_mlc);
        dump("DLC", rep.rate_hist_dlc);
    }
    {
        std::ofstream f = open("gap_scatter.csv");
        f << "class,range_m,range_rate_mps\n";
        for (const risk::AnalyzedEvent& e : events) {
            if (!e.gap || e.gap->range_m > faz_range_m) continue;
            if (e.event.classification != LaneChangeClass::MLC && e.event.classification != LaneChangeClass::DLC)
                continue;
            f << extraction::class_name(e.event.classification) << ',' << format_double(e.gap->range_m) << ','
              << format_double(e.gap->range_rate_mps) << '\n';
        }
    }
    {
        std::ofstream f = open("durations.csv");
        f << "class,stage,duration_s\n";
        for (const risk::AnalyzedEvent& e : events) {
            const LaneChangeClass c = e.event.classification;
            if (c != LaneChangeClass::MLC && c != LaneChangeClass::DLC) continue;
            const char* cls = extraction::class_name(c);
            f << cls << ",head," << format_double(e.event.stage.d_head()) << '\n';
            f << cls << ",cross," << format_double(e.event.stage.d_cross()) << '\n';
            f << cls << ",tail," << format_double(e.event.stage.d_tail()) << '\n';
        }
    }
    {
        std::ofstream f = open("duration_fit_curves.csv");
        f << "class,stage,duration_s,pdf\n";
        for (const risk::StageComparison& sc : rep.stages) {
            auto dump = [&](const char* cls, const std::optional<stats::GevParams>& fit) {
                if (!fit) return;
                const double lo = stats::gev_quantile(0.001, *fit);
                const double hi = stats::gev_quantile(0.999, *fit);
                for (int i = 0; i <= 200; ++i) {
                    const double x = lo + (hi - lo) * static_cast<double>(i) / 200.0;
                    f << cls << ',' << sc.stage << ',' << format_double(x) << ','
                      << format_double(stats::gev_pdf(x, *fit)) << '\n';
                }
            };
            dump("MLC", sc.mlc_fit);
            dump("DLC", sc.dlc_fit);
        }
    }
}

}  // namespace

int run_analyze(const PipelineConfig& cfg, const std::filesystem::path& in_dir,
                const std::filesystem::path& out_dir, std::ostream& log) {
    return guarded(log, [&] {
        cfg.validate();
        std::filesystem::create_directories(out_dir);

        const ExtractResult extracted = extract_all(cfg, in_dir);
        extraction::save_events(extracted.events, out_dir / "events.events");

        EstimateResult estimated;
        const bool have_frames = std::filesystem::is_directory(in_dir / "frames") &&
                                 std::filesystem::exists(in_dir / "camera.cam");
        if (have_frames) {
            estimated = estimate_all(cfg, in_dir);
            save_gaps(estimated.gaps, out_dir / "gaps.gaps");
        } else {
            log << "analyze: no frames/camera inputs, gap statistics will be empty\n";
        }

        const std::vector<risk::AnalyzedEvent> joined = join_events_gaps(extracted.events, estimated.gaps);
        const risk::RiskReport rep = risk::assemble_risk_report(joined, cfg.risk);

        json j;
        j["counts"] = json{{"mlc", rep.events.mlc},
                           {"dlc", rep.events.dlc},
                           {"ambiguous", rep.events.ambiguous},
                           {"other", rep.events.other},
                           {"candidates", extracted.counts.candidates},
                           {"context_filtered", extracted.counts.context_filtered},
                           {"incomplete", extracted.counts.incomplete}};
        j["gap"] = json{{"valid", json{{"mlc", rep.valid_gaps.mlc}, {"dlc", rep.valid_gaps.dlc}}},
                        {"faz", json{{"mlc", rep.faz_mlc}, {"dlc", rep.faz_dlc}}},
                        {"skipped_estimates", estimated.skipped},
                        {"risk_fractions", to_json(rep.fractions)},
                        {"histograms", json{{"range", json{{"mlc", to_json(rep.range_hist_mlc)},
                                                           {"dlc", to_json(rep.range_hist_dlc)}}},
                                            {"range_rate", json{{"mlc", to_json(rep.rate_hist_mlc)},
                                                                {"dlc", to_json(rep.rate_hist_dlc)}}}}}};
        json stages = json::array();
        for (const risk::StageComparison& sc : rep.stages) stages.push_back(to_json(sc));
        j["duration"] = stages;

        json models;
        scenario::ScenarioFitConfig fit_cfg;
        fit_cfg.mode = cfg.gap_model_mode;
        fit_cfg.min_events = cfg.risk.min_fit_samples;
        fit_cfg.faz_range_m = cfg.risk.faz_range_m;
        fit_cfg.lane_width_m = cfg.synth.lane_width_m;
        for (LaneChangeClass cls : {LaneChangeClass::MLC, LaneChangeClass::DLC}) {
            try {
                models[extraction::class_name(cls)] = to_json(scenario::fit_behavior_model(joined, cls, fit_cfg));
            } catch (const Error& e) {
                models[extraction::class_name(cls)] = nullptr;
                log << "analyze: no behavior model for " << extraction::class_name(cls) << " (" << e.what()
                    << ")\n";
            }
        }
        j["behavior_models"] = models;

        j["reference"] = json{{"mlc_events", risk::reference::mlc_event_count},
                              {"dlc_events", risk::reference::dlc_event_count},
                              {"mlc_faz", risk::reference::mlc_faz_count},
                              {"dlc_faz", risk::reference::dlc_faz_count},
                              {"mlc_ttc_lt2", risk::reference::mlc_ttc_lt2_fraction},
                              {"mlc_ttc_lt3", risk::reference::mlc_ttc_lt3_fraction},
                              {"dlc_ttc_lt2", risk::reference::dlc_ttc_lt2_fraction},
                              {"dlc_ttc_lt3", risk::reference::dlc_ttc_lt3_fraction},
                              {"risk_ratio", risk::reference::risk_ratio},
                              {"mww_p_head", risk::reference::mww_p_head},
                              {"mww_p_tail", risk::reference::mww_p_tail}};

        {
            std::ofstream f(out_dir / "report.json", std::ios::binary);
            if (!f) throw Error(Error::Kind::io, "cannot write report.json");
            f << j.dump(2) << '\n';
        }
        write_csvs(out_dir / "csv", rep, joined, cfg.risk.faz_range_m);

        std::vector<std::filesystem::path> inputs = extracted.inputs;
        inputs.insert(inputs.end(), estimated.inputs.begin(), estimated.inputs.end());
        write_manifest(cfg, inputs, out_dir);

        log << "analyze: " << rep.events.mlc << " MLC, " << rep.events.dlc << " DLC, " << rep.events.ambiguous
            << " ambiguous, " << rep.events.other << " other; FAZ " << rep.faz_mlc << "/" << rep.faz_dlc << '\n';
        if (rep.fractions.mean_ratio) {
            log << "analyze: mean MLC/DLC risk ratio " << *rep.fractions.mean_ratio << '\n';
        }
        return 0;
    });
}

// ------------------------------------------------------------------ sample

int run_sample(const PipelineConfig& cfg, const std::filesystem::path& report_path, LaneChangeClass cls,
               std::size_t n, std::optional<double> risk_bias_s, const std::filesystem::path& out_path,
               std::ostream& log) {
    return guarded(log, [&] {
        if (n < 1) throw Error(Error::Kind::usage, "sample: n must be >= 1");
        std::ifstream f(report_path);
        if (!f) throw Error(Error::Kind::data, "cannot open report " + report_path.string());
        json j;
        try {
            f >> j;
        } catch (const std::exception& e) {
            throw Error(Error::Kind::parse, "report " + report_path.string() + ": " + e.what());
        }
        const char* cls_name = extraction::class_name(cls);
        if (!j.contains("behavior_models") || !j["behavior_models"].contains(cls_name) ||
            j["behavior_models"][cls_name].is_null()) {
            throw Error(Error::Kind::data,
                        std::string("report has no fitted behavior model for ") + cls_name + " (underfit corpus?)");
        }
        const scenario::BehaviorModel model = model_from_json(j["behavior_models"][cls_name]);
        const std::vector<scenario::ScenarioSpec> specs =
            scenario::sample_scenarios(model, n, cfg.seed, risk_bias_s);
        scenario::export_scenarios(specs, out_path);

        double mean_gap = 0, mean_rate = 0;
        std::size_t risky = 0;
        for (const scenario::ScenarioSpec& s : specs) {
            mean_gap += s.initial_gap_m;
            mean_rate += s.closing_rate_mps;
            if (risk::ttc(s.initial_gap_m, s.closing_rate_mps) < 2.0) ++risky;
        }
        mean_gap /= static_cast<double>(specs.size());
        mean_rate /= static_cast<double>(specs.size());
        log << "sample: " << specs.size() << " " << cls_name << " scenarios -> " << out_path.string() << '\n';
        log << "sample: mean gap " << mean_gap << " m, mean closing rate " << mean_rate << " m/s, TTC<2s in "
            << risky << " scenarios\n";
        return 0;
    });
}

// ------------------------------------------------------------------ report

int run_report(const std::filesystem::path& report_path, std::ostream& log) {
    return guarded(log, [&] {
        std::ifstream f(report_path);
        if (!f) throw Error(Error::Kind::data, "cannot open report " + report_path.string());
        json j;
        try {
            f >> j;
        } catch (const std::exception& e) {
            throw Error(Error::Kind::parse, "report " + report_path.string() + ": " + e.what());
        }
        const json& counts = j.at("counts");
        log << "events: MLC " << counts.at("mlc").get<std::size_t>() << ", DLC "
            << counts.at("dlc").get<std::size_t>() << ", ambiguous " << counts.at("ambiguous").get<std::size_t>()
            << ", other " << counts.at("other").get<std::size_t>() << " (from "
            << counts.at("candidates").get<std::size_t>() << " candidates)\n";
        const json& gapj = j.at("gap");
        log << "gap estimates: MLC " << gapj.at("valid").at("mlc").get<std::size_t>() << ", DLC "
            << gapj.at("valid").at("dlc").get<std::size_t>() << "; in FAZ: MLC "
            << gapj.at("faz").at("mlc").get<std::size_t>() << ", DLC " << gapj.at("faz").at("dlc").get<std::size_t>()
            << '\n';
        for (const json& row : gapj.at("risk_fractions").at("rows")) {
            log << "TTC < " << row.at("threshold_s").get<double>() << " s: MLC "
                << (row.at("mlc").is_null() ? std::string("n/a") : format_double(row.at("mlc").get<double>()))
                << ", DLC "
                << (row.at("dlc").is_null() ? std::string("n/a") : format_double(row.at("dlc").get<double>()))
                << ", ratio "
                << (row.at("ratio").is_null() ? std::string("n/a") : format_double(row.at("ratio").get<double>()))
                << '\n';
        }
        const json& mean_ratio = gapj.at("risk_fractions").at("mean_ratio");
        log << "mean risk ratio: " << (mean_ratio.is_null() ? std::string("n/a") : format_double(mean_ratio.get<double>()))
            << " (study reference " << format_double(j.at("reference").at("risk_ratio").get<double>()) << ")\n";
        for (const json& sc : j.at("duration")) {
            log << "stage " << sc.at("stage").get<std::string>() << ": n " << sc.at("n_mlc").get<std::size_t>()
                << "/" << sc.at("n_dlc").get<std::size_t>() << ", MWW p " << sc.at("mww_p").get<double>();
            if (!sc.at("mlc_fit").is_null()) {
                const json& p = sc.at("mlc_fit");
                log << ", MLC GEV(shape " << p.at("shape").get<double>() << ", loc " << p.at("loc").get<double>()
                    << ", scale " << p.at("scale").get<double>() << ")";
            }
            if (!sc.at("dlc_fit").is_null()) {
                const json& p = sc.at("dlc_fit");
                log << ", DLC GEV(shape " << p.at("shape").get<double>() << ", loc " << p.at("loc").get<double>()
                    << ", scale " << p.at("scale").get<double>() << ")";
            }
            log << '\n';
        }
        return 0;
    });
}

}  // namespace lca::pipeline
