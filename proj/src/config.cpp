#include "lca/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

#include "lca/error.hpp"
#include "lca/record.hpp"

namespace lca {

namespace {

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
    throw Error(Error::Kind::usage, "config: field '" + field + "' " + why);
}

double to_double(const std::string& key, const std::string& value) {
    double v = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || p != value.data() + value.size()) bad_field(key, "has unparsable value '" + value + "'");
    return v;
}

long to_long(const std::string& key, const std::string& value) {
    long v = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || p != value.data() + value.size()) bad_field(key, "has unparsable value '" + value + "'");
    return v;
}

std::vector<double> to_double_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < value.size()) {
        std::size_t comma = value.find(',', pos);
        if (comma == std::string::npos) comma = value.size();
        out.push_back(to_double(key, value.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    if (out.empty()) bad_field(key, "needs at least one value");
    return out;
}

std::string join_doubles(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += format_double(v[i]);
    }
    return s;
}

}  // namespace

PipelineConfig default_config() {
    return PipelineConfig{};
}

void apply_config_key(PipelineConfig& cfg, const std::string& key, const std::string& value) {
    auto& ex = cfg.extraction;
    auto& rk = cfg.risk;
    auto& sy = cfg.synth;

    if (key == "seed") {
        std::uint64_t v = 0;
        auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (ec != std::errc() || p != value.data() + value.size()) bad_field(key, "has unparsable value '" + value + "'");
        cfg.seed = v;
        sy.seed = v;
    } else if (key == "jobs") {
        cfg.jobs = static_cast<int>(to_long(key, value));
    } else if (key == "ramp_window_m") {
        ex.ramp_window_m = to_double(key, value);
    } else if (key == "lead_range_min_m") {
        ex.lead_range_min_m = to_double(key, value);
    } else if (key == "lead_range_max_m") {
        ex.lead_range_max_m = to_double(key, value);
    } else if (key == "lead_rate_min_mps") {
        ex.lead_rate_min_mps = to_double(key, value);
    } else if (key == "lead_rate_max_mps") {
        ex.lead_rate_max_mps = to_double(key, value);
    } else if (key == "pass_window_s") {
        ex.pass_window_s = to_double(key, value);
    } else if (key == "pass_gate_m") {
        ex.pass_gate_m = to_double(key, value);
    } else if (key == "speed_min_mph") {
        ex.speed_min_mph = to_double(key, value);
    } else if (key == "speed_max_mph") {
        ex.speed_max_mph = to_double(key, value);
    } else if (key == "dlc_lookback_s") {
        ex.dlc_lookback_s = to_double(key, value);
    } else if (key == "offset_threshold_m") {
        ex.offset_threshold_m = to_double(key, value);
    } else if (key == "head_hysteresis_m") {
        ex.head_hysteresis_m = to_double(key, value);
    } else if (key == "faz_range_m") {
        rk.faz_range_m = to_double(key, value);
    } else if (key == "ttc_thresholds_s") {
        rk.ttc_thresholds_s = to_double_list(key, value);
    } else if (key == "hist_bin_range_m") {
        rk.hist_bin_range_m = to_double(key, value);
    } else if (key == "hist_bin_rate_mps") {
        rk.hist_bin_rate_mps = to_double(key, value);
    } else if (key == "min_fit_samples") {
        rk.min_fit_samples = static_cast<std::size_t>(to_long(key, value));
    } else if (key == "min_valid_frames") {
        cfg.min_valid_frames = static_cast<int>(to_long(key, value));
    } else if (key == "frame_count") {
        cfg.frame_count = static_cast<int>(to_long(key, value));
    } else if (key == "frame_rate_hz") {
        cfg.frame_rate_hz = to_double(key, value);
    } else if (key == "range_rate_mode") {
        cfg.range_rate_mode = gap::range_rate_mode_from_name(value);
    } else if (key == "gap_model_mode") {
        cfg.gap_model_mode = scenario::gap_model_mode_from_name(value);
    } else if (key == "synth_trips") {
        cfg.synth_trips = static_cast<int>(to_long(key, value));
    } else if (key == "synth_n_mlc") {
        sy.n_mlc = static_cast<int>(to_long(key, value));
    } else if (key == "synth_n_dlc") {
        sy.n_dlc = static_cast<int>(to_long(key, value));
    } else if (key == "synth_n_ambiguous") {
        sy.n_ambiguous = static_cast<int>(to_long(key, value));
    } else if (key == "synth_n_other") {
        sy.n_other = static_cast<int>(to_long(key, value));
    } else if (key == "synth_sample_rate_hz") {
        sy.sample_rate_hz = to_double(key, value);
    } else if (key == "synth_lane_width_m") {
        sy.lane_width_m = to_double(key, value);
    } else if (key == "synth_vehicle_width_m") {
        sy.vehicle_width_m = to_double(key, value);
    } else if (key == "synth_cam_to_rear_m") {
        sy.cam_to_rear_m = to_double(key, value);
    } else if (key == "synth_cam_height_m") {
        sy.cam_height_m = to_double(key, value);
    } else if (key == "synth_speed_min_mps") {
        sy.speed_min_mps = to_double(key, value);
    } else if (key == "synth_speed_max_mps") {
        sy.speed_max_mps = to_double(key, value);
    } else if (key == "synth_cross_duration_min_s") {
        sy.cross_duration_min_s = to_double(key, value);
    } else if (key == "synth_cross_duration_max_s") {
        sy.cross_duration_max_s = to_double(key, value);
    } else if (key == "synth_mlc_cross_scale") {
        sy.mlc_cross_scale = to_double(key, value);
    } else if (key == "synth_gap_range_min_m") {
        sy.gap_range_min_m = to_double(key, value);
    } else if (key == "synth_gap_range_max_m") {
        sy.gap_range_max_m = to_double(key, value);
    } else if (key == "synth_gap_rate_mean_mps") {
        sy.gap_rate_mean_mps = to_double(key, value);
    } else if (key == "synth_gap_rate_sd_mps") {
        sy.gap_rate_sd_mps = to_double(key, value);
    } else if (key == "synth_gap_rate_min_mps") {
        sy.gap_rate_min_mps = to_double(key, value);
    } else if (key == "synth_gap_rate_max_mps") {
        sy.gap_rate_max_mps = to_double(key, value);
    } else if (key == "synth_mlc_rate_shift_mps") {
        sy.mlc_rate_shift_mps = to_double(key, value);
    } else if (key == "synth_pixel_noise_px") {
        sy.pixel_noise_px = to_double(key, value);
    } else if (key == "synth_frame_drop_probability") {
        sy.frame_drop_probability = to_double(key, value);
    } else {
        throw Error(Error::Kind::usage, "config: unknown key '" + key + "'");
    }
}

void PipelineConfig::validate() const {
    const auto& ex = extraction;
    if (!(ex.ramp_window_m > 0)) bad_field("ramp_window_m", "must be > 0");
    if (!(ex.lead_range_min_m < ex.lead_range_max_m)) bad_field("lead_range_min_m", "window must satisfy low < high");
    if (!(ex.lead_rate_min_mps < ex.lead_rate_max_mps)) bad_field("lead_rate_min_mps", "window must satisfy low < high");
    if (!(ex.pass_window_s > 0)) bad_field("pass_window_s", "must be > 0");
    if (!(ex.pass_gate_m > 0)) bad_field("pass_gate_m", "must be > 0");
    if (!(ex.speed_min_mph < ex.speed_max_mph)) bad_field("speed_min_mph", "window must satisfy low < high");
    if (!(ex.dlc_lookback_s > 0)) bad_field("dlc_lookback_s", "must be > 0");
    if (!(ex.offset_threshold_m > 0)) bad_field("offset_threshold_m", "must be > 0");
    if (!(ex.head_hysteresis_m >= 0)) bad_field("head_hysteresis_m", "must be >= 0");
    if (!(ex.head_hysteresis_m < ex.offset_threshold_m)) bad_field("head_hysteresis_m", "must be below offset_threshold_m");
    if (!(risk.faz_range_m > 0)) bad_field("faz_range_m", "must be > 0");
    if (risk.ttc_thresholds_s.empty()) bad_field("ttc_thresholds_s", "needs at least one threshold");
    for (double t : risk.ttc_thresholds_s) {
        if (!(t > 0)) bad_field("ttc_thresholds_s", "thresholds must be > 0");
    }
    if (!(risk.hist_bin_range_m > 0)) bad_field("hist_bin_range_m", "must be > 0");
    if (!(risk.hist_bin_rate_mps > 0)) bad_field("hist_bin_rate_mps", "must be > 0");
    if (risk.min_fit_samples < 3) bad_field("min_fit_samples", "must be >= 3");
    if (min_valid_frames < 2) bad_field("min_valid_frames", "must be >= 2");
    if (frame_count < min_valid_frames) bad_field("frame_count", "must be >= min_valid_frames");
    if (!(frame_rate_hz > 0)) bad_field("frame_rate_hz", "must be > 0");
    if (synth_trips < 0) bad_field("synth_trips", "must be >= 0");
    if (jobs < 1) bad_field("jobs", "must be >= 1");
    synth.validate();
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw Error(Error::Kind::io, "cannot open config " + path.string());
    PipelineConfig cfg = default_config();
    std::string line;
    long line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        // strip comments and whitespace
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string& s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
        };
        trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(Error::Kind::usage,
                        "config " + path.string() + " line " + std::to_string(line_no) + ": expected key = value");
        }
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        trim(key);
        trim(value);
        apply_config_key(cfg, key, value);
    }
    return cfg;
}

std::string dump_config(const PipelineConfig& cfg) {
    std::ostringstream out;
    auto put = [&](const char* key, const std::string& value) { out << key << " = " << value << '\n'; };
    put("seed", std::to_string(cfg.seed));
    put("jobs", std::to_string(cfg.jobs));
    put("ramp_window_m", format_double(cfg.extraction.ramp_window_m));
    put("lead_range_min_m", format_double(cfg.extraction.lead_range_min_m));
    put("lead_range_max_m", format_double(cfg.extraction.lead_range_max_m));
    put("lead_rate_min_mps", format_double(cfg.extraction.lead_rate_min_mps));
    put("lead_rate_max_mps", format_double(cfg.extraction.lead_rate_max_mps));
    put("pass_window_s", format_double(cfg.extraction.pass_window_s));
    put("pass_gate_m", format_double(cfg.extraction.pass_gate_m));
    put("speed_min_mph", format_double(cfg.extraction.speed_min_mph));
    put("speed_max_mph", format_double(cfg.extraction.speed_max_mph));
    put("dlc_lookback_s", format_double(cfg.extraction.dlc_lookback_s));
    put("offset_threshold_m", format_double(cfg.extraction.offset_threshold_m));
    put("head_hysteresis_m", format_double(cfg.extraction.head_hysteresis_m));
    put("faz_range_m", format_double(cfg.risk.faz_range_m));
    put("ttc_thresholds_s", join_doubles(cfg.risk.ttc_thresholds_s));
    put("hist_bin_range_m", format_double(cfg.risk.hist_bin_range_m));
    put("hist_bin_rate_mps", format_double(cfg.risk.hist_bin_rate_mps));
    put("min_fit_samples", std::to_string(cfg.risk.min_fit_samples));
    put("min_valid_frames", std::to_string(cfg.min_valid_frames));
    put("frame_count", std::to_string(cfg.frame_count));
    put("frame_rate_hz", format_double(cfg.frame_rate_hz));
    put("range_rate_mode", gap::range_rate_mode_name(cfg.range_rate_mode));
    put("gap_model_mode", scenario::gap_model_mode_name(cfg.gap_model_mode));
    put("synth_trips", std::to_string(cfg.synth_trips));
    put("synth_n_mlc", std::to_string(cfg.synth.n_mlc));
    put("synth_n_dlc", std::to_string(cfg.synth.n_dlc));
    put("synth_n_ambiguous", std::to_string(cfg.synth.n_ambiguous));
    put("synth_n_other", std::to_string(cfg.synth.n_other));
    put("synth_sample_rate_hz", format_double(cfg.synth.sample_rate_hz));
    put("synth_lane_width_m", format_double(cfg.synth.lane_width_m));
    put("synth_vehicle_width_m", format_double(cfg.synth.vehicle_width_m));
    put("synth_cam_to_rear_m", format_double(cfg.synth.cam_to_rear_m));
    put("synth_cam_height_m", format_double(cfg.synth.cam_height_m));
    put("synth_speed_min_mps", format_double(cfg.synth.speed_min_mps));
    put("synth_speed_max_mps", format_double(cfg.synth.speed_max_mps));
    put("synth_cross_duration_min_s", format_double(cfg.synth.cross_duration_min_s));
    put("synth_cross_duration_max_s", format_double(cfg.synth.cross_duration_max_s));
    put("synth_mlc_cross_scale", format_double(cfg.synth.mlc_cross_scale));
    put("synth_gap_range_min_m", format_double(cfg.synth.gap_range_min_m));
    put("synth_gap_range_max_m", format_double(cfg.synth.gap_range_max_m));
    put("synth_gap_rate_mean_mps", format_double(cfg.synth.gap_rate_mean_mps));
    put("synth_gap_rate_sd_mps", format_double(cfg.synth.gap_rate_sd_mps));
    put("synth_gap_rate_min_mps", format_double(cfg.synth.gap_rate_min_mps));
    put("synth_gap_rate_max_mps", format_double(cfg.synth.gap_rate_max_mps));
    put("synth_mlc_rate_shift_mps", format_double(cfg.synth.mlc_rate_shift_mps));
    put("synth_pixel_noise_px", format_double(cfg.synth.pixel_noise_px));
    put("synth_frame_drop_probability", format_double(cfg.synth.frame_drop_probability));
    return out.str();
}

void save_config(const PipelineConfig& cfg, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(Error::Kind::io, "cannot write " + path.string());
    f << dump_config(cfg);
}

}  // namespace lca
