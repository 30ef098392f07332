#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "lca/extraction.hpp"
#include "lca/gap.hpp"
#include "lca/risk.hpp"
#include "lca/scenario.hpp"
#include "lca/synth.hpp"

namespace lca {

// Every tunable threshold of the pipeline, with the study values as defaults.
// Loaded from a flat key=value text file; keys are documented in FORMAT.md.
struct PipelineConfig {
    std::uint64_t seed = 1;
    int jobs = 1;

    extraction::ExtractionConfig extraction;
    risk::RiskConfig risk;

    int min_valid_frames = 7;
    int frame_count = 10;
    double frame_rate_hz = 10.0;
    gap::RangeRateMode range_rate_mode = gap::RangeRateMode::wls_affine;
    scenario::GapModelMode gap_model_mode = scenario::GapModelMode::empirical;

    int synth_trips = 5;
    synth::SynthConfig synth;  // per-trip event counts; totals scale with synth_trips

    // throws a usage error naming the first offending field
    void validate() const;
};

PipelineConfig default_config();

// Applies one key=value override; throws a usage error for unknown keys or
// unparsable values.
void apply_config_key(PipelineConfig& cfg, const std::string& key, const std::string& value);

PipelineConfig load_config(const std::filesystem::path& path);

// Resolved key=value dump, one per line, in the documented key order. Used by
// save_config and the run manifest.
std::string dump_config(const PipelineConfig& cfg);
void save_config(const PipelineConfig& cfg, const std::filesystem::path& path);

}  // namespace lca
