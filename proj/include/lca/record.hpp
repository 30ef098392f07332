#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lca {

// One line of the text record format used by every file the toolkit reads or
// writes: a tag word followed by space-separated key=value fields. Reals are
// written with shortest round-trip formatting, so load(save(x)) == x exactly.
struct Record {
    std::string tag;
    std::vector<std::pair<std::string, std::string>> fields;
    long line = 0;

    const std::string* find(std::string_view key) const;
    bool has(std::string_view key) const { return find(key) != nullptr; }

    std::string get_str(std::string_view key) const;
    double get_double(std::string_view key) const;
    long get_long(std::string_view key) const;
    std::uint64_t get_uint64(std::string_view key) const;
    bool get_bool(std::string_view key) const;
    std::optional<double> opt_double(std::string_view key) const;
    std::vector<double> get_double_list(std::string_view key) const;

    [[noreturn]] void fail(std::string_view msg) const;
};

Record parse_record(std::string_view line, long line_no);

std::string format_double(double v);
double parse_double(std::string_view s, long line_no);

// Builder for one output line in the same format.
class RecordLine {
public:
    explicit RecordLine(std::string_view tag) : s_(tag) {}

    RecordLine& field(std::string_view key, std::string_view value);
    RecordLine& field(std::string_view key, const char* value) { return field(key, std::string_view(value)); }
    RecordLine& field(std::string_view key, double value);
    RecordLine& field(std::string_view key, long value);
    RecordLine& field(std::string_view key, int value) { return field(key, static_cast<long>(value)); }
    RecordLine& field(std::string_view key, std::uint64_t value);
    RecordLine& field(std::string_view key, bool value);
    RecordLine& field_list(std::string_view key, std::span<const double> values);

    const std::string& str() const { return s_; }

private:
    std::string s_;
};

std::uint64_t fnv1a64(std::string_view data);
std::uint64_t fnv1a64_file(const std::filesystem::path& path);

// Deterministic stream splitting: child seed for (seed, index). Used wherever
// work is fanned out (per trip, per event, per batch) so results do not depend
// on scheduling.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace lca
