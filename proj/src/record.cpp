#include "lca/record.hpp"

#include <charconv>
#include <fstream>
#include <system_error>

#include "lca/error.hpp"

namespace lca {

const std::string* Record::find(std::string_view key) const {
    for (const auto& [k, v] : fields) {
        if (k == key) return &v;
    }
    return nullptr;
}

void Record::fail(std::string_view msg) const {
    throw Error(Error::Kind::parse, "line " + std::to_string(line) + ": " + std::string(msg));
}

std::string Record::get_str(std::string_view key) const {
    const std::string* v = find(key);
    if (!v) fail("missing field '" + std::string(key) + "'");
    return *v;
}

double Record::get_double(std::string_view key) const {
    return parse_double(get_str(key), line);
}

long Record::get_long(std::string_view key) const {
    const std::string s = get_str(key);
    long value = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || p != s.data() + s.size()) fail("bad integer '" + s + "' for '" + std::string(key) + "'");
    return value;
}

std::uint64_t Record::get_uint64(std::string_view key) const {
    const std::string s = get_str(key);
    std::uint64_t value = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || p != s.data() + s.size()) fail("bad integer '" + s + "' for '" + std::string(key) + "'");
    return value;
}

bool Record::get_bool(std::string_view key) const {
    const std::string s = get_str(key);
    if (s == "1" || s == "true") return true;
    if (s == "0" || s == "false") return false;
    fail("bad boolean '" + s + "' for '" + std::string(key) + "'");
}

std::optional<double> Record::opt_double(std::string_view key) const {
    const std::string* v = find(key);
    if (!v) return std::nullopt;
    return parse_double(*v, line);
}

std::vector<double> Record::get_double_list(std::string_view key) const {
    const std::string s = get_str(key);
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t comma = s.find(',', pos);
        if (comma == std::string::npos) comma = s.size();
        out.push_back(parse_double(std::string_view(s).substr(pos, comma - pos), line));
        pos = comma + 1;
    }
    return out;
}

Record parse_record(std::string_view line, long line_no) {
    Record rec;
    rec.line = line_no;
    std::size_t pos = 0;
    auto next_token = [&]() -> std::string_view {
        while (pos < line.size() && line[pos] == ' ') ++pos;
        std::size_t start = pos;
        while (pos < line.size() && line[pos] != ' ') ++pos;
        return line.substr(start, pos - start);
    };
    std::string_view tag = next_token();
    if (tag.empty()) {
        throw Error(Error::Kind::parse, "line " + std::to_string(line_no) + ": empty record");
    }
    rec.tag = std::string(tag);
    while (true) {
        std::string_view tok = next_token();
        if (tok.empty()) break;
        std::size_t eq = tok.find('=');
        if (eq == std::string_view::npos) {
            throw Error(Error::Kind::parse,
                        "line " + std::to_string(line_no) + ": token '" + std::string(tok) + "' is not key=value");
        }
        rec.fields.emplace_back(std::string(tok.substr(0, eq)), std::string(tok.substr(eq + 1)));
    }
    return rec;
}

std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

double parse_double(std::string_view s, long line_no) {
    double value = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || p != s.data() + s.size()) {
        throw Error(Error::Kind::parse,
                    "line " + std::to_string(line_no) + ": bad real number '" + std::string(s) + "'");
    }
    return value;
}

RecordLine& RecordLine::field(std::string_view key, std::string_view value) {
    s_ += ' ';
    s_ += key;
    s_ += '=';
    s_ += value;
    return *this;
}

RecordLine& RecordLine::field(std::string_view key, double value) {
    return field(key, std::string_view(format_double(value)));
}

RecordLine& RecordLine::field(std::string_view key, long value) {
    return field(key, std::string_view(std::to_string(value)));
}

RecordLine& RecordLine::field(std::string_view key, std::uint64_t value) {
    return field(key, std::string_view(std::to_string(value)));
}

RecordLine& RecordLine::field(std::string_view key, bool value) {
    return field(key, std::string_view(value ? "1" : "0"));
}

RecordLine& RecordLine::field_list(std::string_view key, std::span<const double> values) {
    std::string joined;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) joined += ',';
        joined += format_double(values[i]);
    }
    return field(key, std::string_view(joined));
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Error::Kind::io, "cannot open " + path.string());
    std::uint64_t h = 1469598103934665603ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
        if (!in) break;
    }
    return h;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    // splitmix64 over the combined value
    std::uint64_t z = seed + (index + 1) * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace lca
