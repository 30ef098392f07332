#pragma once

#include <stdexcept>
#include <string>

namespace lca {

// Single exception type for the whole toolkit. The kind decides the CLI
// exit code: usage -> 1, data-ish kinds -> 2, internal -> 3.
class Error : public std::runtime_error {
public:
    enum class Kind { parse, data, geometry, numeric, io, usage, internal };

    Error(Kind kind, std::string msg) : std::runtime_error(std::move(msg)), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

}  // namespace lca
