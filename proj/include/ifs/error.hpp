#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

namespace ifs {

/// Error raised by every module. `detail` carries machine-readable witnesses
/// (uncovered points, failing hypothesis, offending step) for the CLI.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what, nlohmann::json detail = nlohmann::json::object())
        : std::runtime_error(what), detail_(std::move(detail)) {}

    const nlohmann::json& detail() const noexcept { return detail_; }

private:
    nlohmann::json detail_;
};

}  // namespace ifs
