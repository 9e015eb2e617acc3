#pragma once

#include <stdexcept>
#include <string>

namespace ads3d {

/// Exception carrying a short machine-readable code next to the message.
/// The CLI prints these as "error: <code>: <detail>".
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& detail)
        : std::runtime_error(detail), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

} // namespace ads3d
