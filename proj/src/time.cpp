#include "edgesignal/time.hpp"
#include "edgesignal/errors.hpp"

#include <cmath>
#include <string>

namespace edgesignal {

Duration duration_from_seconds(double seconds)
{
    if (!std::isfinite(seconds)) {
        throw InputError("non-finite time value");
    }
    return Duration{std::llround(seconds * 1e6)};
}

Timestamp timestamp_from_seconds(double seconds)
{
    return Timestamp{duration_from_seconds(seconds)};
}

ParseError::ParseError(std::size_t line, const std::string& what)
    : InputError(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
      line_(line)
{
}

} // namespace edgesignal
