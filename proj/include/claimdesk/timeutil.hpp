#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace claimdesk {

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

Timestamp now_utc();

/// Formats as `YYYY-MM-DDTHH:MM:SS.mmmZ`.
std::string format_iso8601(Timestamp t);

/// Accepts `YYYY-MM-DD`, `YYYY-MM-DDTHH:MM[:SS[.fff]]` with a trailing `Z`
/// or `+HH:MM`/`-HH:MM` offset (no offset means UTC).
std::optional<Timestamp> parse_iso8601(std::string_view text);

}  // namespace claimdesk
