#pragma once

#include <string_view>

namespace reid {

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

/// Level from REID_ADAPT_LOG={error,info,debug}; defaults to error.
LogLevel log_level();
void set_log_level(LogLevel level);

void log_error(std::string_view msg);
void log_info(std::string_view msg);
void log_debug(std::string_view msg);

}  // namespace reid
