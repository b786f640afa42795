#pragma once

#include <string_view>

namespace lha::log {

void set_quiet(bool quiet);
bool quiet();

void info(std::string_view msg);
void warn(std::string_view msg);

}  // namespace lha::log
