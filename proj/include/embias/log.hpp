#pragma once

#include <string_view>

namespace embias {

// Thread-safe one-line warnings on stderr.
void warn(std::string_view message);
void set_warnings_enabled(bool enabled);

}  // namespace embias
