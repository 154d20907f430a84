#pragma once

#include <string_view>

namespace trackjam {

/// Library version as "major.minor.patch".
std::string_view version();

}  // namespace trackjam
