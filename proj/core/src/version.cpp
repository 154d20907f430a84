#include "trackjam/version.hpp"

namespace trackjam {

std::string_view version() { return TRACKJAM_VERSION; }

}  // namespace trackjam
