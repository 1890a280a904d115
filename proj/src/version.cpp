#include "csa/runner.hpp"

namespace csa {

const char* version() { return kVersion; }

}  // namespace csa
