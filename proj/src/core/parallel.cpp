#include "core/parallel.hpp"

#include <cstdlib>
#include <string>

namespace cmjsim {

unsigned resolve_workers(unsigned requested) {
  if (const char* env = std::getenv("CMJSIM_WORKERS")) {
    try {
      unsigned long v = std::stoul(env);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (...) {
      // ignore malformed override
    }
  }
  return requested >= 1 ? requested : 1;
}

}  // namespace cmjsim
