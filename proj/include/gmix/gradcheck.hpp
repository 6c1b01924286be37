#pragma once

#include <cstdint>

namespace gmix {

// Result of comparing reverse-mode gradients against central finite
// differences on randomly generated composite expressions covering every
// opcode. Errors are scaled-relative: |ad - fd| / max(1, |fd|).
struct GradCheckReport {
  double max_rel_err = 0.0;
  int cases = 0;
  int worst_case = -1;
};

GradCheckReport run_gradcheck(int cases, std::uint64_t seed);

}  // namespace gmix
