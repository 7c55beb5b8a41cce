#include "natsim/types.h"

#include <cmath>

namespace natsim {

TimeUs serialization_us(Bytes size, BitsPerSec rate) {
  if (rate <= 0.0 || std::isinf(rate)) return 0;
  return static_cast<TimeUs>(
      std::llround(static_cast<double>(size) * 8.0 * 1e6 / rate));
}

}  // namespace natsim
