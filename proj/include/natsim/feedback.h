#pragma once

#include <cstdint>

#include "natsim/types.h"

namespace natsim {

// Periodic digest NetAssist sends for one UE: the bottleneck bandwidth
// averaged over the window (t_start, t_end] and the composed minimum RTT.
struct FeedbackMsg {
  std::uint32_t seq = 0;
  int ue_id = 0;
  TimeUs t_start = 0;
  TimeUs t_end = 0;
  BitsPerSec bl_bw = 0;
  TimeUs min_rtt = 0;
  TimeUs t_emitted = 0;
};

}  // namespace natsim
