#pragma once

#include <variant>
#include <vector>

#include "nemesys/netsim/types.hpp"

namespace nemesys::netsim {

struct DataArrival {
  double ts = 0.0;
  double bytes = 0.0;
};

struct TimerTick {
  double now = 0.0;
};

using RrcStimulus = std::variant<DataArrival, TimerTick>;

struct RrcStepResult {
  UEState ue;
  std::vector<SignalingEvent> events;
};

/// One step of the IDLE <-> FACH <-> DCH channel state machine.
///
/// A data arrival in IDLE allocates a FACH channel; buffered bytes above
/// dch_volume_threshold in FACH allocate a DCH. A timer tick demotes at most
/// one level: DCH -> FACH after t_dch_inactivity, FACH -> IDLE after
/// t_fach_inactivity, measured from the later of the last activity and the
/// last transition. IDLE and DCH are never adjacent.
RrcStepResult rrc_step(const UEState& ue, const RrcStimulus& stimulus, const RrcParams& params);

/// Earliest time at which a TimerTick would demote `ue`, or +inf in IDLE.
double next_demotion_deadline(const UEState& ue, const RrcParams& params);

}  // namespace nemesys::netsim
