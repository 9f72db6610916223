#include "nemesys/netsim/rrc.hpp"

#include <algorithm>
#include <limits>

namespace nemesys::netsim {

namespace {

SignalingEvent transition_event(const UEState& ue, SignalingKind kind, double ts, const RrcParams& params) {
  return SignalingEvent{ts, ue.ue_id, kind, ue.cell_id, params.cost(kind)};
}

}  // namespace

RrcStepResult rrc_step(const UEState& ue, const RrcStimulus& stimulus, const RrcParams& params) {
  RrcStepResult out{ue, {}};
  UEState& next = out.ue;

  if (const auto* data = std::get_if<DataArrival>(&stimulus)) {
    const double ts = std::max(data->ts, ue.last_activity_ts);
    next.last_activity_ts = ts;
    if (next.rrc == RrcState::kIdle) {
      next.rrc = RrcState::kFach;
      next.state_since = ts;
      next.pending_bytes = 0.0;
      out.events.push_back(transition_event(next, SignalingKind::kPromoteI2F, ts, params));
    }
    if (next.rrc == RrcState::kFach) {
      next.pending_bytes += data->bytes;
      if (next.pending_bytes > params.dch_volume_threshold) {
        next.rrc = RrcState::kDch;
        next.state_since = ts;
        next.pending_bytes = 0.0;
        out.events.push_back(transition_event(next, SignalingKind::kPromoteF2D, ts, params));
      }
    }
    return out;
  }

  const double now = std::get<TimerTick>(stimulus).now;
  const double inactivity = now - std::max(ue.last_activity_ts, ue.state_since);
  if (ue.rrc == RrcState::kDch && inactivity > params.t_dch_inactivity) {
    next.rrc = RrcState::kFach;
    next.state_since = now;
    out.events.push_back(transition_event(next, SignalingKind::kDemoteD2F, now, params));
  } else if (ue.rrc == RrcState::kFach && inactivity > params.t_fach_inactivity) {
    next.rrc = RrcState::kIdle;
    next.state_since = now;
    next.pending_bytes = 0.0;
    out.events.push_back(transition_event(next, SignalingKind::kDemoteF2I, now, params));
  }
  return out;
}

double next_demotion_deadline(const UEState& ue, const RrcParams& params) {
  const double base = std::max(ue.last_activity_ts, ue.state_since);
  switch (ue.rrc) {
    case RrcState::kDch: return base + params.t_dch_inactivity;
    case RrcState::kFach: return base + params.t_fach_inactivity;
    case RrcState::kIdle: break;
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace nemesys::netsim
