#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "nemesys/netsim/types.hpp"

namespace nemesys::netsim {

/// Per-service tariffs in thousandths of a charge unit.
struct TariffTable {
  std::int64_t data_milli_per_kib = 1;
  std::int64_t voice_milli_per_second = 10;
  std::int64_t sms_milli_per_message = 100;
  std::int64_t premium_milli_per_message = 10000;

  friend bool operator==(const TariffTable&, const TariffTable&) = default;
};

/// A closed user session, before anonymization and rating.
struct SessionRecord {
  std::string ue_id;
  std::string cell_id;
  ServiceKind service = ServiceKind::kData;
  double start_ts = 0.0;
  double end_ts = 0.0;
  std::uint64_t bytes_up = 0;
  std::uint64_t bytes_down = 0;
  std::uint32_t messages = 0;
  std::string peer;
};

/// Keyed BLAKE2b digest of `ue_id`, first 8 bytes rendered as 16 hex chars.
std::string anonymize_ue(std::string_view hash_key, std::string_view ue_id);

/// Usage-based charge: DATA per started KiB, VOICE per started second,
/// SMS / PREMIUM_SMS per message.
std::int64_t rate_session(const SessionRecord& session, const TariffTable& tariffs);

ChargingDataRecord emit_cdr(const SessionRecord& session, std::string_view hash_key, const TariffTable& tariffs,
                            std::uint64_t record_id);

}  // namespace nemesys::netsim
