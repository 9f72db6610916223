#include "nemesys/netsim/cdr.hpp"

#include <sodium.h>

#include <array>
#include <cmath>

#include "nemesys/common/error.hpp"

namespace nemesys::netsim {

std::string anonymize_ue(std::string_view hash_key, std::string_view ue_id) {
  if (hash_key.size() > crypto_generichash_KEYBYTES_MAX) {
    throw Error(ErrorCode::kInvalidArgument, "cdr hash key longer than 64 bytes");
  }
  static const int init = sodium_init();
  (void)init;
  std::array<unsigned char, crypto_generichash_BYTES_MIN> digest{};
  crypto_generichash(digest.data(), digest.size(), reinterpret_cast<const unsigned char*>(ue_id.data()),
                     ue_id.size(), reinterpret_cast<const unsigned char*>(hash_key.data()), hash_key.size());
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(16);
  for (std::size_t i = 0; i < 8; ++i) {
    const unsigned char b = digest[i];
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0x0F]);
  }
  return out;
}

std::int64_t rate_session(const SessionRecord& session, const TariffTable& tariffs) {
  switch (session.service) {
    case ServiceKind::kData: {
      const std::uint64_t bytes = session.bytes_up + session.bytes_down;
      const auto kib = static_cast<std::int64_t>((bytes + 1023) / 1024);
      return kib * tariffs.data_milli_per_kib;
    }
    case ServiceKind::kVoice: {
      const auto seconds = static_cast<std::int64_t>(std::ceil(std::max(0.0, session.end_ts - session.start_ts)));
      return seconds * tariffs.voice_milli_per_second;
    }
    case ServiceKind::kSms:
      return static_cast<std::int64_t>(session.messages) * tariffs.sms_milli_per_message;
    case ServiceKind::kPremiumSms:
      return static_cast<std::int64_t>(session.messages) * tariffs.premium_milli_per_message;
  }
  return 0;
}

ChargingDataRecord emit_cdr(const SessionRecord& session, std::string_view hash_key, const TariffTable& tariffs,
                            std::uint64_t record_id) {
  if (session.end_ts < session.start_ts) {
    throw Error(ErrorCode::kInvalidArgument, "session for " + session.ue_id + " ends before it starts");
  }
  ChargingDataRecord cdr;
  cdr.record_id = record_id;
  cdr.ue_id = anonymize_ue(hash_key, session.ue_id);
  cdr.service = session.service;
  cdr.start_ts = session.start_ts;
  cdr.duration = session.end_ts - session.start_ts;
  cdr.bytes_up = session.bytes_up;
  cdr.bytes_down = session.bytes_down;
  cdr.peer = session.peer;
  cdr.charge_milli = rate_session(session, tariffs);
  cdr.cell_id = session.cell_id;
  return cdr;
}

}  // namespace nemesys::netsim
