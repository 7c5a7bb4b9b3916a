#pragma once

#include <cstdint>
#include <iosfwd>

namespace hfl {

struct CodecCheckReport {
  int roundtrips = 0;
  int roundtrip_failures = 0;
  int bit_flips = 0;
  int flips_caught = 0;  // rejected with a CRC error

  bool passed() const {
    return roundtrip_failures == 0 && flips_caught == bit_flips && roundtrips > 0;
  }
};

/// Encode/decode roundtrip on `packets` seeded random state packets, then
/// every single-bit flip of a reference frame (6 joints).
CodecCheckReport codec_check(int packets = 1000, std::uint64_t seed = 1);

void write_codec_report(const CodecCheckReport& report, std::ostream& out);

}  // namespace hfl
