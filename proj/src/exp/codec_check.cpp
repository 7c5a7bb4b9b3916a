#include "hfl/exp/codec_check.hpp"

#include <ostream>
#include <random>

#include "hfl/net/packet.hpp"

namespace hfl {

namespace {

net::StatePacket random_packet(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_int_distribution<int> count(0, 6);
  std::uniform_int_distribution<std::uint32_t> cycle;
  std::uniform_real_distribution<float> angle(-3.2f, 3.2f);
  std::uniform_real_distribution<float> rate(-50.0f, 50.0f);
  net::StatePacket p;
  p.board_id = static_cast<std::uint8_t>(byte(rng));
  p.cycle = cycle(rng);
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    p.joints.push_back({static_cast<std::uint8_t>(byte(rng)), angle(rng), rate(rng)});
  }
  return p;
}

}  // namespace

CodecCheckReport codec_check(int packets, std::uint64_t seed) {
  CodecCheckReport report;
  std::mt19937_64 rng(seed);
  for (int i = 0; i < packets; ++i) {
    const net::StatePacket p = random_packet(rng);
    ++report.roundtrips;
    try {
      if (net::decode_packet(net::encode_packet(p)) != p) ++report.roundtrip_failures;
    } catch (const net::CodecError&) {
      ++report.roundtrip_failures;
    }
  }

  net::StatePacket ref;
  ref.board_id = 1;
  ref.cycle = 123456;
  for (int j = 0; j < 6; ++j) ref.joints.push_back({static_cast<std::uint8_t>(j), 0.1f * j, -0.5f * j});
  const auto frame = net::encode_packet(ref);
  for (std::size_t byte = 0; byte < frame.size(); ++byte) {
    for (int bit = 0; bit < 8; ++bit) {
      auto bad = frame;
      bad[byte] ^= static_cast<std::uint8_t>(1u << bit);
      ++report.bit_flips;
      try {
        net::decode_packet(bad);
      } catch (const net::CodecError& e) {
        if (e.kind() == net::CodecError::Kind::kBadCrc) ++report.flips_caught;
      }
    }
  }
  return report;
}

void write_codec_report(const CodecCheckReport& r, std::ostream& out) {
  out << "roundtrip: " << r.roundtrips - r.roundtrip_failures << "/" << r.roundtrips << " ok\n"
      << "bit flips caught by CRC: " << r.flips_caught << "/" << r.bit_flips << "\n"
      << (r.passed() ? "PASS" : "FAIL") << '\n';
}

}  // namespace hfl
