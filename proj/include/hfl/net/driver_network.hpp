#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "hfl/control/linearize.hpp"
#include "hfl/net/packet.hpp"

namespace hfl::net {

/// One driver board and the joints it drives.
struct BoardConfig {
  std::uint8_t id = 0;
  std::vector<int> joints;  // 1 or 2 joint ids
  int ring_position = 0;
};

/// Boards of two consecutive joints each, ring order = board order.
std::vector<BoardConfig> default_boards(int dof);

struct NetworkOptions {
  int hop_delay = 0;         // fast ticks per ring hop
  int decimation = 1;        // recompute torque every D ticks
  int law_latency = 0;       // extra ticks before a staged law commits
  bool wire_float32 = true;  // send state and laws through the f32 records
  double drop_probability = 0.0;
  std::uint64_t drop_seed = 0;
};

/// A board's own joints this tick, in the order of BoardConfig::joints.
struct LocalSlice {
  Eigen::VectorXd q;
  Eigen::VectorXd v;
};

/// A board did not deliver its state this tick.
class LinkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tick-level emulation of the driver-board ring.
///
/// Each fast tick every board broadcasts its joints as a StatePacket along a
/// unidirectional ring (ring position p sends to p + 1 mod M). A frame from
/// ring position i reaches position j after (j − i) mod M hops, hop_delay
/// ticks each. Every board then evaluates its own rows of the active law on
/// the full state it assembled. Staged laws commit at the start of the first
/// tick executed at or after their due cycle, on all boards at once.
///
/// Single-threaded and deterministic.
class DriverNetwork {
 public:
  DriverNetwork(int dof, std::vector<BoardConfig> boards, NetworkOptions options = {});

  int dof() const { return dof_; }
  int board_count() const { return static_cast<int>(boards_.size()); }
  const std::vector<BoardConfig>& boards() const { return boards_; }
  const NetworkOptions& options() const { return options_; }
  /// Index of the next tick to execute.
  std::uint32_t cycle() const { return cycle_; }

  /// Ring hops from one board to another (board indices).
  int hops(int from_board, int to_board) const;

  /// Splits a full state into per-board slices.
  std::vector<LocalSlice> split(const Eigen::VectorXd& q, const Eigen::VectorXd& v) const;

  /// Exchanges this cycle's frames and returns each board's assembled 2n state.
  /// Before enough history exists a board sees the oldest frame available.
  std::vector<Eigen::VectorXd> ring_exchange(const std::vector<LocalSlice>& local);

  /// Queues a law; each board keeps only its rows. Commits at the start of
  /// tick cycle() + law_latency. Among laws due on the same tick the highest
  /// sequence number wins (the later call on ties).
  void stage_law(const LinearFeedbackLaw& law);

  /// Activates every due staged law. Called by tick(); public for tests.
  void commit_pending();

  /// Torque for the board's joints. Holds the previous output on ticks that
  /// are not multiples of the decimation factor; zero until a law commits.
  Eigen::VectorXd board_tick(int board, const Eigen::VectorXd& assembled_state);

  /// Marks the current tick done.
  void end_tick() { ++cycle_; }

  /// commit_pending, ring_exchange, board_tick on every board, end_tick.
  /// Returns the assembled joint torque vector (length n).
  Eigen::VectorXd tick(const Eigen::VectorXd& q, const Eigen::VectorXd& v);

  /// Sequence number a board is running, if any.
  std::optional<std::uint32_t> active_sequence(int board) const;
  /// Age (ticks) of the oldest remote slice used in the last exchange.
  int last_max_staleness() const { return last_max_staleness_; }
  std::uint64_t recompute_count() const { return recompute_count_; }

 private:
  struct LawRows {
    std::uint32_t sequence = 0;
    Eigen::MatrixXd gain;    // owned rows of A
    Eigen::VectorXd offset;  // owned entries of b
  };
  struct Pending {
    std::uint32_t due = 0;
    std::uint64_t order = 0;
    LawRows rows;
  };
  struct Frame {
    std::uint32_t cycle = 0;
    std::vector<std::uint8_t> bytes;
    LocalSlice exact;  // used instead of the bytes when wire_float32 is off
    bool dropped = false;
  };
  struct Received {
    std::vector<int> joints;
    Eigen::VectorXd q;
    Eigen::VectorXd v;
  };
  struct Board {
    BoardConfig config;
    std::vector<Pending> pending;
    std::optional<LawRows> active;
    Eigen::VectorXd output;
    std::deque<Frame> history;  // newest at the back
    std::vector<std::optional<Received>> last_good;  // per source board
  };

  std::size_t history_depth() const;

  int dof_;
  std::vector<BoardConfig> boards_;
  NetworkOptions options_;
  std::vector<Board> state_;
  std::vector<int> board_at_position_;
  std::uint32_t cycle_ = 0;
  std::uint64_t stage_order_ = 0;
  int last_max_staleness_ = 0;
  std::uint64_t recompute_count_ = 0;
  std::mt19937_64 drop_rng_;
};

}  // namespace hfl::net
