#include "hfl/net/driver_network.hpp"

#include <algorithm>
#include <string>

#include "hfl/errors.hpp"

namespace hfl::net {

std::vector<BoardConfig> default_boards(int dof) {
  if (dof <= 0) throw std::invalid_argument("default_boards: dof must be positive");
  std::vector<BoardConfig> boards;
  for (int j = 0, b = 0; j < dof; j += 2, ++b) {
    BoardConfig cfg;
    cfg.id = static_cast<std::uint8_t>(b);
    cfg.ring_position = b;
    cfg.joints.push_back(j);
    if (j + 1 < dof) cfg.joints.push_back(j + 1);
    boards.push_back(std::move(cfg));
  }
  return boards;
}

DriverNetwork::DriverNetwork(int dof, std::vector<BoardConfig> boards, NetworkOptions options)
    : dof_(dof), boards_(std::move(boards)), options_(options), drop_rng_(options.drop_seed) {
  if (dof_ <= 0) throw std::invalid_argument("driver network: dof must be positive");
  if (boards_.empty() || boards_.size() > 255) {
    throw std::invalid_argument("driver network: need 1 to 255 boards");
  }
  if (options_.hop_delay < 0) throw std::invalid_argument("driver network: hop_delay < 0");
  if (options_.decimation < 1) throw std::invalid_argument("driver network: decimation < 1");
  if (options_.law_latency < 0) throw std::invalid_argument("driver network: law_latency < 0");
  if (!(options_.drop_probability >= 0.0 && options_.drop_probability < 1.0)) {
    throw std::invalid_argument("driver network: drop probability must be in [0, 1)");
  }

  const int m = board_count();
  std::vector<int> owner(static_cast<std::size_t>(dof_), -1);
  board_at_position_.assign(static_cast<std::size_t>(m), -1);
  for (int b = 0; b < m; ++b) {
    const auto& cfg = boards_[static_cast<std::size_t>(b)];
    if (cfg.joints.empty() || cfg.joints.size() > 2) {
      throw std::invalid_argument("driver network: each board drives one or two joints");
    }
    for (int j : cfg.joints) {
      if (j < 0 || j >= dof_) throw std::invalid_argument("driver network: joint id out of range");
      if (owner[static_cast<std::size_t>(j)] != -1) {
        throw std::invalid_argument("driver network: joint " + std::to_string(j) +
                                    " owned by two boards");
      }
      owner[static_cast<std::size_t>(j)] = b;
    }
    if (cfg.ring_position < 0 || cfg.ring_position >= m ||
        board_at_position_[static_cast<std::size_t>(cfg.ring_position)] != -1) {
      throw std::invalid_argument("driver network: ring positions must be a permutation");
    }
    board_at_position_[static_cast<std::size_t>(cfg.ring_position)] = b;
  }
  if (std::find(owner.begin(), owner.end(), -1) != owner.end()) {
    throw std::invalid_argument("driver network: every joint needs an owning board");
  }

  state_.resize(boards_.size());
  for (std::size_t b = 0; b < boards_.size(); ++b) {
    state_[b].config = boards_[b];
    state_[b].output = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(boards_[b].joints.size()));
    state_[b].last_good.resize(boards_.size());
  }
}

int DriverNetwork::hops(int from_board, int to_board) const {
  const int m = board_count();
  const int from = boards_[static_cast<std::size_t>(from_board)].ring_position;
  const int to = boards_[static_cast<std::size_t>(to_board)].ring_position;
  return ((to - from) % m + m) % m;
}

std::size_t DriverNetwork::history_depth() const {
  return static_cast<std::size_t>((board_count() - 1) * options_.hop_delay + 1);
}

std::vector<LocalSlice> DriverNetwork::split(const Eigen::VectorXd& q,
                                             const Eigen::VectorXd& v) const {
  if (q.size() != dof_ || v.size() != dof_) {
    throw DimensionError("driver network: state length does not match dof");
  }
  std::vector<LocalSlice> out;
  for (const auto& cfg : boards_) {
    LocalSlice s{Eigen::VectorXd(cfg.joints.size()), Eigen::VectorXd(cfg.joints.size())};
    for (std::size_t k = 0; k < cfg.joints.size(); ++k) {
      s.q(static_cast<Eigen::Index>(k)) = q(cfg.joints[k]);
      s.v(static_cast<Eigen::Index>(k)) = v(cfg.joints[k]);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Eigen::VectorXd> DriverNetwork::ring_exchange(const std::vector<LocalSlice>& local) {
  const int m = board_count();
  if (static_cast<int>(local.size()) != m) {
    throw LinkError("ring exchange: expected a contribution from each of " + std::to_string(m) +
                    " boards, got " + std::to_string(local.size()));
  }

  // Every board puts this cycle's frame on the ring.
  std::bernoulli_distribution drop(options_.drop_probability);
  for (int b = 0; b < m; ++b) {
    auto& board = state_[static_cast<std::size_t>(b)];
    const auto& slice = local[static_cast<std::size_t>(b)];
    const auto count = static_cast<Eigen::Index>(board.config.joints.size());
    if (slice.q.size() != count || slice.v.size() != count) {
      throw LinkError("ring exchange: board " + std::to_string(board.config.id) +
                      " did not deliver its joint states");
    }
    StatePacket packet;
    packet.board_id = board.config.id;
    packet.cycle = cycle_;
    for (Eigen::Index k = 0; k < count; ++k) {
      packet.joints.push_back({static_cast<std::uint8_t>(board.config.joints[static_cast<std::size_t>(k)]),
                               static_cast<float>(slice.q(k)), static_cast<float>(slice.v(k))});
    }
    Frame frame{cycle_, encode_packet(packet), slice, false};
    if (options_.drop_probability > 0.0) frame.dropped = drop(drop_rng_);
    if (!board.history.empty() && board.history.back().cycle == cycle_) board.history.pop_back();
    board.history.push_back(std::move(frame));
    while (board.history.size() > history_depth()) board.history.pop_front();
  }

  std::vector<Eigen::VectorXd> views;
  last_max_staleness_ = 0;
  for (int r = 0; r < m; ++r) {
    auto& receiver = state_[static_cast<std::size_t>(r)];
    Eigen::VectorXd x = Eigen::VectorXd::Zero(2 * dof_);
    for (int s = 0; s < m; ++s) {
      const auto& source = state_[static_cast<std::size_t>(s)];
      const std::size_t age = static_cast<std::size_t>(hops(s, r) * options_.hop_delay);
      const std::size_t idx = source.history.size() - 1 - std::min(age, source.history.size() - 1);
      const Frame& frame = source.history[idx];
      last_max_staleness_ =
          std::max(last_max_staleness_, static_cast<int>(cycle_ - frame.cycle));

      auto& cached = receiver.last_good[static_cast<std::size_t>(s)];
      if (!frame.dropped || s == r) {
        const StatePacket packet = decode_packet(frame.bytes);
        if (packet.board_id != source.config.id) {
          throw LinkError("ring exchange: frame from unexpected board id");
        }
        Received rx{{}, Eigen::VectorXd(packet.joints.size()), Eigen::VectorXd(packet.joints.size())};
        for (std::size_t k = 0; k < packet.joints.size(); ++k) {
          const auto kk = static_cast<Eigen::Index>(k);
          rx.joints.push_back(packet.joints[k].id);
          rx.q(kk) = options_.wire_float32 ? packet.joints[k].q : frame.exact.q(kk);
          rx.v(kk) = options_.wire_float32 ? packet.joints[k].v : frame.exact.v(kk);
        }
        cached = std::move(rx);
      }
      if (!cached) continue;  // nothing received from this board yet
      for (std::size_t k = 0; k < cached->joints.size(); ++k) {
        const int j = cached->joints[k];
        x(j) = cached->q(static_cast<Eigen::Index>(k));
        x(dof_ + j) = cached->v(static_cast<Eigen::Index>(k));
      }
    }
    views.push_back(std::move(x));
  }
  return views;
}

void DriverNetwork::stage_law(const LinearFeedbackLaw& law) {
  if (law.gain.rows() != dof_ || law.gain.cols() != 2 * dof_ || law.offset.size() != dof_) {
    throw DimensionError("stage_law: law must be " + std::to_string(dof_) + " x " +
                         std::to_string(2 * dof_));
  }
  const LinearFeedbackLaw wire = options_.wire_float32 ? quantize_law(law) : law;
  const std::uint32_t due = cycle_ + static_cast<std::uint32_t>(options_.law_latency);
  const std::uint64_t order = stage_order_++;
  for (auto& board : state_) {
    const auto count = static_cast<Eigen::Index>(board.config.joints.size());
    LawRows rows{wire.sequence, Eigen::MatrixXd(count, 2 * dof_), Eigen::VectorXd(count)};
    for (Eigen::Index k = 0; k < count; ++k) {
      const int j = board.config.joints[static_cast<std::size_t>(k)];
      rows.gain.row(k) = wire.gain.row(j);
      rows.offset(k) = wire.offset(j);
    }
    board.pending.push_back({due, order, std::move(rows)});
  }
}

void DriverNetwork::commit_pending() {
  for (auto& board : state_) {
    auto best = board.pending.end();
    for (auto it = board.pending.begin(); it != board.pending.end(); ++it) {
      if (it->due > cycle_) continue;
      if (best == board.pending.end() || it->rows.sequence > best->rows.sequence ||
          (it->rows.sequence == best->rows.sequence && it->order > best->order)) {
        best = it;
      }
    }
    if (best == board.pending.end()) continue;
    board.active = std::move(best->rows);
    std::erase_if(board.pending, [this](const Pending& p) { return p.due <= cycle_; });
  }
}

Eigen::VectorXd DriverNetwork::board_tick(int board_index, const Eigen::VectorXd& assembled) {
  if (assembled.size() != 2 * dof_) {
    throw DimensionError("board_tick: assembled state must have length 2n");
  }
  auto& board = state_.at(static_cast<std::size_t>(board_index));
  if (cycle_ % static_cast<std::uint32_t>(options_.decimation) != 0) return board.output;
  if (!board.active) {
    board.output.setZero();
    return board.output;
  }
  for (Eigen::Index k = 0; k < board.output.size(); ++k) {
    board.output(k) = law_row(board.active->gain, board.active->offset, k, assembled);
  }
  return board.output;
}

Eigen::VectorXd DriverNetwork::tick(const Eigen::VectorXd& q, const Eigen::VectorXd& v) {
  commit_pending();
  const auto views = ring_exchange(split(q, v));
  Eigen::VectorXd tau(dof_);
  for (int b = 0; b < board_count(); ++b) {
    const Eigen::VectorXd out = board_tick(b, views[static_cast<std::size_t>(b)]);
    const auto& joints = boards_[static_cast<std::size_t>(b)].joints;
    for (std::size_t k = 0; k < joints.size(); ++k) tau(joints[k]) = out(static_cast<Eigen::Index>(k));
  }
  if (cycle_ % static_cast<std::uint32_t>(options_.decimation) == 0) ++recompute_count_;
  end_tick();
  return tau;
}

std::optional<std::uint32_t> DriverNetwork::active_sequence(int board) const {
  const auto& b = state_.at(static_cast<std::size_t>(board));
  if (!b.active) return std::nullopt;
  return b.active->sequence;
}

}  // namespace hfl::net
