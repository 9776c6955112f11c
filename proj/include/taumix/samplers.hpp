#pragma once

// Replay buffer and index samplers. Buffer indices are 1-based throughout:
// index 1 is the oldest surviving row.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "taumix/sequence.hpp"

namespace taumix {

struct Transition {
  std::vector<double> state;
  std::size_t action = 0;
  double reward = 0.0;
  std::vector<double> next_state;
  bool done = false;

  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Bounded FIFO; the oldest row is evicted when full.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return rows_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t insertions() const { return insertions_; }
  bool empty() const { return rows_.empty(); }

  /// 1-based.
  const Transition& at(std::size_t index) const;

 private:
  std::size_t capacity_;
  std::uint64_t insertions_ = 0;
  std::deque<Transition> rows_;
};

enum class SamplerKind {
  uniform_with_replacement,
  uniform_without_replacement,
  contiguous_blocks,
  contiguous_blocks_wraparound,
};

std::string to_string(SamplerKind kind);
SamplerKind sampler_kind_from_string(const std::string& name);

/// False only for the with-replacement sampler, whose batches may repeat rows.
bool order_preserving(SamplerKind kind);

struct SamplerParams {
  SamplerKind kind = SamplerKind::uniform_without_replacement;
  std::size_t block = 0;  // b, block samplers only
  std::size_t gap = 0;    // a, block samplers only
  std::size_t start = 0;  // t0; 0 means drawn per batch

  friend bool operator==(const SamplerParams&, const SamplerParams&) = default;
};

struct IndexBatch {
  std::vector<std::size_t> indices;
  SamplerParams params;

  std::size_t size() const { return indices.size(); }
};

/// Thrown when a block layout does not fit in the buffer or revisits an index.
class InfeasiblePlan : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BlockPlan {
  std::size_t buffer_size = 0;  // M
  std::size_t n = 0;
  std::size_t block = 0;  // b
  std::size_t gap = 0;    // a
  std::size_t start = 0;  // t0
  std::size_t q = 0;      // full blocks
  std::size_t rem = 0;    // remainder length

  /// s_1..s_q, plus s_{q+1} when rem > 0.
  std::vector<std::size_t> starts() const;
  /// Buffer positions covered from t0 to the last selected index.
  std::size_t span() const;
};

/// Checks 1 <= b <= n and a <= b - 2 (for b >= 2); throws std::invalid_argument.
void validate_block_shape(std::size_t n, std::size_t block, std::size_t gap);

/// Throws InfeasiblePlan when the layout leaves the buffer, otherwise
/// std::invalid_argument on bad ranges (the buffer fit is checked before the
/// a <= b - 2 bound).
BlockPlan plan_blocks(std::size_t buffer_size, std::size_t n, std::size_t block,
                      std::size_t gap, std::size_t start);

/// Largest t0 for which plan_blocks succeeds; 0 when none does.
std::size_t max_block_start(std::size_t buffer_size, std::size_t n, std::size_t block,
                            std::size_t gap);

IndexBatch sample_uniform_with_replacement(std::size_t buffer_size, std::size_t n,
                                           std::mt19937_64& rng);
IndexBatch sample_uniform_without_replacement_sorted(std::size_t buffer_size, std::size_t n,
                                                     std::mt19937_64& rng);
IndexBatch sample_contiguous_blocks(const BlockPlan& plan);
IndexBatch sample_contiguous_blocks_wraparound(std::size_t buffer_size, std::size_t n,
                                               std::size_t block, std::size_t gap,
                                               std::size_t start);

/// One batch for `params` from a buffer of the given size. When params.start
/// is 0 the block start is drawn uniformly from the feasible starts; the
/// returned batch records the start actually used.
IndexBatch draw_batch(const SamplerParams& params, std::size_t buffer_size, std::size_t n,
                      std::mt19937_64& rng);

struct OrderReport {
  bool ok = false;
  // Smallest consecutive gap u_{j+1} - u_j; 0 for batches shorter than 2
  // (or on a duplicate), negative when the order is broken.
  long long min_gap = 0;
};

OrderReport verify_order_preserving(std::span<const std::size_t> indices);

struct GatheredBatch {
  std::vector<Transition> transitions;
  ObservationSequence rows;
};

using TransitionEncoder = std::function<std::vector<double>(const Transition&)>;

/// Rows in batch order. Throws std::out_of_range for indices outside
/// 1..buffer.size().
GatheredBatch gather_minibatch(const ReplayBuffer& buffer, const IndexBatch& batch,
                               const TransitionEncoder& encode);

}  // namespace taumix
