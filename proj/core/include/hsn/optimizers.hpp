#pragma once

// Streaming optimizers for logistic regression. Each consumes one Sample per step.
//
//   HSN  hybrid stochastic Newton: c = alpha a + beta b, inverse updated before theta
//   ONS  online Newton step (HSN with alpha = 0, beta = 1)
//   SN   stochastic Newton, c = a
//   TSN  truncated stochastic Newton, c = max(a, nu0 k^-gamma)
//   SGD  theta -= (scale / k) * residual * phi

#include <concepts>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hsn/errors.hpp"
#include "hsn/linalg.hpp"
#include "hsn/model.hpp"

namespace hsn {

enum class Algorithm { HSN, ONS, SN, TSN, SGD };

std::string_view to_string(Algorithm algo) noexcept;
/// Case-insensitive; throws InvalidArgument on unknown names.
Algorithm parse_algorithm(std::string_view name);
bool is_second_order(Algorithm algo) noexcept;

/// Lower clamp nu_k = floor_scale * k^-exponent applied to the curvature weight of TSN,
/// where k >= 1 is the index of the sample being consumed.
struct TruncationSchedule {
  double floor_scale = 1.0;
  double exponent = 0.49;

  void validate() const;
  double floor_at(std::uint64_t k) const;
};

struct StepReport {
  double g = 0.0;  // c * phi^T S_n^{-1} phi; 0 for SGD
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double residual = 0.0;
  double theta_delta_norm = 0.0;
};

struct OptimizerConfig {
  Algorithm algorithm = Algorithm::HSN;
  HybridWeights weights{0.5, 0.5};  // HSN only
  TruncationSchedule truncation{};  // TSN only
  double step_scale = 1.0;          // SGD only
  std::optional<Vector> initial_theta;  // origin when empty
};

/**
 * Iterate, inverse curvature estimate and step counter of one run.
 *
 * s_inv is present for the second-order algorithms and starts at the identity.
 * `n` counts consumed samples.
 */
struct OptimizerState {
  Algorithm algorithm = Algorithm::HSN;
  Vector theta;
  std::optional<SymMatrix> s_inv;
  std::uint64_t n = 0;
  HybridWeights weights{0.5, 0.5};
  TruncationSchedule truncation{};
  double step_scale = 1.0;

  Index dim() const noexcept { return theta.size(); }

  // scratch buffers; not part of the logical state
  Vector work;
  Vector direction;
};

OptimizerState make_state(const OptimizerConfig& config, Index dim);

StepReport hsn_step(OptimizerState& state, const Sample& sample);
StepReport ons_step(OptimizerState& state, const Sample& sample);
StepReport sn_step(OptimizerState& state, const Sample& sample);
StepReport tsn_step(OptimizerState& state, const Sample& sample);
StepReport sgd_step(OptimizerState& state, const Sample& sample);

/// Dispatches on state.algorithm.
StepReport step(OptimizerState& state, const Sample& sample);

/// Anything that fills `out` with the next sample and returns false when exhausted.
template <class S>
concept SampleSource = requires(S& s, Sample& out) {
  { s.next(out) } -> std::convertible_to<bool>;
};

/// SampleSource over an existing list of samples.
class SpanSource {
 public:
  explicit SpanSource(std::span<const Sample> samples) : samples_(samples) {}
  bool next(Sample& out) {
    if (pos_ >= samples_.size()) return false;
    out = samples_[pos_++];
    return true;
  }

 private:
  std::span<const Sample> samples_;
  std::size_t pos_ = 0;
};

/// Which iteration counts trigger a checkpoint.
class Cadence {
 public:
  /// 1, 2, 4, 8, ...
  static Cadence powers_of_two();
  /// round(10^(j / per_decade)) for j = 0, 1, ...; always contains exact powers of ten.
  static Cadence log_grid(int per_decade);
  static Cadence every(std::uint64_t stride);
  static Cadence at(std::vector<std::uint64_t> points);

  bool contains(std::uint64_t n) const;
  /// Sorted checkpoints in [1, horizon]; horizon itself is always included.
  std::vector<std::uint64_t> points_up_to(std::uint64_t horizon) const;

  std::string describe() const;
  /// Inverse of describe(): "pow2", "log:K", "every:S" or "at:p1,p2,...".
  static Cadence parse(std::string_view text);

 private:
  enum class Kind { PowersOfTwo, LogGrid, Every, Explicit };
  Kind kind_ = Kind::PowersOfTwo;
  std::uint64_t param_ = 0;
  std::vector<std::uint64_t> points_;
};

struct StreamHooks {
  Cadence cadence = Cadence::powers_of_two();
  /// Also checkpoint the untouched initial state.
  bool checkpoint_initial = true;
  std::function<void(const OptimizerState&, const Sample&, const StepReport&)> on_step;
  std::function<void(const OptimizerState&)> on_checkpoint;
};

/**
 * Feeds every sample of `source` through the state's step function in order.
 * Checkpoints fire at cadence points and after the final step. Step failures are
 * rethrown as RunError carrying the 1-based sample index.
 */
template <SampleSource Source>
OptimizerState run_stream(OptimizerState state, Source& source, const StreamHooks& hooks = {}) {
  if (hooks.checkpoint_initial && hooks.on_checkpoint) hooks.on_checkpoint(state);
  Sample sample;
  bool last_was_checkpoint = hooks.checkpoint_initial;
  while (source.next(sample)) {
    StepReport report;
    try {
      report = step(state, sample);
    } catch (const std::exception& e) {
      throw RunError("sample", state.n + 1, e);
    }
    if (hooks.on_step) hooks.on_step(state, sample, report);
    last_was_checkpoint = hooks.cadence.contains(state.n);
    if (last_was_checkpoint && hooks.on_checkpoint) hooks.on_checkpoint(state);
  }
  if (!last_was_checkpoint && hooks.on_checkpoint) hooks.on_checkpoint(state);
  return state;
}

}  // namespace hsn
