#include "hsn/optimizers.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <string>

namespace hsn {

std::string_view to_string(Algorithm algo) noexcept {
  switch (algo) {
    case Algorithm::HSN: return "HSN";
    case Algorithm::ONS: return "ONS";
    case Algorithm::SN: return "SN";
    case Algorithm::TSN: return "TSN";
    case Algorithm::SGD: return "SGD";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
  for (const Algorithm a :
       {Algorithm::HSN, Algorithm::ONS, Algorithm::SN, Algorithm::TSN, Algorithm::SGD}) {
    if (upper == to_string(a)) return a;
  }
  throw InvalidArgument("unknown algorithm '" + std::string(name) +
                        "' (expected one of HSN, ONS, SN, TSN, SGD)");
}

bool is_second_order(Algorithm algo) noexcept { return algo != Algorithm::SGD; }

void TruncationSchedule::validate() const {
  if (!(floor_scale > 0.0) || !std::isfinite(floor_scale)) {
    throw InvalidArgument("TruncationSchedule: floor_scale must be positive and finite");
  }
  if (!(exponent > 0.0 && exponent <= 0.5)) {
    throw InvalidArgument("TruncationSchedule: exponent must lie in (0, 1/2]");
  }
}

double TruncationSchedule::floor_at(std::uint64_t k) const {
  if (k == 0) throw InvalidArgument("TruncationSchedule::floor_at: k must be >= 1");
  return floor_scale * std::pow(static_cast<double>(k), -exponent);
}

OptimizerState make_state(const OptimizerConfig& config, Index dim) {
  if (dim <= 0) throw InvalidArgument("make_state: dimension must be positive");
  OptimizerState st;
  st.algorithm = config.algorithm;
  if (config.initial_theta) {
    if (config.initial_theta->size() != dim) {
      throw DimensionMismatch("make_state: initial theta", dim, config.initial_theta->size());
    }
    if (!config.initial_theta->allFinite()) throw NonFiniteInput("make_state: initial theta");
    st.theta = *config.initial_theta;
  } else {
    st.theta = Vector::Zero(dim);
  }
  st.weights = config.algorithm == Algorithm::ONS ? HybridWeights::online_newton_step()
                                                  : config.weights;
  config.truncation.validate();
  st.truncation = config.truncation;
  if (!(config.step_scale > 0.0) || !std::isfinite(config.step_scale)) {
    throw InvalidArgument("make_state: step_scale must be positive");
  }
  st.step_scale = config.step_scale;
  if (is_second_order(config.algorithm)) st.s_inv = SymMatrix::identity(dim);
  st.work.resize(dim);
  st.direction.resize(dim);
  return st;
}

namespace {

void require_algorithm(const OptimizerState& st, Algorithm expected, const char* where) {
  if (st.algorithm != expected) {
    throw InvalidArgument(std::string(where) + ": state belongs to " +
                          std::string(to_string(st.algorithm)));
  }
}

void require_compatible(const OptimizerState& st, const Sample& sample, const char* where) {
  if (sample.phi.size() != st.dim()) throw DimensionMismatch(where, st.dim(), sample.phi.size());
  if (sample.y != 0 && sample.y != 1) {
    throw InvalidArgument(std::string(where) + ": label must be 0 or 1");
  }
}

double guarded_margin(const OptimizerState& st, const Sample& sample) {
  const double m = st.theta.dot(sample.phi);
  if (!std::isfinite(m)) throw NonFiniteState("non-finite margin", st.n + 1);
  return m;
}

/**
 * Shared second-order mechanics: weight c from the coefficients, then the inverse
 * is updated with the new sample, then theta moves along S_{n+1}^{-1} phi.
 */
template <class WeightFn>
StepReport second_order_step(OptimizerState& st, const Sample& sample, WeightFn&& weight) {
  const double m = guarded_margin(st, sample);
  StepReport rep;
  rep.a = scalar::curvature(m);
  rep.residual = scalar::residual(m, sample.y);
  rep.b = rep.residual * rep.residual;
  rep.c = weight(rep.a, rep.b);
  if (!std::isfinite(rep.c)) throw NonFiniteState("non-finite weight c", st.n + 1);

  if (st.work.size() != st.dim()) st.work.resize(st.dim());
  if (st.direction.size() != st.dim()) st.direction.resize(st.dim());
  rep.g = smw_update_inplace(*st.s_inv, sample.phi, rep.c, st.work);

  st.direction.noalias() = st.s_inv->dense() * sample.phi;
  st.direction *= rep.residual;
  st.theta -= st.direction;
  rep.theta_delta_norm = st.direction.norm();

  if (!std::isfinite(rep.g) || !st.theta.allFinite()) {
    throw NonFiniteState("non-finite iterate", st.n + 1);
  }
  ++st.n;
  return rep;
}

}  // namespace

StepReport hsn_step(OptimizerState& state, const Sample& sample) {
  require_algorithm(state, Algorithm::HSN, "hsn_step");
  require_compatible(state, sample, "hsn_step");
  const HybridWeights w = state.weights;
  return second_order_step(state, sample,
                           [&w](double a, double b) { return w.alpha() * a + w.beta() * b; });
}

StepReport ons_step(OptimizerState& state, const Sample& sample) {
  require_algorithm(state, Algorithm::ONS, "ons_step");
  require_compatible(state, sample, "ons_step");
  const HybridWeights w = HybridWeights::online_newton_step();
  return second_order_step(state, sample,
                           [&w](double a, double b) { return w.alpha() * a + w.beta() * b; });
}

StepReport sn_step(OptimizerState& state, const Sample& sample) {
  require_algorithm(state, Algorithm::SN, "sn_step");
  require_compatible(state, sample, "sn_step");
  return second_order_step(state, sample, [](double a, double) { return a; });
}

StepReport tsn_step(OptimizerState& state, const Sample& sample) {
  require_algorithm(state, Algorithm::TSN, "tsn_step");
  require_compatible(state, sample, "tsn_step");
  const double floor = state.truncation.floor_at(state.n + 1);
  return second_order_step(state, sample,
                           [floor](double a, double) { return std::max(a, floor); });
}

StepReport sgd_step(OptimizerState& state, const Sample& sample) {
  require_algorithm(state, Algorithm::SGD, "sgd_step");
  require_compatible(state, sample, "sgd_step");
  const double m = guarded_margin(state, sample);
  StepReport rep;
  rep.a = scalar::curvature(m);
  rep.residual = scalar::residual(m, sample.y);
  rep.b = rep.residual * rep.residual;

  const double rate = state.step_scale / static_cast<double>(state.n + 1);
  if (state.direction.size() != state.dim()) state.direction.resize(state.dim());
  state.direction = (rate * rep.residual) * sample.phi;
  state.theta -= state.direction;
  rep.theta_delta_norm = state.direction.norm();
  if (!state.theta.allFinite()) throw NonFiniteState("non-finite iterate", state.n + 1);
  ++state.n;
  return rep;
}

StepReport step(OptimizerState& state, const Sample& sample) {
  switch (state.algorithm) {
    case Algorithm::HSN: return hsn_step(state, sample);
    case Algorithm::ONS: return ons_step(state, sample);
    case Algorithm::SN: return sn_step(state, sample);
    case Algorithm::TSN: return tsn_step(state, sample);
    case Algorithm::SGD: return sgd_step(state, sample);
  }
  throw InvalidArgument("step: unknown algorithm");
}

// --- Cadence ---------------------------------------------------------------

Cadence Cadence::powers_of_two() { return Cadence{}; }

Cadence Cadence::log_grid(int per_decade) {
  if (per_decade <= 0) throw InvalidArgument("Cadence::log_grid: per_decade must be positive");
  Cadence c;
  c.kind_ = Kind::LogGrid;
  c.param_ = static_cast<std::uint64_t>(per_decade);
  return c;
}

Cadence Cadence::every(std::uint64_t stride) {
  if (stride == 0) throw InvalidArgument("Cadence::every: stride must be positive");
  Cadence c;
  c.kind_ = Kind::Every;
  c.param_ = stride;
  return c;
}

Cadence Cadence::at(std::vector<std::uint64_t> points) {
  Cadence c;
  c.kind_ = Kind::Explicit;
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  c.points_ = std::move(points);
  return c;
}

namespace {

std::uint64_t log_grid_point(std::uint64_t per_decade, std::int64_t j) {
  return static_cast<std::uint64_t>(
      std::llround(std::pow(10.0, static_cast<double>(j) / static_cast<double>(per_decade))));
}

}  // namespace

bool Cadence::contains(std::uint64_t n) const {
  if (n == 0) return false;
  switch (kind_) {
    case Kind::PowersOfTwo: return (n & (n - 1)) == 0;
    case Kind::Every: return n % param_ == 0;
    case Kind::Explicit: return std::binary_search(points_.begin(), points_.end(), n);
    case Kind::LogGrid: {
      const auto j0 = static_cast<std::int64_t>(
          std::floor(std::log10(static_cast<double>(n)) * static_cast<double>(param_)));
      for (std::int64_t j = std::max<std::int64_t>(0, j0 - 1); j <= j0 + 2; ++j) {
        if (log_grid_point(param_, j) == n) return true;
      }
      return false;
    }
  }
  return false;
}

std::vector<std::uint64_t> Cadence::points_up_to(std::uint64_t horizon) const {
  std::vector<std::uint64_t> out;
  switch (kind_) {
    case Kind::PowersOfTwo:
      for (std::uint64_t p = 1; p <= horizon && p != 0; p <<= 1) out.push_back(p);
      break;
    case Kind::Every:
      for (std::uint64_t p = param_; p <= horizon; p += param_) out.push_back(p);
      break;
    case Kind::Explicit:
      for (const auto p : points_) {
        if (p >= 1 && p <= horizon) out.push_back(p);
      }
      break;
    case Kind::LogGrid:
      for (std::int64_t j = 0;; ++j) {
        const auto p = log_grid_point(param_, j);
        if (p > horizon) break;
        if (out.empty() || out.back() != p) out.push_back(p);
      }
      break;
  }
  if (horizon >= 1 && (out.empty() || out.back() != horizon)) out.push_back(horizon);
  return out;
}

Cadence Cadence::parse(std::string_view text) {
  auto number = [&](std::string_view digits) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (res.ec != std::errc{} || res.ptr != digits.data() + digits.size() || digits.empty()) {
      throw InvalidArgument("Cadence::parse: bad number '" + std::string(digits) + "' in '" +
                            std::string(text) + "'");
    }
    return v;
  };
  if (text == "pow2") return powers_of_two();
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw InvalidArgument("Cadence::parse: expected pow2, log:K, every:S or at:p1,p2,... (got '" +
                          std::string(text) + "')");
  }
  const auto kind = text.substr(0, colon);
  const auto rest = text.substr(colon + 1);
  if (kind == "log") {
    const auto k = number(rest);
    if (k == 0 || k > 1000) throw InvalidArgument("Cadence::parse: log grid needs 1..1000 points per decade");
    return log_grid(static_cast<int>(k));
  }
  if (kind == "every") return every(number(rest));
  if (kind == "at") {
    std::vector<std::uint64_t> points;
    std::size_t pos = 0;
    while (pos <= rest.size()) {
      const auto comma = std::min(rest.find(',', pos), rest.size());
      points.push_back(number(rest.substr(pos, comma - pos)));
      pos = comma + 1;
    }
    return at(std::move(points));
  }
  throw InvalidArgument("Cadence::parse: unknown cadence kind '" + std::string(kind) + "'");
}

std::string Cadence::describe() const {
  switch (kind_) {
    case Kind::PowersOfTwo: return "pow2";
    case Kind::Every: return "every:" + std::to_string(param_);
    case Kind::LogGrid: return "log:" + std::to_string(param_);
    case Kind::Explicit: {
      std::string s = "at:";
      for (std::size_t i = 0; i < points_.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(points_[i]);
      }
      return s;
    }
  }
  return "?";
}

}  // namespace hsn
