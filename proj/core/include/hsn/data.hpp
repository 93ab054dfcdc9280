#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hsn/linalg.hpp"
#include "hsn/model.hpp"
#include "hsn/rng.hpp"

namespace hsn {

// --- synthetic data --------------------------------------------------------

/// Feature law for synthetic streams and Monte-Carlo estimates.
class FeatureSampler {
 public:
  virtual ~FeatureSampler() = default;
  virtual Index dim() const = 0;
  virtual void draw(CounterRng& rng, Vector& out) const = 0;
};

/// iid Uniform[0, 1] coordinates.
class UniformCubeSampler final : public FeatureSampler {
 public:
  explicit UniformCubeSampler(Index dim);
  Index dim() const override { return dim_; }
  void draw(CounterRng& rng, Vector& out) const override;

 private:
  Index dim_;
};

/// Always the same vector; used for degenerate checks.
class ConstantSampler final : public FeatureSampler {
 public:
  explicit ConstantSampler(Vector value);
  Index dim() const override { return value_.size(); }
  void draw(CounterRng& rng, Vector& out) const override;

 private:
  Vector value_;
};

struct SyntheticSpec {
  Index dim = 1;
  std::uint64_t theta_seed = 0;
  std::uint64_t stream_seed = 0;
  /// Coordinates of the drawn parameter are uniform on {-theta_bound, ..., theta_bound}.
  int theta_bound = 10;
  /// Replaces the drawn parameter when set (diagnostics on a chosen model).
  std::optional<Vector> theta_override;

  void validate() const;
};

/// Integer coordinates iid uniform on {-theta_bound, ..., theta_bound}, or theta_override when set.
Vector gen_theta(const SyntheticSpec& spec);

/**
 * Lazily generated stream of (phi, y) with y ~ Bernoulli(pi(theta^T phi)).
 *
 * Features and labels come from two independent counter streams derived from
 * `seed`, so the k-th feature vector depends only on (seed, k) and the feature law.
 */
class SyntheticStream {
 public:
  SyntheticStream(Vector theta, std::shared_ptr<const FeatureSampler> sampler, std::uint64_t seed,
                  std::uint64_t length);

  bool next(Sample& out);

  std::uint64_t remaining() const noexcept { return length_ - produced_; }
  const Vector& theta() const noexcept { return theta_; }

 private:
  Vector theta_;
  std::shared_ptr<const FeatureSampler> sampler_;
  CounterRng feature_rng_;
  CounterRng label_rng_;
  std::uint64_t length_;
  std::uint64_t produced_ = 0;
};

/// n samples at gen_theta(spec) with uniform [0,1]^d features, seeded by spec.stream_seed.
SyntheticStream gen_stream(const SyntheticSpec& spec, std::uint64_t n);

/// Same law as gen_stream but with the theta and stream seed given explicitly.
SyntheticStream make_uniform_stream(const Vector& theta, std::uint64_t stream_seed,
                                    std::uint64_t n);

// --- datasets --------------------------------------------------------------

enum class SplitTag { Train, Test, Full };

/// Per-feature (min, max) fitted on training data.
struct Scaling {
  std::vector<double> min;
  std::vector<double> max;
};

/// Recorded categories of one categorical column, in indicator order.
struct CategoricalVocabulary {
  std::string column;
  std::vector<std::string> categories;
  Index first_feature = 0;  // index of the first indicator in phi
};

struct Dataset {
  std::vector<Sample> samples;
  std::vector<std::string> feature_names;
  SplitTag split_tag = SplitTag::Full;
  std::optional<Scaling> scaling;
  std::vector<CategoricalVocabulary> vocabularies;

  Index dim() const noexcept { return static_cast<Index>(feature_names.size()); }
  std::size_t size() const noexcept { return samples.size(); }
};

struct CsvOptions {
  std::string label_column;
  /// Label values mapped to 1; every other value maps to 0.
  std::vector<std::string> positive_labels;
  std::vector<std::string> categorical_columns;
  std::vector<std::string> ignored_columns;
  char delimiter = ',';
  /// Vocabularies to reuse (e.g. from the training file). Unseen categories encode as all zeros.
  std::vector<CategoricalVocabulary> vocabularies;
};

/// RFC-4180 parse of `in`. Throws DataError for missing columns, unparseable cells
/// (row and column named) and empty input.
Dataset parse_csv(std::istream& in, const CsvOptions& options);
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options);

/// Category encoded in `sample` for the given vocabulary, or nullopt for an all-zero block.
std::optional<std::string> decode_category(const CategoricalVocabulary& vocab,
                                           const Sample& sample);

Scaling fit_standardizer(const Dataset& train);
/// x -> (x - min) / (max - min); constant training features map to 0; no clipping.
Dataset apply_standardizer(const Scaling& scaling, Dataset ds);

/// Seeded shuffle then prefix split: ceil(fraction n) train rows, the rest test.
std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed);

}  // namespace hsn
