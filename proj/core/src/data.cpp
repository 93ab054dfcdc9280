#include "hsn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "hsn/errors.hpp"

namespace hsn {

// --- synthetic -------------------------------------------------------------

UniformCubeSampler::UniformCubeSampler(Index dim) : dim_(dim) {
  if (dim <= 0) throw InvalidArgument("UniformCubeSampler: dimension must be positive");
}

void UniformCubeSampler::draw(CounterRng& rng, Vector& out) const {
  out.resize(dim_);
  for (Index i = 0; i < dim_; ++i) out(i) = rng.uniform01();
}

ConstantSampler::ConstantSampler(Vector value) : value_(std::move(value)) {
  if (value_.size() == 0) throw InvalidArgument("ConstantSampler: empty vector");
  if (!value_.allFinite()) throw NonFiniteInput("ConstantSampler");
}

void ConstantSampler::draw(CounterRng&, Vector& out) const { out = value_; }

void SyntheticSpec::validate() const {
  if (dim < 1) throw InvalidArgument("SyntheticSpec: dim must be >= 1");
  if (theta_bound < 0) throw InvalidArgument("SyntheticSpec: theta_bound must be >= 0");
  if (theta_override) {
    if (theta_override->size() != dim) {
      throw DimensionMismatch("SyntheticSpec: theta override", dim, theta_override->size());
    }
    if (!theta_override->allFinite()) throw NonFiniteInput("SyntheticSpec: theta override");
  }
}

Vector gen_theta(const SyntheticSpec& spec) {
  spec.validate();
  if (spec.theta_override) return *spec.theta_override;
  CounterRng rng(derive_seed(spec.theta_seed, "theta"));
  std::uniform_int_distribution<int> coord(-spec.theta_bound, spec.theta_bound);
  Vector theta(spec.dim);
  for (Index i = 0; i < spec.dim; ++i) theta(i) = coord(rng);
  return theta;
}

SyntheticStream::SyntheticStream(Vector theta, std::shared_ptr<const FeatureSampler> sampler,
                                 std::uint64_t seed, std::uint64_t length)
    : theta_(std::move(theta)),
      sampler_(std::move(sampler)),
      feature_rng_(derive_seed(seed, "features")),
      label_rng_(derive_seed(seed, "labels")),
      length_(length) {
  if (!sampler_) throw InvalidArgument("SyntheticStream: null sampler");
  if (sampler_->dim() != theta_.size()) {
    throw DimensionMismatch("SyntheticStream", theta_.size(), sampler_->dim());
  }
}

bool SyntheticStream::next(Sample& out) {
  if (produced_ >= length_) return false;
  sampler_->draw(feature_rng_, out.phi);
  const double p = sigmoid(theta_.dot(out.phi));
  out.y = label_rng_.uniform01() < p ? 1 : 0;
  ++produced_;
  return true;
}

SyntheticStream make_uniform_stream(const Vector& theta, std::uint64_t stream_seed,
                                    std::uint64_t n) {
  return SyntheticStream(theta, std::make_shared<UniformCubeSampler>(theta.size()), stream_seed,
                         n);
}

SyntheticStream gen_stream(const SyntheticSpec& spec, std::uint64_t n) {
  return make_uniform_stream(gen_theta(spec), spec.stream_seed, n);
}

// --- CSV -------------------------------------------------------------------

namespace {

using Row = std::vector<std::string>;

/// RFC-4180 records: quoted fields may hold delimiters, doubled quotes and newlines.
std::vector<Row> read_records(std::istream& in, char delim) {
  std::vector<Row> rows;
  Row row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  char ch;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
    row.clear();
  };
  while (in.get(ch)) {
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    if (ch == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (ch == delim) {
      end_field();
    } else if (ch == '\n') {
      end_row();
    } else if (ch == '\r') {
      if (in.peek() == '\n') in.get(ch);
      end_row();
    } else {
      field.push_back(ch);
      field_started = true;
    }
  }
  if (in_quotes) throw DataError("CSV: unterminated quoted field");
  if (field_started || !field.empty() || !row.empty()) end_row();
  return rows;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return std::string(s.substr(first, last - first + 1));
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

double parse_number(const std::string& cell, std::size_t row, const std::string& column) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = cell.data() + cell.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (cell.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw DataError("CSV: unparseable numeric cell '" + cell + "' at row " + std::to_string(row) +
                    ", column '" + column + "'");
  }
  return value;
}

}  // namespace

Dataset parse_csv(std::istream& in, const CsvOptions& options) {
  auto records = read_records(in, options.delimiter);
  if (records.empty()) throw DataError("CSV: empty file");
  Row header;
  for (const auto& h : records.front()) header.push_back(trim(h));
  const std::size_t ncols = header.size();

  const auto label_it = std::find(header.begin(), header.end(), options.label_column);
  if (label_it == header.end()) throw DataError("CSV: missing label column '" + options.label_column + "'");
  const auto label_col = static_cast<std::size_t>(label_it - header.begin());
  for (const auto& c : options.categorical_columns) {
    if (!contains(header, c)) throw DataError("CSV: missing categorical column '" + c + "'");
  }
  for (const auto& c : options.ignored_columns) {
    if (!contains(header, c)) throw DataError("CSV: missing ignored column '" + c + "'");
  }
  if (options.positive_labels.empty()) throw DataError("CSV: no positive label configured");

  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != ncols) {
      throw DataError("CSV: row " + std::to_string(r) + " has " +
                      std::to_string(records[r].size()) + " fields, header has " +
                      std::to_string(ncols));
    }
    for (auto& cell : records[r]) cell = trim(cell);
  }

  Dataset ds;
  // Vocabularies: reuse the provided ones, otherwise collect sorted categories.
  std::map<std::string, CategoricalVocabulary> vocab_by_col;
  for (const auto& v : options.vocabularies) vocab_by_col[v.column] = v;

  enum class Kind { Label, Skip, Numeric, Categorical };
  std::vector<Kind> kinds(ncols, Kind::Numeric);
  for (std::size_t c = 0; c < ncols; ++c) {
    if (c == label_col) {
      kinds[c] = Kind::Label;
    } else if (contains(options.ignored_columns, header[c])) {
      kinds[c] = Kind::Skip;
    } else if (contains(options.categorical_columns, header[c])) {
      kinds[c] = Kind::Categorical;
      if (!vocab_by_col.count(header[c])) {
        std::set<std::string> cats;
        for (std::size_t r = 1; r < records.size(); ++r) cats.insert(records[r][c]);
        vocab_by_col[header[c]] = {header[c], {cats.begin(), cats.end()}, 0};
      }
    }
  }

  std::vector<std::size_t> offset(ncols, 0);
  Index width = 0;
  for (std::size_t c = 0; c < ncols; ++c) {
    offset[c] = static_cast<std::size_t>(width);
    if (kinds[c] == Kind::Numeric) {
      ds.feature_names.push_back(header[c]);
      ++width;
    } else if (kinds[c] == Kind::Categorical) {
      auto& v = vocab_by_col[header[c]];
      v.first_feature = width;
      for (const auto& cat : v.categories) ds.feature_names.push_back(header[c] + "=" + cat);
      width += static_cast<Index>(v.categories.size());
      ds.vocabularies.push_back(v);
    }
  }
  if (width == 0) throw DataError("CSV: no feature columns");

  ds.samples.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    Sample s;
    s.phi = Vector::Zero(width);
    for (std::size_t c = 0; c < ncols; ++c) {
      const auto& cell = records[r][c];
      switch (kinds[c]) {
        case Kind::Label: s.y = contains(options.positive_labels, cell) ? 1 : 0; break;
        case Kind::Skip: break;
        case Kind::Numeric: s.phi(static_cast<Index>(offset[c])) = parse_number(cell, r, header[c]); break;
        case Kind::Categorical: {
          const auto& cats = vocab_by_col[header[c]].categories;
          const auto it = std::find(cats.begin(), cats.end(), cell);
          if (it != cats.end()) s.phi(static_cast<Index>(offset[c]) + (it - cats.begin())) = 1.0;
          break;
        }
      }
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("CSV: cannot open '" + path.string() + "'");
  return parse_csv(in, options);
}

std::optional<std::string> decode_category(const CategoricalVocabulary& vocab,
                                           const Sample& sample) {
  for (std::size_t k = 0; k < vocab.categories.size(); ++k) {
    if (sample.phi(vocab.first_feature + static_cast<Index>(k)) == 1.0) return vocab.categories[k];
  }
  return std::nullopt;
}

// --- standardization and splits ---------------------------------------------

Scaling fit_standardizer(const Dataset& train) {
  if (train.samples.empty()) throw InvalidArgument("fit_standardizer: empty training set");
  const Index d = train.samples.front().phi.size();
  Scaling sc;
  sc.min.assign(static_cast<std::size_t>(d), std::numeric_limits<double>::infinity());
  sc.max.assign(static_cast<std::size_t>(d), -std::numeric_limits<double>::infinity());
  for (const auto& s : train.samples) {
    if (s.phi.size() != d) throw DimensionMismatch("fit_standardizer", d, s.phi.size());
    for (Index i = 0; i < d; ++i) {
      const auto k = static_cast<std::size_t>(i);
      sc.min[k] = std::min(sc.min[k], s.phi(i));
      sc.max[k] = std::max(sc.max[k], s.phi(i));
    }
  }
  return sc;
}

Dataset apply_standardizer(const Scaling& scaling, Dataset ds) {
  const auto d = static_cast<Index>(scaling.min.size());
  for (auto& s : ds.samples) {
    if (s.phi.size() != d) throw DimensionMismatch("apply_standardizer", d, s.phi.size());
    for (Index i = 0; i < d; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const double range = scaling.max[k] - scaling.min[k];
      s.phi(i) = range > 0.0 ? (s.phi(i) - scaling.min[k]) / range : 0.0;
    }
  }
  ds.scaling = scaling;
  return ds;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidArgument("split: train fraction must lie in (0, 1)");
  }
  const std::size_t n = ds.samples.size();
  if (n < 2) throw InvalidArgument("split: need at least 2 samples");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  CounterRng rng(derive_seed(seed, "shuffle"));
  std::shuffle(order.begin(), order.end(), rng);

  auto n_train = static_cast<std::size_t>(std::ceil(train_fraction * static_cast<double>(n) - 1e-9));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);

  Dataset train, test;
  for (Dataset* part : {&train, &test}) {
    part->feature_names = ds.feature_names;
    part->scaling = ds.scaling;
    part->vocabularies = ds.vocabularies;
  }
  train.split_tag = SplitTag::Train;
  test.split_tag = SplitTag::Test;
  train.samples.reserve(n_train);
  test.samples.reserve(n - n_train);
  for (std::size_t i = 0; i < n; ++i) {
    (i < n_train ? train : test).samples.push_back(ds.samples[order[i]]);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace hsn
