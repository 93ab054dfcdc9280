#pragma once

// CSV and JSON emission. Every file carries the resolved configuration and its hash:
// CSV files start with "# config_hash: <hex>" and "# config: <json>" comment lines,
// JSON documents hold "config" and "config_hash" members.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hsn/experiments.hpp"

namespace hsn {

using Json = nlohmann::json;

/// FNV-1a over the compact dump of `config` (object keys are sorted, so the dump is canonical).
std::uint64_t config_hash(const Json& config);
std::string hash_hex(std::uint64_t hash);

/// Shortest round-trip decimal form; "nan", "inf", "-inf" for non-finite values.
std::string format_number(double value);

void write_records_csv(std::ostream& out, const std::vector<RunRecord>& records, const Json& config);

/// One row per iteration with one column per named series. All series must share iterations.
void write_series_csv(std::ostream& out, const std::vector<std::pair<std::string, Series>>& columns,
                      const Json& config);

Json to_json(const DiagnosticReport& report);
void write_report_json(std::ostream& out, const DiagnosticReport& report, const Json& config);

/// Writes a JSON document holding the config and its hash plus `body` members.
void write_json_document(std::ostream& out, Json body, const Json& config);

/// Result of re-deriving the hash of an emitted file.
struct HashCheck {
  std::string stored;
  std::string recomputed;
  bool ok() const { return !stored.empty() && stored == recomputed; }
};

/// Reads the embedded config of a CSV or JSON file produced by this library and
/// recomputes its hash. Throws DataError when the file has no embedded config.
HashCheck verify_embedded_hash(const std::filesystem::path& path);

}  // namespace hsn
