#include "hsn/report_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "hsn/errors.hpp"
#include "hsn/rng.hpp"

namespace hsn {

std::uint64_t config_hash(const Json& config) { return fnv1a64(config.dump()); }

std::string hash_hex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

namespace {

void write_header(std::ostream& out, const Json& config) {
  out << "# config_hash: " << hash_hex(config_hash(config)) << '\n';
  out << "# config: " << config.dump() << '\n';
}

Json number(double value) { return std::isfinite(value) ? Json(value) : Json(nullptr); }

}  // namespace

void write_records_csv(std::ostream& out, const std::vector<RunRecord>& records, const Json& config) {
  write_header(out, config);
  out << "iteration,sq_error,excess_risk,sbar_dist,sbar_inv_dist,hbar_dist,sigbar_dist,hbar_sigbar_dist\n";
  for (const auto& r : records) {
    out << r.iteration << ',' << format_number(r.sq_error) << ',' << format_number(r.excess_risk) << ','
        << format_number(r.sbar_dist) << ',' << format_number(r.sbar_inv_dist) << ','
        << format_number(r.hbar_dist) << ',' << format_number(r.sigbar_dist) << ','
        << format_number(r.hbar_sigbar_dist) << '\n';
  }
}

void write_series_csv(std::ostream& out, const std::vector<std::pair<std::string, Series>>& columns,
                      const Json& config) {
  if (columns.empty()) throw InvalidArgument("write_series_csv: no columns");
  const std::size_t rows = columns.front().second.size();
  for (const auto& [label, series] : columns) {
    if (series.size() != rows) throw InvalidArgument("write_series_csv: column '" + label + "' has a different length");
    for (std::size_t i = 0; i < rows; ++i) {
      if (series[i].iteration != columns.front().second[i].iteration) {
        throw InvalidArgument("write_series_csv: column '" + label + "' has different iterations");
      }
    }
  }
  write_header(out, config);
  out << "iteration";
  for (const auto& col : columns) out << ',' << col.first;
  out << '\n';
  for (std::size_t i = 0; i < rows; ++i) {
    out << columns.front().second[i].iteration;
    for (const auto& col : columns) out << ',' << format_number(col.second[i].value);
    out << '\n';
  }
}

Json to_json(const DiagnosticReport& report) {
  Json checks = Json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name},
                      {"statistic", number(c.statistic)},
                      {"target", number(c.target)},
                      {"tolerance", number(c.tolerance)},
                      {"lower", number(c.lower)},
                      {"upper", number(c.upper)},
                      {"pass", c.pass},
                      {"note", c.note}});
  }
  Json info = Json::object();
  for (const auto& [k, v] : report.info) info[k] = number(v);
  Json trend = Json::array();
  for (const auto& t : report.trend) {
    Json row = {{"iteration", t.iteration}};
    for (const auto& [k, v] : t.values) row[k] = number(v);
    trend.push_back(std::move(row));
  }
  return {{"name", report.name},
          {"pass", report.pass()},
          {"checks", std::move(checks)},
          {"info", std::move(info)},
          {"replications", report.replications},
          {"seeds", report.seeds},
          {"trend", std::move(trend)}};
}

void write_json_document(std::ostream& out, Json body, const Json& config) {
  body["config"] = config;
  body["config_hash"] = hash_hex(config_hash(config));
  out << body.dump(2) << '\n';
}

void write_report_json(std::ostream& out, const DiagnosticReport& report, const Json& config) {
  write_json_document(out, Json{{"report", to_json(report)}}, config);
}

HashCheck verify_embedded_hash(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  HashCheck check;
  if (path.extension() == ".json") {
    Json doc;
    try {
      doc = Json::parse(in);
    } catch (const Json::exception& e) {
      throw DataError(path.string() + ": " + e.what());
    }
    if (!doc.contains("config") || !doc.contains("config_hash")) {
      throw DataError(path.string() + ": no embedded config");
    }
    check.stored = doc["config_hash"].get<std::string>();
    check.recomputed = hash_hex(config_hash(doc["config"]));
    return check;
  }
  std::string line;
  bool have_config = false;
  while (std::getline(in, line) && line.rfind("# ", 0) == 0) {
    constexpr std::string_view hash_tag = "# config_hash: ";
    constexpr std::string_view config_tag = "# config: ";
    if (line.rfind(hash_tag, 0) == 0) {
      check.stored = line.substr(hash_tag.size());
    } else if (line.rfind(config_tag, 0) == 0) {
      try {
        check.recomputed = hash_hex(config_hash(Json::parse(line.substr(config_tag.size()))));
      } catch (const Json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
      }
      have_config = true;
    }
  }
  if (!have_config || check.stored.empty()) throw DataError(path.string() + ": no embedded config");
  return check;
}

}  // namespace hsn
