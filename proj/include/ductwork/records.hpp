#pragma once

#include <unistd.h>

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace ductwork {

inline constexpr const char* kVersion = "0.1.0";

inline std::string hostname() {
  char buf[256] = {};
  if (::gethostname(buf, sizeof(buf) - 1) != 0) return "unknown";
  return buf;
}

// One worker's result for one replicate. `conflicts` is present exactly
// once per replicate, on the rank-0 thread-0 record.
struct BenchmarkRecord {
  int mode{};
  int num_procs{};
  int threads_per_proc{};
  int replicate{};
  int rank{};
  int thread{};
  std::uint64_t updates_completed{};
  double wall_time_s{};
  double update_rate{};
  std::optional<std::uint64_t> conflicts;
  std::uint64_t messages_sent{};
  std::uint64_t messages_dropped{};
  std::string hostname;
  std::string version;
  std::uint64_t seed{};
  bool aborted{false};
};

inline const std::vector<std::string>& record_field_names() {
  static const std::vector<std::string> names = {
      "mode",           "num_procs",     "threads_per_proc",
      "replicate",      "rank",          "thread",
      "updates_completed", "wall_time_s", "update_rate",
      "conflicts",      "messages_sent", "messages_dropped",
      "hostname",       "version",       "seed",
      "aborted"};
  return names;
}

inline nlohmann::json record_to_json(const BenchmarkRecord& r) {
  nlohmann::json j;
  j["mode"] = r.mode;
  j["num_procs"] = r.num_procs;
  j["threads_per_proc"] = r.threads_per_proc;
  j["replicate"] = r.replicate;
  j["rank"] = r.rank;
  j["thread"] = r.thread;
  j["updates_completed"] = r.updates_completed;
  j["wall_time_s"] = r.wall_time_s;
  j["update_rate"] = r.update_rate;
  if (r.conflicts) {
    j["conflicts"] = *r.conflicts;
  } else {
    j["conflicts"] = nullptr;
  }
  j["messages_sent"] = r.messages_sent;
  j["messages_dropped"] = r.messages_dropped;
  j["hostname"] = r.hostname;
  j["version"] = r.version;
  j["seed"] = r.seed;
  j["aborted"] = r.aborted;
  return j;
}

inline BenchmarkRecord record_from_json(const nlohmann::json& j) {
  BenchmarkRecord r;
  r.mode = j.at("mode").get<int>();
  r.num_procs = j.at("num_procs").get<int>();
  r.threads_per_proc = j.at("threads_per_proc").get<int>();
  r.replicate = j.at("replicate").get<int>();
  r.rank = j.at("rank").get<int>();
  r.thread = j.at("thread").get<int>();
  r.updates_completed = j.at("updates_completed").get<std::uint64_t>();
  r.wall_time_s = j.at("wall_time_s").get<double>();
  r.update_rate = j.at("update_rate").get<double>();
  if (!j.at("conflicts").is_null())
    r.conflicts = j.at("conflicts").get<std::uint64_t>();
  r.messages_sent = j.at("messages_sent").get<std::uint64_t>();
  r.messages_dropped = j.at("messages_dropped").get<std::uint64_t>();
  r.hostname = j.at("hostname").get<std::string>();
  r.version = j.at("version").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.aborted = j.at("aborted").get<bool>();
  return r;
}

namespace detail {

inline std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string double_repr(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace detail

inline void emit_records_csv(const std::vector<BenchmarkRecord>& records,
                             std::ostream& out) {
  const auto& names = record_field_names();
  for (std::size_t i = 0; i < names.size(); ++i)
    out << (i ? "," : "") << names[i];
  out << "\r\n";
  for (const auto& r : records) {
    out << r.mode << ',' << r.num_procs << ',' << r.threads_per_proc << ','
        << r.replicate << ',' << r.rank << ',' << r.thread << ','
        << r.updates_completed << ',' << detail::double_repr(r.wall_time_s)
        << ',' << detail::double_repr(r.update_rate) << ','
        << (r.conflicts ? std::to_string(*r.conflicts) : std::string()) << ','
        << r.messages_sent << ',' << r.messages_dropped << ','
        << detail::csv_quote(r.hostname) << ',' << detail::csv_quote(r.version)
        << ',' << r.seed << ',' << (r.aborted ? 1 : 0) << "\r\n";
  }
}

inline void emit_records_json(const std::vector<BenchmarkRecord>& records,
                              std::ostream& out) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : records) arr.push_back(record_to_json(r));
  out << arr.dump(2) << '\n';
}

inline void emit_records(const std::vector<BenchmarkRecord>& records,
                         const std::string& path, const std::string& format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write records to " + path);
  if (format == "csv") {
    emit_records_csv(records, out);
  } else if (format == "json") {
    emit_records_json(records, out);
  } else {
    throw std::invalid_argument("unknown record format: " + format);
  }
  if (!out) throw std::runtime_error("write failure on " + path);
}

// Minimal RFC-4180 reader for the schema above; used by tests and tooling.
inline std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          field += '"';
          in.get();
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"': quoted = true; break;
      case ',': row.push_back(std::move(field)); field.clear(); break;
      case '\r': break;
      case '\n':
        row.push_back(std::move(field));
        field.clear();
        rows.push_back(std::move(row));
        row.clear();
        any = false;
        break;
      default: field += c;
    }
  }
  if (any) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<BenchmarkRecord> load_records_csv(std::istream& in) {
  const auto rows = parse_csv(in);
  if (rows.empty() || rows.front() != record_field_names())
    throw std::runtime_error("bad record CSV header");
  std::vector<BenchmarkRecord> records;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != record_field_names().size())
      throw std::runtime_error("bad record CSV row " + std::to_string(i));
    BenchmarkRecord r;
    r.mode = std::stoi(row[0]);
    r.num_procs = std::stoi(row[1]);
    r.threads_per_proc = std::stoi(row[2]);
    r.replicate = std::stoi(row[3]);
    r.rank = std::stoi(row[4]);
    r.thread = std::stoi(row[5]);
    r.updates_completed = std::stoull(row[6]);
    r.wall_time_s = std::stod(row[7]);
    r.update_rate = std::stod(row[8]);
    if (!row[9].empty()) r.conflicts = std::stoull(row[9]);
    r.messages_sent = std::stoull(row[10]);
    r.messages_dropped = std::stoull(row[11]);
    r.hostname = row[12];
    r.version = row[13];
    r.seed = std::stoull(row[14]);
    r.aborted = row[15] == "1" || row[15] == "true";
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace ductwork
