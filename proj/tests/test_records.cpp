#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "ductwork/records.hpp"

using namespace ductwork;

namespace {

BenchmarkRecord sample_record() {
  BenchmarkRecord r;
  r.mode = 3;
  r.num_procs = 2;
  r.threads_per_proc = 2;
  r.replicate = 1;
  r.rank = 0;
  r.thread = 1;
  r.updates_completed = 123456;
  r.wall_time_s = 5.001;
  r.update_rate = 24686.3;
  r.conflicts = 0;
  r.messages_sent = 493824;
  r.messages_dropped = 17;
  r.hostname = "node-a";
  r.version = kVersion;
  r.seed = 42;
  r.aborted = false;
  return r;
}

}  // namespace

TEST_CASE("one record emits a header line plus one data line") {
  std::ostringstream out;
  emit_records_csv({sample_record()}, out);
  const auto text = out.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
  CHECK(text.find("\r\n") != std::string::npos);
  CHECK(text.rfind("mode,num_procs,threads_per_proc,replicate,rank,thread,"
                   "updates_completed,wall_time_s,update_rate,conflicts,"
                   "messages_sent,messages_dropped,hostname,version,seed,"
                   "aborted\r\n", 0) == 0);
}

TEST_CASE("csv round-trips through the reader") {
  auto a = sample_record();
  auto b = sample_record();
  b.thread = 0;
  b.conflicts.reset();
  b.aborted = true;
  b.hostname = "weird,host\"name";

  std::stringstream buf;
  emit_records_csv({a, b}, buf);
  const auto loaded = load_records_csv(buf);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].conflicts == a.conflicts);
  CHECK(loaded[0].updates_completed == a.updates_completed);
  CHECK(loaded[0].wall_time_s == a.wall_time_s);
  CHECK(loaded[0].update_rate == a.update_rate);
  CHECK(loaded[0].hostname == a.hostname);
  CHECK(loaded[0].version == a.version);
  CHECK_FALSE(loaded[0].aborted);
  CHECK_FALSE(loaded[1].conflicts.has_value());
  CHECK(loaded[1].aborted);
  CHECK(loaded[1].hostname == b.hostname);
}

TEST_CASE("an empty record set is just the header") {
  std::stringstream buf;
  emit_records_csv({}, buf);
  CHECK(load_records_csv(buf).empty());
}

TEST_CASE("a wrong header is rejected") {
  std::istringstream in("a,b,c\r\n1,2,3\r\n");
  CHECK_THROWS(load_records_csv(in));
}

TEST_CASE("json form carries every field and null for absent conflicts") {
  auto r = sample_record();
  r.conflicts.reset();
  const auto j = record_to_json(r);
  for (const auto& name : record_field_names()) CHECK(j.contains(name));
  CHECK(j.at("conflicts").is_null());
  const auto back = record_from_json(j);
  CHECK_FALSE(back.conflicts.has_value());
  CHECK(back.updates_completed == r.updates_completed);
  CHECK(back.seed == r.seed);
}

TEST_CASE("json array emit parses back with the same length") {
  std::ostringstream out;
  emit_records_json({sample_record(), sample_record()}, out);
  const auto arr = nlohmann::json::parse(out.str());
  REQUIRE(arr.is_array());
  REQUIRE(arr.size() == 2);
  CHECK(record_from_json(arr[0]).mode == 3);
}
