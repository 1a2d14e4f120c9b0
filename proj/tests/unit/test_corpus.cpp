#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "groupscope/corpus.hpp"
#include "groupscope/errors.hpp"
#include "groupscope/util.hpp"
#include "oracles.hpp"

using namespace groupscope;
namespace fs = std::filesystem;

namespace {

std::string record(const std::string& id, const std::string& group, double valence = 0.1,
                   const std::string& text = "Hello there, World!") {
  nlohmann::json j = {{"id", id},
                      {"author_id", "u" + id},
                      {"text", text},
                      {"group", group},
                      {"attributes",
                       {{"Valence", valence},
                        {"Dominance", -0.2},
                        {"Care", "virtue"},
                        {"Fairness", "vice"},
                        {"Loyalty", "none"},
                        {"Authority", "both"},
                        {"Purity", "none"}}}};
  return j.dump();
}

Dataset many(std::size_t n, double blue_fraction = 0.5) {
  std::vector<fixtures::Row> rows;
  const auto blue = static_cast<std::size_t>(n * blue_fraction);
  for (std::size_t i = 0; i < n; ++i) {
    rows.push_back({std::to_string(i + 1), i < blue ? Group::blue : Group::red, 0, 0, 2, 2});
  }
  return fixtures::make_dataset(rows);
}

fs::path temp_path(const std::string& name) {
  auto dir = fs::temp_directory_path() / "groupscope-tests";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("ingest keeps every valid record") {
  const auto text = record("1", "Red") + "\n" + record("2", "Blue") + "\n\n" + record("3", "Red") + "\n";
  const auto d = ingest_text(text, default_schema());
  CHECK(d.size() == 3);
  CHECK(d.schema().size() == 7);
  CHECK(d.instance("2").group == Group::blue);
  CHECK(d.instance("1").author_id == "u1");
  CHECK(d.display_value(0, d.attribute_index("Care")) == "virtue");
}

TEST_CASE("out-of-range value names the record, line and field") {
  const auto text = record("1", "Red") + "\n" + record("rec-9", "Blue", 1.7) + "\n";
  try {
    ingest_text(text, default_schema());
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(e.line() == 2);
    CHECK(e.field() == "attributes.Valence");
    CHECK(std::string(e.what()).find("rec-9") != std::string::npos);
  }
}

TEST_CASE("malformed records are rejected with their location") {
  SUBCASE("bad json") {
    try {
      ingest_text(record("1", "Red") + "\n{not json\n", default_schema());
      FAIL("expected error");
    } catch (const ValidationError& e) {
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("missing field") {
    auto j = nlohmann::json::parse(record("1", "Red"));
    j.erase("text");
    try {
      ingest_text(j.dump(), default_schema());
      FAIL("expected error");
    } catch (const ValidationError& e) {
      CHECK(e.field() == "text");
      CHECK(std::string(e.what()) == "line 1 field 'text': missing field");
    }
  }
  SUBCASE("unknown attribute") {
    auto j = nlohmann::json::parse(record("1", "Red"));
    j["attributes"]["Arousal"] = 0.3;
    CHECK_THROWS_AS(ingest_text(j.dump(), default_schema()), ValidationError);
  }
  SUBCASE("unknown level") {
    auto j = nlohmann::json::parse(record("1", "Red"));
    j["attributes"]["Care"] = "sometimes";
    CHECK_THROWS_AS(ingest_text(j.dump(), default_schema()), ValidationError);
  }
  SUBCASE("bad group") { CHECK_THROWS_AS(ingest_text(record("1", "Green"), default_schema()), ValidationError); }
  SUBCASE("duplicate id") {
    CHECK_THROWS_AS(ingest_text(record("1", "Red") + "\n" + record("1", "Blue"), default_schema()), ValidationError);
  }
}

TEST_CASE("tokenizer folds case, strips punctuation and keeps tags") {
  const auto t = tokenize("Hello, WORLD!! #Orlando @Someone ... (quoted) don't");
  const std::vector<std::string> expected{"hello", "world", "#orlando", "@someone", "quoted", "don't"};
  CHECK(t == expected);
  CHECK(tokenize("   ").empty());
}

TEST_CASE("id ordering is numeric for digit ids") {
  CHECK(id_less("2", "10"));
  CHECK_FALSE(id_less("10", "2"));
  CHECK(id_less("99", "a"));
  CHECK(id_less("a", "b"));
}

TEST_CASE("split sizes follow 50/15/35") {
  const auto d = assign_split(many(3100), {}, 7);
  std::array<std::size_t, 3> sizes{};
  for (const auto& b : d.split()) ++sizes[static_cast<std::size_t>(*b)];
  CHECK(sizes[0] == 1550);
  CHECK(sizes[1] == 465);
  CHECK(sizes[2] == 1085);
}

TEST_CASE("split is a stratified, deterministic partition") {
  const auto base = many(1001, 0.3);
  const auto a = assign_split(base, {}, 42);
  const auto b = assign_split(base, {}, 42);
  const auto c = assign_split(base, {}, 43);
  CHECK(a.split() == b.split());
  CHECK(a.split() != c.split());

  std::set<std::string> seen;
  const double blue_ratio = static_cast<double>(base.group_count(Group::blue)) / base.size();
  for (auto bucket : {SplitBucket::train, SplitBucket::validate, SplitBucket::test}) {
    const auto idx = a.bucket(bucket);
    std::size_t blue = 0;
    for (auto i : idx) {
      CHECK(seen.insert(a.instances()[i].id).second);
      blue += a.instances()[i].group == Group::blue;
    }
    CHECK(std::fabs(static_cast<double>(blue) - blue_ratio * idx.size()) <= 1.0);
  }
  CHECK(seen.size() == base.size());
}

TEST_CASE("split rejects degenerate input") {
  CHECK_THROWS_AS(assign_split(many(2), {0.5, 0.25, 0.25}, 1), ValidationError);
  CHECK_THROWS_AS(assign_split(many(10), {0.5, 0.6, -0.1}, 1), ValidationError);
}

TEST_CASE("search is a case-insensitive substring filter ordered by id") {
  const auto text = record("10", "Red", 0.1, "Trip to ORLANDO soon") + "\n" + record("2", "Blue", 0.1, "orlando!") +
                    "\n" + record("3", "Red", 0.1, "nothing here");
  const auto d = ingest_text(text, default_schema());
  const auto hits = search(d, "Orlando");
  REQUIRE(hits.size() == 2);
  CHECK(d.instances()[hits[0]].id == "2");
  CHECK(d.instances()[hits[1]].id == "10");
  CHECK(search(d, "").size() == 3);
  CHECK(search(d, "zzz").empty());
}

TEST_CASE("checksum equals an independent SHA-256 of the canonical body") {
  CHECK(oracle::sha256("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(oracle::sha256("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    std::string s(static_cast<std::size_t>(rng() % 200), ' ');
    for (auto& c : s) c = static_cast<char>(rng() % 256);
    CHECK(sha256_hex(s) == oracle::sha256(s));
  }
  const auto d = assign_split(fixtures::depth3(), {}, 7);
  CHECK(d.checksum() == oracle::sha256(dataset_body(d).dump()));
}

TEST_CASE("persist and load round trip") {
  const auto d = assign_split(fixtures::depth3(), {}, 7);
  const auto p = temp_path("roundtrip.json");
  persist(d, p);
  const auto back = load(p);
  CHECK(back == d);
  CHECK(back.checksum() == d.checksum());

  const auto unsplit = fixtures::depth1();
  persist(unsplit, p);
  CHECK(load(p) == unsplit);
}

TEST_CASE("corrupted snapshots are rejected") {
  const auto d = fixtures::depth2();
  const auto p = temp_path("corrupt.json");

  write_file(p, "{\"format\": \"groupscope-dataset\", \"vers");
  CHECK_THROWS_AS(load(p), FormatError);

  auto j = to_snapshot(d);
  j["version"] = 99;
  write_file(p, j.dump());
  CHECK_THROWS_AS(load(p), FormatError);

  j = to_snapshot(d);
  j["checksum"] = std::string(64, '0');
  write_file(p, j.dump());
  CHECK_THROWS_AS(load(p), IntegrityError);

  j = to_snapshot(d);
  j["body"]["instances"][0]["text"] = "tampered";
  write_file(p, j.dump());
  CHECK_THROWS_AS(load(p), IntegrityError);
}

TEST_CASE("JSONL export re-ingests to the same instances") {
  const auto d = fixtures::depth3();
  const auto back = ingest_text(to_jsonl(d), default_schema());
  REQUIRE(back.size() == d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(back.instances()[i].id == d.instances()[i].id);
    CHECK(back.instances()[i].values == d.instances()[i].values);
  }
}

TEST_CASE("lookups report unknown names") {
  const auto d = fixtures::depth1();
  CHECK_THROWS_AS(d.attribute_index("Arousal"), NotFoundError);
  CHECK_THROWS_AS(d.instance("nope"), NotFoundError);
  CHECK(d.attribute("Care").ordinal_score(0) == doctest::Approx(1.0));
  CHECK(d.attribute("Care").ordinal_score(3) == doctest::Approx(-1.0));
  CHECK(d.attribute("Care").ordinal_score(1) == doctest::Approx(1.0 / 3));
}

}  // TEST_SUITE
