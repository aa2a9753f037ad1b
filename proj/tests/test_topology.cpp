#include <gtest/gtest.h>

#include <fstream>

#include "ramp_stdae/topology.hpp"
#include "test_helpers.hpp"

using namespace ramp_stdae;

namespace {

nlohmann::json minimal_doc() {
  return {{"name", "minimal"},
          {"interval_sec", 300},
          {"directions", {"A", "B"}},
          {"movements", {{{"id", "A to B"}, {"upstream", "A"}, {"downstream", "B"}, {"label", "A to B"}}}}};
}

}  // namespace

TEST(Topology, DefaultInterchangeHasEightDirectionsAndTwelveMovements) {
  const auto spec = default_interchange();
  EXPECT_EQ(spec.num_directions(), 8);
  EXPECT_EQ(spec.num_movements(), 12);
  EXPECT_NO_THROW(spec.validate());
}

TEST(Topology, LoadsShippedInterchangeFile) {
  const auto spec = load_interchange(RAMP_STDAE_DATA_DIR "/interchange_default.json");
  EXPECT_EQ(spec.num_directions(), 8);
  EXPECT_EQ(spec.num_movements(), 12);
  EXPECT_EQ(spec, default_interchange(300));
}

TEST(Topology, MinimalSpecIsValid) {
  const auto spec = interchange_from_json(minimal_doc());
  EXPECT_EQ(spec.num_directions(), 2);
  EXPECT_EQ(spec.num_movements(), 1);
}

TEST(Topology, UnknownDirectionIsReported) {
  auto doc = minimal_doc();
  doc["movements"][0]["downstream"] = "X9";
  try {
    interchange_from_json(doc);
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    ASSERT_FALSE(e.violations().empty());
    EXPECT_NE(e.violations().front().find("X9"), std::string::npos);
  }
}

TEST(Topology, EveryViolationIsListed) {
  auto doc = minimal_doc();
  doc["directions"] = {"A", "A"};
  doc["movements"][0]["upstream"] = "B";
  try {
    interchange_from_json(doc);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_GE(e.violations().size(), 2u);
  }
}

TEST(Topology, MissingFieldIsNamed) {
  auto doc = minimal_doc();
  doc.erase("directions");
  try {
    interchange_from_json(doc);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("directions"), std::string::npos);
  }
}

TEST(Topology, MalformedFileIsAParseError) {
  test::TempDir dir("topo");
  std::ofstream(dir.path() / "bad.json") << "{ not json";
  EXPECT_THROW(load_interchange(dir.path() / "bad.json"), ParseError);
}

TEST(Topology, AdjacencySmallCases) {
  InterchangeSpec two = interchange_from_json(minimal_doc());
  two.movements.push_back({"B to A", "B", "A", "B to A"});
  const auto a2 = full_adjacency(two);
  EXPECT_EQ(a2(0, 0), 0);
  EXPECT_EQ(a2(0, 1), 1);
  EXPECT_EQ(a2(1, 0), 1);
  EXPECT_EQ(a2(1, 1), 0);

  const auto a1 = full_adjacency(interchange_from_json(minimal_doc()));
  ASSERT_EQ(a1.size(), 1);
  EXPECT_EQ(a1(0, 0), 0);
}

TEST(Topology, AdjacencySymmetricWithZeroDiagonalUpTo64) {
  for (std::int64_t m = 1; m <= 64; ++m) {
    InterchangeSpec spec;
    spec.name = "sweep";
    spec.directions = {"A", "B"};
    for (std::int64_t i = 0; i < m; ++i) spec.movements.push_back({"m" + std::to_string(i), "A", "B", ""});
    const auto adj = full_adjacency(spec);
    ASSERT_EQ(adj.size(), m);
    for (std::int64_t i = 0; i < m; ++i) {
      std::int64_t row = 0;
      for (std::int64_t j = 0; j < m; ++j) {
        EXPECT_EQ(adj(i, j), adj(j, i));
        EXPECT_EQ(adj(i, j), i == j ? 0 : 1);
        row += adj(i, j);
      }
      EXPECT_EQ(row, m - 1);
    }
  }
}

TEST(Topology, MovementEndpoints) {
  const auto spec = default_interchange();
  EXPECT_EQ(movement_endpoints(spec, "E to W"), std::make_pair(std::string("E-up"), std::string("W-down")));
  const auto& first = spec.movements.front();
  EXPECT_EQ(movement_endpoints(spec, first.id), std::make_pair(first.upstream, first.downstream));
  EXPECT_THROW(movement_endpoints(spec, "nonexistent"), LookupError);
}

TEST(Topology, SaveLoadRoundTrip) {
  test::TempDir dir("topo");
  auto spec = default_interchange(600);
  spec.name = "round trip";
  save_interchange(spec, dir.path() / "spec.json");
  EXPECT_EQ(load_interchange(dir.path() / "spec.json"), spec);
}
