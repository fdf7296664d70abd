#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "barymorse/critical_search.hpp"
#include "barymorse/json_io.hpp"

using namespace barymorse;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_run_config(text, "cfg.json");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(JsonIo, BundledConfigsParseAndRoundTrip) {
  int seen = 0;
  for (const auto& entry : std::filesystem::directory_iterator(BARYMORSE_CONFIGS)) {
    if (entry.path().extension() != ".json") continue;
    ++seen;
    const RunConfig c = load_run_config(entry.path().string());
    const Json once = to_json(c);
    const Json twice = to_json(parse_run_config(once.dump(), "echo"));
    EXPECT_EQ(once, twice) << entry.path();
  }
  EXPECT_GE(seen, 5);
}

TEST(JsonIo, ErrorsNameTheField) {
  EXPECT_NE(error_of(R"({"surfce": {}})").find("'surfce'"), std::string::npos);
  EXPECT_NE(error_of(R"({"surface": {"N": "big"}})").find("surface.N"), std::string::npos);
  EXPECT_NE(error_of(R"({"surface": {"kind": "torus", "n": 64}})").find("'n'"), std::string::npos);
  EXPECT_NE(error_of(R"({"K": {"name": "trig", "terms": [{"k": [1, 0], "coss": 1}]}})").find("K.terms[0]"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"K": {"name": "wavy"}})").find("unknown K preset"), std::string::npos);
  EXPECT_NE(error_of("{\n\"m\": 1,\n\"seed\": }").find("cfg.json:3"), std::string::npos);
  EXPECT_NE(error_of(R"({"m": 0})").find("'m'"), std::string::npos);
}

TEST(JsonIo, CommentsAreAllowed) {
  const RunConfig c = parse_run_config("// header\n{\"m\": 3, \"surface\": {\"kind\": \"sphere\", \"N\": 40}}\n");
  EXPECT_EQ(c.m, 3);
  EXPECT_EQ(c.surface.kind, "sphere");
  EXPECT_EQ(c.surface.n, 40);
}

TEST(JsonIo, CriticalRecordsRoundTrip) {
  KPreset p;
  p.name = "trig";
  p.trig = {{1, 0, 0.3, 0.0}, {0, 1, 0.2, 0.0}};
  KFunction k(build_surface(SurfaceKind::torus, 64, 0.05), p);
  const SearchResult r = find_critical_points(k, 1, {});
  const auto back = criticals_from_json(Json::parse(to_json(r, SurfaceKind::torus).dump()));
  ASSERT_EQ(back.size(), r.criticals.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].morse_index, r.criticals[i].morse_index);
    EXPECT_EQ(back[i].nondegenerate, r.criticals[i].nondegenerate);
    EXPECT_DOUBLE_EQ(back[i].value, r.criticals[i].value);
    EXPECT_TRUE(same_up_to_permutation(k.surface(), back[i].points, r.criticals[i].points, 1e-15));
  }
}
