#include <doctest.h>

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "support.hpp"
#include "tscale/scenario.hpp"

using namespace tscale;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json coupled_json() { return json::parse(read_file(testing::scenario_path("coupled_tube.json"))); }

Error error_of(const json& j) {
  try {
    parse_scenario(j.dump(), "test.json");
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected an error");
  return Error(ErrorCode::InvalidArgument, "");
}

}  // namespace

TEST_CASE("load the bundled coupled scenario") {
  const auto s = load_scenario(testing::scenario_path("coupled_tube.json"));
  CHECK(s.mode() == Mode::Nabla);
  CHECK(s.n() == 2);
  CHECK(s.t0 == 1);
  CHECK(s.t1 == 2);
  CHECK(s.timescale == TimeScale::make({{1, 2}}));
  CHECK(s.fixed_control == std::vector{0.5, 0.5});
  CHECK(s.solve.h_dense == 1e-3);
  CHECK(s.search.lattice_size == 9);
  CHECK(s.search.refinement_levels == 12);
  CHECK(s.egress.tangential_samples == 9);
  CHECK(tube_margin(s.tube, 1, std::vector{0.0, 0.0}) == 1);
  CHECK(s.grid().size() == 1001);

  for (const char* name : {"coupled_tube_discrete.json", "coupled_tube_short.json", "coupled_tube_mixed.json"})
    CHECK_NOTHROW(load_scenario(testing::scenario_path(name)));
}

TEST_CASE("load and parse errors") {
  try {
    load_scenario("/nonexistent/scenario.json");
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoError);
  }

  auto j = coupled_json();
  j.erase("timescale");
  auto e = error_of(j);
  CHECK(e.code() == ErrorCode::ParseError);
  CHECK(std::string(e.what()).find("timescale") != std::string::npos);

  CHECK(error_of(json::object()).code() == ErrorCode::ParseError);

  j = coupled_json();
  j["rhs"][0] = "2*t^5*y1 +";
  CHECK(error_of(j).code() == ErrorCode::ParseError);

  j = coupled_json();
  j["mode"] = "sideways";
  CHECK(error_of(j).code() == ErrorCode::ParseError);

  try {
    parse_scenario("{ not json", "broken.json");
    FAIL("expected ParseError");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::ParseError);
    CHECK(std::string(err.what()).find("broken.json") != std::string::npos);
  }
}

TEST_CASE("validation errors") {
  auto j = coupled_json();
  j["tube"]["lower"][0] = "1/t";
  CHECK(error_of(j).code() == ErrorCode::ValidationError);

  j = coupled_json();
  j["fixed_control"] = {1.0, 1.0};
  CHECK(error_of(j).code() == ErrorCode::ValidationError);

  j = coupled_json();
  j["window"] = {1, 3};
  CHECK(error_of(j).code() == ErrorCode::ValidationError);

  j = coupled_json();
  j["window"] = {1.5, 1.5};
  CHECK(error_of(j).code() == ErrorCode::ValidationError);

  j = coupled_json();
  j["rhs"][1] = "y3";
  CHECK(error_of(j).code() == ErrorCode::ValidationError);

  j = coupled_json();
  j["tube"]["upper"] = {"1/t"};
  CHECK(error_of(j).code() == ErrorCode::ValidationError);
}

TEST_CASE("serialization round trip") {
  for (const char* name : {"coupled_tube.json", "coupled_tube_discrete.json", "coupled_tube_short.json",
                           "coupled_tube_mixed.json"}) {
    CAPTURE(name);
    const auto s = load_scenario(testing::scenario_path(name));
    const auto text = serialize_scenario(s);
    const auto back = parse_scenario(text);
    CHECK(back == s);
    CHECK(serialize_scenario(back) == text);
  }
}

TEST_CASE("dualizing the coupled scenario gives a delta problem on the mirrored window") {
  const auto s = load_scenario(testing::scenario_path("coupled_tube.json"));
  const auto d = dualize_scenario(s);
  CHECK(d.mode() == Mode::Delta);
  CHECK(d.timescale == TimeScale::make({{-2, -1}}));
  CHECK(d.t0 == -2);
  CHECK(d.t1 == -1);
  CHECK(d.fixed_control == s.fixed_control);
  CHECK(d.tube.swapped());
  CHECK(d.tube.interval(0, -2) == std::pair{-0.5, 0.5});
  CHECK_NOTHROW(validate_scenario(d));

  // the dual survives serialization
  CHECK(parse_scenario(serialize_scenario(d)) == d);
}

TEST_CASE("pure delta scenario dualizes to nabla") {
  auto j = coupled_json();
  j["mode"] = "delta";
  const auto s = parse_scenario(j.dump());
  const auto d = dualize_scenario(s);
  CHECK(d.mode() == Mode::Nabla);
  CHECK(d.timescale == s.timescale.dual());
}

TEST_CASE("property: dualization is an involution up to folded negations") {
  for (const char* name : {"coupled_tube.json", "coupled_tube_discrete.json", "coupled_tube_mixed.json"}) {
    CAPTURE(name);
    const auto s = load_scenario(testing::scenario_path(name));
    const auto dd = dualize_scenario(dualize_scenario(s));
    CHECK(dd.mode() == s.mode());
    CHECK(dd.timescale == s.timescale);
    CHECK(dd.t0 == s.t0);
    CHECK(dd.t1 == s.t1);
    CHECK(dd.tube.swapped() == s.tube.swapped());
    for (std::size_t i = 0; i < s.n(); ++i) {
      CHECK(fold_negations(dd.system.rhs()[i]) == fold_negations(s.system.rhs()[i]));
      CHECK(fold_negations(dd.tube.lower()[i]) == fold_negations(s.tube.lower()[i]));
      CHECK(fold_negations(dd.tube.upper()[i]) == fold_negations(s.tube.upper()[i]));
    }
  }
}
