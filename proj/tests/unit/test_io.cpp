#include <sstream>

#include "doctest.h"
#include "spike/io.hpp"

using namespace spike;

TEST_CASE("fnv1a reference vectors") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("meta block hashes the config") {
  json cfg = {{"eps", 0.05}, {"manifold", "disk"}};
  json a = meta_block("solve", cfg);
  json b = meta_block("solve", cfg);
  CHECK(a == b);
  CHECK(a["command"] == "solve");
  CHECK(a["config_hash"] == fnv1a_hex(cfg.dump()));
  cfg["eps"] = 0.04;
  CHECK(meta_block("solve", cfg)["config_hash"] != a["config_hash"]);
}

TEST_CASE("manifold strings and objects") {
  BoundaryManifold e = parse_manifold("ellipse:2,1");
  CHECK(e.kind() == ManifoldKind::Ellipse);
  CHECK(e.a() == 2.0);
  CHECK(e.b() == 1.0);
  CHECK(parse_manifold("disk").a() == 1.0);
  CHECK(parse_manifold("disk:2.5").a() == 2.5);
  CHECK(parse_manifold("ball:-1").orientation() == -1);
  CHECK(parse_manifold("spheroid:2,1").kind() == ManifoldKind::Spheroid);
  BoundaryManifold o = parse_manifold(json{{"kind", "ellipse"}, {"params", {3, 1}}, {"orientation", -1}});
  CHECK(o.a() == 3.0);
  CHECK(o.orientation() == -1);
  CHECK(parse_manifold(manifold_json(o)).b() == 1.0);
  CHECK_THROWS_AS(parse_manifold("torus"), Error);
  CHECK_THROWS_AS(parse_manifold("ellipse:2"), Error);
  CHECK_THROWS_AS(parse_manifold(json(3)), Error);
}

TEST_CASE("numbers round trip") {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-17, 1e300, 0.0}) CHECK(std::stod(format_number(x)) == x);
  CHECK(format_number(0.5) == "0.5");
}

TEST_CASE("csv writer") {
  std::ostringstream os;
  CsvWriter w(os, {"a", "b"});
  w.row({1.0, 0.25});
  CHECK(os.str() == "a,b\n1,0.25\n");
  CHECK_THROWS_AS(w.row({1.0}), Error);
}

TEST_CASE("schema validation") {
  const json& s = run_config_schema();
  CHECK(validate_schema(s, json::object()).empty());
  CHECK(validate_schema(s, json{{"n", 2}, {"p", 4.0}, {"manifold", "ellipse:2,1"}, {"eps_list", {0.1, 0.05}}}).empty());
  CHECK(validate_schema(s, json{{"manifold", {{"kind", "disk"}}}}).empty());

  auto first = [&](const json& doc) {
    auto is = validate_schema(s, doc);
    return is.empty() ? std::string() : is.front().path;
  };
  CHECK(first(json{{"bogus", 1}}) == "/bogus");
  CHECK(first(json{{"n", 2.5}}) == "/n");
  CHECK(first(json{{"n", 7}}) == "/n");
  CHECK(first(json{{"p", 2.0}}) == "/p");
  CHECK(first(json{{"eps", "small"}}) == "/eps");
  CHECK(first(json{{"eps_list", json::array()}}) == "/eps_list");
  CHECK(first(json{{"eps_list", {0.1, -0.1}}}) == "/eps_list/1");
  CHECK(first(json{{"manifold", "torus"}}) == "/manifold");
  CHECK(first(json{{"manifold", {{"kind", "disk"}, {"extra", 1}}}}) == "/manifold");
  CHECK(first(json{{"exec", "gpu"}}) == "/exec");
  CHECK(first(json{{"L", 10}}) == "/L");
  CHECK(first(json(5)) == "/");
}

TEST_CASE("report serialisation") {
  MomentReport m;
  m.n = 2;
  m.p = 4;
  m.C = 1.5;
  m.moments["grad_zn"] = 0.25;
  json j = to_json(m);
  CHECK(j["C"] == 1.5);
  CHECK(j["moments"]["grad_zn"] == 0.25);
  SolveReport r;
  r.critical_distance = std::numeric_limits<double>::quiet_NaN();
  CHECK(to_json(r)["critical_distance"].is_null());
}
