#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <functional>
#include <string>

#include "epdscreen/config.hpp"
#include "epdscreen/core.hpp"

using namespace epdscreen;

namespace {

std::string write_tmp(const std::string& name, const std::string& body) {
  const std::string path = std::string("/tmp/epdscreen_test_") + name + ".json";
  std::ofstream out(path);
  out << body;
  return path;
}

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const DomainError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("save/load round trip preserves every field") {
  RunConfig c;
  c.command = "solve-n";
  c.thetas = {0.4, 0.5, 0.6};
  c.masses = {0.4, 0.2, 0.4};
  c.n = 42;
  c.gamma = 0.75;
  c.multipliers = "optimize";
  c.gammas = {0.1, 0.3, 0.9};
  c.n_list = {5, 9};
  c.seed = 999;
  c.out = "result.csv";
  c.format = "json";
  c.stamp = true;
  const std::string path = "/tmp/epdscreen_test_roundtrip.json";
  save_config(c, path);
  const RunConfig back = load_config(path);
  CHECK(back == c);
}

TEST_CASE("minimal config loads with defaults") {
  const auto path = write_tmp("minimal", "{\"command\": \"universal\"}");
  const RunConfig c = load_config(path);
  CHECK(c.command == "universal");
  CHECK(c.n == 100);
  CHECK(c.gamma == 0.5);
  CHECK(c.format == "csv");
  CHECK(c.multipliers == "myerson");
}

TEST_CASE("validation errors name the offending field") {
  const auto masses = write_tmp(
      "masses",
      "{\"command\": \"solve-n\", \"thetas\": [0.4, 0.6], \"masses\": [0.4, 0.4]}");
  CHECK(message_of([&] { load_config(masses); }).find("masses") != std::string::npos);

  const auto cmd = write_tmp("cmd", "{\"command\": \"frobnicate\"}");
  CHECK(message_of([&] { load_config(cmd); }).find("command") != std::string::npos);

  const auto type = write_tmp("type", "{\"command\": \"outer\", \"n\": \"many\"}");
  CHECK(message_of([&] { load_config(type); }).find("'n'") != std::string::npos);

  const auto gamma = write_tmp("gamma", "{\"command\": \"outer\", \"gamma\": -0.5}");
  CHECK(message_of([&] { load_config(gamma); }).find("gamma") != std::string::npos);

  const auto broken = write_tmp("broken", "{\"command\": ");
  CHECK_THROWS_AS(load_config(broken), DomainError);
  CHECK_THROWS_AS(load_config("/tmp/epdscreen_test_does_not_exist.json"), DomainError);
}

TEST_CASE("comment header echoes the resolved configuration") {
  RunConfig c;
  c.gamma = 0.25;
  const std::string header = config_comment_header(c);
  CHECK(header.find("# command=") != std::string::npos);
  CHECK(header.find("# gamma=0.25") != std::string::npos);
  // every line is a comment
  for (std::size_t pos = 0; pos < header.size();) {
    CHECK(header[pos] == '#');
    pos = header.find('\n', pos);
    if (pos == std::string::npos) break;
    ++pos;
  }
}

TEST_CASE("thread resolution: explicit, environment, fallback") {
  CHECK(resolve_threads(3) == 3);
  setenv("EPD_SCREEN_THREADS", "7", 1);
  CHECK(resolve_threads(0) == 7);
  CHECK(resolve_threads(2) == 2);
  unsetenv("EPD_SCREEN_THREADS");
  CHECK(resolve_threads(0) == 1);
}
