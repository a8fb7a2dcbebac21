#include "config.hpp"
#include "doctest.h"
#include "moire/error.hpp"

using namespace moire;
using moire::cli::parse_config;

namespace {

std::string error_of(const std::string& cmd, const std::string& text) {
  try {
    parse_config(cmd, text);
  } catch (const Error& e) {
    CHECK(e.exit_code() == 2);
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("valid forward config") {
  const auto c = parse_config("forward", R"({"theta": "1/21", "model": {"t": 0.8}, "grid": {"n_e": 33}})");
  CHECK(c.theta->den() == 21);
  CHECK(c.model.t == 0.8);
  CHECK(c.grid.n_e == 33);
  CHECK(c.hash.size() == 16);
  CHECK(c.hash == parse_config("forward", R"({"theta": "1/21", "model": {"t": 0.8}, "grid": {"n_e": 33}})").hash);
}

TEST_CASE("config errors are line anchored") {
  const std::string text = "{\n  \"theta\": \"0/1\",\n  \"grid\": {\n    \"n_dd\": 4\n  }\n}\n";
  const auto e = error_of("forward", text);
  CHECK(e.find("config line 4") != std::string::npos);
  CHECK(e.find("grid.n_dd") != std::string::npos);
  CHECK(error_of("forward", "{\n\"theta\": 0.05\n}").find("config line 2: theta") != std::string::npos);
  CHECK(error_of("forward", "{\n\"theta\": \"0/1\",\n\"kernel\": {\"n_poly\": 7}\n}").find("config line 3") != std::string::npos);
  CHECK(error_of("forward", "{\"theta\": \"0/1\",\n\n\"numerics\": {\"M\": 0}}").find("config line 3") != std::string::npos);
  CHECK(error_of("forward", "{\n\"theta\": \"0/1\",,\n}").find("malformed JSON") != std::string::npos);
  CHECK(error_of("forward", "{}").find("theta") != std::string::npos);
  CHECK(error_of("train", R"({"theta": "0/1"})").find("not used by command") != std::string::npos);
  CHECK(error_of("invert", R"({"paths": {"image": "x.csv"}, "box": {"t": [2, 1]}})").find("box") != std::string::npos);
  CHECK(error_of("invert", R"({"paths": {"image": "x.csv"}, "inverse": {"mode": "discrete"}})").find("param_set") != std::string::npos);
  CHECK_FALSE(error_of("eval", R"({"paths": {"dataset_dir": "d"}})").empty());
}

TEST_CASE("help lists every key") {
  const auto h = moire::cli::config_key_help();
  for (const char* k : {"theta", "model.l", "grid.force_d_points", "kernel.support_radius", "numerics.trunc_c", "box.nu",
                        "inverse.param_set", "twist.theta_target", "dataset.seed", "training.k", "bench.m_values", "paths.net"})
    CHECK(h.find(k) != std::string::npos);
}
