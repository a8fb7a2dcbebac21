#include <filesystem>
#include <random>

#include "doctest.h"
#include "moire/error.hpp"
#include "moire/io.hpp"

using namespace moire;

namespace {

LdosImage sample_image() {
  const auto g = gaussian_kernel(1.5, 8, 5.0);
  return ldos_image(ModelParams{0.1, 0.7, 0.3, 0.6}, Mismatch(1, 3), LdosGrid::uniform(4, -1.0, 1.0, 7, true), g, 4, 4);
}

}  // namespace

TEST_CASE("CSV layout and lossless round trip") {
  const auto img = sample_image();
  const auto text = image_to_csv(img);
  CHECK(text.rfind("d/E,", 0) == 0);
  const auto back = image_from_csv(text);
  CHECK(back.grid.d_values == img.grid.d_values);
  CHECK(back.grid.E_values == img.grid.E_values);
  CHECK((back.values - img.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK(image_to_csv(back) == text);
}

TEST_CASE("17 significant digits survive") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, (i % 40) - 20);
    CHECK(std::stod(format_g17(v)) == v);
  }
}

TEST_CASE("corrupted CSV is an I/O error") {
  auto is_io = [](const std::string& text) {
    try {
      image_from_csv(text);
    } catch (const Error& e) {
      return e.kind() == ErrorKind::Io;
    }
    return false;
  };
  CHECK(is_io(""));
  CHECK(is_io("d/E,0,1\n"));
  CHECK(is_io("d/E,0,1\n0,1\n"));
  CHECK(is_io("d/E,0,1\n0,1,abc\n"));
  CHECK(is_io("d/E,0,1\n0,1,nan\n"));
  CHECK(is_io("d/E,1,0\n0,1,2\n"));
}

TEST_CASE("JSON envelope round trip") {
  const auto img = sample_image();
  const auto env = image_envelope(img, "cafe");
  CHECK(env.at("schema_version") == kSchemaVersion);
  CHECK(env.at("config_hash") == "cafe");
  const auto back = image_from_envelope(nlohmann::json::parse(env.dump()));
  CHECK((back.values - img.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.theta == img.theta);
  CHECK(back.provenance.kernel.coeffs == img.provenance.kernel.coeffs);
  CHECK(back.provenance.kernel.support_radius == img.provenance.kernel.support_radius);
  CHECK(back.provenance.M == img.provenance.M);
  CHECK(back.provenance.trunc_c == img.provenance.trunc_c);
  auto wrong = env;
  wrong["schema_version"] = 99;
  CHECK_THROWS_AS(image_from_envelope(wrong), Error);
}

TEST_CASE("file dispatch and parameter JSON") {
  const auto dir = std::filesystem::temp_directory_path() / "moire_io_test";
  std::filesystem::remove_all(dir);
  ensure_dir((dir / "a/b").string());
  const auto img = sample_image();
  write_image_csv((dir / "a/b/x.csv").string(), img);
  write_text((dir / "a/b/x.json").string(), image_envelope(img, "h").dump());
  CHECK((read_image((dir / "a/b/x.csv").string()).values - img.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK(read_image((dir / "a/b/x.json").string()).theta == Mismatch(1, 3));
  CHECK_THROWS_AS(read_image((dir / "nope.csv").string()), Error);
  ModelParams p{0.1, 0.2, 0.3, 0.4, Profile::TruncatedAnalytic, 5};
  const auto q = params_from_json(to_json(p));
  CHECK(q.r0 == 5);
  CHECK(q.profile == Profile::TruncatedAnalytic);
  CHECK(q.l == 0.4);
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(hash_hex("abc").size() == 16);
  std::filesystem::remove_all(dir);
}
