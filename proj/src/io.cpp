#include "moire/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "moire/error.hpp"

namespace moire {

namespace fs = std::filesystem;

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open \"" + path + "\"");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ensure_dir(const std::string& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create directory \"" + dir + "\": " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
  ensure_dir(fs::path(path).parent_path().string());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write \"" + path + "\"");
  out << text;
  if (!out) fail(ErrorKind::Io, "write failed for \"" + path + "\"");
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hash_hex(const std::string& bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string image_to_csv(const LdosImage& image) {
  std::string s = "d/E";
  for (double E : image.grid.E_values) s += "," + format_g17(E);
  s += "\n";
  for (Eigen::Index i = 0; i < image.values.rows(); ++i) {
    s += format_g17(image.grid.d_values[i]);
    for (Eigen::Index j = 0; j < image.values.cols(); ++j) s += "," + format_g17(image.values(i, j));
    s += "\n";
  }
  return s;
}

static double parse_cell(const std::string& cell, int line) {
  const char* b = cell.c_str();
  char* end = nullptr;
  const double v = std::strtod(b, &end);
  if (cell.empty() || end != b + cell.size())
    fail(ErrorKind::Io, "corrupted CSV at line " + std::to_string(line) + ": \"" + cell + "\"");
  return v;
}

static std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

LdosImage image_from_csv(const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(split(line));
  }
  if (rows.size() < 2 || rows[0].size() < 2) fail(ErrorKind::Io, "corrupted CSV: need a header row and data rows");
  LdosImage img;
  const std::size_t ne = rows[0].size() - 1;
  for (std::size_t j = 1; j <= ne; ++j) img.grid.E_values.push_back(parse_cell(rows[0][j], 1));
  img.values.resize(static_cast<Eigen::Index>(rows.size() - 1), static_cast<Eigen::Index>(ne));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != ne + 1)
      fail(ErrorKind::Io, "corrupted CSV at line " + std::to_string(i + 1) + ": wrong column count");
    img.grid.d_values.push_back(parse_cell(rows[i][0], static_cast<int>(i + 1)));
    for (std::size_t j = 0; j < ne; ++j)
      img.values(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j)) =
          parse_cell(rows[i][j + 1], static_cast<int>(i + 1));
  }
  try {
    img.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Io, std::string("corrupted CSV: ") + e.what());
  }
  return img;
}

void write_image_csv(const std::string& path, const LdosImage& image) { write_text(path, image_to_csv(image)); }

LdosImage read_image_csv(const std::string& path) { return image_from_csv(read_text(path)); }

nlohmann::json to_json(const ModelParams& p) {
  nlohmann::json j{{"epsilon", p.epsilon}, {"t", p.t}, {"nu", p.nu}, {"l", p.l}, {"profile", to_string(p.profile)}};
  if (p.profile == Profile::TruncatedAnalytic) j["r0"] = p.r0;
  return j;
}

ModelParams params_from_json(const nlohmann::json& j) {
  ModelParams p;
  p.epsilon = j.at("epsilon").get<double>();
  p.t = j.at("t").get<double>();
  p.nu = j.at("nu").get<double>();
  p.l = j.at("l").get<double>();
  if (j.contains("profile")) p.profile = parse_profile(j.at("profile").get<std::string>());
  if (j.contains("r0")) p.r0 = j.at("r0").get<int>();
  return p;
}

nlohmann::json to_json(const DeltaKernel& k) {
  return {{"sigma", k.sigma},
          {"n_poly", k.n_poly},
          {"support_radius", k.support_radius},
          {"max_fit_error", k.max_fit_error},
          {"coeffs", k.coeffs}};
}

DeltaKernel kernel_from_json(const nlohmann::json& j) {
  DeltaKernel k = DeltaKernel::from_monomials(j.at("coeffs").get<std::vector<double>>(), j.at("sigma").get<double>(),
                                              j.at("support_radius").get<double>());
  if (j.contains("max_fit_error")) k.max_fit_error = j.at("max_fit_error").get<double>();
  require(k.n_poly == j.at("n_poly").get<int>(), "kernel n_poly disagrees with its coefficients");
  return k;
}

nlohmann::json to_json(const ParamBox& b) {
  return {{"epsilon", b.epsilon}, {"t", b.t}, {"nu", b.nu}, {"l", b.l}};
}

nlohmann::json image_envelope(const LdosImage& image, const std::string& config_hash) {
  nlohmann::json values = nlohmann::json::array();
  for (Eigen::Index i = 0; i < image.values.rows(); ++i) {
    std::vector<double> row(image.values.cols());
    for (Eigen::Index j = 0; j < image.values.cols(); ++j) row[j] = image.values(i, j);
    values.push_back(row);
  }
  nlohmann::json prov{{"M", image.provenance.M}, {"trunc_c", image.provenance.trunc_c}};
  if (image.provenance.kernel.n_poly > 0) prov["kernel"] = to_json(image.provenance.kernel);
  return {{"schema_version", kSchemaVersion},
          {"kind", "ldos_image"},
          {"theta", image.theta.str()},
          {"d_values", image.grid.d_values},
          {"E_values", image.grid.E_values},
          {"values", values},
          {"provenance", prov},
          {"config_hash", config_hash}};
}

LdosImage image_from_envelope(const nlohmann::json& j) {
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion) fail(ErrorKind::Io, "unsupported schema_version");
    LdosImage img;
    img.theta = Mismatch::parse(j.at("theta").get<std::string>());
    img.grid.d_values = j.at("d_values").get<std::vector<double>>();
    img.grid.E_values = j.at("E_values").get<std::vector<double>>();
    const auto& rows = j.at("values");
    img.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(img.grid.E_values.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto r = rows[i].get<std::vector<double>>();
      require(r.size() == img.grid.E_values.size(), "envelope row length mismatch");
      for (std::size_t k = 0; k < r.size(); ++k) img.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = r[k];
    }
    const auto& p = j.at("provenance");
    img.provenance.M = p.at("M").get<int>();
    img.provenance.trunc_c = p.at("trunc_c").get<int>();
    if (p.contains("kernel")) img.provenance.kernel = kernel_from_json(p.at("kernel"));
    img.validate();
    return img;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Io, std::string("malformed image envelope: ") + e.what());
  } catch (const Error& e) {
    fail(ErrorKind::Io, std::string("malformed image envelope: ") + e.what());
  }
}

LdosImage read_image(const std::string& path) {
  if (fs::path(path).extension() == ".json") {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorKind::Io, "malformed JSON in \"" + path + "\": " + e.what());
    }
    return image_from_envelope(j);
  }
  return read_image_csv(path);
}

}  // namespace moire
