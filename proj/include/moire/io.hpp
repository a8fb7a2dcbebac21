#pragma once

#include <cstdint>
#include "json.hpp"
#include <string>

#include "moire/hamiltonian.hpp"
#include "moire/inverse.hpp"
#include "moire/kernel.hpp"
#include "moire/ldos.hpp"

namespace moire {

inline constexpr int kSchemaVersion = 1;

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);
void ensure_dir(const std::string& dir);

std::uint64_t fnv1a64(const std::string& bytes);
std::string hash_hex(const std::string& bytes);

std::string format_g17(double v);

// Row 1: corner label then E values; column 1: d values.
std::string image_to_csv(const LdosImage& image);
LdosImage image_from_csv(const std::string& text);
void write_image_csv(const std::string& path, const LdosImage& image);
LdosImage read_image_csv(const std::string& path);

nlohmann::json to_json(const ModelParams& p);
ModelParams params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DeltaKernel& k);
DeltaKernel kernel_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ParamBox& b);

nlohmann::json image_envelope(const LdosImage& image, const std::string& config_hash);
LdosImage image_from_envelope(const nlohmann::json& j);

// Dispatches on extension: .json envelope or .csv.
LdosImage read_image(const std::string& path);

}  // namespace moire
