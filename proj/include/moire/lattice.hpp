#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace moire {

// Exact rational lattice mismatch in [0, 1), reduced to lowest terms.
class Mismatch {
 public:
  Mismatch() = default;
  Mismatch(std::int64_t num, std::int64_t den);

  // Accepts "num/den" or "0"; anything with a decimal point is rejected.
  static Mismatch parse(const std::string& s);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  bool is_zero() const { return num_ == 0; }
  std::string str() const;

  friend bool operator==(const Mismatch&, const Mismatch&) = default;

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

struct SupercellSpec {
  std::int64_t p = 1;
  std::int64_t q = 1;
  Mismatch theta;
  double shift_d = 0.0;
  std::vector<double> tau1;
  std::vector<double> tau2;
  double moire_length = 0.0;  // NaN when theta == 0
  double reciprocal_length = 0.0;

  std::size_t orbitals() const { return tau1.size() + tau2.size(); }
  // Index of the home orbital (layer-2 orbital 0) in the supercell ordering.
  std::size_t home_orbital() const { return tau1.size(); }
  bool has_moire_length() const;
};

SupercellSpec commensurate_cell(const Mismatch& theta);

// theta * x mod (1 - theta), in [0, 1 - theta).
double disregistry(double x, const Mismatch& theta);

}  // namespace moire
