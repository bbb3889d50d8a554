#pragma once

// Versioned plain-text basis files:
//
//   bindlab-basis 1
//   n_particles <N>
//   symmetrization <none|bosonic>
//   elements <K>
//   <K lines, N*N correlation entries each, row-major>
//   coefficients <M>
//   <M lines, K coefficients each>
//
// Numbers are written with 17 significant digits, so a round trip is exact.
// Lines starting with '#' are comments.

#include <iosfwd>
#include <string>
#include <vector>

#include "bindlab/cg_engine.hpp"

namespace bindlab {

inline constexpr int kBasisFormatVersion = 1;

class BasisFormatError : public ConfigurationError {
 public:
  BasisFormatError(int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

struct PersistedBasis {
  BasisSet basis{1};
  std::vector<Vector> coeffs;
};

void write_basis(std::ostream& os, const BasisSet& basis, const std::vector<Vector>& coeffs = {});
PersistedBasis read_basis(std::istream& is);

void save_basis(const std::string& path, const BasisSet& basis,
                const std::vector<Vector>& coeffs = {});
PersistedBasis load_basis(const std::string& path);

}  // namespace bindlab
