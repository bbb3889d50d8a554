#include "bindlab/basis_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace bindlab {

BasisFormatError::BasisFormatError(int line, const std::string& what)
    : ConfigurationError("basis file line " + std::to_string(line) + ": " + what), line_(line) {}

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class LineReader {
 public:
  explicit LineReader(std::istream& is) : is_(is) {}

  // Next non-comment, non-blank line split into tokens.
  std::vector<std::string> next(const char* expecting) {
    std::string s;
    while (std::getline(is_, s)) {
      ++line_;
      const auto first = s.find_first_not_of(" \t\r");
      if (first == std::string::npos || s[first] == '#') continue;
      std::istringstream ss(s);
      std::vector<std::string> tok;
      for (std::string t; ss >> t;) tok.push_back(t);
      return tok;
    }
    throw BasisFormatError(line_ + 1, std::string("unexpected end of file, expected ") + expecting);
  }

  int line() const { return line_; }

 private:
  std::istream& is_;
  int line_ = 0;
};

double parse_double(const std::string& t, int line) {
  double v = 0.0;
  const auto* end = t.data() + t.size();
  const auto r = std::from_chars(t.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end || !std::isfinite(v)) {
    throw BasisFormatError(line, "malformed number '" + t + "'");
  }
  return v;
}

long parse_int(const std::string& t, int line) {
  long v = 0;
  const auto* end = t.data() + t.size();
  const auto r = std::from_chars(t.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) throw BasisFormatError(line, "malformed integer '" + t + "'");
  return v;
}

long keyed(LineReader& rd, const std::string& key) {
  const auto tok = rd.next(key.c_str());
  if (tok.size() != 2 || tok[0] != key) {
    throw BasisFormatError(rd.line(), "expected '" + key + " <count>'");
  }
  return parse_int(tok[1], rd.line());
}

}  // namespace

void write_basis(std::ostream& os, const BasisSet& basis, const std::vector<Vector>& coeffs) {
  const int n = basis.n_particles();
  os << "bindlab-basis " << kBasisFormatVersion << "\n";
  os << "n_particles " << n << "\n";
  os << "symmetrization " << (basis.symmetrization() == Symmetrization::bosonic ? "bosonic" : "none")
     << "\n";
  os << "elements " << basis.size() << "\n";
  for (const auto& g : basis.elements()) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) os << (i || j ? " " : "") << fmt(g.corr()(i, j));
    }
    os << "\n";
  }
  os << "coefficients " << coeffs.size() << "\n";
  for (const auto& c : coeffs) {
    if (static_cast<std::size_t>(c.size()) != basis.size()) {
      throw ConfigurationError("coefficient vector length does not match the basis size");
    }
    for (Eigen::Index k = 0; k < c.size(); ++k) os << (k ? " " : "") << fmt(c[k]);
    os << "\n";
  }
}

PersistedBasis read_basis(std::istream& is) {
  LineReader rd(is);
  {
    const auto tok = rd.next("header");
    if (tok.size() != 2 || tok[0] != "bindlab-basis") {
      throw BasisFormatError(rd.line(), "missing 'bindlab-basis <version>' header");
    }
    const long v = parse_int(tok[1], rd.line());
    if (v != kBasisFormatVersion) {
      throw BasisFormatError(rd.line(), "unsupported format version " + tok[1] + " (expected " +
                                            std::to_string(kBasisFormatVersion) + ")");
    }
  }
  const long n = keyed(rd, "n_particles");
  if (n < 1 || n > kMaxParticles) throw BasisFormatError(rd.line(), "n_particles out of range");
  Symmetrization sym = Symmetrization::none;
  {
    const auto tok = rd.next("symmetrization");
    if (tok.size() != 2 || tok[0] != "symmetrization" || (tok[1] != "none" && tok[1] != "bosonic")) {
      throw BasisFormatError(rd.line(), "expected 'symmetrization none|bosonic'");
    }
    sym = tok[1] == "bosonic" ? Symmetrization::bosonic : Symmetrization::none;
  }
  const long k = keyed(rd, "elements");
  if (k < 0) throw BasisFormatError(rd.line(), "negative element count");
  std::vector<CorrelatedGaussian> elems;
  elems.reserve(static_cast<std::size_t>(k));
  for (long e = 0; e < k; ++e) {
    const auto tok = rd.next("correlation matrix");
    if (static_cast<long>(tok.size()) != n * n) {
      throw BasisFormatError(rd.line(), "expected " + std::to_string(n * n) + " matrix entries, got " +
                                            std::to_string(tok.size()));
    }
    SmallMatrix A(n, n);
    for (long i = 0; i < n; ++i) {
      for (long j = 0; j < n; ++j) A(i, j) = parse_double(tok[i * n + j], rd.line());
    }
    try {
      elems.emplace_back(A);
    } catch (const ConstructionError& ex) {
      throw BasisFormatError(rd.line(), ex.what());
    }
  }
  const long m = keyed(rd, "coefficients");
  if (m < 0) throw BasisFormatError(rd.line(), "negative coefficient count");
  PersistedBasis out;
  out.basis = BasisSet(static_cast<int>(n), sym, std::move(elems));
  for (long c = 0; c < m; ++c) {
    const auto tok = rd.next("coefficient vector");
    if (static_cast<long>(tok.size()) != k) {
      throw BasisFormatError(rd.line(), "expected " + std::to_string(k) + " coefficients, got " +
                                            std::to_string(tok.size()));
    }
    Vector v(k);
    for (long i = 0; i < k; ++i) v[i] = parse_double(tok[i], rd.line());
    out.coeffs.push_back(std::move(v));
  }
  std::string rest;
  for (int ln = rd.line() + 1; std::getline(is, rest); ++ln) {
    const auto first = rest.find_first_not_of(" \t\r");
    if (first != std::string::npos && rest[first] != '#') {
      throw BasisFormatError(ln, "trailing content after coefficients");
    }
  }
  return out;
}

void save_basis(const std::string& path, const BasisSet& basis, const std::vector<Vector>& coeffs) {
  std::ofstream os(path);
  if (!os) throw ConfigurationError("cannot write basis file " + path);
  write_basis(os, basis, coeffs);
  if (!os) throw ConfigurationError("failed writing basis file " + path);
}

PersistedBasis load_basis(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigurationError("cannot read basis file " + path);
  return read_basis(is);
}

}  // namespace bindlab
