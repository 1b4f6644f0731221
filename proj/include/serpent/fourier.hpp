#ifndef SERPENT_FOURIER_HPP
#define SERPENT_FOURIER_HPP

#include <Eigen/Core>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "serpent/errors.hpp"

namespace serpent {

template <class Scalar>
constexpr Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;

// Wraps an angle to [0, 2*pi).
template <class Scalar>
Scalar wrap_two_pi(Scalar a) {
  Scalar w = a - two_pi<Scalar> * std::floor(a / two_pi<Scalar>);
  return w == two_pi<Scalar> ? Scalar(0) : w;
}

// Wraps an angular difference to (-pi, pi].
template <class Scalar>
Scalar wrap_pi(Scalar a) {
  Scalar w = a - two_pi<Scalar> * std::floor(a / two_pi<Scalar>);
  return w > std::numbers::pi_v<Scalar> ? w - two_pi<Scalar> : w;
}

// sin(k*theta), cos(k*theta) for k = 1..kmax from a single sincos pair via
// the angle-addition recurrence.
template <class Scalar>
void harmonics(Scalar theta, int kmax, Scalar* s, Scalar* c) {
  const Scalar s1 = std::sin(theta);
  const Scalar c1 = std::cos(theta);
  s[0] = s1;
  c[0] = c1;
  for (int k = 1; k < kmax; ++k) {
    s[k] = s[k - 1] * c1 + c[k - 1] * s1;
    c[k] = c[k - 1] * c1 - s[k - 1] * s1;
  }
}

// Circular mean of a sample of angles: arg of the mean resultant vector.
template <class Derived>
double circular_mean(const Eigen::DenseBase<Derived>& theta) {
  std::complex<double> z(0.0, 0.0);
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    z += std::polar(1.0, static_cast<double>(theta(i)));
  return std::arg(z);
}

// Modulus of the mean resultant vector (1 = fully synchronized).
template <class Derived>
double circular_resultant(const Eigen::DenseBase<Derived>& theta) {
  std::complex<double> z(0.0, 0.0);
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    z += std::polar(1.0, static_cast<double>(theta(i)));
  return std::abs(z) / static_cast<double>(theta.size());
}

// One term of a real Fourier basis on the circle: sin(k*theta) or
// cos(k*theta), k >= 0 (cos0 is the constant function).
struct FourierTerm {
  enum class Kind { Sin, Cos };
  Kind kind;
  int harmonic;

  bool operator==(const FourierTerm&) const = default;
};

// An ordered list of Fourier terms with vectorized evaluation.  Text form
// is a comma-separated list like "sin1,sin2,cos2".
class FourierBasis {
 public:
  FourierBasis() = default;
  explicit FourierBasis(std::vector<FourierTerm> terms)
      : terms_(std::move(terms)) {
    for (const auto& t : terms_)
      kmax_ = std::max(kmax_, t.harmonic);
  }

  static FourierBasis parse(std::string_view text);

  int size() const { return static_cast<int>(terms_.size()); }
  int max_harmonic() const { return kmax_; }
  const std::vector<FourierTerm>& terms() const { return terms_; }

  // Values of every term at theta.
  void eval(double theta, Eigen::Ref<Eigen::VectorXd> out) const {
    double s[kMaxSupported], c[kMaxSupported];
    harmonics(theta, kmax_, s, c);
    read_values(s, c, out);
  }

  Eigen::VectorXd eval(double theta) const {
    Eigen::VectorXd out(size());
    eval(theta, out);
    return out;
  }

  // First derivatives d/dtheta of every term at theta.
  void eval_derivative(double theta, Eigen::Ref<Eigen::VectorXd> out) const {
    double s[kMaxSupported], c[kMaxSupported];
    harmonics(theta, kmax_, s, c);
    read_derivatives(s, c, out);
  }

  Eigen::VectorXd eval_derivative(double theta) const {
    Eigen::VectorXd out(size());
    eval_derivative(theta, out);
    return out;
  }

  // Reads term values from precomputed harmonics s[k-1]=sin(k th),
  // c[k-1]=cos(k th); lets callers share one sincos across bases.
  void read_values(const double* s, const double* c,
                   Eigen::Ref<Eigen::VectorXd> out) const {
    for (int i = 0; i < size(); ++i) {
      const auto& t = terms_[i];
      if (t.harmonic == 0)
        out[i] = t.kind == FourierTerm::Kind::Cos ? 1.0 : 0.0;
      else
        out[i] = t.kind == FourierTerm::Kind::Sin ? s[t.harmonic - 1]
                                                  : c[t.harmonic - 1];
    }
  }

  void read_derivatives(const double* s, const double* c,
                        Eigen::Ref<Eigen::VectorXd> out) const {
    for (int i = 0; i < size(); ++i) {
      const auto& t = terms_[i];
      if (t.harmonic == 0) {
        out[i] = 0.0;
      } else {
        const double k = t.harmonic;
        out[i] = t.kind == FourierTerm::Kind::Sin ? k * c[t.harmonic - 1]
                                                  : -k * s[t.harmonic - 1];
      }
    }
  }

  std::string str() const;

  bool operator==(const FourierBasis&) const = default;

  static constexpr int kMaxSupported = 16;

 private:
  std::vector<FourierTerm> terms_;
  int kmax_ = 0;
};

inline FourierBasis FourierBasis::parse(std::string_view text) {
  std::vector<FourierTerm> terms;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    std::string_view tok = text.substr(pos, comma - pos);
    while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
    FourierTerm term;
    if (tok.starts_with("sin"))
      term.kind = FourierTerm::Kind::Sin;
    else if (tok.starts_with("cos"))
      term.kind = FourierTerm::Kind::Cos;
    else
      throw ConfigError("bad Fourier term '" + std::string(tok) + "'");
    int k = 0;
    for (char ch : tok.substr(3)) {
      if (ch < '0' || ch > '9')
        throw ConfigError("bad Fourier harmonic in '" + std::string(tok) + "'");
      k = 10 * k + (ch - '0');
    }
    if (tok.size() == 3 || k > kMaxSupported)
      throw ConfigError("bad Fourier harmonic in '" + std::string(tok) + "'");
    term.harmonic = k;
    terms.push_back(term);
    pos = comma + 1;
  }
  if (terms.empty()) throw ConfigError("empty Fourier basis");
  return FourierBasis(std::move(terms));
}

inline std::string FourierBasis::str() const {
  std::string out;
  for (int i = 0; i < size(); ++i) {
    if (i) out += ',';
    out += terms_[i].kind == FourierTerm::Kind::Sin ? "sin" : "cos";
    out += std::to_string(terms_[i].harmonic);
  }
  return out;
}

}  // namespace serpent

#endif  // SERPENT_FOURIER_HPP
