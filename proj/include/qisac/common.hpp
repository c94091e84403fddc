// common.hpp
// Shared aliases, constants and the seeded RNG used across the toolkit.
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <random>

namespace qisac {

using cxd = std::complex<double>;
using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;
using MatR = Eigen::MatrixXd;
using VecR = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLn2 = 0.69314718055994530942;

/// Deterministic random source.  Every stochastic routine takes one of
/// these explicitly so that a run is reproducible from its seed list.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Standard normal draw.
  double normal() { return normal_(eng_); }
  /// Uniform draw on [a, b).
  double uniform(double a = 0.0, double b = 1.0) {
    return a + (b - a) * unit_(eng_);
  }
  /// Circularly-symmetric complex normal with unit variance
  /// (variance 1/2 per real component).
  cxd cnormal() {
    const double s = 1.0 / std::sqrt(2.0);
    return {s * normal(), s * normal()};
  }
  /// Uniform integer on [0, n).
  std::uint64_t index(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(eng_);
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

/// dB helpers (power quantities).
inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
inline double lin_to_db(double lin) { return 10.0 * std::log10(lin); }

}  // namespace qisac
