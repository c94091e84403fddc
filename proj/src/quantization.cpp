// quantization.cpp
#include "qisac/quantization.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qisac {

QuantLossTable QuantLossTable::defaults() {
  QuantLossTable t;
  t.loss = {{1, 0.3634}, {2, 0.1175}, {3, 0.03454},
            {4, 0.009497}, {5, 0.002499}};
  return t;
}

QuantLossTable QuantLossTable::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("quant loss table: cannot open " + path);
  QuantLossTable t;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    int b;
    double rho;
    if (!(ls >> b)) continue;  // blank / comment-only line
    if (!(ls >> rho) || b < 1 || rho <= 0.0 || rho >= 1.0)
      throw std::runtime_error("quant loss table: bad entry at " + path + ":" +
                               std::to_string(lineno));
    t.loss[b] = rho;
  }
  if (t.loss.empty())
    throw std::runtime_error("quant loss table: no entries in " + path);
  double prev = 1.0;
  for (const auto& [b, rho] : t.loss) {
    if (rho > prev)
      throw std::runtime_error(
          "quant loss table: loss must be nonincreasing in bits (" + path +
          ", b=" + std::to_string(b) + ")");
    prev = rho;
  }
  return t;
}

double quant_gain(int bits, const QuantLossTable& table) {
  if (bits < 1) throw std::invalid_argument("quant_gain: bits must be >= 1");
  const auto it = table.loss.find(bits);
  if (it != table.loss.end()) return 1.0 - it->second;
  return 1.0 - (kPi * std::sqrt(3.0) / 2.0) * std::pow(2.0, -2.0 * bits);
}

QuantModel QuantModel::uniform(int n_chains, int bits,
                               const QuantLossTable& t) {
  return per_chain(std::vector<int>(static_cast<size_t>(n_chains), bits), t);
}

QuantModel QuantModel::per_chain(const std::vector<int>& bits,
                                 const QuantLossTable& t) {
  QuantModel m;
  m.bits = bits;
  m.delta = VecR(static_cast<Eigen::Index>(bits.size()));
  for (size_t i = 0; i < bits.size(); ++i)
    m.delta(static_cast<Eigen::Index>(i)) = quant_gain(bits[i], t);
  return m;
}

MatC quant_noise_cov(const VecR& delta, const MatC& r_x, bool diag_only) {
  if (r_x.rows() != r_x.cols() || r_x.rows() != delta.size())
    throw std::invalid_argument("quant_noise_cov: dimension mismatch");
  const MatC herm = 0.5 * (r_x + r_x.adjoint());
  Eigen::SelfAdjointEigenSolver<MatC> es(herm,
                                         Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-9)
    throw std::domain_error("quant_noise_cov: r_x is not PSD");
  const VecR gain =
      (delta.array() * (1.0 - delta.array())).matrix();
  if (diag_only)
    return gain.cwiseProduct(herm.diagonal().real())
        .cast<cxd>()
        .asDiagonal();
  // With per-chain gains the literal product loses Hermitian symmetry, so the
  // Hermitian part is taken; for uniform gains this is the product itself.
  const MatC prod = gain.cast<cxd>().asDiagonal() * herm;
  return 0.5 * (prod + prod.adjoint());
}

MatC tx_covariance(const VecR& delta, const MatC& p) {
  if (p.rows() != delta.size())
    throw std::invalid_argument("tx_covariance: dimension mismatch");
  const MatC dp = delta.cast<cxd>().asDiagonal() * p;
  return dp * dp.adjoint();
}

MatC cov_factor(const MatC& sigma) {
  Eigen::SelfAdjointEigenSolver<MatC> es(0.5 * (sigma + sigma.adjoint()));
  if (es.eigenvalues().minCoeff() < -1e-9)
    throw std::domain_error("cov_factor: covariance is not PSD");
  const VecR lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * lam.cast<cxd>().asDiagonal();
}

VecC apply_aqnm(const VecC& x, const VecR& delta, const MatC& sigma,
                Rng& rng) {
  if (x.size() != delta.size())
    throw std::invalid_argument("apply_aqnm: dimension mismatch");
  const MatC f = cov_factor(sigma);
  VecC eps(x.size());
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps(i) = rng.cnormal();
  return delta.cast<cxd>().asDiagonal() * x + f * eps;
}

}  // namespace qisac
