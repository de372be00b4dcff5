#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "twirl/types.hpp"

namespace twirl {

inline bool all_finite(const Mat& a) {
  return a.allFinite();
}

/// Hilbert-Schmidt inner product tr(A^* B).
inline cplx hs_inner(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("hs_inner: dimension mismatch");
  }
  return (a.conjugate().cwiseProduct(b)).sum();
}

inline double hs_norm(const Mat& a) {
  return std::sqrt(std::abs(hs_inner(a, a).real()));
}

/// Ginibre matrix: i.i.d. standard complex Gaussian entries.
inline Mat random_ginibre(int dim, Rng& rng) {
  Mat g(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      g(i, j) = rng.complex_normal();
    }
  }
  return g;
}

/// Random full-rank density operator G G^* / tr(G G^*).
inline Mat random_density(int dim, std::uint64_t seed) {
  if (dim < 1) {
    throw std::invalid_argument("random_density: dim must be >= 1");
  }
  Rng rng(seed);
  const Mat g = random_ginibre(dim, rng);
  Mat rho = g * g.adjoint();
  rho /= rho.trace().real();
  return rho;
}

/// Random operator supported on the top-left k x k block, zero elsewhere.
/// Used for localized states on truncated boson spaces.
inline Mat random_localized(int dim, int block, std::uint64_t seed) {
  if (block < 1 || block > dim) {
    throw std::invalid_argument("random_localized: bad block size");
  }
  Rng rng(seed);
  Mat a = Mat::Zero(dim, dim);
  a.topLeftCorner(block, block) = random_ginibre(block, rng);
  return a;
}

inline Mat random_localized_density(int dim, int block, std::uint64_t seed) {
  Rng rng(seed);
  Mat g = Mat::Zero(dim, dim);
  g.topLeftCorner(block, block) = random_ginibre(block, rng);
  Mat rho = g * g.adjoint();
  rho /= rho.trace().real();
  return rho;
}

struct DensityReport {
  double hermiticity_deviation = 0.0;
  double min_eigenvalue = 0.0;
  double trace_deviation = 0.0;
  bool hermitian_ok = false;
  bool positive_ok = false;
  bool trace_ok = false;

  bool pass() const { return hermitian_ok && positive_ok && trace_ok; }
};

/// Checks the density-operator invariants: Hermiticity, positivity of the
/// spectrum, unit trace. Eigenvalues are taken from the Hermitian part so a
/// 1e-13 asymmetry cannot derail the solver.
inline DensityReport validate_density(const Mat& a, double tol_hermitian,
                                      double tol_eigen, double tol_trace) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("validate_density: operator must be square");
  }
  DensityReport rep;
  rep.hermiticity_deviation = (a - a.adjoint()).cwiseAbs().maxCoeff();
  rep.hermitian_ok = rep.hermiticity_deviation <= tol_hermitian;

  const Mat sym = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
  rep.min_eigenvalue = es.eigenvalues().minCoeff();
  rep.positive_ok = rep.min_eigenvalue >= -tol_eigen;

  rep.trace_deviation = std::abs(a.trace() - cplx(1.0, 0.0));
  rep.trace_ok = rep.trace_deviation <= tol_trace;
  return rep;
}

inline DensityReport validate_density(const Mat& a, double tol) {
  return validate_density(a, tol, tol, tol);
}

/// Validated density operator. Construction enforces the type invariants
/// (Hermitian to 1e-12, spectrum >= -1e-10, unit trace to 1e-12).
class DensityOperator {
 public:
  explicit DensityOperator(Mat rho) : rho_(std::move(rho)) {
    if (!all_finite(rho_)) {
      throw std::invalid_argument("DensityOperator: non-finite entries");
    }
    const DensityReport rep = validate_density(rho_, 1e-12, 1e-10, 1e-12);
    if (!rep.pass()) {
      throw std::invalid_argument("DensityOperator: invariants violated");
    }
  }

  static DensityOperator random(int dim, std::uint64_t seed) {
    return DensityOperator(random_density(dim, seed));
  }

  const Mat& matrix() const { return rho_; }
  int dim() const { return static_cast<int>(rho_.rows()); }

 private:
  Mat rho_;
};

/// JSON form {"dim": n, "re": [[...]], "im": [[...]]}; row-major nested
/// arrays. Round trips are bit-exact for finite doubles.
inline nlohmann::json operator_to_json(const Mat& a) {
  const int n = static_cast<int>(a.rows());
  nlohmann::json re = nlohmann::json::array();
  nlohmann::json im = nlohmann::json::array();
  for (int i = 0; i < n; ++i) {
    nlohmann::json rrow = nlohmann::json::array();
    nlohmann::json irow = nlohmann::json::array();
    for (int j = 0; j < static_cast<int>(a.cols()); ++j) {
      rrow.push_back(a(i, j).real());
      irow.push_back(a(i, j).imag());
    }
    re.push_back(std::move(rrow));
    im.push_back(std::move(irow));
  }
  return {{"dim", n}, {"re", std::move(re)}, {"im", std::move(im)}};
}

inline Mat operator_from_json(const nlohmann::json& j) {
  const int n = j.at("dim").get<int>();
  if (n < 1) {
    throw std::invalid_argument("operator_from_json: dim must be >= 1");
  }
  const auto& re = j.at("re");
  const auto& im = j.at("im");
  if (static_cast<int>(re.size()) != n || static_cast<int>(im.size()) != n) {
    throw std::invalid_argument("operator_from_json: row count mismatch");
  }
  Mat a(n, n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(re[i].size()) != n ||
        static_cast<int>(im[i].size()) != n) {
      throw std::invalid_argument("operator_from_json: column count mismatch");
    }
    for (int jcol = 0; jcol < n; ++jcol) {
      a(i, jcol) = cplx(re[i][jcol].get<double>(), im[i][jcol].get<double>());
    }
  }
  if (!all_finite(a)) {
    throw std::invalid_argument("operator_from_json: non-finite entries");
  }
  return a;
}

}  // namespace twirl
