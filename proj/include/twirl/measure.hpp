#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "twirl/group.hpp"
#include "twirl/types.hpp"

namespace twirl {

/// Weighted atoms; weights nonnegative, summing to 1 within 1e-12.
struct DiscreteMeasure {
  GroupKind kind = GroupKind::finite;
  int d = 0;  // finite only
  std::vector<std::pair<GroupElement, double>> atoms;
};

/// Mean and covariance of a Gaussian measure on the plane.
struct GaussianMeasure {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
};

class ProbabilityMeasure {
 public:
  static ProbabilityMeasure discrete(DiscreteMeasure m) {
    double total = 0.0;
    for (const auto& [g, w] : m.atoms) {
      if (w < 0.0) throw std::invalid_argument("measure: negative weight");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw std::invalid_argument("measure: weights must sum to 1");
    }
    return ProbabilityMeasure(std::move(m));
  }

  static ProbabilityMeasure gaussian(const Eigen::Vector2d& mean,
                                     const Eigen::Matrix2d& cov) {
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw std::invalid_argument("measure: covariance must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
    if (es.eigenvalues().minCoeff() < -1e-12) {
      throw std::invalid_argument("measure: covariance must be PSD");
    }
    GaussianMeasure g{mean, 0.5 * (cov + cov.transpose())};
    return ProbabilityMeasure(std::move(g));
  }

  static ProbabilityMeasure dirac(const GroupContext& ctx,
                                  const GroupElement& g) {
    require_same_kind(ctx, g);
    DiscreteMeasure m{ctx.kind, ctx.d, {{g, 1.0}}};
    return ProbabilityMeasure(std::move(m));
  }

  bool is_discrete() const {
    return std::holds_alternative<DiscreteMeasure>(rep_);
  }
  bool is_gaussian() const {
    return std::holds_alternative<GaussianMeasure>(rep_);
  }
  const DiscreteMeasure& as_discrete() const {
    return std::get<DiscreteMeasure>(rep_);
  }
  const GaussianMeasure& as_gaussian() const {
    return std::get<GaussianMeasure>(rep_);
  }

  GroupKind group_kind() const {
    if (is_gaussian()) return GroupKind::plane;
    return as_discrete().kind;
  }

 private:
  explicit ProbabilityMeasure(DiscreteMeasure m) : rep_(std::move(m)) {}
  explicit ProbabilityMeasure(GaussianMeasure m) : rep_(std::move(m)) {}
  std::variant<DiscreteMeasure, GaussianMeasure> rep_;
};

namespace detail {

struct ElementKey {
  long long x;
  long long y;
  bool operator<(const ElementKey& o) const {
    return x != o.x ? x < o.x : y < o.y;
  }
};

inline ElementKey key_of(const GroupElement& g) {
  if (const auto* f = std::get_if<FinitePoint>(&g)) {
    return {f->a, f->b};
  }
  const auto& p = std::get<PlanePoint>(g);
  // Plane atoms are keyed on a 1e-9 lattice; discrete plane measures are
  // only meaningful for exactly representable supports (point masses).
  return {llround(p.q * 1e9), llround(p.p * 1e9)};
}

}  // namespace detail

/// Convolution (mu * nu)(g) = sum_h mu(h) nu(h^{-1} g); Gaussian parameters
/// add. Mixed discrete/Gaussian forms are rejected.
inline ProbabilityMeasure convolve(const ProbabilityMeasure& mu,
                                   const ProbabilityMeasure& nu) {
  if (mu.group_kind() != nu.group_kind()) {
    throw std::invalid_argument("convolve: measures on different groups");
  }
  if (mu.is_discrete() && nu.is_discrete()) {
    const auto& a = mu.as_discrete();
    const auto& b = nu.as_discrete();
    GroupContext ctx = a.kind == GroupKind::finite ? GroupContext::finite(a.d)
                                                   : GroupContext::plane();
    std::map<detail::ElementKey, std::pair<GroupElement, double>> acc;
    for (const auto& [g, w] : a.atoms) {
      for (const auto& [h, v] : b.atoms) {
        const GroupElement gh = ctx.compose(g, h);
        auto [it, inserted] =
            acc.try_emplace(detail::key_of(gh), std::make_pair(gh, 0.0));
        it->second.second += w * v;
      }
    }
    DiscreteMeasure out{a.kind, a.d, {}};
    out.atoms.reserve(acc.size());
    for (auto& [k, gv] : acc) out.atoms.push_back(std::move(gv));
    return ProbabilityMeasure::discrete(std::move(out));
  }
  if (mu.is_gaussian() && nu.is_gaussian()) {
    const auto& a = mu.as_gaussian();
    const auto& b = nu.as_gaussian();
    return ProbabilityMeasure::gaussian(a.mean + b.mean, a.cov + b.cov);
  }
  throw std::invalid_argument("convolve: mixed discrete/gaussian forms");
}

/// Adjoint measure: mass of g moved to g^{-1} (mean negated for Gaussians).
inline ProbabilityMeasure adjoint_measure(const ProbabilityMeasure& mu) {
  if (mu.is_gaussian()) {
    const auto& g = mu.as_gaussian();
    return ProbabilityMeasure::gaussian(-g.mean, g.cov);
  }
  const auto& m = mu.as_discrete();
  GroupContext ctx = m.kind == GroupKind::finite ? GroupContext::finite(m.d)
                                                 : GroupContext::plane();
  DiscreteMeasure out{m.kind, m.d, {}};
  out.atoms.reserve(m.atoms.size());
  for (const auto& [g, w] : m.atoms) {
    out.atoms.emplace_back(ctx.inverse(g), w);
  }
  return ProbabilityMeasure::discrete(std::move(out));
}

/// Compound-Poisson measure at time t: exp(t lambda (P_nu - I)) delta_e in
/// the d^2-dimensional group algebra, computed by exact matrix exponential.
inline ProbabilityMeasure compound_poisson_at(const ProbabilityMeasure& base,
                                              double rate, double t) {
  if (!base.is_discrete() || base.group_kind() != GroupKind::finite) {
    throw std::invalid_argument(
        "compound_poisson_at: base must be discrete on the finite group");
  }
  if (rate <= 0.0) throw std::invalid_argument("compound_poisson_at: rate <= 0");
  if (t < 0.0) throw std::invalid_argument("compound_poisson_at: t < 0");

  const auto& nu = base.as_discrete();
  const int d = nu.d;
  GroupContext ctx = GroupContext::finite(d);
  if (t == 0.0) return ProbabilityMeasure::dirac(ctx, ctx.identity());

  const int n = d * d;
  auto index_of = [d](const FinitePoint& g) { return g.a * d + g.b; };

  Eigen::MatrixXd gen = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [h, w] : nu.atoms) {
    const auto& hp = std::get<FinitePoint>(h);
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) {
        const FinitePoint g{a, b};
        const auto gh = std::get<FinitePoint>(ctx.compose(GroupElement{g}, GroupElement{hp}));
        gen(index_of(gh), index_of(g)) += w;
      }
    }
  }
  gen -= Eigen::MatrixXd::Identity(n, n);
  gen *= rate * t;
  const Eigen::MatrixXd et = gen.exp();

  DiscreteMeasure out{GroupKind::finite, d, {}};
  out.atoms.reserve(n);
  double total = 0.0;
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      double w = et(a * d + b, 0);  // column of delta_e = index (0,0)
      if (w < 0.0) {
        if (w < -1e-12) {
          throw std::runtime_error("compound_poisson_at: negative weight");
        }
        w = 0.0;
      }
      total += w;
      out.atoms.emplace_back(FinitePoint{a, b}, w);
    }
  }
  for (auto& [g, w] : out.atoms) w /= total;
  return ProbabilityMeasure::discrete(std::move(out));
}

/// Gaussian semigroup member: mean t b, covariance t Sigma; at t = 0 the
/// degenerate limit is represented as a point mass at the origin.
inline ProbabilityMeasure gaussian_at(const Eigen::Vector2d& drift,
                                      const Eigen::Matrix2d& diffusion,
                                      double t) {
  if (t < 0.0) throw std::invalid_argument("gaussian_at: t < 0");
  if (t == 0.0) {
    return ProbabilityMeasure::dirac(GroupContext::plane(), PlanePoint{0, 0});
  }
  return ProbabilityMeasure::gaussian(t * drift, t * diffusion);
}

/// Convolution semigroup t -> mu_t: compound Poisson on the finite group or
/// Gaussian on the plane.
class ConvolutionSemigroup {
 public:
  struct CompoundPoisson {
    ProbabilityMeasure base;
    double rate;
  };
  struct Gaussian {
    Eigen::Vector2d drift;
    Eigen::Matrix2d diffusion;
  };

  static ConvolutionSemigroup compound_poisson(ProbabilityMeasure base,
                                               double rate) {
    if (!base.is_discrete() || base.group_kind() != GroupKind::finite) {
      throw std::invalid_argument(
          "ConvolutionSemigroup: compound-Poisson base must be finite discrete");
    }
    if (rate <= 0.0) throw std::invalid_argument("ConvolutionSemigroup: rate <= 0");
    return ConvolutionSemigroup(CompoundPoisson{std::move(base), rate});
  }

  static ConvolutionSemigroup gaussian(const Eigen::Vector2d& drift,
                                       const Eigen::Matrix2d& diffusion) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(diffusion);
    if (es.eigenvalues().minCoeff() < -1e-12) {
      throw std::invalid_argument("ConvolutionSemigroup: diffusion must be PSD");
    }
    return ConvolutionSemigroup(Gaussian{drift, diffusion});
  }

  ProbabilityMeasure at(double t) const {
    if (const auto* cp = std::get_if<CompoundPoisson>(&rep_)) {
      if (t == 0.0) {
        GroupContext ctx = GroupContext::finite(cp->base.as_discrete().d);
        return ProbabilityMeasure::dirac(ctx, ctx.identity());
      }
      return compound_poisson_at(cp->base, cp->rate, t);
    }
    const auto& g = std::get<Gaussian>(rep_);
    return gaussian_at(g.drift, g.diffusion, t);
  }

  GroupKind group_kind() const {
    return std::holds_alternative<CompoundPoisson>(rep_) ? GroupKind::finite
                                                         : GroupKind::plane;
  }

  bool is_compound_poisson() const {
    return std::holds_alternative<CompoundPoisson>(rep_);
  }
  const CompoundPoisson& as_compound_poisson() const {
    return std::get<CompoundPoisson>(rep_);
  }
  const Gaussian& as_gaussian() const { return std::get<Gaussian>(rep_); }

 private:
  explicit ConvolutionSemigroup(CompoundPoisson cp) : rep_(std::move(cp)) {}
  explicit ConvolutionSemigroup(Gaussian g) : rep_(std::move(g)) {}
  std::variant<CompoundPoisson, Gaussian> rep_;
};

/// n i.i.d. draws. Discrete sampling is inverse-CDF over the sorted support;
/// Gaussian sampling is Box-Muller with the Cholesky factor of Sigma.
inline std::vector<GroupElement> sample(const ProbabilityMeasure& mu, int n,
                                        Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
  std::vector<GroupElement> out;
  out.reserve(n);
  if (mu.is_discrete()) {
    auto atoms = mu.as_discrete().atoms;
    std::sort(atoms.begin(), atoms.end(),
              [](const auto& a, const auto& b) {
                return detail::key_of(a.first) < detail::key_of(b.first);
              });
    std::vector<double> cdf(atoms.size());
    double acc = 0.0;
    for (size_t i = 0; i < atoms.size(); ++i) {
      acc += atoms[i].second;
      cdf[i] = acc;
    }
    cdf.back() = 1.0;
    for (int i = 0; i < n; ++i) {
      const double u = rng.uniform();
      const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
      const size_t idx = std::min<size_t>(it - cdf.begin(), atoms.size() - 1);
      out.push_back(atoms[idx].first);
    }
    return out;
  }
  const auto& g = mu.as_gaussian();
  // 2x2 Cholesky with a zero guard for semidefinite covariances.
  const double s00 = std::sqrt(std::max(g.cov(0, 0), 0.0));
  const double l10 = s00 > 0.0 ? g.cov(1, 0) / s00 : 0.0;
  const double s11 =
      std::sqrt(std::max(g.cov(1, 1) - l10 * l10, 0.0));
  for (int i = 0; i < n; ++i) {
    const double z0 = rng.normal();
    const double z1 = rng.normal();
    out.push_back(PlanePoint{g.mean(0) + s00 * z0,
                             g.mean(1) + l10 * z0 + s11 * z1});
  }
  return out;
}

/// Symplectic Fourier transform of a plane measure at (q~, p~):
/// integral of exp(i(q~ p - p~ q)) d mu(q, p).
inline cplx symplectic_char(const ProbabilityMeasure& mu, double qt,
                            double pt) {
  if (mu.group_kind() != GroupKind::plane) {
    throw std::invalid_argument(
        "symplectic_char: defined for plane measures only");
  }
  if (mu.is_discrete()) {
    cplx acc = 0.0;
    for (const auto& [g, w] : mu.as_discrete().atoms) {
      const auto& z = std::get<PlanePoint>(g);
      acc += w * std::polar(1.0, qt * z.p - pt * z.q);
    }
    return acc;
  }
  const auto& g = mu.as_gaussian();
  const Eigen::Vector2d k(-pt, qt);
  const double quad = k.dot(g.cov * k);
  const double phase = qt * g.mean(1) - pt * g.mean(0);
  return std::exp(cplx(-0.5 * quad, phase));
}

/// Min Hermitian eigenvalue of the plain (untwisted) Gram matrix
/// M_{jk} = f(g_j^{-1} g_k). The function is given as tabulated values; a
/// missing difference point is an error.
inline double is_positive_definite(
    const GroupContext& ctx,
    const std::vector<std::pair<GroupElement, cplx>>& table,
    const std::vector<GroupElement>& points) {
  if (points.size() > 256) {
    throw std::invalid_argument("is_positive_definite: too many points");
  }
  std::map<detail::ElementKey, cplx> lut;
  for (const auto& [g, v] : table) lut[detail::key_of(g)] = v;
  const int n = static_cast<int>(points.size());
  Mat m(n, n);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      const GroupElement diff =
          ctx.compose(ctx.inverse(points[j]), points[k]);
      const auto it = lut.find(detail::key_of(diff));
      if (it == lut.end()) {
        throw std::invalid_argument(
            "is_positive_definite: f undefined at a difference point");
      }
      m(j, k) = it->second;
    }
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.adjoint()),
                                        Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Same check with a callable instead of a table.
template <typename F>
double is_positive_definite_fn(const GroupContext& ctx, F&& f,
                               const std::vector<GroupElement>& points) {
  if (points.size() > 256) {
    throw std::invalid_argument("is_positive_definite: too many points");
  }
  const int n = static_cast<int>(points.size());
  Mat m(n, n);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      m(j, k) = f(ctx.compose(ctx.inverse(points[j]), points[k]));
    }
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.adjoint()),
                                        Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// --- JSON forms ---
// discrete: {"support": [[a,b],...], "weights": [...]}
// gaussian: {"mean": [q,p], "cov": [[..],[..]]}

inline nlohmann::json measure_to_json(const ProbabilityMeasure& mu) {
  if (mu.is_gaussian()) {
    const auto& g = mu.as_gaussian();
    return {{"mean", {g.mean(0), g.mean(1)}},
            {"cov",
             {{g.cov(0, 0), g.cov(0, 1)}, {g.cov(1, 0), g.cov(1, 1)}}}};
  }
  const auto& m = mu.as_discrete();
  nlohmann::json support = nlohmann::json::array();
  nlohmann::json weights = nlohmann::json::array();
  for (const auto& [g, w] : m.atoms) {
    if (m.kind == GroupKind::finite) {
      const auto& f = std::get<FinitePoint>(g);
      support.push_back({f.a, f.b});
    } else {
      const auto& p = std::get<PlanePoint>(g);
      support.push_back({p.q, p.p});
    }
    weights.push_back(w);
  }
  nlohmann::json j = {{"support", std::move(support)},
                      {"weights", std::move(weights)}};
  if (m.kind == GroupKind::finite) j["d"] = m.d;
  return j;
}

inline ProbabilityMeasure measure_from_json(const nlohmann::json& j,
                                            GroupKind kind) {
  if (j.contains("mean")) {
    Eigen::Vector2d mean(j.at("mean")[0].get<double>(),
                         j.at("mean")[1].get<double>());
    Eigen::Matrix2d cov;
    cov << j.at("cov")[0][0].get<double>(), j.at("cov")[0][1].get<double>(),
        j.at("cov")[1][0].get<double>(), j.at("cov")[1][1].get<double>();
    return ProbabilityMeasure::gaussian(mean, cov);
  }
  const auto& support = j.at("support");
  const auto& weights = j.at("weights");
  if (support.size() != weights.size()) {
    throw std::invalid_argument("measure_from_json: support/weights mismatch");
  }
  DiscreteMeasure m{kind, kind == GroupKind::finite ? j.at("d").get<int>() : 0,
                    {}};
  for (size_t i = 0; i < support.size(); ++i) {
    if (kind == GroupKind::finite) {
      m.atoms.emplace_back(
          FinitePoint{support[i][0].get<int>(), support[i][1].get<int>()},
          weights[i].get<double>());
    } else {
      m.atoms.emplace_back(PlanePoint{support[i][0].get<double>(),
                                      support[i][1].get<double>()},
                           weights[i].get<double>());
    }
  }
  return ProbabilityMeasure::discrete(std::move(m));
}

}  // namespace twirl
