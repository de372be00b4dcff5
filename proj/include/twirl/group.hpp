#pragma once

#include <cmath>
#include <stdexcept>
#include <variant>

#include "twirl/types.hpp"

namespace twirl {

enum class GroupKind { finite, plane };

/// A point of Z_d x Z_d, components reduced mod d.
struct FinitePoint {
  int a = 0;
  int b = 0;
  friend bool operator==(const FinitePoint&, const FinitePoint&) = default;
};

/// A point of the phase plane R x R.
struct PlanePoint {
  double q = 0.0;
  double p = 0.0;
  friend bool operator==(const PlanePoint&, const PlanePoint&) = default;
};

using GroupElement = std::variant<FinitePoint, PlanePoint>;

/// Group plus Haar normalization: counting measure on Z_d x Z_d,
/// (2 pi)^{-1} dq dp on the plane. Both groups are unimodular.
struct GroupContext {
  GroupKind kind = GroupKind::finite;
  int d = 0;  // finite only

  static GroupContext finite(int d) {
    if (d < 3 || d % 2 == 0) {
      throw std::invalid_argument("GroupContext: finite d must be odd and >= 3");
    }
    return {GroupKind::finite, d};
  }
  static GroupContext plane() { return {GroupKind::plane, 0}; }

  bool is_finite() const { return kind == GroupKind::finite; }
  double modular_value() const { return 1.0; }

  GroupElement identity() const {
    if (is_finite()) return FinitePoint{0, 0};
    return PlanePoint{0.0, 0.0};
  }

  int reduce(int x) const {
    int r = x % d;
    return r < 0 ? r + d : r;
  }

  GroupElement element(int a, int b) const {
    return FinitePoint{reduce(a), reduce(b)};
  }

  GroupElement compose(const GroupElement& g, const GroupElement& h) const {
    if (is_finite()) {
      const auto& x = std::get<FinitePoint>(g);
      const auto& y = std::get<FinitePoint>(h);
      return FinitePoint{reduce(x.a + y.a), reduce(x.b + y.b)};
    }
    const auto& x = std::get<PlanePoint>(g);
    const auto& y = std::get<PlanePoint>(h);
    return PlanePoint{x.q + y.q, x.p + y.p};
  }

  GroupElement inverse(const GroupElement& g) const {
    if (is_finite()) {
      const auto& x = std::get<FinitePoint>(g);
      return FinitePoint{reduce(-x.a), reduce(-x.b)};
    }
    const auto& x = std::get<PlanePoint>(g);
    return PlanePoint{-x.q, -x.p};
  }
};

inline void require_same_kind(const GroupContext& ctx, const GroupElement& g) {
  const bool finite = std::holds_alternative<FinitePoint>(g);
  if (finite != ctx.is_finite()) {
    throw std::invalid_argument("group element does not belong to this group");
  }
}

/// Multiplier of the projective representation. Plane:
/// exp((i/2)(q p' - p q')). Finite: omega^{inv2 (a b' - b a')} with
/// omega = exp(2 pi i / d) and inv2 = (d+1)/2, the inverse of 2 mod d.
inline cplx multiplier_value(const GroupContext& ctx, const GroupElement& g,
                             const GroupElement& h) {
  require_same_kind(ctx, g);
  require_same_kind(ctx, h);
  if (ctx.is_finite()) {
    const auto& x = std::get<FinitePoint>(g);
    const auto& y = std::get<FinitePoint>(h);
    const int inv2 = (ctx.d + 1) / 2;
    const int e = ctx.reduce(inv2 * ctx.reduce(x.a * y.b - x.b * y.a));
    return std::polar(1.0, kTwoPi * static_cast<double>(e) / ctx.d);
  }
  const auto& x = std::get<PlanePoint>(g);
  const auto& y = std::get<PlanePoint>(h);
  return std::polar(1.0, 0.5 * (x.q * y.p - x.p * y.q));
}

/// The two-sided phase m~(g,h) = m(g, g^{-1}h)^* m(g^{-1}h, g). For the
/// plane this reduces to exp(-i(q p~ - p q~)).
inline cplx temme_value(const GroupContext& ctx, const GroupElement& g,
                        const GroupElement& h) {
  const GroupElement ginv_h = ctx.compose(ctx.inverse(g), h);
  return std::conj(multiplier_value(ctx, g, ginv_h)) *
         multiplier_value(ctx, ginv_h, g);
}

}  // namespace twirl
