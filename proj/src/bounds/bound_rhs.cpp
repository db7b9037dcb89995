#include "bidyn/bounds/bound_rhs.hpp"

#include <algorithm>
#include <cmath>

#include "bidyn/common/errors.hpp"

namespace bidyn::bounds {

void BoundInputs::validate() const {
  for (double e : {eps_m_for, eps_m_back, eps_m_pre, eps_pi_for, eps_pi_back, eps_pi_pre})
    if (!(e >= 0.0) || !std::isfinite(e)) throw InputError("BoundInputs: epsilons must be >= 0");
  if (!(r_max > 0.0)) throw InputError("BoundInputs: r_max must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InputError("BoundInputs: gamma must be in [0, 1)");
  if (k1 < 0 || k2 < 0) throw InputError("BoundInputs: rollout lengths must be >= 0");
}

std::string to_string(BoundVariant v) {
  switch (v) {
    case BoundVariant::kGeneral: return "general";
    case BoundVariant::kBidirectional: return "bidirectional";
    case BoundVariant::kMbpo: return "mbpo";
  }
  return "unknown";
}

double bound_rhs(const BoundInputs& in, BoundVariant variant) {
  in.validate();
  const double g = in.gamma;
  const double one_minus = 1.0 - g;
  const int big_k = in.k1 + in.k2;
  const double g_k = std::pow(g, big_k);
  const double g_k1 = std::pow(g, big_k + 1);

  if (variant == BoundVariant::kGeneral) {
    const double pre = g_k1 / (one_minus * one_minus) * (in.eps_m_pre + in.eps_pi_pre) +
                       g_k / one_minus * in.eps_pi_pre;
    const double back = (1.0 - std::pow(g, in.k1)) / one_minus *
                        (in.k1 * (in.eps_m_back + in.eps_pi_back) + in.eps_pi_back);
    const double fwd = std::pow(g, in.k1) / one_minus *
                       (in.k2 * (in.eps_m_for + in.eps_pi_for) + in.eps_pi_for);
    return 2.0 * in.r_max * (pre + back + fwd);
  }

  const double eps_pi = in.eps_pi_pre;
  const double eps_m = std::max(in.eps_m_for, in.eps_m_back);
  const double coeff = variant == BoundVariant::kBidirectional ? std::max(in.k1, in.k2) : big_k;
  return 2.0 * in.r_max *
         (g_k1 * eps_pi / (one_minus * one_minus) + g_k * eps_pi / one_minus +
          coeff * eps_m / one_minus);
}

}  // namespace bidyn::bounds
