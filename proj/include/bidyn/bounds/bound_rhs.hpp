#pragma once

#include <string>

namespace bidyn::bounds {

struct BoundInputs {
  double eps_m_for = 0.0;
  double eps_m_back = 0.0;
  double eps_m_pre = 0.0;
  double eps_pi_for = 0.0;
  double eps_pi_back = 0.0;
  double eps_pi_pre = 0.0;
  double r_max = 1.0;
  double gamma = 0.9;
  int k1 = 0;
  int k2 = 0;

  void validate() const;
};

enum class BoundVariant { kGeneral, kBidirectional, kMbpo };

std::string to_string(BoundVariant v);

// Right-hand sides of the return-discrepancy bounds:
//   kGeneral        2 r [ g^{K+1}/(1-g)^2 (em_pre + ep_pre) + g^K/(1-g) ep_pre
//                       + (1-g^k1)/(1-g) (k1 (em_back + ep_back) + ep_back)
//                       + g^k1/(1-g) (k2 (em_for + ep_for) + ep_for) ]
//   kBidirectional  2 r [ g^{K+1} ep/(1-g)^2 + g^K ep/(1-g) + max(k1, k2) em/(1-g) ]
//   kMbpo           as kBidirectional with (k1 + k2) in place of max(k1, k2)
// with K = k1 + k2, ep = eps_pi_pre and em = max(eps_m_for, eps_m_back).
// kGeneral allows six distinct divergences; the other two assume a single
// model error shared by both branch directions.
double bound_rhs(const BoundInputs& in, BoundVariant variant);

}  // namespace bidyn::bounds
