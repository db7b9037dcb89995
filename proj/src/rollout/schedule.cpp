#include "bidyn/rollout/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "bidyn/common/errors.hpp"

namespace bidyn {

void Schedule::validate() const {
  if (!(a < b)) throw InputError("Schedule: start epoch must precede end epoch");
  if (!std::isfinite(x) || !std::isfinite(y)) throw InputError("Schedule: non-finite endpoint");
}

double Schedule::value(int epoch) const {
  const double t = std::clamp(static_cast<double>(epoch - a) / static_cast<double>(b - a), 0.0, 1.0);
  return x + t * (y - x);
}

int Schedule::rollout_length(int epoch) const {
  const double v = value(epoch);
  if (v <= 0.0) return 0;
  const int k = static_cast<int>(std::floor(v));
  return epoch > a ? std::max(k, 1) : k;
}

}  // namespace bidyn
