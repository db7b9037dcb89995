#pragma once

namespace bidyn {

// Clipped linear function of the epoch: x until epoch a, y from epoch b,
// linear in between.
struct Schedule {
  double x = 0.0;
  double y = 0.0;
  int a = 0;
  int b = 1;

  void validate() const;
  double value(int epoch) const;
  // Floor of value(epoch), at least 1 once epoch > a while the value is
  // positive. Zero for non-positive values.
  int rollout_length(int epoch) const;

  static Schedule constant(double v) { return {v, v, 0, 1}; }
};

}  // namespace bidyn
