#pragma once

#include <string>

#include "bidyn/common/types.hpp"

namespace bidyn {

enum class TransitionSource { kEnv, kModelForward, kModelBackward };

inline std::string to_string(TransitionSource s) {
  switch (s) {
    case TransitionSource::kEnv: return "env";
    case TransitionSource::kModelForward: return "model_forward";
    case TransitionSource::kModelBackward: return "model_backward";
  }
  return "unknown";
}

// One environment or model step (s, a, r, s', done).
struct Transition {
  Vector s;
  Vector a;
  double r = 0.0;
  Vector s_next;
  bool done = false;
  TransitionSource source = TransitionSource::kEnv;
};

}  // namespace bidyn
