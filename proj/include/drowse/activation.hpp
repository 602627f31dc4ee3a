#pragma once

#include <cmath>
#include <concepts>

namespace drowse {

// Logistic function, evaluated on the branch that cannot overflow exp().
template <std::floating_point T>
T sigmoid(T x) noexcept {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

// x * sigmoid(x); the activation used throughout the classifier backbone.
template <std::floating_point T>
T swish(T x) noexcept {
  return x * sigmoid(x);
}

}  // namespace drowse
