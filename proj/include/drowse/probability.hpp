#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace drowse {

// A value in [0, 1]. Construction rejects anything else, including NaN.
class Probability {
 public:
  constexpr Probability() noexcept = default;
  explicit Probability(double value) : value_(value) {
    if (!(value >= 0.0 && value <= 1.0)) {
      throw std::out_of_range("probability " + std::to_string(value) +
                              " outside [0, 1]");
    }
  }

  constexpr double value() const noexcept { return value_; }

  friend constexpr bool operator==(Probability, Probability) = default;
  friend constexpr auto operator<=>(Probability, Probability) = default;

 private:
  double value_ = 0.0;
};

}  // namespace drowse
