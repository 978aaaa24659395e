#pragma once

#include "fusionpose/parameter_store.hpp"
#include "fusionpose/tape.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>

namespace fusionpose {

// Scalar objective evaluated on a fresh tape from the current store values.
using ScalarObjective = std::function<Var(Tape&, const ParameterStore&)>;

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // 0 checks every element; otherwise a seeded sample of this many per parameter.
  std::size_t max_elements_per_parameter = 0;
  std::uint64_t seed = 0;
  // Lower bound on the gradient scale used as the denominator. Parameters
  // whose exact gradient is zero (e.g. a key bias under softmax) would
  // otherwise compare rounding noise against rounding noise.
  double absolute_floor = 0.0;
  // When the one-sided differences of an element disagree beyond tolerance the
  // step straddles a kink (ReLU, max, nearest neighbor); the element is then
  // re-measured with the step divided by 10, at most this many times.
  int kink_retries = 0;
};

struct GradCheckReport {
  // Per parameter: max |analytic - numeric| / max(max |analytic|, max |numeric|, floor)
  // over the checked elements; 0 when both gradients vanish.
  std::map<std::string, double> max_relative_error;
  double worst = 0.0;
  std::string worst_parameter;
  bool passed = true;
};

// Compares backward() against central differences (f(w+h) - f(w-h)) / 2h.
// The analytic gradient never influences the choice of h.
// The store is restored before returning. Throws InvalidInput naming the
// parameter when the objective evaluates to a non-finite value.
GradCheckReport finite_diff_check(const ScalarObjective& f, ParameterStore& store,
                                  const GradCheckOptions& options = {});

}  // namespace fusionpose
