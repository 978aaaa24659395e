#include "fusionpose/gradcheck.hpp"

#include "fusionpose/errors.hpp"
#include "fusionpose/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fusionpose {
namespace {

double evaluate(const ScalarObjective& f, const ParameterStore& store, const std::string& path) {
  Tape tape;
  const double v = f(tape, store).value().item();
  if (!std::isfinite(v)) {
    throw InvalidInput("finite_diff_check: objective is not finite while perturbing '" + path + "'");
  }
  return v;
}

}  // namespace

GradCheckReport finite_diff_check(const ScalarObjective& f, ParameterStore& store,
                                  const GradCheckOptions& options) {
  std::map<std::string, Tensor> analytic;
  double base = 0.0;
  {
    Tape tape;
    Var loss = f(tape, store);
    base = loss.value().item();
    if (!std::isfinite(base)) {
      throw InvalidInput("finite_diff_check: objective is not finite at the base point");
    }
    tape.backward(loss);
    analytic = tape.parameter_gradients();
  }

  GradCheckReport report;
  for (auto& [path, param] : store) {
    const std::size_t n = param.value.size();
    std::vector<std::size_t> elems(n);
    std::iota(elems.begin(), elems.end(), 0);
    if (options.max_elements_per_parameter && n > options.max_elements_per_parameter) {
      Rng rng(derive_seed(options.seed, path));
      std::shuffle(elems.begin(), elems.end(), rng);
      elems.resize(options.max_elements_per_parameter);
      std::sort(elems.begin(), elems.end());
    }
    const Tensor zeros(param.value.shape(), 0.0);
    auto it = analytic.find(path);
    const Tensor& a = it == analytic.end() ? zeros : it->second;

    double max_diff = 0.0, max_scale = 0.0;
    for (std::size_t e : elems) {
      const double w = param.value[e];
      double h = options.step;
      double numeric = 0.0;
      for (int attempt = 0;; ++attempt) {
        param.value[e] = w + h;
        const double fp = evaluate(f, store, path);
        param.value[e] = w - h;
        const double fm = evaluate(f, store, path);
        param.value[e] = w;
        numeric = (fp - fm) / (2.0 * h);
        if (attempt >= options.kink_retries) break;
        const double forward = (fp - base) / h, backward = (base - fm) / h;
        const double spread = std::max({std::abs(forward), std::abs(backward), options.absolute_floor});
        if (spread == 0.0 || std::abs(forward - backward) <= options.tolerance * spread) break;
        h /= 10.0;
      }
      max_diff = std::max(max_diff, std::abs(numeric - a[e]));
      max_scale = std::max({max_scale, std::abs(numeric), std::abs(a[e])});
    }
    const double scale = std::max(max_scale, options.absolute_floor);
    const double rel = scale > 0.0 ? max_diff / scale : 0.0;
    report.max_relative_error[path] = rel;
    if (report.worst_parameter.empty() || rel > report.worst) {
      report.worst = rel;
      report.worst_parameter = path;
    }
  }
  report.passed = report.worst < options.tolerance;
  return report;
}

}  // namespace fusionpose
