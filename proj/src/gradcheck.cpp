#include "eppnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace eppnet {

double grad_check(const ScalarFn& f, const Tensor& x, double eps) {
  Tensor analytic(x.shape);
  f(x, &analytic);
  double worst = 0.0;
  Tensor probe = x;
  for (size_t i = 0; i < x.data.size(); ++i) {
    const float orig = probe.data[i];
    probe.data[i] = static_cast<float>(orig + eps);
    const double fp = f(probe, nullptr);
    probe.data[i] = static_cast<float>(orig - eps);
    const double fm = f(probe, nullptr);
    probe.data[i] = orig;
    const double numeric = (fp - fm) / (2.0 * eps);
    const double a = analytic.data[i];
    const double rel =
        std::abs(a - numeric) / std::max(1.0, std::abs(a) + std::abs(numeric));
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace eppnet
