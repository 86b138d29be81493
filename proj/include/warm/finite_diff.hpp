#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "warm/errors.hpp"
#include "warm/tensor.hpp"

namespace warm {

// Central-difference gradient: (f(x + h e_i) - f(x - h e_i)) / (2h) per
// coordinate. Serves as the independent oracle for analytic gradients.
inline Vec finite_diff_grad(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
    if (!(h > 0.0)) {
        throw std::invalid_argument("finite_diff_grad: h must be > 0");
    }
    Vec grad(x.size());
    Vec probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + h;
        double fp = f(probe);
        probe[i] = x[i] - h;
        double fm = f(probe);
        probe[i] = x[i];
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw numerical_error("finite_diff_grad: non-finite f at coordinate " +
                                  std::to_string(i));
        }
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

}  // namespace warm
