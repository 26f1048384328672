#include "negsp/constants.hpp"

#include <cmath>

namespace negsp::constants {

double classic_h_exponent() { return (2.0 * std::sqrt(3.0) - 3.0) / 3.0; }

double improved_h_exponent() {
    return (std::sqrt(2.0) - 1.0) / (std::sqrt(2.0) + 1.0);
}

double dense_h_exponent() { return (std::sqrt(17.0) - 3.0) / 4.0; }

double dense_h0_exponent() { return std::sqrt(17.0) - 4.0; }

double sparse_threshold_exponent() { return (33.0 - 7.0 * std::sqrt(17.0)) / 4.0; }

double sparse_regime_exponent() { return (33.0 - 7.0 * std::sqrt(17.0)) / 5.0; }

double alpha() {
    static const double root = [] {
        auto p = [](double x) { return ((x + 2.0) * x + 1.0) * x - 2.0; };
        double lo = 0.0, hi = 1.0;
        while (hi - lo > 1e-12) {
            double mid = 0.5 * (lo + hi);
            (p(mid) < 0.0 ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }();
    return root;
}

double gamma_exponent() {
    double a = alpha();
    return 1.0 + a * a * (1.0 - a) / (2.0 * (2.0 + a));
}

double twice_h_exponent() {
    double a = alpha();
    return a * a / (2.0 + a);
}

double twice_b_exponent() { return 1.0 - alpha(); }

}  // namespace negsp::constants
