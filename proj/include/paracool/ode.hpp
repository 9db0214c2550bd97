#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace paracool::ode {

/// Adaptive Dormand-Prince 5(4) integrator. State must support Eigen-style
/// linear arithmetic and cwiseAbs(); works for VectorXd / VectorXcd / fixed
/// vectors. The derivative functor is f(t, y) -> dy/dt.
template <class State, class Deriv>
State integrate(State y, double t0, double t1, Deriv f, double rtol = 1e-9,
                double atol = 1e-12) {
    if (t1 <= t0) return y;

    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                     a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                     a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                     b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // 4th-order embedded weights
    constexpr double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695, e4 = 393.0 / 640,
                     e5 = -92097.0 / 339200, e6 = 187.0 / 2100, e7 = 1.0 / 40;

    double t = t0;
    double h = (t1 - t0) / 64.0;
    const double hmin = (t1 - t0) * 1e-14;
    State k1 = f(t, y);

    int steps = 0;
    while (t < t1) {
        if (++steps > 2000000) throw std::runtime_error("ode: step limit exceeded");
        h = std::min(h, t1 - t);

        State k2 = f(t + c2 * h, y + h * (a21 * k1));
        State k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
        State k4 = f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        State k5 = f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        State k6 = f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        State y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        State k7 = f(t + h, y5);
        State y4 = y + h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        const auto scale =
            (atol + rtol * y.cwiseAbs().cwiseMax(y5.cwiseAbs()).maxCoeff());
        const double err = (y5 - y4).cwiseAbs().maxCoeff() / scale;

        if (err <= 1.0) {
            t += h;
            y = y5;
            k1 = k7;  // FSAL
        }
        const double grow = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
        h *= std::clamp(grow, 0.2, 5.0);
        if (h < hmin && t < t1) throw std::runtime_error("ode: step size underflow");
    }
    return y;
}

} // namespace paracool::ode
