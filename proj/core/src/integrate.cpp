#include "hqd/integrate.hpp"

#include <algorithm>
#include <cmath>

namespace hqd {

namespace {

void check_finite(const Vector& y, double t) {
    if (!y.allFinite()) fail(Errc::NonFiniteState, "NaN/Inf in state at t = " + std::to_string(t));
}

class Rk4Stepper {
  public:
    explicit Rk4Stepper(Eigen::Index n) : k1_(n), k2_(n), k3_(n), k4_(n), tmp_(n) {}

    void step(const Rhs& rhs, double t, double h, Vector& y) {
        rhs(t, y, k1_);
        tmp_ = y + (0.5 * h) * k1_;
        rhs(t + 0.5 * h, tmp_, k2_);
        tmp_ = y + (0.5 * h) * k2_;
        rhs(t + 0.5 * h, tmp_, k3_);
        tmp_ = y + h * k3_;
        rhs(t + h, tmp_, k4_);
        y += (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
    }

  private:
    Vector k1_, k2_, k3_, k4_, tmp_;
};

// Classic Fehlberg 4(5) tableau.
class Rkf45Stepper {
  public:
    explicit Rkf45Stepper(Eigen::Index n) : tmp_(n) {
        for (auto& k : k_) k.resize(n);
    }

    // Attempts one step of size h; on success updates y with the 5th-order
    // solution and returns the scaled error estimate of the embedded pair.
    double attempt(const Rhs& rhs, double t, double h, const Vector& y, Vector& y_next) {
        rhs(t, y, k_[0]);
        tmp_ = y + h * (a10 * k_[0]);
        rhs(t + c1 * h, tmp_, k_[1]);
        tmp_ = y + h * (a20 * k_[0] + a21 * k_[1]);
        rhs(t + c2 * h, tmp_, k_[2]);
        tmp_ = y + h * (a30 * k_[0] + a31 * k_[1] + a32 * k_[2]);
        rhs(t + c3 * h, tmp_, k_[3]);
        tmp_ = y + h * (a40 * k_[0] + a41 * k_[1] + a42 * k_[2] + a43 * k_[3]);
        rhs(t + h, tmp_, k_[4]);
        tmp_ = y + h * (a50 * k_[0] + a51 * k_[1] + a52 * k_[2] + a53 * k_[3] + a54 * k_[4]);
        rhs(t + c5 * h, tmp_, k_[5]);

        y_next = y + h * (b0 * k_[0] + b2 * k_[2] + b3 * k_[3] + b4 * k_[4] + b5 * k_[5]);
        // Difference between the 5th- and 4th-order results.
        tmp_ = h * (e0 * k_[0] + e2 * k_[2] + e3 * k_[3] + e4 * k_[4] + e5 * k_[5]);
        double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
        return tmp_.cwiseAbs().maxCoeff() / scale;
    }

  private:
    Vector k_[6];
    Vector tmp_;

    static constexpr double c1 = 1.0 / 4, c2 = 3.0 / 8, c3 = 12.0 / 13, c5 = 1.0 / 2;
    static constexpr double a10 = 1.0 / 4;
    static constexpr double a20 = 3.0 / 32, a21 = 9.0 / 32;
    static constexpr double a30 = 1932.0 / 2197, a31 = -7200.0 / 2197, a32 = 7296.0 / 2197;
    static constexpr double a40 = 439.0 / 216, a41 = -8.0, a42 = 3680.0 / 513,
                            a43 = -845.0 / 4104;
    static constexpr double a50 = -8.0 / 27, a51 = 2.0, a52 = -3544.0 / 2565,
                            a53 = 1859.0 / 4104, a54 = -11.0 / 40;
    // 5th-order weights.
    static constexpr double b0 = 16.0 / 135, b2 = 6656.0 / 12825, b3 = 28561.0 / 56430,
                            b4 = -9.0 / 50, b5 = 2.0 / 55;
    // (5th - 4th) weights.
    static constexpr double e0 = b0 - 25.0 / 216, e2 = b2 - 1408.0 / 2565,
                            e3 = b3 - 2197.0 / 4104, e4 = b4 + 1.0 / 5, e5 = b5;
};

} // namespace

void integrate_observe(const Rhs& rhs, const Vector& y0, const TimeGrid& grid_in, Method method,
                       double tol, const Observer& observe) {
    const TimeGrid grid = validate_grid(grid_in);
    Vector y = y0;
    check_finite(y, grid.t0);
    if (observe) observe(0, grid.t0, y);

    if (method == Method::RK4) {
        Rk4Stepper stepper(y.size());
        const double h = grid.dt();
        for (int i = 0; i < grid.steps; ++i) {
            stepper.step(rhs, grid.time(i), h, y);
            check_finite(y, grid.time(i + 1));
            if (observe) observe(i + 1, grid.time(i + 1), y);
        }
        return;
    }

    require(tol > 0, Errc::InvalidArgument, "RKF45 needs tol > 0");
    Rkf45Stepper stepper(y.size());
    Vector y_next(y.size());
    const double h_min = 1e-14 * grid.span();
    double h = grid.dt();
    for (int i = 0; i < grid.steps; ++i) {
        double t = grid.time(i);
        const double t_target = grid.time(i + 1);
        while (t < t_target - 1e-15 * grid.span()) {
            const double h_try = std::min(h, t_target - t);
            const double err = stepper.attempt(rhs, t, h_try, y, y_next);
            if (!std::isfinite(err)) fail(Errc::NonFiniteState, "NaN/Inf in RKF45 stage");
            if (err <= tol) {
                t += h_try;
                y.swap(y_next);
            }
            // Standard controller with safety factor and growth clamps.
            double factor = err > 0 ? 0.9 * std::pow(tol / err, 0.2) : 5.0;
            factor = std::clamp(factor, 0.2, 5.0);
            h = h_try * factor;
            if (h < h_min)
                fail(Errc::StepUnderflow, "adaptive step fell below 1e-14 * span at t = " +
                                              std::to_string(t));
        }
        check_finite(y, t_target);
        if (observe) observe(i + 1, t_target, y);
    }
}

std::vector<Vector> integrate(const Rhs& rhs, const Vector& y0, const TimeGrid& grid,
                              Method method, double tol) {
    std::vector<Vector> out;
    out.reserve(grid.points());
    integrate_observe(rhs, y0, grid, method, tol,
                      [&](int, double, const Vector& y) { out.push_back(y); });
    return out;
}

} // namespace hqd
