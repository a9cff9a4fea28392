#pragma once

// Embedded Dormand-Prince 5(4) pair with PI step-size control and the
// classical quartic dense-output interpolant.  Generic over the state
// dimension; the flow module drives it with event detection.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

namespace nsl::ode {

template <std::size_t N>
using State = std::array<double, N>;

struct StepControl {
    double relTol = 1e-10;
    double absTol = 1e-12;
    double maxStep = std::numeric_limits<double>::infinity();
    double safety = 0.9;
    double minFactor = 0.2;
    double maxFactor = 10.0;
    double betaPI = 0.04; // PI stabilisation exponent
};

// One accepted step with enough data to evaluate the solution anywhere
// inside [t0, t0+h].
template <std::size_t N>
struct DenseStep {
    double t0 = 0, h = 0;
    State<N> r1{}, r2{}, r3{}, r4{}, r5{};

    State<N> eval(double t) const {
        const double th = (t - t0) / h;
        const double th1 = 1.0 - th;
        State<N> y;
        for (std::size_t i = 0; i < N; ++i)
            y[i] = r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
        return y;
    }

    double t1() const { return t0 + h; }
};

template <std::size_t N, class Rhs>
class Dopri5 {
  public:
    Dopri5(Rhs rhs, StepControl ctrl) : f_(std::move(rhs)), ctrl_(ctrl) {}

    void init(double t0, const State<N>& y0) {
        t_ = t0;
        y_ = y0;
        k1_ = f_(t_, y_);
        errOld_ = 1e-4;
        h_ = initial_step();
        haveStep_ = false;
    }

    void init(double t0, const State<N>& y0, double h0) {
        init(t0, y0);
        h_ = h0;
    }

    double t() const { return t_; }
    const State<N>& y() const { return y_; }
    const DenseStep<N>& dense() const { return dense_; }
    double suggested_step() const { return h_; }
    void limit_step(double hmax) { h_ = std::min(h_, hmax); }

    // Advances by one accepted (adaptive) step; returns the number of
    // attempted steps, including rejections.
    int step() {
        int attempts = 0;
        for (;;) {
            ++attempts;
            h_ = std::min(h_, ctrl_.maxStep);
            const double err = try_step(h_);
            const double expo = 0.2 - ctrl_.betaPI * 0.75;
            double fac = std::pow(err, expo) * std::pow(errOld_, -ctrl_.betaPI);
            fac = std::clamp(ctrl_.safety / fac, ctrl_.minFactor, ctrl_.maxFactor);
            if (err <= 1.0) {
                errOld_ = std::max(err, 1e-4);
                accept(h_);
                h_ *= std::min(fac, rejected_ ? 1.0 : ctrl_.maxFactor);
                rejected_ = false;
                return attempts;
            }
            rejected_ = true;
            h_ *= std::min(fac, 1.0);
            if (!(h_ > 0.0) || t_ + h_ == t_)
                return attempts; // step underflow; caller detects lack of progress
        }
    }

    // Fixed-step variant (no error control); used by convergence probes.
    void step_fixed(double h) {
        try_step(h);
        accept(h);
    }

  private:
    double norm_err(const State<N>& e, const State<N>& y0, const State<N>& y1) const {
        double s = 0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sc = ctrl_.absTol + ctrl_.relTol * std::max(std::abs(y0[i]), std::abs(y1[i]));
            const double q = e[i] / sc;
            s += q * q;
        }
        return std::sqrt(s / N);
    }

    double initial_step() const {
        double d0 = 0, d1 = 0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sc = ctrl_.absTol + ctrl_.relTol * std::abs(y_[i]);
            d0 += (y_[i] / sc) * (y_[i] / sc);
            d1 += (k1_[i] / sc) * (k1_[i] / sc);
        }
        d0 = std::sqrt(d0 / N);
        d1 = std::sqrt(d1 / N);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        State<N> y1;
        for (std::size_t i = 0; i < N; ++i)
            y1[i] = y_[i] + h0 * k1_[i];
        const State<N> f1 = f_(t_ + h0, y1);
        double d2 = 0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sc = ctrl_.absTol + ctrl_.relTol * std::abs(y_[i]);
            const double q = (f1[i] - k1_[i]) / sc;
            d2 += q * q;
        }
        d2 = std::sqrt(d2 / N) / h0;
        const double dm = std::max(d1, d2);
        const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
        return std::min({100.0 * h0, h1, ctrl_.maxStep});
    }

    // Runs the seven stages at step h from (t_, y_); fills the candidate
    // solution, error estimate and dense coefficients.  Returns the scaled
    // error norm.
    double try_step(double h) {
        static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
        static constexpr double a21 = 1.0 / 5;
        static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                                a54 = -212.0 / 729;
        static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                                a64 = 49.0 / 176, a65 = -5103.0 / 18656;
        static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                                b5 = -2187.0 / 6784, b6 = 11.0 / 84;
        static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                                e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
        static constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                                d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                                d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

        State<N> w;
        for (std::size_t i = 0; i < N; ++i)
            w[i] = y_[i] + h * a21 * k1_[i];
        k2_ = f_(t_ + c2 * h, w);
        for (std::size_t i = 0; i < N; ++i)
            w[i] = y_[i] + h * (a31 * k1_[i] + a32 * k2_[i]);
        k3_ = f_(t_ + c3 * h, w);
        for (std::size_t i = 0; i < N; ++i)
            w[i] = y_[i] + h * (a41 * k1_[i] + a42 * k2_[i] + a43 * k3_[i]);
        k4_ = f_(t_ + c4 * h, w);
        for (std::size_t i = 0; i < N; ++i)
            w[i] = y_[i] + h * (a51 * k1_[i] + a52 * k2_[i] + a53 * k3_[i] + a54 * k4_[i]);
        k5_ = f_(t_ + c5 * h, w);
        for (std::size_t i = 0; i < N; ++i)
            w[i] = y_[i] + h * (a61 * k1_[i] + a62 * k2_[i] + a63 * k3_[i] + a64 * k4_[i] + a65 * k5_[i]);
        k6_ = f_(t_ + h, w);
        for (std::size_t i = 0; i < N; ++i)
            ynew_[i] = y_[i] + h * (b1 * k1_[i] + b3 * k3_[i] + b4 * k4_[i] + b5 * k5_[i] + b6 * k6_[i]);
        k7_ = f_(t_ + h, ynew_); // FSAL

        State<N> errv;
        for (std::size_t i = 0; i < N; ++i)
            errv[i] = h * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] +
                           e7 * k7_[i]);

        dense_.t0 = t_;
        dense_.h = h;
        for (std::size_t i = 0; i < N; ++i) {
            const double dy = ynew_[i] - y_[i];
            dense_.r1[i] = y_[i];
            dense_.r2[i] = dy;
            dense_.r3[i] = h * k1_[i] - dy;
            dense_.r4[i] = dy - h * k7_[i] - dense_.r3[i];
            dense_.r5[i] = h * (d1 * k1_[i] + d3 * k3_[i] + d4 * k4_[i] + d5 * k5_[i] + d6 * k6_[i] +
                                d7 * k7_[i]);
        }
        return norm_err(errv, y_, ynew_);
    }

    void accept(double h) {
        t_ += h;
        y_ = ynew_;
        k1_ = k7_;
        haveStep_ = true;
    }

    Rhs f_;
    StepControl ctrl_;
    double t_ = 0, h_ = 0, errOld_ = 1e-4;
    bool rejected_ = false, haveStep_ = false;
    State<N> y_{}, ynew_{};
    State<N> k1_{}, k2_{}, k3_{}, k4_{}, k5_{}, k6_{}, k7_{};
    DenseStep<N> dense_;
};

} // namespace nsl::ode
