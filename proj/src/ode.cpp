#include "subrie/ode.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace subrie {

namespace {

// Dormand-Prince 5(4) tableau
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

double error_norm(const Eigen::VectorXd& err, const Eigen::VectorXd& y0, const Eigen::VectorXd& y1, const OdeOptions& o)
{
    const auto n = err.size();
    if (n == 0) return 0.0;
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double sc = o.atol + o.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        double r = err[i] / sc;
        s += r * r;
    }
    return std::sqrt(s / static_cast<double>(n));
}

}  // namespace

Eigen::VectorXd DenseStep::eval(double tt) const
{
    const double th = h == 0.0 ? 0.0 : (tt - t) / h;
    const double th1 = 1.0 - th;
    return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
}

Eigen::VectorXd DenseSolution::operator()(double t) const
{
    const double lo = std::min(t_begin_, t_end_), hi = std::max(t_begin_, t_end_);
    const double slack = 1e-12 * std::max(1.0, hi - lo);
    if (t < lo - slack || t > hi + slack) {
        std::ostringstream os;
        os << "dense output queried at t=" << t << " outside [" << lo << ", " << hi << "]";
        throw InputError(os.str());
    }
    if (steps_.empty()) {
        if (t_begin_ == t_end_) return y_begin_;
        throw InputError("solution was integrated without dense output");
    }
    const bool fwd = t_end_ >= t_begin_;
    // steps are ordered along the integration direction
    auto it = std::lower_bound(steps_.begin(), steps_.end(), t, [fwd](const DenseStep& s, double v) {
        double end = s.t + s.h;
        return fwd ? end < v : end > v;
    });
    if (it == steps_.end()) it = std::prev(steps_.end());
    return it->eval(t);
}

DenseSolution integrate(const OdeRhs& rhs, double t0, double t1, const Eigen::VectorXd& y0, const OdeOptions& opts,
                        const std::vector<double>& breakpoints)
{
    if (!std::isfinite(t0) || !std::isfinite(t1)) throw InputError("integrate: non-finite time");
    if (!y0.allFinite()) throw InputError("integrate: non-finite initial state");
    DenseSolution sol;
    sol.t_begin_ = t0;
    sol.t_end_ = t1;
    sol.y_begin_ = y0;
    sol.y_end_ = y0;
    if (t0 == t1) return sol;
    const double dir = t1 > t0 ? 1.0 : -1.0;
    if (opts.inside && !opts.inside(y0)) throw DomainExitError(t0, "initial state outside the domain");

    std::vector<double> stops;
    for (double b : breakpoints)
        if ((b - t0) * dir > 0 && (t1 - b) * dir > 0) stops.push_back(b);
    std::sort(stops.begin(), stops.end());
    if (dir < 0) std::reverse(stops.begin(), stops.end());
    stops.erase(std::unique(stops.begin(), stops.end()), stops.end());
    stops.push_back(t1);

    const auto n = y0.size();
    Eigen::VectorXd y = y0, k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), y1(n), err(n);
    auto f = [&](double t, const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
        rhs(t, x, dx);
        ++sol.stats_.rhs_evals;
    };

    double t = t0;
    double h = opts.initial_step > 0 ? opts.initial_step * dir : 0.0;
    for (double seg_end : stops) {
        f(t, y, k1);
        if (h == 0.0) {
            // Hairer-style initial guess
            double d0 = 0, dd1 = 0;
            for (Eigen::Index i = 0; i < n; ++i) {
                double sc = opts.atol + opts.rtol * std::abs(y[i]);
                d0 += (y[i] / sc) * (y[i] / sc);
                dd1 += (k1[i] / sc) * (k1[i] / sc);
            }
            d0 = std::sqrt(d0 / std::max<double>(1, static_cast<double>(n)));
            dd1 = std::sqrt(dd1 / std::max<double>(1, static_cast<double>(n)));
            double h0 = (d0 < 1e-5 || dd1 < 1e-5) ? 1e-6 : 0.01 * d0 / dd1;
            h = dir * std::min(h0 * 10.0, std::abs(seg_end - t));
            if (h == 0.0) h = dir * 1e-6;
        }
        bool last = false;
        while (!last) {
            if (sol.stats_.accepted + sol.stats_.rejected > opts.max_steps)
                throw NumericalError("integrate: maximum number of steps exceeded");
            // absorb a roundoff-sized remainder into this step
            if ((t + h - seg_end) * dir >= -1e-10 * std::abs(h)) {
                h = seg_end - t;
                last = true;
            }
            const double span = std::max({1.0, std::abs(t), std::abs(seg_end)});
            if (last && std::abs(h) < 1e-14 * span) {
                t = seg_end;  // already there up to roundoff
                break;
            }
            if (std::abs(h) < 1e-14 * span) {
                std::ostringstream os;
                os << "integrate: step-size underflow at t=" << t;
                throw NumericalError(os.str());
            }
            ytmp = y + h * a21 * k1;
            f(t + c2 * h, ytmp, k2);
            ytmp = y + h * (a31 * k1 + a32 * k2);
            f(t + c3 * h, ytmp, k3);
            ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
            f(t + c4 * h, ytmp, k4);
            ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
            f(t + c5 * h, ytmp, k5);
            ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
            const double tnew = last ? seg_end : t + h;
            // at an interior breakpoint evaluate the left limit so piecewise controls stay on this piece
            const double teval = (last && seg_end != t1) ? seg_end - dir * 1e-12 * std::max(1.0, std::abs(seg_end)) : tnew;
            f(teval, ytmp, k6);
            y1 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
            f(teval, y1, k7);
            err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            double en = y1.allFinite() ? error_norm(err, y, y1, opts) : 1e10;
            if (!std::isfinite(en)) en = 1e10;
            if (en <= 1.0) {
                if (opts.dense || opts.inside) {
                    DenseStep st;
                    st.t = t;
                    st.h = h;
                    st.r1 = y;
                    st.r2 = y1 - y;
                    st.r3 = h * k1 - st.r2;
                    st.r4 = st.r2 - h * k7 - st.r3;
                    st.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
                    if (opts.inside && !opts.inside(y1)) {
                        double lo = 0.0, hi = 1.0;
                        for (int it = 0; it < 60; ++it) {
                            double mid = 0.5 * (lo + hi);
                            if (opts.inside(st.eval(t + mid * h))) lo = mid;
                            else hi = mid;
                        }
                        double texit = t + hi * h;
                        std::ostringstream os;
                        os << "trajectory left the domain at t=" << texit;
                        throw DomainExitError(texit, os.str());
                    }
                    if (opts.dense) sol.steps_.push_back(std::move(st));
                }
                ++sol.stats_.accepted;
                t = tnew;
                y = y1;
                k1 = k7;
                double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
                if (!last) h *= fac;
                else h *= std::max(1.0, fac);  // carry a sensible step into the next segment
            } else {
                ++sol.stats_.rejected;
                last = false;
                h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
            }
        }
        t = seg_end;
    }
    sol.y_end_ = y;
    return sol;
}

}  // namespace subrie
