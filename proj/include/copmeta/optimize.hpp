#pragma once

// Quasi-Newton (BFGS) minimisation with central-difference gradients, and
// finite-difference Hessians for observed-information standard errors.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace copmeta {

struct OptimOptions {
    int max_iter = 500;
    double grad_tol = 1e-5;  // max-norm of the gradient
    double step_tol = 1e-9;
    double max_step = 5.0;   // largest coordinate change in one line search
};

struct OptimResult {
    Eigen::VectorXd x;
    double value = std::numeric_limits<double>::infinity();
    Eigen::VectorXd gradient;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    std::string message;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

namespace detail {

inline double fd_step(double x) { return std::cbrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, std::abs(x)); }

// Objective wrapper: exceptions and NaN map to +inf, evaluations are counted.
class Counted {
public:
    explicit Counted(const Objective& f) : f_(f) {}

    double operator()(const Eigen::VectorXd& x) {
        ++count_;
        double v;
        try {
            v = f_(x);
        } catch (const std::exception&) {
            return std::numeric_limits<double>::infinity();
        }
        return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
    }

    int count() const { return count_; }

private:
    const Objective& f_;
    int count_ = 0;
};

inline Eigen::VectorXd gradient(Counted& f, const Eigen::VectorXd& x, double fx) {
    const Eigen::Index n = x.size();
    Eigen::VectorXd g(n);
    Eigen::VectorXd xp = x;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double h = fd_step(x[i]);
        xp[i] = x[i] + h;
        const double fp = f(xp);
        xp[i] = x[i] - h;
        const double fm = f(xp);
        xp[i] = x[i];
        if (std::isfinite(fp) && std::isfinite(fm)) {
            g[i] = (fp - fm) / (2.0 * h);
        } else if (std::isfinite(fp)) {
            g[i] = (fp - fx) / h;
        } else if (std::isfinite(fm)) {
            g[i] = (fx - fm) / h;
        } else {
            g[i] = 0.0;
        }
    }
    return g;
}

}  // namespace detail

/// Numerical gradient by central differences with h = eps^(1/3) max(1, |x|).
inline Eigen::VectorXd numerical_gradient(const Objective& f, const Eigen::VectorXd& x) {
    detail::Counted cf(f);
    return detail::gradient(cf, x, cf(x));
}

/// Minimise f from x0 by BFGS on the inverse Hessian with a backtracking Armijo search.
inline OptimResult minimize_bfgs(const Objective& f, const Eigen::VectorXd& x0, const OptimOptions& opts = {}) {
    detail::Counted cf(f);
    const Eigen::Index n = x0.size();
    OptimResult res;
    Eigen::VectorXd x = x0;
    double fx = cf(x);
    if (!std::isfinite(fx)) {
        res.x = x;
        res.value = fx;
        res.gradient = Eigen::VectorXd::Zero(n);
        res.evaluations = cf.count();
        res.message = "objective not finite at the starting values";
        return res;
    }
    Eigen::VectorXd g = detail::gradient(cf, x, fx);
    Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n, n);
    bool fresh = true;
    int iter = 0;
    for (; iter < opts.max_iter; ++iter) {
        if (g.lpNorm<Eigen::Infinity>() <= opts.grad_tol) {
            res.converged = true;
            res.message = "gradient tolerance reached";
            break;
        }
        Eigen::VectorXd d = -hinv * g;
        double slope = g.dot(d);
        if (!(slope < 0.0)) {
            hinv.setIdentity();
            fresh = true;
            d = -g;
            slope = g.dot(d);
        }
        double t = 1.0;
        const double dmax = d.lpNorm<Eigen::Infinity>();
        if (dmax > opts.max_step) t = opts.max_step / dmax;
        double fnew = std::numeric_limits<double>::infinity();
        Eigen::VectorXd xnew;
        bool accepted = false;
        for (int k = 0; k < 60; ++k) {
            xnew = x + t * d;
            fnew = cf(xnew);
            if (std::isfinite(fnew) && fnew <= fx + 1e-4 * t * slope) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            if (!fresh) {
                hinv.setIdentity();
                fresh = true;
                continue;
            }
            res.message = "line search failed";
            res.converged = g.lpNorm<Eigen::Infinity>() <= 100.0 * opts.grad_tol;
            break;
        }
        const Eigen::VectorXd s = xnew - x;
        const Eigen::VectorXd gnew = detail::gradient(cf, xnew, fnew);
        const Eigen::VectorXd y = gnew - g;
        const double sy = s.dot(y);
        x = xnew;
        const double fprev = fx;
        fx = fnew;
        g = gnew;
        if (sy > 1e-10 * s.norm() * y.norm()) {
            if (fresh) {
                hinv *= sy / y.dot(y);
                fresh = false;
            }
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
            hinv = (eye - rho * s * y.transpose()) * hinv * (eye - rho * y * s.transpose()) + rho * s * s.transpose();
        }
        if (s.lpNorm<Eigen::Infinity>() <= opts.step_tol * (1.0 + x.lpNorm<Eigen::Infinity>()) &&
            std::abs(fprev - fx) <= opts.step_tol * (1.0 + std::abs(fx))) {
            res.converged = g.lpNorm<Eigen::Infinity>() <= 100.0 * opts.grad_tol;
            res.message = "step tolerance reached";
            ++iter;
            break;
        }
    }
    if (iter >= opts.max_iter && res.message.empty()) res.message = "iteration limit reached";
    res.x = x;
    res.value = fx;
    res.gradient = g;
    res.iterations = iter;
    res.evaluations = cf.count();
    return res;
}

/// Central-difference Hessian. steps[i] is the increment for coordinate i.
inline Eigen::MatrixXd numerical_hessian(const Objective& f, const Eigen::VectorXd& x, const Eigen::VectorXd& steps) {
    const Eigen::Index n = x.size();
    Eigen::MatrixXd h(n, n);
    const double f0 = f(x);
    auto at = [&](Eigen::Index i, double si, Eigen::Index j, double sj) {
        Eigen::VectorXd xx = x;
        xx[i] += si;
        xx[j] += sj;
        return f(xx);
    };
    for (Eigen::Index i = 0; i < n; ++i) {
        const double hi = steps[i];
        Eigen::VectorXd xx = x;
        xx[i] = x[i] + hi;
        const double fp = f(xx);
        xx[i] = x[i] - hi;
        const double fm = f(xx);
        h(i, i) = (fp - 2.0 * f0 + fm) / (hi * hi);
        for (Eigen::Index j = 0; j < i; ++j) {
            const double hj = steps[j];
            const double v = (at(i, hi, j, hj) - at(i, hi, j, -hj) - at(i, -hi, j, hj) + at(i, -hi, j, -hj)) /
                             (4.0 * hi * hj);
            h(i, j) = v;
            h(j, i) = v;
        }
    }
    return h;
}

}  // namespace copmeta
