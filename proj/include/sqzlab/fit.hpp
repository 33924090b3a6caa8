#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sqzlab/data_series.hpp"
#include "sqzlab/errors.hpp"

namespace sqzlab {

/// Weighted residual vector r(theta); the engine minimizes |r|^2.
using ResidualFn = std::function<std::vector<double>(std::span<const double>)>;

struct FitParam {
  std::string name;
  double init = 0.0;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

struct FitOptions {
  int max_iter = 500;
  double step_tol = 1e-10;  // relative step size
  double grad_tol = 1e-12;  // gradient infinity norm
  double rank_tol = 1e-9;   // singular-value ratio treated as rank deficient
  double fd_step = 1e-6;    // central-difference scale
};

struct FitReport {
  std::vector<std::string> names;
  std::vector<double> params;
  std::vector<double> std_errors;  // 1 sigma, sqrt(diag(covariance))
  Eigen::MatrixXd covariance;           // inv(J'J) scaled by chi2/dof
  Eigen::MatrixXd covariance_unscaled;  // inv(J'J) at the stated sigmas
  double chi2 = 0.0;
  int dof = 0;
  bool converged = false;
  int n_iter = 0;
  std::vector<double> chi2_history;  // objective at accepted iterates
  std::vector<std::pair<std::string, double>> derived;

  double value(std::string_view name) const { return params[index_of(name)]; }
  double error_of(std::string_view name) const { return std_errors[index_of(name)]; }

  std::size_t index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return i;
    throw std::invalid_argument("fit report: no parameter named " + std::string(name));
  }
};

namespace detail {

// Bounds are enforced by optimizing an unconstrained internal coordinate:
// logistic map for two-sided intervals, shifted exponential for one-sided.
struct ParamTransform {
  enum Kind { identity, log_lower, log_upper, logistic } kind = identity;
  double lower = 0.0, upper = 0.0;

  static ParamTransform make(const FitParam& p) {
    const bool lo = std::isfinite(p.lower), hi = std::isfinite(p.upper);
    ParamTransform t;
    t.lower = p.lower;
    t.upper = p.upper;
    if (lo && hi)
      t.kind = logistic;
    else if (lo)
      t.kind = log_lower;
    else if (hi)
      t.kind = log_upper;
    return t;
  }

  double external(double z) const {
    switch (kind) {
      case identity: return z;
      case log_lower: return lower + std::exp(z);
      case log_upper: return upper - std::exp(z);
      case logistic: return lower + (upper - lower) / (1.0 + std::exp(-z));
    }
    return z;
  }

  double internal(double theta) const {
    switch (kind) {
      case identity: return theta;
      case log_lower: return std::log(std::max(theta - lower, 1e-300));
      case log_upper: return std::log(std::max(upper - theta, 1e-300));
      case logistic: {
        const double w = (upper - lower);
        double f = std::clamp((theta - lower) / w, 1e-12, 1.0 - 1e-12);
        return std::log(f / (1.0 - f));
      }
    }
    return theta;
  }

  double slope(double z) const {  // d(external)/dz
    switch (kind) {
      case identity: return 1.0;
      case log_lower: return std::exp(z);
      case log_upper: return -std::exp(z);
      case logistic: {
        const double s = 1.0 / (1.0 + std::exp(-z));
        return (upper - lower) * s * (1.0 - s);
      }
    }
    return 1.0;
  }
};

inline std::size_t first_non_finite(const Eigen::VectorXd& r) {
  for (Eigen::Index i = 0; i < r.size(); ++i)
    if (!std::isfinite(r[i])) return static_cast<std::size_t>(i);
  return static_cast<std::size_t>(r.size());
}

}  // namespace detail

/// Central-difference Jacobian of a residual function, the same scheme the
/// fit engine uses internally.
inline Eigen::MatrixXd fit_jacobian(const ResidualFn& residual, std::span<const double> params,
                                    double fd_step = 1e-6) {
  std::vector<double> p(params.begin(), params.end());
  const auto r0 = residual(p);
  Eigen::MatrixXd jac(static_cast<Eigen::Index>(r0.size()), static_cast<Eigen::Index>(p.size()));
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double h = fd_step * std::max(1.0, std::abs(p[j]));
    const double saved = p[j];
    p[j] = saved + h;
    const auto rp = residual(p);
    p[j] = saved - h;
    const auto rm = residual(p);
    p[j] = saved;
    for (std::size_t i = 0; i < r0.size(); ++i)
      jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          (rp[i] - rm[i]) / (2.0 * h);
  }
  return jac;
}

/// Damped least squares with Marquardt scaling. Bounds are handled by the
/// internal parameter transforms; the covariance is inv(J'J) scaled by
/// chi2/dof and mapped back through the transform Jacobian.
inline FitReport fit_least_squares(const ResidualFn& residual, const std::vector<FitParam>& specs,
                                   const FitOptions& opt = {}) {
  const int np = static_cast<int>(specs.size());
  if (np == 0) throw std::invalid_argument("fit: no parameters");

  std::vector<detail::ParamTransform> tf(specs.size());
  Eigen::VectorXd z(np);
  for (int j = 0; j < np; ++j) {
    if (!(specs[j].lower <= specs[j].init && specs[j].init <= specs[j].upper))
      throw std::invalid_argument("fit: init for '" + specs[j].name + "' outside bounds");
    tf[j] = detail::ParamTransform::make(specs[j]);
    z[j] = tf[j].internal(specs[j].init);
  }

  auto externals = [&](const Eigen::VectorXd& zz) {
    std::vector<double> th(specs.size());
    for (int j = 0; j < np; ++j) th[j] = tf[j].external(zz[j]);
    return th;
  };
  auto eval = [&](const Eigen::VectorXd& zz) {
    const auto r = residual(externals(zz));
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(r.data(),
                                                             static_cast<Eigen::Index>(r.size())));
  };
  ResidualFn z_residual = [&](std::span<const double> zz) {
    Eigen::VectorXd v(np);
    for (int j = 0; j < np; ++j) v[j] = zz[j];
    return residual(externals(v));
  };
  auto jac_z = [&](const Eigen::VectorXd& zz) {
    std::vector<double> zv(zz.data(), zz.data() + zz.size());
    return fit_jacobian(z_residual, zv, opt.fd_step);
  };

  Eigen::VectorXd r = eval(z);
  if (auto bad = detail::first_non_finite(r); bad < static_cast<std::size_t>(r.size()))
    throw evaluation_error("fit: residual not finite at start, point " + std::to_string(bad), bad);
  const int m = static_cast<int>(r.size());
  if (m < np)
    throw under_determined_error("fit: " + std::to_string(m) + " residuals for " +
                                 std::to_string(np) + " parameters");

  double chi2 = r.squaredNorm();
  FitReport report;
  report.chi2_history.push_back(chi2);

  double lambda = 1e-3;
  bool converged = false;
  int iter = 0;
  Eigen::MatrixXd jac = jac_z(z);

  for (; iter < opt.max_iter && !converged; ++iter) {
    const Eigen::VectorXd grad = jac.transpose() * r;
    if (grad.lpNorm<Eigen::Infinity>() < opt.grad_tol) {
      converged = true;
      break;
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    Eigen::VectorXd diag = jtj.diagonal();
    const double diag_floor = 1e-12 * std::max(1.0, diag.maxCoeff());
    for (int j = 0; j < np; ++j) diag[j] = std::max(diag[j], diag_floor);

    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * diag;
      const Eigen::VectorXd step = a.ldlt().solve(-grad);
      Eigen::VectorXd z_try = z + step;
      for (int j = 0; j < np; ++j)
        if (tf[j].kind != detail::ParamTransform::identity)
          z_try[j] = std::clamp(z_try[j], -35.0, 35.0);
      const Eigen::VectorXd r_try = eval(z_try);
      const bool finite =
          detail::first_non_finite(r_try) == static_cast<std::size_t>(r_try.size());
      const double chi2_try = finite ? r_try.squaredNorm() : std::numeric_limits<double>::max();
      const double rel_step = step.norm() / std::max(z.norm(), 1.0);
      if (chi2_try < chi2) {
        const double improvement = chi2 - chi2_try;
        z = z_try;
        r = r_try;
        chi2 = chi2_try;
        report.chi2_history.push_back(chi2);
        lambda = std::max(lambda / 3.0, 1e-14);
        accepted = true;
        if (rel_step < opt.step_tol) converged = true;
        if (improvement <= 1e-14 * std::max(chi2, 1e-300)) converged = true;
        jac = jac_z(z);
      } else {
        // a rejected micro-step means the iterate already sits at the minimum
        if (rel_step < opt.step_tol) {
          converged = true;
          break;
        }
        lambda *= 10.0;
        if (lambda > 1e14) break;  // stalled
      }
    }
    if (!accepted) break;
  }

  // Identifiability check at the final iterate. Parameters pinned at a bound
  // (internal coordinate at the clamp) have a collapsed transform slope and
  // are excluded; they report zero error below.
  std::vector<int> active;
  for (int j = 0; j < np; ++j)
    if (tf[j].kind == detail::ParamTransform::identity || std::abs(z[j]) < 30.0)
      active.push_back(j);
  const int na = static_cast<int>(active.size());
  Eigen::MatrixXd cov_z = Eigen::MatrixXd::Zero(np, np);
  if (na > 0) {
    Eigen::MatrixXd jac_active(jac.rows(), na);
    for (int j = 0; j < na; ++j) jac_active.col(j) = jac.col(active[j]);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac_active,
                                                Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double s_max = sv[0];
    if (!(s_max > 0.0) || sv[na - 1] <= opt.rank_tol * s_max) {
      const Eigen::VectorXd null_dir = svd.matrixV().col(na - 1);
      std::vector<std::string> combo;
      std::string desc;
      for (int j = 0; j < na; ++j) {
        if (std::abs(null_dir[j]) >= 0.25) {
          combo.push_back(specs[active[j]].name);
          desc += (desc.empty() ? "" : ", ") + specs[active[j]].name;
        }
      }
      if (combo.empty())
        for (int j = 0; j < na; ++j) combo.push_back(specs[active[j]].name);
      throw rank_deficiency_error("fit: J'J singular, unidentifiable combination: " + desc,
                                  combo);
    }
    const Eigen::MatrixXd cov_active = svd.matrixV() *
                                       sv.array().square().inverse().matrix().asDiagonal() *
                                       svd.matrixV().transpose();
    for (int i = 0; i < na; ++i)
      for (int j = 0; j < na; ++j) cov_z(active[i], active[j]) = cov_active(i, j);
  }

  report.names.reserve(specs.size());
  for (const auto& s : specs) report.names.push_back(s.name);
  report.params = externals(z);
  report.chi2 = chi2;
  report.dof = m - np;
  report.converged = converged;
  report.n_iter = iter;

  // cov_z = inv(J'J) * chi2/dof, mapped to external coordinates by the
  // transform slopes; dof = 0 (exact fit) leaves the covariance unscaled.
  const double scale = report.dof > 0 ? chi2 / report.dof : 1.0;
  Eigen::VectorXd slopes(np);
  for (int j = 0; j < np; ++j) slopes[j] = tf[j].slope(z[j]);
  report.covariance_unscaled = slopes.asDiagonal() * cov_z * slopes.asDiagonal();
  report.covariance = report.covariance_unscaled * scale;
  report.std_errors.resize(specs.size());
  for (int j = 0; j < np; ++j)
    report.std_errors[j] = std::sqrt(std::max(report.covariance(j, j), 0.0));
  return report;
}

struct GridAxis {
  std::string name;
  std::vector<double> values;
};

struct GridResult {
  std::vector<std::string> names;
  std::vector<double> values;
  double chi2 = std::numeric_limits<double>::infinity();
};

inline std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 2) return {lo};
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

/// Exhaustive minimizer of |r|^2 over the lattice product, the brute-force
/// cross-check for the damped engine.
inline GridResult grid_oracle(const ResidualFn& residual, const std::vector<GridAxis>& axes) {
  if (axes.empty()) throw std::invalid_argument("grid_oracle: empty grid");
  for (const auto& a : axes)
    if (a.values.empty())
      throw std::invalid_argument("grid_oracle: axis '" + a.name + "' has no points");

  GridResult best;
  for (const auto& a : axes) best.names.push_back(a.name);
  std::vector<std::size_t> idx(axes.size(), 0);
  std::vector<double> point(axes.size());
  for (;;) {
    for (std::size_t j = 0; j < axes.size(); ++j) point[j] = axes[j].values[idx[j]];
    const auto r = residual(point);
    double chi2 = 0.0;
    for (double ri : r) chi2 += ri * ri;
    if (std::isfinite(chi2) && chi2 < best.chi2) {
      best.chi2 = chi2;
      best.values = point;
    }
    std::size_t j = 0;
    for (; j < axes.size(); ++j) {
      if (++idx[j] < axes[j].values.size()) break;
      idx[j] = 0;
    }
    if (j == axes.size()) break;
  }
  if (best.values.empty()) throw evaluation_error("grid_oracle: objective never finite", 0);
  return best;
}

/// Weighted straight-line fit with analytic covariance. Parameters are
/// named "slope" and "intercept".
inline FitReport linfit(const DataSeries& data) {
  data.validate();
  const DataSeries d = data.with_default_sigma(1.0);
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double w = 1.0 / (d.sigma[i] * d.sigma[i]);
    sw += w;
    sx += w * d.x[i];
    sy += w * d.y[i];
    sxx += w * d.x[i] * d.x[i];
    sxy += w * d.x[i] * d.y[i];
  }
  const double delta = sw * sxx - sx * sx;
  if (!(delta > 1e-12 * sw * sxx))
    throw rank_deficiency_error("linfit: degenerate abscissae", {"slope", "intercept"});

  FitReport report;
  report.names = {"slope", "intercept"};
  const double slope = (sw * sxy - sx * sy) / delta;
  const double intercept = (sxx * sy - sx * sxy) / delta;
  report.params = {slope, intercept};

  double chi2 = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double res = (d.y[i] - slope * d.x[i] - intercept) / d.sigma[i];
    chi2 += res * res;
  }
  report.chi2 = chi2;
  report.dof = static_cast<int>(d.size()) - 2;
  report.converged = true;
  report.n_iter = 0;
  const double scale = report.dof > 0 ? chi2 / report.dof : 1.0;
  report.covariance.resize(2, 2);
  report.covariance << sw / delta, -sx / delta, -sx / delta, sxx / delta;
  report.covariance *= scale;
  report.std_errors = {std::sqrt(std::max(report.covariance(0, 0), 0.0)),
                       std::sqrt(std::max(report.covariance(1, 1), 0.0))};
  return report;
}

}  // namespace sqzlab
