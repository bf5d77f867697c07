#pragma once

// Saturating-exponential utility-gain curves: prediction, marginal gains,
// and a profile least-squares fit from pilot observations. The amplitude is
// analytic given the saturation scale, so fitting reduces to a bounded 1-D
// search on ln(tau).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

namespace mosaic {

struct PilotObservation {
  std::int64_t cluster_id = 0;
  std::int64_t n_added = 1;    // samples added on top of the base model
  double delta_u = 0.0;        // measured utility change vs. the base model
};

struct ScalingFit {
  std::int64_t cluster_id = 0;
  double a = 0.0;              // asymptotic gain; negative for harmful clusters
  double tau = 1.0;            // saturation scale in samples
  double residual = 0.0;       // sum of squared fit errors
  bool tau_at_bound = false;   // search hit a bound: data outside the saturating regime
};

/// Predicted utility gain after n samples: a * (1 - e^{-n/tau}).
/// Exactly 0 at n = 0.
inline double predict(const ScalingFit& fit, double n) {
  return fit.a * -std::expm1(-n / fit.tau);
}

/// Discrete first difference a * (e^{-b/tau} - e^{-(b+1)/tau}): the gain of
/// the (b+1)-th sample drawn from this cluster.
inline double marginal_gain(const ScalingFit& fit, double b) {
  return fit.a * (std::exp(-b / fit.tau) - std::exp(-(b + 1.0) / fit.tau));
}

struct FitOptions {
  double tau_min = 1.0;
  double tau_max = 1e6;
  int grid_points = 200;  // log-spaced seeds before golden-section refinement
};

namespace detail {

struct ProfilePoint {
  double a = 0.0;
  double residual = 0.0;
};

// Best amplitude and residual for a fixed tau:
// a*(tau) = sum(y_k g_k) / sum(g_k^2) with g_k = 1 - e^{-n_k/tau}.
inline ProfilePoint profile_at(const std::vector<double>& ns, const std::vector<double>& ys,
                               double tau) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < ns.size(); ++k) {
    const double g = -std::expm1(-ns[k] / tau);
    num += ys[k] * g;
    den += g * g;
  }
  ProfilePoint p;
  p.a = den > 0.0 ? num / den : 0.0;
  for (std::size_t k = 0; k < ns.size(); ++k) {
    const double g = -std::expm1(-ns[k] / tau);
    const double e = ys[k] - p.a * g;
    p.residual += e * e;
  }
  return p;
}

}  // namespace detail

/// Fits (a, tau) to one cluster's pilot observations by minimizing the sum
/// of squared errors. The origin is implied by the functional form, never a
/// data point. Data outside the saturating regime pins tau at a search
/// bound and sets tau_at_bound instead of failing, so selection still runs.
inline ScalingFit fit_scaling(const std::vector<PilotObservation>& observations,
                              const FitOptions& opts = FitOptions{}) {
  if (observations.size() < 2)
    throw std::invalid_argument("scaling fit: need at least 2 observations");
  const std::int64_t cluster = observations.front().cluster_id;
  std::vector<double> ns, ys;
  ns.reserve(observations.size());
  ys.reserve(observations.size());
  for (const auto& obs : observations) {
    if (obs.cluster_id != cluster)
      throw std::invalid_argument("scaling fit: observations span multiple clusters");
    if (obs.n_added < 1) throw std::invalid_argument("scaling fit: n_added must be >= 1");
    ns.push_back(static_cast<double>(obs.n_added));
    ys.push_back(obs.delta_u);
  }
  if (std::all_of(ns.begin(), ns.end(), [&](double n) { return n == ns.front(); }))
    throw std::invalid_argument("scaling fit: all pilot sizes equal");
  if (!(opts.tau_min > 0.0) || !(opts.tau_max > opts.tau_min) || opts.grid_points < 2)
    throw std::invalid_argument("scaling fit: invalid search options");

  const double lo = std::log(opts.tau_min);
  const double hi = std::log(opts.tau_max);

  // Log-grid seed.
  int best_j = 0;
  double best_res = std::numeric_limits<double>::infinity();
  for (int j = 0; j < opts.grid_points; ++j) {
    const double lt = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(opts.grid_points - 1);
    const double res = detail::profile_at(ns, ys, std::exp(lt)).residual;
    if (res < best_res) {
      best_res = res;
      best_j = j;
    }
  }
  const double step = (hi - lo) / static_cast<double>(opts.grid_points - 1);
  double a_ln = lo + step * static_cast<double>(std::max(0, best_j - 1));
  double b_ln = lo + step * static_cast<double>(std::min(opts.grid_points - 1, best_j + 1));

  // Golden-section refinement on ln(tau).
  constexpr double inv_phi = 0.6180339887498949;
  double x1 = b_ln - inv_phi * (b_ln - a_ln);
  double x2 = a_ln + inv_phi * (b_ln - a_ln);
  double f1 = detail::profile_at(ns, ys, std::exp(x1)).residual;
  double f2 = detail::profile_at(ns, ys, std::exp(x2)).residual;
  while (b_ln - a_ln > 1e-12) {
    if (f1 <= f2) {
      b_ln = x2;
      x2 = x1;
      f2 = f1;
      x1 = b_ln - inv_phi * (b_ln - a_ln);
      f1 = detail::profile_at(ns, ys, std::exp(x1)).residual;
    } else {
      a_ln = x1;
      x1 = x2;
      f1 = f2;
      x2 = a_ln + inv_phi * (b_ln - a_ln);
      f2 = detail::profile_at(ns, ys, std::exp(x2)).residual;
    }
  }
  double tau = std::exp(0.5 * (a_ln + b_ln));

  // Pin to a bound when the optimum sits on it (non-saturating data).
  bool at_bound = false;
  if (tau >= opts.tau_max * (1.0 - 1e-9)) {
    tau = opts.tau_max;
    at_bound = true;
  } else if (tau <= opts.tau_min * (1.0 + 1e-9)) {
    tau = opts.tau_min;
    at_bound = true;
  }

  const auto final_point = detail::profile_at(ns, ys, tau);
  ScalingFit fit;
  fit.cluster_id = cluster;
  fit.a = final_point.a;
  fit.tau = tau;
  fit.residual = final_point.residual;
  fit.tau_at_bound = at_bound;
  return fit;
}

/// Groups observations by cluster and fits each; results ordered by cluster id.
inline std::vector<ScalingFit> fit_all_clusters(const std::vector<PilotObservation>& observations,
                                                const FitOptions& opts = FitOptions{}) {
  std::map<std::int64_t, std::vector<PilotObservation>> grouped;
  for (const auto& obs : observations) grouped[obs.cluster_id].push_back(obs);
  std::vector<ScalingFit> fits;
  fits.reserve(grouped.size());
  for (const auto& [cluster, group] : grouped) fits.push_back(fit_scaling(group, opts));
  return fits;
}

}  // namespace mosaic
