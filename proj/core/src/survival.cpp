/*
 * Copyright 2026 The retinarisk Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "retinarisk/survival.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "retinarisk/error.hpp"
#include "retinarisk/special_functions.hpp"

namespace retinarisk {

double KMCurve::survival_at(double t) const {
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 1.0;
  return survival[static_cast<std::size_t>(it - times.begin()) - 1];
}

KMCurve kaplan_meier(std::span<const double> durations, std::span<const bool> events,
                     double alpha) {
  if (durations.size() != events.size()) {
    fail(ErrorKind::InvalidInput, "durations and events differ in length");
  }
  if (durations.empty()) fail(ErrorKind::Precondition, "Kaplan-Meier needs at least one record");
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::InvalidInput, "alpha must be in (0, 1)");
  for (double d : durations) {
    if (!(d >= 0.0) || !std::isfinite(d)) {
      fail(ErrorKind::InvalidInput, "durations must be finite and non-negative");
    }
  }

  const std::size_t n = durations.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return durations[a] < durations[b]; });

  const double z = special::normal_quantile(1.0 - alpha / 2.0);
  KMCurve km;
  double s = 1.0;
  double greenwood = 0.0;  // sum of d / (n (n - d))
  std::size_t at_risk = n;
  std::size_t i = 0;
  while (i < n) {
    const double t = durations[order[i]];
    std::size_t d = 0, c = 0;
    while (i < n && durations[order[i]] == t) {
      (events[order[i]] ? d : c) += 1;
      ++i;
    }
    if (d > 0) {
      if (d < at_risk) {
        s *= 1.0 - static_cast<double>(d) / static_cast<double>(at_risk);
        greenwood += static_cast<double>(d) /
                     (static_cast<double>(at_risk) * static_cast<double>(at_risk - d));
      } else {
        s = 0.0;
      }
    }
    double lo = s, hi = s;
    if (s > 0.0 && s < 1.0) {
      const double log_s = std::log(s);
      const double se = std::sqrt(greenwood) / std::fabs(log_s);
      const double centre = std::log(-log_s);
      lo = std::exp(-std::exp(centre + z * se));
      hi = std::exp(-std::exp(centre - z * se));
    }
    km.times.push_back(t);
    km.survival.push_back(s);
    km.ci_lo.push_back(lo);
    km.ci_hi.push_back(hi);
    km.at_risk.push_back(at_risk);
    km.n_events.push_back(d);
    km.n_censored.push_back(c);
    at_risk -= d + c;
  }
  return km;
}

KMCurve kaplan_meier(std::span<const SurvivalRecord> records, double alpha) {
  std::vector<double> durations(records.size());
  std::unique_ptr<bool[]> events(new bool[records.size()]);
  for (std::size_t i = 0; i < records.size(); ++i) {
    durations[i] = records[i].duration_days;
    events[i] = records[i].event;
  }
  return kaplan_meier(durations, std::span<const bool>(events.get(), records.size()), alpha);
}

LogRankResult log_rank(const std::vector<std::vector<SurvivalRecord>>& groups) {
  const std::size_t k = groups.size();
  if (k < 2) fail(ErrorKind::Precondition, "log-rank needs at least two groups");
  struct Obs {
    int time;
    bool event;
    std::size_t group;
  };
  std::vector<Obs> all;
  for (std::size_t g = 0; g < k; ++g) {
    if (groups[g].empty()) fail(ErrorKind::Precondition, "log-rank group is empty");
    for (const auto& r : groups[g]) all.push_back({r.duration_days, r.event, g});
  }
  std::sort(all.begin(), all.end(), [](const Obs& a, const Obs& b) { return a.time < b.time; });

  LogRankResult out;
  out.df = static_cast<int>(k) - 1;
  out.observed.assign(k, 0.0);
  out.expected.assign(k, 0.0);
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k),
                                            static_cast<Eigen::Index>(k));
  std::vector<double> at_risk(k, 0.0);
  for (const auto& o : all) at_risk[o.group] += 1.0;

  std::size_t i = 0;
  std::vector<double> d_g(k), leaving(k);
  while (i < all.size()) {
    const int t = all[i].time;
    std::fill(d_g.begin(), d_g.end(), 0.0);
    std::fill(leaving.begin(), leaving.end(), 0.0);
    while (i < all.size() && all[i].time == t) {
      if (all[i].event) d_g[all[i].group] += 1.0;
      leaving[all[i].group] += 1.0;
      ++i;
    }
    const double d = std::accumulate(d_g.begin(), d_g.end(), 0.0);
    const double n = std::accumulate(at_risk.begin(), at_risk.end(), 0.0);
    if (d > 0.0) {
      const double tie = n > 1.0 ? d * (n - d) / (n - 1.0) : 0.0;
      for (std::size_t g = 0; g < k; ++g) {
        out.observed[g] += d_g[g];
        out.expected[g] += d * at_risk[g] / n;
        for (std::size_t h = 0; h < k; ++h) {
          const double delta = g == h ? 1.0 : 0.0;
          v(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(h)) +=
              tie * (at_risk[g] / n) * (delta - at_risk[h] / n);
        }
      }
    }
    for (std::size_t g = 0; g < k; ++g) at_risk[g] -= leaving[g];
  }

  const double total_events = std::accumulate(out.observed.begin(), out.observed.end(), 0.0);
  if (total_events == 0.0) {
    out.chi2 = 0.0;
    out.p = 1.0;
    return out;
  }
  const auto m = static_cast<Eigen::Index>(k - 1);
  Eigen::VectorXd diff(m);
  for (Eigen::Index g = 0; g < m; ++g) {
    diff(g) = out.observed[static_cast<std::size_t>(g)] - out.expected[static_cast<std::size_t>(g)];
  }
  const Eigen::MatrixXd vm = v.topLeftCorner(m, m);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(vm);
  cod.setThreshold(1e-12);
  if (cod.rank() == 0) {
    out.chi2 = 0.0;
    out.p = 1.0;
    return out;
  }
  out.chi2 = std::max(0.0, diff.dot(cod.solve(diff)));
  out.df = static_cast<int>(cod.rank());
  out.p = special::chi2_sf(out.chi2, out.df);
  return out;
}

namespace {

struct CoxData {
  std::vector<std::size_t> order;   // by time descending
  Eigen::MatrixXd x;                // centred covariates
};

void check_cox_inputs(std::span<const double> durations, std::span<const bool> events,
                      const Eigen::MatrixXd& x) {
  if (durations.size() != events.size() || static_cast<Eigen::Index>(durations.size()) != x.rows()) {
    fail(ErrorKind::InvalidInput, "Cox inputs differ in length");
  }
  for (double d : durations) {
    if (!std::isfinite(d) || d < 0.0) fail(ErrorKind::InvalidInput, "durations must be finite and >= 0");
  }
  if (!x.allFinite()) fail(ErrorKind::InvalidInput, "covariates must be finite");
}

CoxData prepare(std::span<const double> durations, const Eigen::MatrixXd& x) {
  CoxData data;
  data.order.resize(durations.size());
  std::iota(data.order.begin(), data.order.end(), 0);
  std::stable_sort(data.order.begin(), data.order.end(),
                   [&](std::size_t a, std::size_t b) { return durations[a] > durations[b]; });
  data.x = x.rowwise() - x.colwise().mean();
  return data;
}

CoxEvaluation evaluate(const CoxData& data, std::span<const double> durations,
                       std::span<const bool> events, const Eigen::VectorXd& beta, CoxTies ties,
                       bool with_hessian = true) {
  const Eigen::Index p = data.x.cols();
  const std::size_t n = data.order.size();
  const Eigen::VectorXd eta = data.x * beta;
  const double shift = n > 0 ? eta.maxCoeff() : 0.0;

  CoxEvaluation ev;
  ev.gradient = Eigen::VectorXd::Zero(p);
  ev.hessian = Eigen::MatrixXd::Zero(p, p);

  double s0 = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd d1(p), m1(p);
  Eigen::MatrixXd d2(p, p), m2(p, p);

  std::size_t i = 0;
  while (i < n) {
    const double t = durations[data.order[i]];
    double d0 = 0.0;
    d1.setZero();
    if (with_hessian) d2.setZero();
    int n_tied_events = 0;
    while (i < n && durations[data.order[i]] == t) {
      const std::size_t r = data.order[i];
      const double w = std::exp(eta(static_cast<Eigen::Index>(r)) - shift);
      const auto xr = data.x.row(static_cast<Eigen::Index>(r)).transpose();
      s0 += w;
      s1.noalias() += w * xr;
      if (with_hessian) s2.noalias() += w * xr * xr.transpose();
      if (events[r]) {
        ++n_tied_events;
        d0 += w;
        d1.noalias() += w * xr;
        if (with_hessian) d2.noalias() += w * xr * xr.transpose();
        ev.log_likelihood += eta(static_cast<Eigen::Index>(r)) - shift;
        ev.gradient.noalias() += xr;
      }
      ++i;
    }
    for (int l = 0; l < n_tied_events; ++l) {
      const double f = ties == CoxTies::Efron ? static_cast<double>(l) / n_tied_events : 0.0;
      const double denom = s0 - f * d0;
      m1 = s1 - f * d1;
      ev.log_likelihood -= std::log(denom);
      ev.gradient.noalias() -= m1 / denom;
      if (with_hessian) {
        m2 = s2 - f * d2;
        ev.hessian.noalias() -= m2 / denom - (m1 * m1.transpose()) / (denom * denom);
      }
    }
  }
  return ev;
}

}  // namespace

CoxEvaluation cox_evaluate(std::span<const double> durations, std::span<const bool> events,
                           const Eigen::MatrixXd& x, const Eigen::VectorXd& beta, CoxTies ties) {
  check_cox_inputs(durations, events, x);
  if (beta.size() != x.cols()) fail(ErrorKind::InvalidInput, "beta has the wrong length");
  return evaluate(prepare(durations, x), durations, events, beta, ties);
}

ScoreTest cox_score_test(std::span<const double> durations, std::span<const bool> events,
                         const Eigen::MatrixXd& x, CoxTies ties) {
  check_cox_inputs(durations, events, x);
  const auto ev = evaluate(prepare(durations, x), durations, events,
                           Eigen::VectorXd::Zero(x.cols()), ties);
  ScoreTest out;
  out.df = static_cast<int>(x.cols());
  const Eigen::MatrixXd info = -ev.hessian;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(info);
  out.statistic = std::max(0.0, ev.gradient.dot(cod.solve(ev.gradient)));
  out.p = out.df > 0 ? special::chi2_sf(out.statistic, out.df) : 1.0;
  return out;
}

CoxModel cox_fit(std::span<const double> durations, std::span<const bool> events,
                 const Eigen::MatrixXd& x, std::vector<std::string> names,
                 const CoxOptions& options) {
  check_cox_inputs(durations, events, x);
  const Eigen::Index p = x.cols();
  if (p == 0) fail(ErrorKind::Degenerate, "Cox model needs at least one covariate");
  if (names.empty()) {
    for (Eigen::Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
  }
  if (static_cast<Eigen::Index>(names.size()) != p) {
    fail(ErrorKind::InvalidInput, "covariate names do not match the design");
  }
  for (Eigen::Index j = 0; j < p; ++j) {
    if (x.col(j).maxCoeff() == x.col(j).minCoeff()) {
      fail(ErrorKind::Degenerate, "constant covariate column '" + names[static_cast<std::size_t>(j)] + "'");
    }
  }
  const auto n_events = static_cast<std::size_t>(std::count(events.begin(), events.end(), true));
  if (n_events == 0) fail(ErrorKind::Precondition, "Cox model needs at least one event");

  const CoxData data = prepare(durations, x);
  const double n = static_cast<double>(durations.size());
  const Eigen::ArrayXd range = x.colwise().maxCoeff().array() - x.colwise().minCoeff().array();
  // log hazard ratio across the observed range of a covariate
  auto diverged = [&](const Eigen::VectorXd& b) {
    return (b.array().abs() * range.transpose()).maxCoeff() > options.divergence_norm;
  };

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  CoxEvaluation ev = evaluate(data, durations, events, beta, options.ties);
  const double ll_null = ev.log_likelihood;

  bool converged = false;
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    if (ev.gradient.cwiseAbs().maxCoeff() / n < options.gradient_tolerance) {
      converged = true;
      break;
    }
    const Eigen::MatrixXd info = -ev.hessian;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      fail(ErrorKind::Collinearity, "Cox information matrix is not positive definite");
    }
    Eigen::VectorXd step = ldlt.solve(ev.gradient);
    if (!step.allFinite()) fail(ErrorKind::Collinearity, "Cox Newton step is not finite");

    Eigen::VectorXd candidate = beta + step;
    CoxEvaluation next = evaluate(data, durations, events, candidate, options.ties);
    int halvings = 0;
    while (!(next.log_likelihood >= ev.log_likelihood - 1e-12 * std::fabs(ev.log_likelihood)) &&
           halvings < 30) {
      step *= 0.5;
      candidate = beta + step;
      next = evaluate(data, durations, events, candidate, options.ties);
      ++halvings;
    }
    beta = candidate;
    ev = std::move(next);
    if (diverged(beta)) {
      fail(ErrorKind::Separation,
           "Cox coefficients diverge (monotone likelihood); check for perfect separation");
    }
    if (step.norm() < options.step_tolerance) {
      converged = true;
      ++iter;
      break;
    }
  }
  if (!converged) {
    fail(ErrorKind::NonConvergence, "Cox fit did not converge in " +
                                        std::to_string(options.max_iterations) + " iterations");
  }

  if (diverged(beta)) {
    fail(ErrorKind::Separation,
         "Cox coefficients diverge (monotone likelihood); check for perfect separation");
  }
  const Eigen::MatrixXd info = -ev.hessian;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    fail(ErrorKind::Collinearity, "Cox information matrix is singular at the solution");
  }
  CoxModel model;
  model.names = std::move(names);
  model.coefficients = beta;
  model.covariance = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
  model.se = model.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  const double z = special::normal_quantile(1.0 - options.alpha / 2.0);
  model.hazard_ratios = beta.array().exp();
  model.hr_ci_lo = (beta.array() - z * model.se.array()).exp();
  model.hr_ci_hi = (beta.array() + z * model.se.array()).exp();
  model.wald_p.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double zj = model.se(j) > 0.0 ? std::fabs(beta(j) / model.se(j)) : 0.0;
    model.wald_p(j) = 2.0 * special::normal_sf(zj);
  }
  model.log_partial_likelihood = ev.log_likelihood;
  model.null_log_partial_likelihood = ll_null;
  model.lrt_statistic = std::max(0.0, 2.0 * (ev.log_likelihood - ll_null));
  model.lrt_df = static_cast<int>(p);
  model.lrt_p = special::chi2_sf(model.lrt_statistic, model.lrt_df);
  model.iterations = iter;
  model.n = durations.size();
  model.n_events = n_events;
  return model;
}

CoxModel cox_fit(std::span<const double> durations, std::span<const bool> events,
                 const CovariateMatrix& covariates, const CoxOptions& options) {
  return cox_fit(durations, events, covariates.values, covariates.names(), options);
}

}  // namespace retinarisk
