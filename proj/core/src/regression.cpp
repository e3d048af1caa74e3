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

#include "retinarisk/regression.hpp"

#include <algorithm>
#include <cmath>

#include "retinarisk/error.hpp"
#include "retinarisk/parallel.hpp"

namespace retinarisk {

namespace {

constexpr const char* kScoreField = "score";

double sigmoid(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

// -2 log-likelihood; equals the deviance for 0/1 responses.
double deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& eta) {
  double dev = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    // log(1 + exp(eta)) - y * eta, computed stably
    const double e = eta(i);
    const double softplus = e > 0.0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
    dev += 2.0 * (softplus - y(i) * e);
  }
  return dev;
}

}  // namespace

double LogisticModel::linear_predictor(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  return intercept + row.dot(coefficients);
}

LogisticModel logistic_fit(const Eigen::MatrixXd& x, std::span<const double> responses,
                           std::vector<std::string> names, const LogisticOptions& options) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (static_cast<Eigen::Index>(responses.size()) != n) {
    fail(ErrorKind::InvalidInput, "design and responses differ in length");
  }
  if (names.empty()) {
    for (Eigen::Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
  }
  if (static_cast<Eigen::Index>(names.size()) != p) {
    fail(ErrorKind::InvalidInput, "column names do not match the design");
  }
  if (n < p + 1) fail(ErrorKind::Precondition, "logistic regression needs rows >= columns + 1");
  if (!x.allFinite()) fail(ErrorKind::InvalidInput, "design contains non-finite values");

  Eigen::VectorXd y(n);
  double y_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = responses[static_cast<std::size_t>(i)];
    if (!(v >= 0.0 && v <= 1.0)) fail(ErrorKind::InvalidInput, "responses must lie in [0, 1]");
    y(i) = v;
    y_sum += v;
  }
  if (y_sum <= 0.0 || y_sum >= static_cast<double>(n)) {
    fail(ErrorKind::Precondition, "logistic regression needs both outcome classes");
  }

  Eigen::MatrixXd xa(n, p + 1);
  xa.col(0).setOnes();
  xa.rightCols(p) = x;
  {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xa);
    if (qr.rank() < p + 1) {
      fail(ErrorKind::Collinearity, "design matrix (with intercept) is rank deficient");
    }
  }

  // Start from the intercept-only solution.
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p + 1);
  const double mean = y_sum / static_cast<double>(n);
  beta(0) = std::log(mean / (1.0 - mean));
  Eigen::VectorXd eta = xa * beta;
  double dev = deviance(y, eta);

  LogisticModel model;
  model.names = std::move(names);
  Eigen::VectorXd prob(n), w(n);
  Eigen::LDLT<Eigen::MatrixXd> ldlt;
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    for (Eigen::Index i = 0; i < n; ++i) {
      prob(i) = sigmoid(eta(i));
      w(i) = prob(i) * (1.0 - prob(i));
    }
    const Eigen::VectorXd score = xa.transpose() * (y - prob);
    const Eigen::MatrixXd info = xa.transpose() * w.asDiagonal() * xa;
    ldlt.compute(info);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < 1e-14) {
      fail(ErrorKind::Collinearity, "weighted normal equations are singular");
    }
    Eigen::VectorXd step = ldlt.solve(score);

    Eigen::VectorXd candidate = beta + step;
    Eigen::VectorXd eta_c = xa * candidate;
    double dev_c = deviance(y, eta_c);
    int halvings = 0;
    while (!(dev_c <= dev + 1e-12 * std::fabs(dev)) && halvings < 30) {
      step *= 0.5;
      candidate = beta + step;
      eta_c = xa * candidate;
      dev_c = deviance(y, eta_c);
      ++halvings;
    }
    const double change = std::fabs(dev - dev_c);
    beta = std::move(candidate);
    eta = std::move(eta_c);
    dev = dev_c;
    model.deviance_trace.push_back(dev);
    model.iterations = iter;
    if (beta.norm() > options.divergence_norm) {
      fail(ErrorKind::Separation, "logistic coefficients diverge; the outcome is (quasi-)separated");
    }
    if (change < options.deviance_tolerance) {
      model.converged = true;
      break;
    }
  }
  if (!model.converged) {
    fail(ErrorKind::NonConvergence, "IRLS did not converge in " +
                                        std::to_string(options.max_iterations) + " iterations");
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    prob(i) = sigmoid(eta(i));
    w(i) = prob(i) * (1.0 - prob(i));
  }
  ldlt.compute(xa.transpose() * w.asDiagonal() * xa);
  model.covariance = ldlt.solve(Eigen::MatrixXd::Identity(p + 1, p + 1));
  const Eigen::VectorXd se = model.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  model.intercept = beta(0);
  model.intercept_se = se(0);
  model.coefficients = beta.tail(p);
  model.se = se.tail(p);
  model.deviance = dev;
  return model;
}

LogisticModel logistic_fit(const CovariateMatrix& design, const std::vector<bool>& labels,
                           const LogisticOptions& options) {
  if (labels.size() != design.rows()) {
    fail(ErrorKind::InvalidInput, "design and labels differ in length");
  }
  std::vector<double> y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] ? 1.0 : 0.0;
  return logistic_fit(design.values, y, design.names(), options);
}

std::vector<double> logistic_predict(const LogisticModel& model, const CovariateMatrix& design) {
  const auto names = design.names();
  if (names != model.names) {
    fail(ErrorKind::InvalidInput, "design columns do not match the model columns");
  }
  std::vector<double> out(design.rows());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = sigmoid(model.linear_predictor(design.values.row(static_cast<Eigen::Index>(i))));
  }
  return out;
}

namespace {

std::vector<RiskFactorRecord> with_scores(const std::vector<LabeledSample>& samples) {
  std::vector<RiskFactorRecord> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    RiskFactorRecord r = s.factors;
    r.extra_numeric[kScoreField] = s.score;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<bool> labels_of(const std::vector<LabeledSample>& samples,
                            const std::vector<std::size_t>& rows) {
  std::vector<bool> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = samples[rows[i]].label;
  return out;
}

// Restricts a design to the rows listed in `keep` (a subset of source_rows).
CovariateMatrix restrict_rows(const CovariateMatrix& m, const std::vector<std::size_t>& keep) {
  CovariateMatrix out;
  out.columns = m.columns;
  out.values.resize(static_cast<Eigen::Index>(keep.size()), m.values.cols());
  std::size_t k = 0;
  for (std::size_t i = 0; i < m.source_rows.size() && k < keep.size(); ++i) {
    if (m.source_rows[i] == keep[k]) {
      out.values.row(static_cast<Eigen::Index>(k)) = m.values.row(static_cast<Eigen::Index>(i));
      out.source_rows.push_back(keep[k]);
      ++k;
    }
  }
  return out;
}

}  // namespace

ExperimentRow experiment_compare(const std::vector<LabeledSample>& dev,
                                 const std::vector<LabeledSample>& val,
                                 const std::vector<std::string>& factors, double alpha) {
  if (factors.empty()) fail(ErrorKind::InvalidInput, "an experiment needs at least one factor");
  ExperimentRow row;
  row.factors = factors;

  const auto dev_records = with_scores(dev);
  const auto val_records = with_scores(val);
  std::vector<std::string> combined = factors;
  combined.emplace_back(kScoreField);

  // The combined layout defines the complete-case subsets; every score is
  // present, so they coincide with the factors-only subsets.
  const DesignLayout layout_all = fit_design_layout(dev_records, combined);
  const CovariateMatrix dev_all = apply_design_layout(layout_all, dev_records);
  const CovariateMatrix val_all = apply_design_layout(layout_all, val_records);
  const std::vector<bool> y_dev = labels_of(dev, dev_all.source_rows);
  const std::vector<bool> y_val = labels_of(val, val_all.source_rows);
  row.n_dev = dev_all.rows();
  row.events_dev = static_cast<std::size_t>(std::count(y_dev.begin(), y_dev.end(), true));
  row.n_val = val_all.rows();
  row.events_val = static_cast<std::size_t>(std::count(y_val.begin(), y_val.end(), true));

  DesignLayout layout_factors = layout_all;
  layout_factors.fields.pop_back();
  DesignLayout layout_score;
  layout_score.fields.push_back(layout_all.fields.back());

  auto evaluate = [&](const DesignLayout& layout) {
    const CovariateMatrix d = restrict_rows(apply_design_layout(layout, dev_records), dev_all.source_rows);
    const CovariateMatrix v = restrict_rows(apply_design_layout(layout, val_records), val_all.source_rows);
    const LogisticModel model = logistic_fit(d, y_dev);
    const auto p = logistic_predict(model, v);
    return auc_delong(PredictionSet::from_vectors(p, y_val), alpha);
  };
  row.auc_factors = evaluate(layout_factors);
  row.auc_score = evaluate(layout_score);
  row.auc_combined = evaluate(layout_all);
  return row;
}

std::vector<ExperimentRow> run_experiments(const std::vector<LabeledSample>& dev,
                                           const std::vector<LabeledSample>& val,
                                           const std::vector<std::vector<std::string>>& experiments,
                                           double alpha, unsigned threads) {
  std::vector<ExperimentRow> rows(experiments.size());
  parallel_for(experiments.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      try {
        rows[i] = experiment_compare(dev, val, experiments[i], alpha);
      } catch (const Error& e) {
        rows[i] = ExperimentRow{};
        rows[i].factors = experiments[i];
        rows[i].error = std::string(to_string(e.kind())) + ": " + e.what();
      }
    }
  });
  return rows;
}

}  // namespace retinarisk
