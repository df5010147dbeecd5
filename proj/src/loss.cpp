#include "ebm/loss.hpp"

#include <cmath>

#include "ebm/error.hpp"

namespace ebm {

LossKind parse_loss(const std::string& name) {
  if (name == "poisson_deviance") return LossKind::poisson_deviance;
  if (name == "gamma_deviance") return LossKind::gamma_deviance;
  if (name == "rmse" || name == "squared_error") return LossKind::squared_error;
  throw ValidationError("unknown objective '" + name + "'");
}

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::poisson_deviance: return "poisson_deviance";
    case LossKind::gamma_deviance: return "gamma_deviance";
    case LossKind::squared_error: return "rmse";
  }
  return "rmse";
}

bool uses_log_link(LossKind kind) { return kind != LossKind::squared_error; }

std::string link_name(LossKind kind) { return uses_log_link(kind) ? "log" : "identity"; }

double inverse_link(LossKind kind, double score) { return uses_log_link(kind) ? std::exp(score) : score; }

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw ValidationError("loss: input lengths differ");
}

double checked_exp(double score) {
  if (!std::isfinite(score)) throw NumericError("non-finite score");
  const double mu = std::exp(score);
  if (!std::isfinite(mu)) throw NumericError("score overflow");
  return mu;
}

}  // namespace

void check_targets(LossKind kind, std::span<const double> y) {
  for (double v : y) {
    if (!std::isfinite(v)) throw ValidationError("non-finite target");
    if (kind == LossKind::gamma_deviance && !(v > 0.0)) {
      throw ValidationError("gamma deviance requires strictly positive targets");
    }
    if (kind == LossKind::poisson_deviance && v < 0.0) throw ValidationError("negative target");
  }
}

double deviance(LossKind kind, std::span<const double> y, std::span<const double> mu,
                std::span<const double> exposure) {
  check_lengths(y.size(), mu.size());
  if (!exposure.empty()) check_lengths(y.size(), exposure.size());
  if (y.empty()) throw ValidationError("deviance: empty input");
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double yi = y[i];
    const double fi = mu[i];
    if (!std::isfinite(yi) || !std::isfinite(fi)) throw ValidationError("deviance: non-finite input");
    switch (kind) {
      case LossKind::poisson_deviance: {
        const double m = (exposure.empty() ? 1.0 : exposure[i]) * fi;
        if (!(m > 0.0)) throw ValidationError("deviance: Poisson mean must be positive");
        const double log_term = yi > 0.0 ? yi * std::log(yi / m) : 0.0;
        total += 2.0 * (log_term - (yi - m));
        break;
      }
      case LossKind::gamma_deviance: {
        if (!(yi > 0.0)) throw ValidationError("gamma deviance requires strictly positive targets");
        if (!(fi > 0.0)) throw ValidationError("deviance: gamma mean must be positive");
        total += 2.0 * ((yi - fi) / fi - std::log(yi / fi));
        break;
      }
      case LossKind::squared_error: {
        const double r = yi - fi;
        total += r * r;
        break;
      }
    }
  }
  return total / static_cast<double>(y.size());
}

std::vector<double> pseudo_residuals(LossKind kind, std::span<const double> y, std::span<const double> score) {
  check_lengths(y.size(), score.size());
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    switch (kind) {
      case LossKind::poisson_deviance: out[i] = y[i] - checked_exp(score[i]); break;
      case LossKind::gamma_deviance: {
        const double mu = checked_exp(score[i]);
        out[i] = (y[i] - mu) / mu;
        break;
      }
      case LossKind::squared_error:
        if (!std::isfinite(score[i])) throw NumericError("non-finite score");
        out[i] = y[i] - score[i];
        break;
    }
  }
  return out;
}

std::vector<double> hessians(LossKind kind, std::span<const double> y, std::span<const double> score) {
  check_lengths(y.size(), score.size());
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    switch (kind) {
      case LossKind::poisson_deviance: out[i] = checked_exp(score[i]); break;
      case LossKind::gamma_deviance: out[i] = y[i] / checked_exp(score[i]); break;
      case LossKind::squared_error: out[i] = 1.0; break;
    }
  }
  return out;
}

Intercept init_intercept(LossKind kind, std::span<const double> y, std::span<const double> exposure) {
  if (y.empty()) throw ValidationError("intercept: empty target");
  if (!exposure.empty()) check_lengths(y.size(), exposure.size());
  check_targets(kind, y);
  double sum_y = 0.0;
  for (double v : y) sum_y += v;
  Intercept out;
  if (kind == LossKind::poisson_deviance) {
    double sum_e = 0.0;
    if (exposure.empty()) {
      sum_e = static_cast<double>(y.size());
    } else {
      for (double e : exposure) sum_e += e;
    }
    out.mean = sum_y / sum_e;
  } else {
    out.mean = sum_y / static_cast<double>(y.size());
  }
  if (uses_log_link(kind)) {
    if (!(out.mean > 0.0)) throw ValidationError("degenerate target: all targets are zero under a log link");
    out.score = std::log(out.mean);
  } else {
    out.score = out.mean;
  }
  return out;
}

}  // namespace ebm
