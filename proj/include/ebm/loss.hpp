#pragma once

#include <span>
#include <string>
#include <vector>

namespace ebm {

// Deviance objectives. Poisson and gamma use the log link, squared error the
// identity link. The gamma shape parameter is fixed to 1.
enum class LossKind { poisson_deviance, gamma_deviance, squared_error };

// Config/CLI names: "poisson_deviance", "gamma_deviance", "rmse".
LossKind parse_loss(const std::string& name);
std::string to_string(LossKind kind);
bool uses_log_link(LossKind kind);
std::string link_name(LossKind kind);

// Inverse link applied to a score.
double inverse_link(LossKind kind, double score);

// Mean deviance over rows. `mu` holds predicted means F(x); for Poisson the
// expected count is exposure * mu. `exposure` may be empty (all ones).
double deviance(LossKind kind, std::span<const double> y, std::span<const double> mu,
                std::span<const double> exposure = {});

// Negative score-gradient of the per-row deviance with the factor 2 dropped.
// `score` includes the log-exposure offset for Poisson.
std::vector<double> pseudo_residuals(LossKind kind, std::span<const double> y, std::span<const double> score);

// Second score-derivative with the same factor convention.
std::vector<double> hessians(LossKind kind, std::span<const double> y, std::span<const double> score);

struct Intercept {
  double mean = 0.0;   // c*, on the response scale
  double score = 0.0;  // beta0 = g(c*)
};

// Constant minimizing the deviance.
Intercept init_intercept(LossKind kind, std::span<const double> y, std::span<const double> exposure = {});

// Validates targets for the objective (gamma needs y > 0).
void check_targets(LossKind kind, std::span<const double> y);

}  // namespace ebm
