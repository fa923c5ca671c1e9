#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace hetreg {

enum class LossVariant {
    l1_only,           // |y* - y|, no certainty training
    joint_gaussian,    // Gaussian NLL, head emits log(sigma^2)
    joint_laplace,     // Laplace NLL rewritten in certainty form: exp(w) r - w
    separate_laplace,  // r + lambda (exp(w) r_tilde - w), r_tilde from the fold cache
    separate_no_vr,    // ablation: live residual substituted for r_tilde, detached
};

std::string_view to_string(LossVariant v);
std::optional<LossVariant> loss_variant_from_string(std::string_view s);

struct LossConfig {
    LossVariant variant = LossVariant::l1_only;
    double lambda = 0.1;   // weight of the certainty term; ignored by joint variants
    double clamp_c = 1.0;  // exp(w) is evaluated as exp(w / clamp_c); 1 leaves it unchanged

    bool needs_residual_cache() const { return variant == LossVariant::separate_laplace; }
    bool has_certainty_head() const { return variant != LossVariant::l1_only; }
    void validate() const;  // throws ConfigError
};

// Per-sample loss values. All pure; non-finite inputs raise NumericError.

/// |y*-y|^2 / (2 sigma^2) + log(sigma^2) / 2, with sigma^2 = exp(log_var).
double loss_joint_gaussian(double y, double log_var, double y_star);

/// exp(w / clamp_c) |y*-y| - w.
double loss_joint_laplace(double y, double w, double y_star, double clamp_c);

/// |y*-y| + lambda (exp(w / clamp_c) r_tilde - w). r_tilde is a constant:
/// it contributes to the value but never to gradients.
double loss_separate(double y, double w, double y_star, double r_tilde, double lambda,
                     double clamp_c);

/// The model's predicted absolute error exp(-w). Inverse of the optimal
/// certainty: minimizing exp(w) r - w over w lands at exp(-w) = r.
double error_estimate(double w);

/// Predicted mean absolute error under the variant's head parameterization:
/// exp(-w) for the Laplace family, sqrt(2/pi) exp(w/2) for the Gaussian head.
double predicted_abs_error(LossVariant variant, double w);

/// Per-sample loss value with its partial derivatives; the certainty head is
/// selected by the variant (w for Laplace losses, log-variance for Gaussian).
struct LossTerms {
    double value;
    double dy;  // d value / d y
    double dw;  // d value / d w (0 for l1_only)
};

/// Dispatch on `cfg.variant`. `r_tilde` is required for separate_laplace and
/// ignored elsewhere. sign(0) and d|r|/dr at r=0 are taken as 0.
LossTerms loss_terms(const LossConfig& cfg, double y, double w, double y_star,
                     double r_tilde = 0.0);

}  // namespace hetreg
