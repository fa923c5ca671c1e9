#include "hetreg/losses.hpp"

#include <cmath>

#include "hetreg/errors.hpp"

namespace hetreg {

namespace {

constexpr double kSqrt2OverPi = 0.7978845608028654;  // sqrt(2/pi)

double sign(double r) {
    if (r > 0.0) return 1.0;
    if (r < 0.0) return -1.0;
    return 0.0;
}

void require_finite(double v, const char* name) {
    if (!std::isfinite(v)) {
        throw NumericError(std::string("non-finite ") + name + " in loss evaluation");
    }
}

}  // namespace

std::string_view to_string(LossVariant v) {
    switch (v) {
        case LossVariant::l1_only: return "l1_only";
        case LossVariant::joint_gaussian: return "joint_gaussian";
        case LossVariant::joint_laplace: return "joint_laplace";
        case LossVariant::separate_laplace: return "separate_laplace";
        case LossVariant::separate_no_vr: return "separate_no_vr";
    }
    return "unknown";
}

std::optional<LossVariant> loss_variant_from_string(std::string_view s) {
    if (s == "l1_only" || s == "l1") return LossVariant::l1_only;
    if (s == "joint_gaussian") return LossVariant::joint_gaussian;
    if (s == "joint_laplace" || s == "jf") return LossVariant::joint_laplace;
    if (s == "separate_laplace") return LossVariant::separate_laplace;
    if (s == "separate_no_vr") return LossVariant::separate_no_vr;
    return std::nullopt;
}

void LossConfig::validate() const {
    if (lambda < 0.0 || !std::isfinite(lambda)) {
        throw ConfigError("loss lambda must be finite and >= 0");
    }
    if (clamp_c <= 0.0 || !std::isfinite(clamp_c)) {
        throw ConfigError("loss clamp_c must be finite and > 0");
    }
}

double loss_joint_gaussian(double y, double log_var, double y_star) {
    require_finite(y, "y");
    require_finite(log_var, "log_var");
    require_finite(y_star, "y_star");
    const double d = y_star - y;
    return 0.5 * d * d * std::exp(-log_var) + 0.5 * log_var;
}

double loss_joint_laplace(double y, double w, double y_star, double clamp_c) {
    require_finite(y, "y");
    require_finite(w, "w");
    require_finite(y_star, "y_star");
    return std::exp(w / clamp_c) * std::abs(y_star - y) - w;
}

double loss_separate(double y, double w, double y_star, double r_tilde, double lambda,
                     double clamp_c) {
    require_finite(y, "y");
    require_finite(w, "w");
    require_finite(y_star, "y_star");
    if (!(r_tilde >= 0.0) || !std::isfinite(r_tilde)) {
        throw CacheError("virtual residual must be finite and >= 0");
    }
    return std::abs(y_star - y) + lambda * (std::exp(w / clamp_c) * r_tilde - w);
}

double error_estimate(double w) {
    require_finite(w, "w");
    return std::exp(-w);
}

double predicted_abs_error(LossVariant variant, double w) {
    if (variant == LossVariant::joint_gaussian) {
        return kSqrt2OverPi * std::exp(0.5 * w);  // head is log(sigma^2)
    }
    return error_estimate(w);
}

LossTerms loss_terms(const LossConfig& cfg, double y, double w, double y_star,
                     double r_tilde) {
    const double r = std::abs(y_star - y);
    const double sgn = sign(y - y_star);  // d r / d y
    switch (cfg.variant) {
        case LossVariant::l1_only:
            require_finite(y, "y");
            require_finite(y_star, "y_star");
            return {r, sgn, 0.0};
        case LossVariant::joint_gaussian: {
            const double value = loss_joint_gaussian(y, w, y_star);
            const double inv_var = std::exp(-w);
            return {value, (y - y_star) * inv_var, -0.5 * r * r * inv_var + 0.5};
        }
        case LossVariant::joint_laplace: {
            const double value = loss_joint_laplace(y, w, y_star, cfg.clamp_c);
            const double a = std::exp(w / cfg.clamp_c);
            return {value, a * sgn, a * r / cfg.clamp_c - 1.0};
        }
        case LossVariant::separate_laplace: {
            const double value = loss_separate(y, w, y_star, r_tilde, cfg.lambda, cfg.clamp_c);
            const double a = std::exp(w / cfg.clamp_c);
            return {value, sgn, cfg.lambda * (a * r_tilde / cfg.clamp_c - 1.0)};
        }
        case LossVariant::separate_no_vr: {
            // Live residual stands in for r_tilde but is detached: the second
            // term moves only w, never y.
            const double value = loss_separate(y, w, y_star, r, cfg.lambda, cfg.clamp_c);
            const double a = std::exp(w / cfg.clamp_c);
            return {value, sgn, cfg.lambda * (a * r / cfg.clamp_c - 1.0)};
        }
    }
    throw ConfigError("unknown loss variant");
}

}  // namespace hetreg
