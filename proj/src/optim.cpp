#include "subtrain/optim.hpp"

#include <cmath>
#include <cstddef>

#include "subtrain/errors.hpp"

namespace subtrain {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

static void check_finite(const std::vector<double>& g, const char* who) {
    for (double v : g)
        if (!std::isfinite(v)) throw NumericError(std::string(who) + ": non-finite gradient");
}

void sgd_step(std::vector<double>& params, const std::vector<double>& gradient, double step_size) {
    if (params.size() != gradient.size()) throw ConfigError("sgd_step: length mismatch");
    check_finite(gradient, "sgd_step");
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= step_size * gradient[i];
}

void adam_step(std::vector<double>& params, const std::vector<double>& gradient,
               AdamState& state, const AdamConfig& cfg) {
    if (params.size() != gradient.size() || state.m.size() != params.size() ||
        state.d.size() != params.size())
        throw ConfigError("adam_step: length mismatch");
    check_finite(gradient, "adam_step");

    state.t += 1;
    double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        double g = gradient[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.d[i] = cfg.beta2 * state.d[i] + (1.0 - cfg.beta2) * g * g;
        double m_hat = state.m[i] / bc1;
        double d_hat = state.d[i] / bc2;
        params[i] -= cfg.c * m_hat / (std::sqrt(d_hat) + cfg.epsilon);
    }
}

double ScheduleSpec::step_size(std::uint64_t t) const {
    if (family == Family::constant || p == 0.0) return a;
    return a / std::pow(static_cast<double>(t), p);
}

RobbinsMonroResult check_robbins_monro(const ScheduleSpec& schedule) {
    if (schedule.a <= 0.0) throw ConfigError("schedule scale must be positive");
    if (schedule.p < 0.0) throw ConfigError("schedule exponent must be nonnegative");
    double p = schedule.family == ScheduleSpec::Family::constant ? 0.0 : schedule.p;
    // sum a/t^p diverges iff p <= 1; sum (a/t^p)^2 converges iff 2p > 1.
    return RobbinsMonroResult{p <= 1.0, 2.0 * p > 1.0};
}

double line_search(const std::function<double(const std::vector<double>&)>& loss_fn,
                   const std::vector<double>& params, const std::vector<double>& direction,
                   double initial_step, double directional_derivative,
                   double armijo_c, double backtrack_factor, int max_trials) {
    if (params.size() != direction.size()) throw ConfigError("line_search: length mismatch");
    if (!(directional_derivative < 0.0))
        throw NumericError("line_search: not a descent direction");
    if (!(initial_step > 0.0)) throw ConfigError("line_search: initial step must be positive");

    double f0 = loss_fn(params);
    std::vector<double> trial(params.size());
    double step = initial_step;
    for (int k = 0; k < max_trials; ++k) {
        for (std::size_t i = 0; i < params.size(); ++i)
            trial[i] = params[i] + step * direction[i];
        double f = loss_fn(trial);
        if (std::isfinite(f) && f <= f0 + armijo_c * step * directional_derivative)
            return step;
        step *= backtrack_factor;
    }
    return 0.0; // no acceptable step; the caller treats this as a restart signal
}

CGStepResult cg_step(const Objective& objective, CGState& state,
                     std::vector<double>& params, const CGOptions& opts) {
    const std::size_t n = params.size();
    if (state.prev_gradient.size() != n || state.direction.size() != n)
        throw ConfigError("cg_step: state dimension mismatch");

    double loss;
    std::vector<double> grad;
    if (state.has_current && state.current_gradient.size() == n) {
        loss = state.current_loss;
        grad = state.current_gradient;
    } else {
        auto [f, g] = objective.loss_grad(params);
        check_finite(g, "cg_step");
        loss = f;
        grad = std::move(g);
    }

    double gg = dot(grad, grad);
    if (gg == 0.0) {
        state.current_loss = loss;
        state.current_gradient = grad;
        state.has_current = true;
        return CGStepResult{loss, 0.0, false};
    }

    bool restarted = false;
    std::vector<double> dir(n);
    if (state.fresh || state.restart_counter >= n) {
        for (std::size_t i = 0; i < n; ++i) dir[i] = -grad[i];
        restarted = true;
    } else {
        double prev_gg = dot(state.prev_gradient, state.prev_gradient);
        double beta = 0.0;
        if (prev_gg > 0.0) {
            if (opts.beta_rule == CGOptions::BetaRule::fletcher_reeves) {
                beta = gg / prev_gg;
            } else {
                double num = 0.0; // Polak-Ribiere, clamped at zero
                for (std::size_t i = 0; i < n; ++i)
                    num += grad[i] * (grad[i] - state.prev_gradient[i]);
                beta = std::max(0.0, num / prev_gg);
            }
        }
        for (std::size_t i = 0; i < n; ++i) dir[i] = -grad[i] + beta * state.direction[i];
        if (dot(grad, dir) >= 0.0) { // not a descent direction: restart
            for (std::size_t i = 0; i < n; ++i) dir[i] = -grad[i];
            restarted = true;
        }
    }

    double gd = dot(grad, dir);
    double alpha = 0.0;

    if (opts.line_search == CGOptions::LineSearchMode::quadratic_exact) {
        // One-sided secant on the directional derivative: exact for quadratics.
        double dn = norm(dir);
        double sigma = 1.0 / std::max(1.0, dn);
        std::vector<double> probe(n);
        for (std::size_t i = 0; i < n; ++i) probe[i] = params[i] + sigma * dir[i];
        auto [pf, pg] = objective.loss_grad(probe);
        (void)pf;
        double curvature = (dot(pg, dir) - gd) / sigma;
        if (curvature > 0.0) {
            double candidate = -gd / curvature;
            std::vector<double> trial(n);
            for (std::size_t i = 0; i < n; ++i) trial[i] = params[i] + candidate * dir[i];
            if (objective.loss(trial) <= loss) alpha = candidate;
        }
    }
    if (alpha == 0.0)
        alpha = line_search(objective.loss, params, dir, state.step_hint, gd,
                            opts.armijo_c, opts.backtrack_factor, opts.max_trials);

    if (alpha == 0.0 && !restarted) {
        // Conjugate direction failed; retry once along steepest descent.
        for (std::size_t i = 0; i < n; ++i) dir[i] = -grad[i];
        gd = -gg;
        restarted = true;
        alpha = line_search(objective.loss, params, dir, state.step_hint, gd,
                            opts.armijo_c, opts.backtrack_factor, opts.max_trials);
    }
    if (alpha == 0.0) {
        // No progress possible from here; leave the parameters untouched.
        state.fresh = true;
        state.restart_counter = 0;
        state.current_loss = loss;
        state.current_gradient = grad;
        state.has_current = true;
        return CGStepResult{loss, std::sqrt(gg), true};
    }

    for (std::size_t i = 0; i < n; ++i) params[i] += alpha * dir[i];

    state.prev_gradient = grad;
    state.direction = std::move(dir);
    state.restart_counter = restarted ? 1 : state.restart_counter + 1;
    state.step_hint = 2.0 * alpha;
    state.fresh = false;

    auto [new_loss, new_grad] = objective.loss_grad(params);
    check_finite(new_grad, "cg_step");
    double new_norm = norm(new_grad);
    state.current_loss = new_loss;
    state.current_gradient = std::move(new_grad);
    state.has_current = true;
    return CGStepResult{new_loss, new_norm, restarted};
}

} // namespace subtrain
