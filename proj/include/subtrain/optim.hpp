#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace subtrain {

// Loss-only and loss+gradient views of the same objective. CG needs both:
// the line search evaluates loss alone, the direction update needs gradients.
struct Objective {
    std::function<double(const std::vector<double>&)> loss;
    std::function<std::pair<double, std::vector<double>>(const std::vector<double>&)> loss_grad;
};

// w <- w - c_t * g, elementwise.
void sgd_step(std::vector<double>& params, const std::vector<double>& gradient, double step_size);

struct AdamConfig {
    double c = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-7;
};

struct AdamState {
    std::vector<double> m; // first-moment EMA
    std::vector<double> d; // second-moment EMA, elementwise >= 0
    std::uint64_t t = 0;   // completed steps

    explicit AdamState(std::size_t dimension) : m(dimension, 0.0), d(dimension, 0.0) {}
};

// Standard bias-corrected Adam:
//   m <- b1*m + (1-b1)*g;  d <- b2*d + (1-b2)*g^2
//   w <- w - c * (m / (1-b1^t)) / (sqrt(d / (1-b2^t)) + eps)
// with t incremented before the bias correction.
void adam_step(std::vector<double>& params, const std::vector<double>& gradient,
               AdamState& state, const AdamConfig& cfg);

struct ScheduleSpec {
    enum class Family { constant, power };
    Family family = Family::constant;
    double a = 0.001; // positive scale
    double p = 0.0;   // exponent; c_t = a / t^p, constant <=> p = 0

    double step_size(std::uint64_t t) const; // t >= 1
};

struct RobbinsMonroResult {
    bool condition3; // sum c_t diverges
    bool condition4; // sum c_t^2 converges
};

// p-series facts for c_t = a/t^p: (3) holds iff p <= 1, (4) holds iff 2p > 1.
RobbinsMonroResult check_robbins_monro(const ScheduleSpec& schedule);

struct CGOptions {
    enum class BetaRule { polak_ribiere, fletcher_reeves };
    enum class LineSearchMode { backtracking, quadratic_exact };
    BetaRule beta_rule = BetaRule::polak_ribiere;
    LineSearchMode line_search = LineSearchMode::backtracking;
    double armijo_c = 1e-4;
    double backtrack_factor = 0.5;
    int max_trials = 40;
};

struct CGState {
    std::vector<double> prev_gradient;
    std::vector<double> direction;
    std::size_t restart_counter = 0; // steps since the last restart
    double step_hint = 1.0;          // warm start for the next line search
    bool fresh = true;

    // Cached objective value at the current parameters, so consecutive steps
    // need one gradient evaluation each instead of two.
    bool has_current = false;
    double current_loss = 0.0;
    std::vector<double> current_gradient;

    explicit CGState(std::size_t dimension)
        : prev_gradient(dimension, 0.0), direction(dimension, 0.0) {}
};

struct CGStepResult {
    double loss;          // loss at the updated parameters
    double gradient_norm; // Euclidean norm of the new gradient
    bool restarted;       // the step fell back to steepest descent
};

// One nonlinear CG iteration. Direction is -g + beta * prev_direction with
// the clamped Polak-Ribiere beta (automatic restart at beta=0); the step
// length comes from line_search. Restarts every `dimension` iterations, on
// non-descent directions, and on line-search failure. Accepted steps never
// increase the loss.
CGStepResult cg_step(const Objective& objective, CGState& state,
                     std::vector<double>& params, const CGOptions& opts = {});

// Backtracking Armijo search along `direction` from `params`. Returns the
// accepted step length. Requires a descent direction.
double line_search(const std::function<double(const std::vector<double>&)>& loss_fn,
                   const std::vector<double>& params, const std::vector<double>& direction,
                   double initial_step, double directional_derivative,
                   double armijo_c = 1e-4, double backtrack_factor = 0.5, int max_trials = 40);

double dot(const std::vector<double>& a, const std::vector<double>& b);
double norm(const std::vector<double>& a);

} // namespace subtrain
