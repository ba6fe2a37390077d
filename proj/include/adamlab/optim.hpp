#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "adamlab/errors.hpp"
#include "adamlab/precision.hpp"

namespace adamlab {

struct AdamConfig {
    double alpha = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const {
        if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
        if (!(beta1 >= 0.0 && beta1 < 1.0)) throw InvalidArgument("beta1 must lie in [0, 1)");
        if (!(beta2 >= 0.0 && beta2 < 1.0)) throw InvalidArgument("beta2 must lie in [0, 1)");
        if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
    }

    friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t t = 0;

    AdamState() = default;
    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

    friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// In-place Adam update with bias correction, in this exact order:
///
///   t <- t + 1
///   m <- b1*m + (1 - b1)*g
///   v <- b2*v + (1 - b2)*g^2
///   m_hat = m / (1 - b1^t),  v_hat = v / (1 - b2^t)
///   theta <- theta - (alpha*m_hat) / (sqrt(v_hat) + eps)
///
/// Every intermediate result goes through the policy's rounding. Returns
/// false when any updated parameter is non-finite; the step is still applied.
template <class Arith>
bool adam_step_inplace(std::span<double> params, AdamState& state, std::span<const double> g,
                       const AdamConfig& cfg, const Arith& a) {
    if (params.size() != g.size() || state.m.size() != g.size() || state.v.size() != g.size())
        throw InvalidArgument("adam_step: vector lengths disagree");
    if (state.t == std::numeric_limits<std::int64_t>::max()) throw InvalidArgument("adam_step: step counter overflow");

    state.t += 1;
    const double b1 = a.q(cfg.beta1);
    const double b2 = a.q(cfg.beta2);
    const double alpha = a.q(cfg.alpha);
    const double eps = a.q(cfg.epsilon);
    const double one_minus_b1 = a.q(1.0 - b1);
    const double one_minus_b2 = a.q(1.0 - b2);
    const double t = static_cast<double>(state.t);
    const double correction1 = a.q(1.0 - a.q(std::pow(b1, t)));
    const double correction2 = a.q(1.0 - a.q(std::pow(b2, t)));

    bool finite = true;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double gi = g[i];
        const double m = a.q(a.q(b1 * state.m[i]) + a.q(one_minus_b1 * gi));
        const double v = a.q(a.q(b2 * state.v[i]) + a.q(one_minus_b2 * a.q(gi * gi)));
        state.m[i] = m;
        state.v[i] = v;
        const double m_hat = a.q(m / correction1);
        const double v_hat = a.q(v / correction2);
        const double denom = a.q(a.q(std::sqrt(v_hat)) + eps);
        const double step = a.q(a.q(alpha * m_hat) / denom);
        params[i] = a.q(params[i] - step);
        finite = finite && std::isfinite(params[i]);
    }
    return finite;
}

struct AdamStepResult {
    std::vector<double> params;
    AdamState state;
    bool finite = true;
};

/// Value-returning form of adam_step_inplace.
inline AdamStepResult adam_step(std::vector<double> params, AdamState state, std::span<const double> g,
                                const AdamConfig& cfg, const PrecisionMode& mode = PrecisionMode::native64()) {
    const bool finite = with_arith(mode, [&](const auto& a) { return adam_step_inplace(params, state, g, cfg, a); });
    return {std::move(params), std::move(state), finite};
}

struct ConvergenceCheck {
    bool satisfied = false;
    std::string report;
};

/// The classical Adam convergence requirement beta1^2 < sqrt(beta2).
inline ConvergenceCheck check_convergence_condition(const AdamConfig& cfg) {
    cfg.validate();
    const double lhs = cfg.beta1 * cfg.beta1;
    const double rhs = std::sqrt(cfg.beta2);
    ConvergenceCheck out;
    out.satisfied = lhs < rhs;
    std::ostringstream os;
    os.precision(17);
    os << "beta1^2 = " << lhs << (out.satisfied ? " < " : " >= ") << "sqrt(beta2) = " << rhs << ": condition "
       << (out.satisfied ? "satisfied" : "violated");
    out.report = os.str();
    return out;
}

}  // namespace adamlab
