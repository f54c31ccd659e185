#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "geomnet/model.hpp"

namespace geomnet {

inline constexpr double kGradCheckEps = 1e-6;  // central-difference step
inline constexpr double kGradCheckTol = 1e-5;  // relative error bound

struct CheckResult {
    std::string name;
    double max_rel_err = 0.0;
    bool pass = false;
};

// |a-b| / max(|a|,|b|,1e-8); the floor keeps near-zero slope pairs from
// blowing up the ratio.
double relative_error(double a, double b);

// Compares d/dt loss_at(t) at t=0, taken by central differences with step
// kGradCheckEps, against the analytic directional slope.
CheckResult check_directional(const std::string& name,
                              const std::function<double(double)>& loss_at,
                              double analytic_slope, double tol = kGradCheckTol);

// Adjoint tests for every layer operation on small random configurations.
std::vector<CheckResult> check_layer_adjoints(std::uint64_t seed);

// Full-network check on the small 8x8 topology: softmax cross entropy loss,
// one result per parametric layer (C1,C3,C5,F6,OUT), directional probes on
// both weights and bias. Inputs are resampled until every relu pre-activation
// clears the kink neighbourhood.
std::vector<CheckResult> check_model_layers(std::uint64_t seed);

// Both suites, in report order.
std::vector<CheckResult> run_gradcheck(std::uint64_t seed);

}  // namespace geomnet
