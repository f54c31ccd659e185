#pragma once

#include "geomnet/tensor.hpp"

namespace geomnet {

// Classical momentum: v <- mu*v - lr*g; w <- w + v. Updates params and
// velocity in place. mu = 0 reduces exactly to w - lr*g.
void sgd_momentum_step(Tensor& params, const Tensor& grads, Tensor& velocity, double lr,
                       double mu);

}  // namespace geomnet
