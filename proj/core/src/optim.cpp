#include "geomnet/optim.hpp"

#include <string>

namespace geomnet {

void sgd_momentum_step(Tensor& params, const Tensor& grads, Tensor& velocity, double lr,
                       double mu) {
    if (params.shape() != grads.shape() || params.shape() != velocity.shape()) {
        throw ShapeError("sgd_momentum_step shape mismatch: params " + params.shape().str() +
                         ", grads " + grads.shape().str() + ", velocity " +
                         velocity.shape().str());
    }
    if (lr < 0.0) throw DomainError("learning rate must be >= 0, got " + std::to_string(lr));
    if (mu < 0.0 || mu >= 1.0) {
        throw DomainError("momentum must be in [0,1), got " + std::to_string(mu));
    }
    for (std::int64_t i = 0; i < params.size(); ++i) {
        velocity[i] = mu * velocity[i] - lr * grads[i];
        params[i] += velocity[i];
    }
}

}  // namespace geomnet
