#pragma once

#include <vector>

#include "blockprune/tensor.hpp"

// Forward/backward kernels on N×C×H×W float tensors. Single-threaded.
namespace blockprune::nn {

inline constexpr float kBatchNormEps = 1e-5f;
inline constexpr float kBatchNormMomentum = 0.1f;

/// Square-kernel convolution without bias. w is (C_out, C_in, k, k).
Tensor conv2d(const Tensor& x, const Tensor& w, int stride, int pad);

/// Accumulates into dw; writes dx when non-null.
void conv2d_backward(const Tensor& x, const Tensor& w, int stride, int pad, const Tensor& dy,
                     Tensor* dx, Tensor& dw);

int conv_out_size(int in, int k, int stride, int pad);

struct BatchNormCache {
    Tensor xhat;
    std::vector<float> invstd;
};

/// Batch-statistics normalization. Writes the batch mean and unbiased variance
/// when the out-params are non-null (used to update running statistics).
Tensor batchnorm_train(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                       BatchNormCache* cache, std::vector<float>* batch_mean,
                       std::vector<float>* batch_var);

Tensor batchnorm_eval(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                      const Tensor& running_mean, const Tensor& running_var);

/// Returns dx; accumulates dgamma/dbeta.
Tensor batchnorm_backward(const Tensor& dy, const Tensor& gamma, const BatchNormCache& cache,
                          Tensor& dgamma, Tensor& dbeta);

void update_running_stats(Tensor& running_mean, Tensor& running_var,
                          const std::vector<float>& batch_mean, const std::vector<float>& batch_var);

Tensor relu(const Tensor& x);
/// dy <- dy * (y > 0)
void relu_backward_inplace(Tensor& dy, const Tensor& y);

/// 2×2, stride 2 average pooling.
Tensor avgpool2(const Tensor& x);
Tensor avgpool2_backward(const Tensor& dy);

/// N×C×H×W -> N×C
Tensor global_avgpool(const Tensor& x);
Tensor global_avgpool_backward(const Tensor& dy, const Shape3& in_shape);

/// x is N×D, w is O×D, b is O (may be empty). Returns N×O.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);
void linear_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor* dx, Tensor& dw,
                     Tensor* db);

Tensor add(const Tensor& a, const Tensor& b);
void add_inplace(Tensor& a, const Tensor& b);

/// Channel concatenation of two N×C×H×W tensors with equal N, H, W.
Tensor concat_channels(const Tensor& a, const Tensor& b);
/// Inverse of concat_channels for gradients: splits the first `first_channels` off.
void split_channels(const Tensor& x, int first_channels, Tensor& first, Tensor& second);

/// Reshapes N×... to N×D without copying semantics beyond a move.
Tensor flatten(Tensor x);

}  // namespace blockprune::nn
