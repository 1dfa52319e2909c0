#include "blockprune/nn.hpp"

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>

namespace blockprune::nn {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

void require_rank4(const Tensor& t, const char* what) {
    if (t.rank() != 4) throw std::invalid_argument(std::string(what) + ": expected N×C×H×W tensor");
}

// cols is (C*k*k) × (Ho*Wo)
void im2col(const float* x, int c, int h, int w, int k, int stride, int pad, int ho, int wo,
            float* cols) {
    const int plane = ho * wo;
    for (int ci = 0; ci < c; ++ci) {
        const float* xc = x + static_cast<std::ptrdiff_t>(ci) * h * w;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                float* row = cols + (static_cast<std::ptrdiff_t>(ci) * k * k + ky * k + kx) * plane;
                for (int oy = 0; oy < ho; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    float* dst = row + oy * wo;
                    if (iy < 0 || iy >= h) {
                        for (int ox = 0; ox < wo; ++ox) dst[ox] = 0.0f;
                        continue;
                    }
                    const float* src = xc + iy * w;
                    for (int ox = 0; ox < wo; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        dst[ox] = (ix >= 0 && ix < w) ? src[ix] : 0.0f;
                    }
                }
            }
        }
    }
}

void col2im(const float* cols, int c, int h, int w, int k, int stride, int pad, int ho, int wo,
            float* dx) {
    const int plane = ho * wo;
    for (int ci = 0; ci < c; ++ci) {
        float* xc = dx + static_cast<std::ptrdiff_t>(ci) * h * w;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const float* row =
                    cols + (static_cast<std::ptrdiff_t>(ci) * k * k + ky * k + kx) * plane;
                for (int oy = 0; oy < ho; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= h) continue;
                    float* dst = xc + iy * w;
                    const float* src = row + oy * wo;
                    for (int ox = 0; ox < wo; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        if (ix >= 0 && ix < w) dst[ix] += src[ox];
                    }
                }
            }
        }
    }
}

bool is_pointwise(int k, int stride, int pad) { return k == 1 && stride == 1 && pad == 0; }

}  // namespace

int conv_out_size(int in, int k, int stride, int pad) { return (in + 2 * pad - k) / stride + 1; }

Tensor conv2d(const Tensor& x, const Tensor& w, int stride, int pad) {
    require_rank4(x, "conv2d input");
    require_rank4(w, "conv2d weight");
    const Shape3 in = x.sample_shape();
    const int cout = static_cast<int>(w.dim(0));
    const int k = static_cast<int>(w.dim(2));
    if (w.dim(1) != in.c)
        throw std::invalid_argument("conv2d: weight expects " + std::to_string(w.dim(1)) +
                                    " input channels, got " + std::to_string(in.c));
    const int ho = conv_out_size(in.h, k, stride, pad);
    const int wo = conv_out_size(in.w, k, stride, pad);
    const std::int64_t n = x.dim(0);
    Tensor y = Tensor::batch(n, {cout, ho, wo});
    const int kdim = in.c * k * k;
    const int plane = ho * wo;
    ConstMatMap wm(w.data(), cout, kdim);
    std::vector<float> cols;
    if (!is_pointwise(k, stride, pad)) cols.resize(static_cast<std::size_t>(kdim) * plane);
    for (std::int64_t i = 0; i < n; ++i) {
        const float* src = x.sample(i);
        if (!cols.empty()) {
            im2col(src, in.c, in.h, in.w, k, stride, pad, ho, wo, cols.data());
            src = cols.data();
        }
        MatMap(y.sample(i), cout, plane).noalias() = wm * ConstMatMap(src, kdim, plane);
    }
    return y;
}

void conv2d_backward(const Tensor& x, const Tensor& w, int stride, int pad, const Tensor& dy,
                     Tensor* dx, Tensor& dw) {
    const Shape3 in = x.sample_shape();
    const Shape3 out = dy.sample_shape();
    const int cout = static_cast<int>(w.dim(0));
    const int k = static_cast<int>(w.dim(2));
    const int kdim = in.c * k * k;
    const int plane = out.h * out.w;
    const std::int64_t n = x.dim(0);
    ConstMatMap wm(w.data(), cout, kdim);
    MatMap dwm(dw.data(), cout, kdim);
    const bool pointwise = is_pointwise(k, stride, pad);
    std::vector<float> cols(pointwise ? 0 : static_cast<std::size_t>(kdim) * plane);
    std::vector<float> dcols(static_cast<std::size_t>(kdim) * plane);
    if (dx) *dx = Tensor(x.shape());
    for (std::int64_t i = 0; i < n; ++i) {
        const float* src = x.sample(i);
        if (!pointwise) {
            im2col(src, in.c, in.h, in.w, k, stride, pad, out.h, out.w, cols.data());
            src = cols.data();
        }
        ConstMatMap dym(dy.sample(i), cout, plane);
        dwm.noalias() += dym * ConstMatMap(src, kdim, plane).transpose();
        if (dx) {
            if (pointwise) {
                MatMap(dx->sample(i), kdim, plane).noalias() = wm.transpose() * dym;
            } else {
                MatMap(dcols.data(), kdim, plane).noalias() = wm.transpose() * dym;
                col2im(dcols.data(), in.c, in.h, in.w, k, stride, pad, out.h, out.w, dx->sample(i));
            }
        }
    }
}

Tensor batchnorm_train(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                       BatchNormCache* cache, std::vector<float>* batch_mean,
                       std::vector<float>* batch_var) {
    require_rank4(x, "batchnorm input");
    const Shape3 s = x.sample_shape();
    if (gamma.numel() != s.c || beta.numel() != s.c)
        throw std::invalid_argument("batchnorm: parameter size does not match channels");
    const std::int64_t n = x.dim(0);
    const std::int64_t plane = static_cast<std::int64_t>(s.h) * s.w;
    const double count = static_cast<double>(n * plane);
    Tensor y(x.shape());
    Tensor xhat(x.shape());
    std::vector<float> invstd(static_cast<std::size_t>(s.c));
    if (batch_mean) batch_mean->assign(static_cast<std::size_t>(s.c), 0.0f);
    if (batch_var) batch_var->assign(static_cast<std::size_t>(s.c), 0.0f);
    for (int c = 0; c < s.c; ++c) {
        double sum = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            const float* p = x.sample(i) + c * plane;
            for (std::int64_t j = 0; j < plane; ++j) sum += p[j];
        }
        const double mean = sum / count;
        double sq = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            const float* p = x.sample(i) + c * plane;
            for (std::int64_t j = 0; j < plane; ++j) {
                const double d = p[j] - mean;
                sq += d * d;
            }
        }
        const double var = sq / count;
        const float is = static_cast<float>(1.0 / std::sqrt(var + kBatchNormEps));
        invstd[static_cast<std::size_t>(c)] = is;
        if (batch_mean) (*batch_mean)[static_cast<std::size_t>(c)] = static_cast<float>(mean);
        if (batch_var)
            (*batch_var)[static_cast<std::size_t>(c)] =
                static_cast<float>(count > 1 ? sq / (count - 1) : var);
        const float m = static_cast<float>(mean);
        const float g = gamma[c];
        const float b = beta[c];
        for (std::int64_t i = 0; i < n; ++i) {
            const float* p = x.sample(i) + c * plane;
            float* h = xhat.sample(i) + c * plane;
            float* q = y.sample(i) + c * plane;
            for (std::int64_t j = 0; j < plane; ++j) {
                h[j] = (p[j] - m) * is;
                q[j] = g * h[j] + b;
            }
        }
    }
    if (cache) {
        cache->xhat = std::move(xhat);
        cache->invstd = std::move(invstd);
    }
    return y;
}

Tensor batchnorm_eval(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                      const Tensor& running_mean, const Tensor& running_var) {
    require_rank4(x, "batchnorm input");
    const Shape3 s = x.sample_shape();
    if (gamma.numel() != s.c || running_mean.numel() != s.c)
        throw std::invalid_argument("batchnorm: parameter size does not match channels");
    const std::int64_t plane = static_cast<std::int64_t>(s.h) * s.w;
    Tensor y(x.shape());
    for (int c = 0; c < s.c; ++c) {
        const float scale = gamma[c] / std::sqrt(running_var[c] + kBatchNormEps);
        const float shift = beta[c] - running_mean[c] * scale;
        for (std::int64_t i = 0; i < x.dim(0); ++i) {
            const float* p = x.sample(i) + c * plane;
            float* q = y.sample(i) + c * plane;
            for (std::int64_t j = 0; j < plane; ++j) q[j] = p[j] * scale + shift;
        }
    }
    return y;
}

Tensor batchnorm_backward(const Tensor& dy, const Tensor& gamma, const BatchNormCache& cache,
                          Tensor& dgamma, Tensor& dbeta) {
    const Shape3 s = dy.sample_shape();
    const std::int64_t n = dy.dim(0);
    const std::int64_t plane = static_cast<std::int64_t>(s.h) * s.w;
    const double count = static_cast<double>(n * plane);
    Tensor dx(dy.shape());
    for (int c = 0; c < s.c; ++c) {
        double sum_dy = 0.0;
        double sum_dy_xhat = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            const float* g = dy.sample(i) + c * plane;
            const float* h = cache.xhat.sample(i) + c * plane;
            for (std::int64_t j = 0; j < plane; ++j) {
                sum_dy += g[j];
                sum_dy_xhat += static_cast<double>(g[j]) * h[j];
            }
        }
        dgamma[c] += static_cast<float>(sum_dy_xhat);
        dbeta[c] += static_cast<float>(sum_dy);
        const float k = gamma[c] * cache.invstd[static_cast<std::size_t>(c)];
        const float mean_dy = static_cast<float>(sum_dy / count);
        const float mean_dy_xhat = static_cast<float>(sum_dy_xhat / count);
        for (std::int64_t i = 0; i < n; ++i) {
            const float* g = dy.sample(i) + c * plane;
            const float* h = cache.xhat.sample(i) + c * plane;
            float* d = dx.sample(i) + c * plane;
            for (std::int64_t j = 0; j < plane; ++j)
                d[j] = k * (g[j] - mean_dy - h[j] * mean_dy_xhat);
        }
    }
    return dx;
}

void update_running_stats(Tensor& running_mean, Tensor& running_var,
                          const std::vector<float>& batch_mean, const std::vector<float>& batch_var) {
    for (std::int64_t c = 0; c < running_mean.numel(); ++c) {
        const auto i = static_cast<std::size_t>(c);
        running_mean[c] = (1.0f - kBatchNormMomentum) * running_mean[c] + kBatchNormMomentum * batch_mean[i];
        running_var[c] = (1.0f - kBatchNormMomentum) * running_var[c] + kBatchNormMomentum * batch_var[i];
    }
}

Tensor relu(const Tensor& x) {
    Tensor y = x;
    for (auto& v : y.values()) v = v > 0.0f ? v : 0.0f;
    return y;
}

void relu_backward_inplace(Tensor& dy, const Tensor& y) {
    auto g = dy.values();
    auto out = y.values();
    for (std::size_t i = 0; i < g.size(); ++i)
        if (!(out[i] > 0.0f)) g[i] = 0.0f;
}

Tensor avgpool2(const Tensor& x) {
    const Shape3 s = x.sample_shape();
    const int ho = s.h / 2;
    const int wo = s.w / 2;
    Tensor y = Tensor::batch(x.dim(0), {s.c, ho, wo});
    for (std::int64_t i = 0; i < x.dim(0); ++i) {
        for (int c = 0; c < s.c; ++c) {
            const float* p = x.sample(i) + static_cast<std::ptrdiff_t>(c) * s.h * s.w;
            float* q = y.sample(i) + static_cast<std::ptrdiff_t>(c) * ho * wo;
            for (int oy = 0; oy < ho; ++oy)
                for (int ox = 0; ox < wo; ++ox) {
                    const float* r = p + 2 * oy * s.w + 2 * ox;
                    q[oy * wo + ox] = 0.25f * (r[0] + r[1] + r[s.w] + r[s.w + 1]);
                }
        }
    }
    return y;
}

Tensor avgpool2_backward(const Tensor& dy) {
    const Shape3 s = dy.sample_shape();
    const int h = s.h * 2;
    const int w = s.w * 2;
    Tensor dx = Tensor::batch(dy.dim(0), {s.c, h, w});
    for (std::int64_t i = 0; i < dy.dim(0); ++i) {
        for (int c = 0; c < s.c; ++c) {
            const float* q = dy.sample(i) + static_cast<std::ptrdiff_t>(c) * s.h * s.w;
            float* p = dx.sample(i) + static_cast<std::ptrdiff_t>(c) * h * w;
            for (int oy = 0; oy < s.h; ++oy)
                for (int ox = 0; ox < s.w; ++ox) {
                    const float g = 0.25f * q[oy * s.w + ox];
                    float* r = p + 2 * oy * w + 2 * ox;
                    r[0] = g;
                    r[1] = g;
                    r[w] = g;
                    r[w + 1] = g;
                }
        }
    }
    return dx;
}

Tensor global_avgpool(const Tensor& x) {
    const Shape3 s = x.sample_shape();
    const std::int64_t plane = static_cast<std::int64_t>(s.h) * s.w;
    Tensor y({x.dim(0), static_cast<std::int64_t>(s.c)});
    for (std::int64_t i = 0; i < x.dim(0); ++i)
        for (int c = 0; c < s.c; ++c) {
            const float* p = x.sample(i) + c * plane;
            double acc = 0.0;
            for (std::int64_t j = 0; j < plane; ++j) acc += p[j];
            y[i * s.c + c] = static_cast<float>(acc / static_cast<double>(plane));
        }
    return y;
}

Tensor global_avgpool_backward(const Tensor& dy, const Shape3& in_shape) {
    const std::int64_t plane = static_cast<std::int64_t>(in_shape.h) * in_shape.w;
    Tensor dx = Tensor::batch(dy.dim(0), in_shape);
    const float scale = 1.0f / static_cast<float>(plane);
    for (std::int64_t i = 0; i < dy.dim(0); ++i)
        for (int c = 0; c < in_shape.c; ++c) {
            const float g = dy[i * in_shape.c + c] * scale;
            float* p = dx.sample(i) + c * plane;
            for (std::int64_t j = 0; j < plane; ++j) p[j] = g;
        }
    return dx;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    const std::int64_t n = x.dim(0);
    const std::int64_t d = x.numel() / std::max<std::int64_t>(n, 1);
    const std::int64_t o = w.dim(0);
    if (w.dim(1) != d)
        throw std::invalid_argument("linear: weight expects " + std::to_string(w.dim(1)) +
                                    " features, got " + std::to_string(d));
    Tensor y({n, o});
    MatMap ym(y.data(), n, o);
    ym.noalias() = ConstMatMap(x.data(), n, d) * ConstMatMap(w.data(), o, d).transpose();
    if (!b.empty()) ym.rowwise() += Eigen::Map<const Eigen::RowVectorXf>(b.data(), o);
    return y;
}

void linear_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor* dx, Tensor& dw,
                     Tensor* db) {
    const std::int64_t n = x.dim(0);
    const std::int64_t d = x.numel() / std::max<std::int64_t>(n, 1);
    const std::int64_t o = w.dim(0);
    ConstMatMap dym(dy.data(), n, o);
    MatMap(dw.data(), o, d).noalias() += dym.transpose() * ConstMatMap(x.data(), n, d);
    if (db) Eigen::Map<Eigen::RowVectorXf>(db->data(), o) += dym.colwise().sum();
    if (dx) {
        *dx = Tensor(x.shape());
        MatMap(dx->data(), n, d).noalias() = dym * ConstMatMap(w.data(), o, d);
    }
}

Tensor add(const Tensor& a, const Tensor& b) {
    Tensor y = a;
    add_inplace(y, b);
    return y;
}

void add_inplace(Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw std::invalid_argument("add: shape mismatch " + shape_string(a.shape()) + " vs " +
                                    shape_string(b.shape()));
    auto av = a.values();
    auto bv = b.values();
    for (std::size_t i = 0; i < av.size(); ++i) av[i] += bv[i];
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    const Shape3 sa = a.sample_shape();
    const Shape3 sb = b.sample_shape();
    if (a.dim(0) != b.dim(0) || sa.h != sb.h || sa.w != sb.w)
        throw std::invalid_argument("concat_channels: incompatible tensors");
    Tensor y = Tensor::batch(a.dim(0), {sa.c + sb.c, sa.h, sa.w});
    const std::int64_t na = sa.numel();
    const std::int64_t nb = sb.numel();
    for (std::int64_t i = 0; i < a.dim(0); ++i) {
        std::copy(a.sample(i), a.sample(i) + na, y.sample(i));
        std::copy(b.sample(i), b.sample(i) + nb, y.sample(i) + na);
    }
    return y;
}

void split_channels(const Tensor& x, int first_channels, Tensor& first, Tensor& second) {
    const Shape3 s = x.sample_shape();
    const Shape3 s1{first_channels, s.h, s.w};
    const Shape3 s2{s.c - first_channels, s.h, s.w};
    first = Tensor::batch(x.dim(0), s1);
    second = Tensor::batch(x.dim(0), s2);
    for (std::int64_t i = 0; i < x.dim(0); ++i) {
        std::copy(x.sample(i), x.sample(i) + s1.numel(), first.sample(i));
        std::copy(x.sample(i) + s1.numel(), x.sample(i) + s.numel(), second.sample(i));
    }
}

Tensor flatten(Tensor x) {
    const std::int64_t n = x.dim(0);
    x.reshape({n, x.numel() / std::max<std::int64_t>(n, 1)});
    return x;
}

}  // namespace blockprune::nn
