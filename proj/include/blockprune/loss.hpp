#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <span>
#include <stdexcept>
#include <vector>

namespace blockprune {

template <std::floating_point T>
struct LossOutput {
    /// Batch mean of alpha*mimic + ce.
    T loss = 0;
    /// Batch mean of the squared logit distance (before alpha).
    T mimic = 0;
    /// Batch mean cross-entropy.
    T ce = 0;
    /// d loss / d student logits, batch × classes.
    std::vector<T> grad;
};

/// Logit-mimic plus cross-entropy:
///   loss = mean_n [ alpha * ||l_T - l_S||^2 + sum_i -p_i log softmax(l_S)_i ]
/// Logits are row-major batch × classes; labels are class indices (the
/// one-hot rows p). An empty `teacher` means no mimic term and requires
/// alpha == 0.
template <std::floating_point T>
LossOutput<T> mimic_ce_loss(std::span<const T> teacher, std::span<const T> student, std::span<const int> labels,
                            int classes, T alpha, bool want_grad = true) {
    if (classes < 1) throw std::invalid_argument("mimic_ce_loss: classes must be positive");
    if (alpha < 0) throw std::invalid_argument("mimic_ce_loss: alpha must be non-negative");
    const std::size_t k = static_cast<std::size_t>(classes);
    const std::size_t n = labels.size();
    if (student.size() != n * k) throw std::invalid_argument("mimic_ce_loss: student logits shape mismatch");
    if (!teacher.empty() && teacher.size() != student.size())
        throw std::invalid_argument("mimic_ce_loss: teacher and student logits differ in shape");
    if (teacher.empty() && alpha != 0)
        throw std::invalid_argument("mimic_ce_loss: alpha > 0 needs teacher logits");
    if (n == 0) throw std::invalid_argument("mimic_ce_loss: empty batch");
    for (T v : student)
        if (!std::isfinite(v)) throw std::domain_error("mimic_ce_loss: non-finite student logit");
    for (T v : teacher)
        if (!std::isfinite(v)) throw std::domain_error("mimic_ce_loss: non-finite teacher logit");

    LossOutput<T> out;
    if (want_grad) out.grad.assign(student.size(), T(0));
    const T inv_n = T(1) / static_cast<T>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int label = labels[i];
        if (label < 0 || label >= classes) throw std::invalid_argument("mimic_ce_loss: label out of range");
        const T* s = student.data() + i * k;
        const T mx = *std::max_element(s, s + k);
        T z = 0;
        for (std::size_t c = 0; c < k; ++c) z += std::exp(s[c] - mx);
        const T log_z = mx + std::log(z);
        out.ce += (log_z - s[label]) * inv_n;
        if (!teacher.empty()) {
            const T* t = teacher.data() + i * k;
            T sq = 0;
            for (std::size_t c = 0; c < k; ++c) sq += (t[c] - s[c]) * (t[c] - s[c]);
            out.mimic += sq * inv_n;
        }
        if (want_grad) {
            T* g = out.grad.data() + i * k;
            for (std::size_t c = 0; c < k; ++c) {
                T d = std::exp(s[c] - log_z);
                if (static_cast<int>(c) == label) d -= T(1);
                if (!teacher.empty()) d += T(2) * alpha * (s[c] - teacher[i * k + c]);
                g[c] = d * inv_n;
            }
        }
    }
    out.loss = alpha * out.mimic + out.ce;
    return out;
}

}  // namespace blockprune
