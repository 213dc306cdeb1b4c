#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fedtrace/param_vector.hpp"
#include "fedtrace/tensor.hpp"

namespace fedtrace {

enum class Mode { train, eval };

struct DenseLayer {
    Tensor2 weight; // out x in
    std::vector<float> bias;
};

struct BatchNormLayer {
    std::vector<float> gamma;
    std::vector<float> beta;
    std::vector<float> running_mean;
    std::vector<float> running_var;
    float epsilon = 1e-5f;
    float momentum = 0.9f; // fraction of the old running statistic kept
    bool frozen = false;

    std::size_t width() const { return gamma.size(); }
};

// Dense -> BatchNorm -> ReLU stacks with a final Dense classifier head.
// Copies are independent; one instance per worker for parallel use.
struct BnMlpModel {
    std::size_t input_width = 0;
    std::size_t class_count = 0;
    std::vector<DenseLayer> dense; // hidden layers then the final head
    std::vector<BatchNormLayer> bn;
    Mode mode = Mode::train;

    static BnMlpModel make(std::size_t input_width,
                           const std::vector<std::size_t>& hidden_widths,
                           std::size_t class_count, std::uint64_t seed);

    std::shared_ptr<const ParamLayout> layout() const;

    ParamVector flatten() const;
    void unflatten(const ParamVector& p);

    // W^gamma: BN gamma vectors concatenated in layer order, index order
    // within each layer.
    std::size_t bn_scale_count() const;
    std::vector<float> bn_scales() const;
    void set_bn_scales(std::span<const float> w);

    void set_bn_frozen(bool frozen);

private:
    mutable std::shared_ptr<const ParamLayout> cached_layout_;
};

// In train mode BN uses batch statistics and updates the running averages
// unless frozen; in eval mode or when frozen it uses running statistics.
Tensor2 forward(BnMlpModel& model, const Tensor2& batch);

struct BackwardResult {
    double loss = 0.0; // mean softmax cross-entropy
    ParamVector grads; // layout matches the model; frozen BN entries are zero
};

BackwardResult backward(BnMlpModel& model, const Tensor2& batch, const std::vector<int>& labels);

void sgd_step(BnMlpModel& model, const ParamVector& grads, float lr);

// fraction of argmax predictions equal to labels, evaluated in eval mode
double accuracy(BnMlpModel& model, const Tensor2& batch, const std::vector<int>& labels);

} // namespace fedtrace
