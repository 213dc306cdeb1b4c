#include "fedtrace/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fedtrace/rng.hpp"

namespace fedtrace {

namespace {

std::string dense_name(std::size_t i, const char* part) {
    return "dense" + std::to_string(i) + "." + part;
}

std::string bn_name(std::size_t i, const char* part) {
    return "bn" + std::to_string(i) + "." + part;
}

} // namespace

BnMlpModel BnMlpModel::make(std::size_t input_width,
                            const std::vector<std::size_t>& hidden_widths,
                            std::size_t class_count, std::uint64_t seed) {
    if (input_width == 0 || class_count < 2) {
        throw std::invalid_argument("BnMlpModel::make: need input_width >= 1 and class_count >= 2");
    }
    BnMlpModel m;
    m.input_width = input_width;
    m.class_count = class_count;

    Rng rng(seed);
    std::size_t in = input_width;
    auto init_dense = [&](std::size_t out) {
        DenseLayer d;
        d.weight = Tensor2(out, in);
        const double std = std::sqrt(2.0 / static_cast<double>(in));
        for (float& w : d.weight.data) w = static_cast<float>(rng.normal(0.0, std));
        d.bias.assign(out, 0.0f);
        return d;
    };

    for (std::size_t width : hidden_widths) {
        m.dense.push_back(init_dense(width));
        BatchNormLayer b;
        b.gamma.assign(width, 1.0f);
        b.beta.assign(width, 0.0f);
        b.running_mean.assign(width, 0.0f);
        b.running_var.assign(width, 1.0f);
        m.bn.push_back(std::move(b));
        in = width;
    }
    m.dense.push_back(init_dense(class_count));
    return m;
}

std::shared_ptr<const ParamLayout> BnMlpModel::layout() const {
    if (cached_layout_) return cached_layout_;
    auto lay = std::make_shared<ParamLayout>();
    std::size_t off = 0;
    auto push = [&](std::string name, std::vector<std::size_t> shape) {
        LayoutEntry e;
        e.name = std::move(name);
        e.shape = std::move(shape);
        e.offset = off;
        e.length = 1;
        for (std::size_t s : e.shape) e.length *= s;
        off += e.length;
        lay->entries.push_back(std::move(e));
    };
    for (std::size_t i = 0; i < dense.size(); ++i) {
        push(dense_name(i, "weight"), {dense[i].weight.rows, dense[i].weight.cols});
        push(dense_name(i, "bias"), {dense[i].bias.size()});
        if (i < bn.size()) {
            push(bn_name(i, "gamma"), {bn[i].width()});
            push(bn_name(i, "beta"), {bn[i].width()});
            push(bn_name(i, "running_mean"), {bn[i].width()});
            push(bn_name(i, "running_var"), {bn[i].width()});
        }
    }
    lay->total = off;
    cached_layout_ = lay;
    return cached_layout_;
}

ParamVector BnMlpModel::flatten() const {
    ParamVector p(layout());
    auto copy_out = [&](const std::string& name, const float* src, std::size_t n) {
        auto dst = p.tensor(name);
        std::copy(src, src + n, dst.begin());
    };
    for (std::size_t i = 0; i < dense.size(); ++i) {
        copy_out(dense_name(i, "weight"), dense[i].weight.data.data(), dense[i].weight.size());
        copy_out(dense_name(i, "bias"), dense[i].bias.data(), dense[i].bias.size());
        if (i < bn.size()) {
            copy_out(bn_name(i, "gamma"), bn[i].gamma.data(), bn[i].width());
            copy_out(bn_name(i, "beta"), bn[i].beta.data(), bn[i].width());
            copy_out(bn_name(i, "running_mean"), bn[i].running_mean.data(), bn[i].width());
            copy_out(bn_name(i, "running_var"), bn[i].running_var.data(), bn[i].width());
        }
    }
    return p;
}

void BnMlpModel::unflatten(const ParamVector& p) {
    ParamVector own(layout());
    require_same_layout(own, p, "unflatten");
    auto copy_in = [&](const std::string& name, float* dst, std::size_t n) {
        auto src = p.tensor(name);
        std::copy(src.begin(), src.begin() + n, dst);
    };
    for (std::size_t i = 0; i < dense.size(); ++i) {
        copy_in(dense_name(i, "weight"), dense[i].weight.data.data(), dense[i].weight.size());
        copy_in(dense_name(i, "bias"), dense[i].bias.data(), dense[i].bias.size());
        if (i < bn.size()) {
            copy_in(bn_name(i, "gamma"), bn[i].gamma.data(), bn[i].width());
            copy_in(bn_name(i, "beta"), bn[i].beta.data(), bn[i].width());
            copy_in(bn_name(i, "running_mean"), bn[i].running_mean.data(), bn[i].width());
            copy_in(bn_name(i, "running_var"), bn[i].running_var.data(), bn[i].width());
        }
    }
}

std::size_t BnMlpModel::bn_scale_count() const {
    std::size_t n = 0;
    for (const auto& b : bn) n += b.width();
    return n;
}

std::vector<float> BnMlpModel::bn_scales() const {
    std::vector<float> w;
    w.reserve(bn_scale_count());
    for (const auto& b : bn) w.insert(w.end(), b.gamma.begin(), b.gamma.end());
    return w;
}

void BnMlpModel::set_bn_scales(std::span<const float> w) {
    if (w.size() != bn_scale_count()) {
        throw std::invalid_argument("set_bn_scales: length mismatch");
    }
    std::size_t off = 0;
    for (auto& b : bn) {
        std::copy(w.begin() + off, w.begin() + off + b.width(), b.gamma.begin());
        off += b.width();
    }
}

void BnMlpModel::set_bn_frozen(bool frozen) {
    for (auto& b : bn) b.frozen = frozen;
}

namespace {

struct BnCache {
    bool batch_path = false;       // batch statistics used (train, unfrozen)
    std::vector<double> mean;      // per feature
    std::vector<double> inv_std;   // 1/sqrt(var + eps)
    Tensor2 input;                 // z
    Tensor2 xhat;
};

struct ForwardCache {
    std::vector<Tensor2> dense_input; // input of each dense layer
    std::vector<BnCache> bn;
    std::vector<Tensor2> relu_input;  // BN output before ReLU
    Tensor2 logits;
};

Tensor2 dense_forward(const DenseLayer& d, const Tensor2& x) {
    Tensor2 z;
    kernels::matmul_nt(x, d.weight, z);
    for (std::size_t r = 0; r < z.rows; ++r) {
        float* row = z.row(r);
        for (std::size_t c = 0; c < z.cols; ++c) row[c] += d.bias[c];
    }
    return z;
}

Tensor2 bn_forward(BatchNormLayer& b, const Tensor2& z, Mode mode, BnCache* cache) {
    const std::size_t B = z.rows, W = z.cols;
    if (W != b.width()) throw std::invalid_argument("batchnorm: width mismatch");
    const bool use_batch_stats = (mode == Mode::train) && !b.frozen;
    if (use_batch_stats && B < 2) {
        throw std::invalid_argument("batchnorm: train mode needs batch rows >= 2");
    }

    std::vector<double> mean(W), inv_std(W);
    if (use_batch_stats) {
        std::vector<double> var(W);
        for (std::size_t c = 0; c < W; ++c) {
            double s = 0.0;
            for (std::size_t r = 0; r < B; ++r) s += z.at(r, c);
            mean[c] = s / static_cast<double>(B);
            double v = 0.0;
            for (std::size_t r = 0; r < B; ++r) {
                const double d = z.at(r, c) - mean[c];
                v += d * d;
            }
            var[c] = v / static_cast<double>(B); // biased
            inv_std[c] = 1.0 / std::sqrt(var[c] + b.epsilon);
        }
        for (std::size_t c = 0; c < W; ++c) {
            b.running_mean[c] = static_cast<float>(b.momentum * b.running_mean[c] +
                                                   (1.0 - b.momentum) * mean[c]);
            b.running_var[c] = static_cast<float>(b.momentum * b.running_var[c] +
                                                  (1.0 - b.momentum) * var[c]);
        }
    } else {
        for (std::size_t c = 0; c < W; ++c) {
            mean[c] = b.running_mean[c];
            inv_std[c] = 1.0 / std::sqrt(static_cast<double>(b.running_var[c]) + b.epsilon);
        }
    }

    Tensor2 xhat(B, W), out(B, W);
    for (std::size_t r = 0; r < B; ++r) {
        const float* zr = z.row(r);
        float* xr = xhat.row(r);
        float* orow = out.row(r);
        for (std::size_t c = 0; c < W; ++c) {
            const double h = (zr[c] - mean[c]) * inv_std[c];
            xr[c] = static_cast<float>(h);
            orow[c] = static_cast<float>(b.gamma[c] * h + b.beta[c]);
        }
    }
    if (cache) {
        cache->batch_path = use_batch_stats;
        cache->mean = std::move(mean);
        cache->inv_std = std::move(inv_std);
        cache->input = z;
        cache->xhat = std::move(xhat);
    }
    return out;
}

Tensor2 relu(const Tensor2& y) {
    Tensor2 h = y;
    for (float& v : h.data) v = v > 0.0f ? v : 0.0f;
    return h;
}

Tensor2 run_forward(BnMlpModel& model, const Tensor2& batch, ForwardCache* cache) {
    if (batch.cols != model.input_width) {
        throw std::invalid_argument("forward: batch cols do not match model input width");
    }
    if (batch.rows == 0) throw std::invalid_argument("forward: empty batch");
    check_finite(batch, "forward input");

    Tensor2 h = batch;
    for (std::size_t i = 0; i < model.bn.size(); ++i) {
        if (cache) cache->dense_input.push_back(h);
        Tensor2 z = dense_forward(model.dense[i], h);
        BnCache bc;
        Tensor2 y = bn_forward(model.bn[i], z, model.mode, cache ? &bc : nullptr);
        if (cache) {
            cache->bn.push_back(std::move(bc));
            cache->relu_input.push_back(y);
        }
        h = relu(y);
    }
    if (cache) cache->dense_input.push_back(h);
    Tensor2 logits = dense_forward(model.dense.back(), h);
    check_finite(logits, "forward logits");
    if (cache) cache->logits = logits;
    return logits;
}

// dlogits = (softmax - onehot)/B, loss accumulated in double
double softmax_ce(const Tensor2& logits, const std::vector<int>& labels, Tensor2& dlogits) {
    const std::size_t B = logits.rows, C = logits.cols;
    dlogits = Tensor2(B, C);
    double loss = 0.0;
    std::vector<double> p(C);
    for (std::size_t r = 0; r < B; ++r) {
        const float* row = logits.row(r);
        double mx = row[0];
        for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, static_cast<double>(row[c]));
        double denom = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
            p[c] = std::exp(row[c] - mx);
            denom += p[c];
        }
        const int y = labels[r];
        loss += -(std::log(p[static_cast<std::size_t>(y)]) - std::log(denom));
        float* drow = dlogits.row(r);
        for (std::size_t c = 0; c < C; ++c) {
            double g = p[c] / denom;
            if (static_cast<int>(c) == y) g -= 1.0;
            drow[c] = static_cast<float>(g / static_cast<double>(B));
        }
    }
    return loss / static_cast<double>(B);
}

// returns gradient w.r.t. the dense input; fills dW/db into grads
Tensor2 dense_backward(const DenseLayer& d, const Tensor2& x, const Tensor2& dz,
                       ParamVector& grads, const std::string& prefix) {
    Tensor2 dw;
    kernels::matmul_tn(dz, x, dw); // out x in
    auto gw = grads.tensor(prefix + ".weight");
    std::copy(dw.data.begin(), dw.data.end(), gw.begin());

    auto gb = grads.tensor(prefix + ".bias");
    for (std::size_t c = 0; c < dz.cols; ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < dz.rows; ++r) s += dz.at(r, c);
        gb[c] = static_cast<float>(s);
    }

    Tensor2 dx;
    kernels::matmul(dz, d.weight, dx);
    return dx;
}

Tensor2 bn_backward(const BatchNormLayer& b, const BnCache& cache, const Tensor2& dy,
                    ParamVector& grads, const std::string& prefix) {
    const std::size_t B = dy.rows, W = dy.cols;
    auto dgamma = grads.tensor(prefix + ".gamma");
    auto dbeta = grads.tensor(prefix + ".beta");

    if (!b.frozen) {
        for (std::size_t c = 0; c < W; ++c) {
            double sg = 0.0, sb = 0.0;
            for (std::size_t r = 0; r < B; ++r) {
                sg += static_cast<double>(dy.at(r, c)) * cache.xhat.at(r, c);
                sb += dy.at(r, c);
            }
            dgamma[c] = static_cast<float>(sg);
            dbeta[c] = static_cast<float>(sb);
        }
    } // frozen: gamma/beta gradient entries stay zero

    Tensor2 dz(B, W);
    if (cache.batch_path) {
        for (std::size_t c = 0; c < W; ++c) {
            const double g = b.gamma[c];
            const double is = cache.inv_std[c];
            double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
            for (std::size_t r = 0; r < B; ++r) {
                const double dxh = dy.at(r, c) * g;
                sum_dxhat += dxh;
                sum_dxhat_xhat += dxh * cache.xhat.at(r, c);
            }
            const double invB = 1.0 / static_cast<double>(B);
            for (std::size_t r = 0; r < B; ++r) {
                const double dxh = dy.at(r, c) * g;
                const double val =
                    is * (dxh - invB * sum_dxhat - cache.xhat.at(r, c) * invB * sum_dxhat_xhat);
                dz.at(r, c) = static_cast<float>(val);
            }
        }
    } else {
        for (std::size_t c = 0; c < W; ++c) {
            const double scale = b.gamma[c] * cache.inv_std[c];
            for (std::size_t r = 0; r < B; ++r) {
                dz.at(r, c) = static_cast<float>(dy.at(r, c) * scale);
            }
        }
    }
    return dz;
}

} // namespace

Tensor2 forward(BnMlpModel& model, const Tensor2& batch) {
    return run_forward(model, batch, nullptr);
}

BackwardResult backward(BnMlpModel& model, const Tensor2& batch, const std::vector<int>& labels) {
    if (labels.size() != batch.rows) {
        throw std::invalid_argument("backward: labels length does not match batch rows");
    }
    for (int y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= model.class_count) {
            throw std::invalid_argument("backward: label out of range");
        }
    }

    ForwardCache cache;
    run_forward(model, batch, &cache);

    BackwardResult result;
    result.grads = ParamVector(model.layout());

    Tensor2 dlogits;
    result.loss = softmax_ce(cache.logits, labels, dlogits);

    const std::size_t L = model.bn.size();
    Tensor2 dh = dense_backward(model.dense[L], cache.dense_input[L], dlogits, result.grads,
                                "dense" + std::to_string(L));
    for (std::size_t i = L; i-- > 0;) {
        // ReLU backward
        const Tensor2& y = cache.relu_input[i];
        for (std::size_t k = 0; k < dh.data.size(); ++k) {
            if (y.data[k] <= 0.0f) dh.data[k] = 0.0f;
        }
        Tensor2 dz = bn_backward(model.bn[i], cache.bn[i], dh, result.grads,
                                 "bn" + std::to_string(i));
        dh = dense_backward(model.dense[i], cache.dense_input[i], dz, result.grads,
                            "dense" + std::to_string(i));
    }
    return result;
}

void sgd_step(BnMlpModel& model, const ParamVector& grads, float lr) {
    if (lr < 0.0f) throw std::invalid_argument("sgd_step: lr must be >= 0");
    ParamVector p = model.flatten();
    require_same_layout(p, grads, "sgd_step");
    for (std::size_t i = 0; i < p.values.size(); ++i) {
        p.values[i] -= lr * grads.values[i];
    }
    model.unflatten(p);
}

double accuracy(BnMlpModel& model, const Tensor2& batch, const std::vector<int>& labels) {
    if (labels.size() != batch.rows || batch.rows == 0) {
        throw std::invalid_argument("accuracy: labels length does not match batch rows");
    }
    const Mode saved = model.mode;
    model.mode = Mode::eval;
    Tensor2 logits = forward(model, batch);
    model.mode = saved;

    std::size_t correct = 0;
    for (std::size_t r = 0; r < logits.rows; ++r) {
        const float* row = logits.row(r);
        std::size_t best = 0;
        for (std::size_t c = 1; c < logits.cols; ++c) {
            if (row[c] > row[best]) best = c;
        }
        if (static_cast<int>(best) == labels[r]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(batch.rows);
}

} // namespace fedtrace
