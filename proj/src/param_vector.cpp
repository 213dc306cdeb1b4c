#include "fedtrace/param_vector.hpp"

#include <cmath>
#include <stdexcept>

namespace fedtrace {

const LayoutEntry& ParamLayout::find(const std::string& name) const {
    for (const auto& e : entries) {
        if (e.name == name) return e;
    }
    throw std::invalid_argument("layout: no tensor named '" + name + "'");
}

bool ParamLayout::has(const std::string& name) const {
    for (const auto& e : entries) {
        if (e.name == name) return true;
    }
    return false;
}

std::span<float> ParamVector::tensor(const std::string& name) {
    const auto& e = layout->find(name);
    return {values.data() + e.offset, e.length};
}

std::span<const float> ParamVector::tensor(const std::string& name) const {
    const auto& e = layout->find(name);
    return {values.data() + e.offset, e.length};
}

void require_same_layout(const ParamVector& a, const ParamVector& b, const char* what) {
    if (!a.layout || !b.layout) {
        throw std::invalid_argument(std::string(what) + ": uninitialized parameter vector");
    }
    if (a.layout.get() != b.layout.get() && !(*a.layout == *b.layout)) {
        throw std::invalid_argument(std::string(what) + ": layout mismatch");
    }
}

void axpy(ParamVector& y, float alpha, const ParamVector& x) {
    require_same_layout(y, x, "axpy");
    for (std::size_t i = 0; i < y.values.size(); ++i) {
        y.values[i] += alpha * x.values[i];
    }
}

void add(ParamVector& y, const ParamVector& x) { axpy(y, 1.0f, x); }

void sub(ParamVector& y, const ParamVector& x) { axpy(y, -1.0f, x); }

void scale(ParamVector& y, float alpha) {
    for (float& v : y.values) v *= alpha;
}

double dot(const ParamVector& a, const ParamVector& b) {
    require_same_layout(a, b, "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        acc += static_cast<double>(a.values[i]) * static_cast<double>(b.values[i]);
    }
    return acc;
}

double norm(const ParamVector& a) {
    double acc = 0.0;
    for (float v : a.values) acc += static_cast<double>(v) * static_cast<double>(v);
    return std::sqrt(acc);
}

} // namespace fedtrace
