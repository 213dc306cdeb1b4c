#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace fedtrace {

struct LayoutEntry {
    std::string name;
    std::vector<std::size_t> shape;
    std::size_t offset = 0;
    std::size_t length = 0;

    bool operator==(const LayoutEntry& o) const {
        return name == o.name && shape == o.shape && offset == o.offset && length == o.length;
    }
};

// Ordered (name, shape, offset, length) manifest over a flat float32 buffer.
struct ParamLayout {
    std::vector<LayoutEntry> entries;
    std::size_t total = 0;

    bool operator==(const ParamLayout& o) const {
        return total == o.total && entries == o.entries;
    }

    const LayoutEntry& find(const std::string& name) const;
    bool has(const std::string& name) const;
};

// Flat view of all model parameters; the unit of aggregation, memory,
// pruning and checkpointing. Two ParamVectors combine only when their
// layouts match.
struct ParamVector {
    std::shared_ptr<const ParamLayout> layout;
    std::vector<float> values;

    ParamVector() = default;
    explicit ParamVector(std::shared_ptr<const ParamLayout> l)
        : layout(std::move(l)), values(layout ? layout->total : 0, 0.0f) {}

    std::size_t size() const { return values.size(); }

    std::span<float> tensor(const std::string& name);
    std::span<const float> tensor(const std::string& name) const;
};

void require_same_layout(const ParamVector& a, const ParamVector& b, const char* what);

// elementwise ops; layouts must match
void axpy(ParamVector& y, float alpha, const ParamVector& x); // y += alpha * x
void add(ParamVector& y, const ParamVector& x);
void sub(ParamVector& y, const ParamVector& x);
void scale(ParamVector& y, float alpha);

// double-accumulated reductions (feasibility tolerances depend on them)
double dot(const ParamVector& a, const ParamVector& b);
double norm(const ParamVector& a);

} // namespace fedtrace
