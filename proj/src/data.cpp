#include "fedtrace/data.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "fedtrace/rng.hpp"

namespace fedtrace {

Dataset synth_blobs(std::uint64_t seed, int classes, int dim, int per_class, float spread) {
    if (classes < 2) throw std::invalid_argument("synth_blobs: classes must be >= 2");
    if (per_class < 1) throw std::invalid_argument("synth_blobs: per_class must be >= 1");
    if (dim < 1) throw std::invalid_argument("synth_blobs: dim must be >= 1");
    if (spread < 0.0f) throw std::invalid_argument("synth_blobs: spread must be >= 0");

    Rng rng(seed);
    Tensor2 means(static_cast<std::size_t>(classes), static_cast<std::size_t>(dim));
    for (float& v : means.data) v = static_cast<float>(rng.normal());

    Dataset d;
    d.class_count = classes;
    d.features = Tensor2(static_cast<std::size_t>(classes) * per_class,
                         static_cast<std::size_t>(dim));
    d.labels.resize(d.features.rows);
    std::size_t row = 0;
    for (int c = 0; c < classes; ++c) {
        for (int s = 0; s < per_class; ++s, ++row) {
            float* dst = d.features.row(row);
            const float* mu = means.row(static_cast<std::size_t>(c));
            for (int k = 0; k < dim; ++k) {
                dst[k] = mu[k] + spread * static_cast<float>(rng.normal());
            }
            d.labels[row] = c;
        }
    }
    return d;
}

namespace {

std::uint32_t read_be32(std::ifstream& f, const std::string& path) {
    unsigned char b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    if (!f) throw std::runtime_error("load_idx: truncated file: " + path);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

} // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream fi(images_path, std::ios::binary);
    if (!fi) throw std::runtime_error("load_idx: cannot open " + images_path);
    std::ifstream fl(labels_path, std::ios::binary);
    if (!fl) throw std::runtime_error("load_idx: cannot open " + labels_path);

    const std::uint32_t magic_i = read_be32(fi, images_path);
    if (magic_i != 0x00000803u) {
        throw std::runtime_error("load_idx: bad image magic in " + images_path);
    }
    const std::uint32_t n = read_be32(fi, images_path);
    const std::uint32_t rows = read_be32(fi, images_path);
    const std::uint32_t cols = read_be32(fi, images_path);

    const std::uint32_t magic_l = read_be32(fl, labels_path);
    if (magic_l != 0x00000801u) {
        throw std::runtime_error("load_idx: bad label magic in " + labels_path);
    }
    const std::uint32_t nl = read_be32(fl, labels_path);
    if (n != nl) throw std::runtime_error("load_idx: image/label count mismatch");
    if (n == 0) throw std::runtime_error("load_idx: empty dataset");

    const std::size_t dim = std::size_t(rows) * cols;
    std::vector<unsigned char> pixels(std::size_t(n) * dim);
    fi.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
    if (fi.gcount() != static_cast<std::streamsize>(pixels.size())) {
        throw std::runtime_error("load_idx: truncated image data in " + images_path);
    }
    std::vector<unsigned char> raw_labels(n);
    fl.read(reinterpret_cast<char*>(raw_labels.data()), n);
    if (fl.gcount() != static_cast<std::streamsize>(n)) {
        throw std::runtime_error("load_idx: truncated label data in " + labels_path);
    }

    Dataset d;
    d.features = Tensor2(n, dim);
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        d.features.data[i] = static_cast<float>(pixels[i]) / 255.0f;
    }
    d.labels.assign(raw_labels.begin(), raw_labels.end());
    int max_label = 0;
    for (int y : d.labels) max_label = std::max(max_label, y);
    d.class_count = max_label + 1;
    return d;
}

Dataset subset(const Dataset& d, std::span<const std::size_t> indices) {
    Dataset out;
    out.class_count = d.class_count;
    out.features = Tensor2(indices.size(), d.features.cols);
    out.labels.resize(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::size_t src = indices[i];
        if (src >= d.size()) throw std::invalid_argument("subset: index out of range");
        std::copy(d.features.row(src), d.features.row(src) + d.features.cols,
                  out.features.row(i));
        out.labels[i] = d.labels[src];
    }
    return out;
}

void split_holdout(const Dataset& d, double fraction, std::uint64_t seed,
                   Dataset& rest, Dataset& held) {
    if (fraction < 0.0 || fraction >= 1.0) {
        throw std::invalid_argument("split_holdout: fraction must be in [0, 1)");
    }
    Rng rng(seed);
    auto perm = rng.permutation(d.size());
    const std::size_t nh = static_cast<std::size_t>(fraction * static_cast<double>(d.size()));
    std::vector<std::size_t> held_ix(perm.begin(), perm.begin() + nh);
    std::vector<std::size_t> rest_ix(perm.begin() + nh, perm.end());
    held = subset(d, held_ix);
    rest = subset(d, rest_ix);
}

Partition partition_iid(const Dataset& d, int clients, std::uint64_t seed) {
    if (clients < 1) throw std::invalid_argument("partition_iid: clients must be >= 1");
    if (d.size() < static_cast<std::size_t>(clients)) {
        throw std::invalid_argument("partition_iid: fewer samples than clients");
    }
    Rng rng(seed);
    auto perm = rng.permutation(d.size());

    Partition p;
    p.client_indices.resize(static_cast<std::size_t>(clients));
    const std::size_t base = d.size() / static_cast<std::size_t>(clients);
    const std::size_t extra = d.size() % static_cast<std::size_t>(clients);
    std::size_t off = 0;
    for (std::size_t c = 0; c < static_cast<std::size_t>(clients); ++c) {
        const std::size_t take = base + (c < extra ? 1 : 0);
        p.client_indices[c].assign(perm.begin() + off, perm.begin() + off + take);
        off += take;
    }
    return p;
}

Partition partition_dirichlet(const Dataset& d, int clients, double xi, std::uint64_t seed) {
    if (clients < 1) throw std::invalid_argument("partition_dirichlet: clients must be >= 1");
    if (xi <= 0.0) throw std::invalid_argument("partition_dirichlet: xi must be > 0");
    if (d.size() < static_cast<std::size_t>(clients)) {
        throw std::invalid_argument("partition_dirichlet: fewer samples than clients");
    }

    Rng rng(seed);
    const std::size_t K = static_cast<std::size_t>(clients);

    // class -> shuffled sample indices
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(d.class_count));
    for (std::size_t i = 0; i < d.size(); ++i) {
        by_class[static_cast<std::size_t>(d.labels[i])].push_back(i);
    }

    Partition p;
    p.client_indices.resize(K);
    for (auto& ix : by_class) {
        rng.shuffle(ix);
        if (ix.empty()) continue;

        std::vector<double> prop(K);
        double total = 0.0;
        for (std::size_t c = 0; c < K; ++c) {
            prop[c] = rng.gamma(xi);
            total += prop[c];
        }
        // cumulative-quota assignment keeps counts within one of n * prop
        double acc = 0.0;
        std::size_t taken = 0;
        for (std::size_t c = 0; c < K; ++c) {
            acc += prop[c] / total;
            std::size_t upto = (c + 1 == K)
                                   ? ix.size()
                                   : std::min(ix.size(),
                                              static_cast<std::size_t>(acc * static_cast<double>(ix.size())));
            for (; taken < upto; ++taken) p.client_indices[c].push_back(ix[taken]);
        }
    }

    // repair empty clients by stealing one sample from the largest
    for (std::size_t c = 0; c < K; ++c) {
        if (!p.client_indices[c].empty()) continue;
        std::size_t donor = 0;
        for (std::size_t j = 1; j < K; ++j) {
            if (p.client_indices[j].size() > p.client_indices[donor].size()) donor = j;
        }
        if (p.client_indices[donor].size() < 2) {
            throw std::runtime_error("partition_dirichlet: cannot repair empty client");
        }
        p.client_indices[c].push_back(p.client_indices[donor].back());
        p.client_indices[donor].pop_back();
    }
    return p;
}

} // namespace fedtrace
