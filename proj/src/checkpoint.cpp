#include "fedtrace/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace fedtrace {

namespace {

void write_u32_le(std::ofstream& f, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    f.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32_le(std::ifstream& f, const std::string& path) {
    unsigned char b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    if (!f) throw std::runtime_error("load_ftck: truncated header in " + path);
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
           (std::uint32_t(b[3]) << 24);
}

} // namespace

void save_ftck(const std::string& path, const std::vector<NamedTensor>& tensors) {
    nlohmann::json manifest = nlohmann::json::array();
    for (const auto& t : tensors) {
        std::size_t expect = 1;
        for (std::size_t s : t.shape) expect *= s;
        if (expect != t.data.size()) {
            throw std::invalid_argument("save_ftck: shape/data mismatch for " + t.name);
        }
        manifest.push_back({{"name", t.name}, {"shape", t.shape}});
    }
    const std::string text = manifest.dump();

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("save_ftck: cannot open " + path);
    write_u32_le(f, static_cast<std::uint32_t>(text.size()));
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& t : tensors) {
        for (float v : t.data) {
            std::uint32_t bits;
            std::memcpy(&bits, &v, 4);
            write_u32_le(f, bits);
        }
    }
    if (!f) throw std::runtime_error("save_ftck: write failed for " + path);
}

std::vector<NamedTensor> load_ftck(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_ftck: cannot open " + path);
    const std::uint32_t mlen = read_u32_le(f, path);
    std::string text(mlen, '\0');
    f.read(text.data(), mlen);
    if (!f) throw std::runtime_error("load_ftck: truncated manifest in " + path);

    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception&) {
        throw std::runtime_error("load_ftck: corrupt manifest in " + path);
    }
    if (!manifest.is_array()) throw std::runtime_error("load_ftck: manifest is not a list");

    std::vector<NamedTensor> tensors;
    std::size_t total = 0;
    for (const auto& e : manifest) {
        NamedTensor t;
        t.name = e.at("name").get<std::string>();
        t.shape = e.at("shape").get<std::vector<std::size_t>>();
        std::size_t n = 1;
        for (std::size_t s : t.shape) n *= s;
        t.data.resize(n);
        total += n;
        tensors.push_back(std::move(t));
    }

    for (auto& t : tensors) {
        for (float& v : t.data) {
            const std::uint32_t bits = read_u32_le(f, path);
            std::memcpy(&v, &bits, 4);
        }
    }
    // total length check: nothing may remain
    f.peek();
    if (!f.eof()) {
        throw std::runtime_error("load_ftck: trailing bytes in " + path + " (expected " +
                                 std::to_string(total) + " values)");
    }
    return tensors;
}

void save_model(const std::string& path, const BnMlpModel& model) {
    ParamVector p = model.flatten();
    std::vector<NamedTensor> tensors;
    for (const auto& e : p.layout->entries) {
        NamedTensor t;
        t.name = e.name;
        t.shape = e.shape;
        auto src = p.tensor(e.name);
        t.data.assign(src.begin(), src.end());
        tensors.push_back(std::move(t));
    }
    save_ftck(path, tensors);
}

BnMlpModel load_model(const std::string& path) {
    auto tensors = load_ftck(path);

    // expected order: denseI.weight, denseI.bias, [bnI.gamma, bnI.beta,
    // bnI.running_mean, bnI.running_var] ... final dense
    std::vector<std::size_t> hidden;
    std::size_t input_width = 0, class_count = 0;
    std::size_t i = 0, layer = 0;
    const std::size_t n = tensors.size();
    while (i < n) {
        const std::string prefix = "dense" + std::to_string(layer);
        if (tensors[i].name != prefix + ".weight" || tensors[i].shape.size() != 2) {
            throw std::runtime_error("load_model: unexpected tensor " + tensors[i].name);
        }
        const std::size_t out = tensors[i].shape[0], in = tensors[i].shape[1];
        if (layer == 0) input_width = in;
        if (i + 1 >= n || tensors[i + 1].name != prefix + ".bias") {
            throw std::runtime_error("load_model: missing bias for " + prefix);
        }
        if (i + 2 < n && tensors[i + 2].name == "bn" + std::to_string(layer) + ".gamma") {
            hidden.push_back(out);
            i += 6;
        } else {
            class_count = out;
            i += 2;
            break;
        }
        ++layer;
    }
    if (i != n || class_count == 0) {
        throw std::runtime_error("load_model: malformed checkpoint " + path);
    }

    BnMlpModel model = BnMlpModel::make(input_width, hidden, class_count, 0);
    ParamVector p(model.layout());
    for (const auto& t : tensors) {
        auto dst = p.tensor(t.name); // throws on unknown names
        if (dst.size() != t.data.size()) {
            throw std::runtime_error("load_model: size mismatch for " + t.name);
        }
        std::copy(t.data.begin(), t.data.end(), dst.begin());
    }
    model.unflatten(p);
    model.mode = Mode::eval;
    return model;
}

} // namespace fedtrace
