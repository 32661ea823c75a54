#include "causalsem/model.hpp"

#include "causalsem/errors.hpp"
#include "causalsem/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>

namespace causalsem {

namespace {

constexpr char kMagic[8] = {'C', 'S', 'E', 'M', 'M', 'O', 'D', 'L'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::size_t kHeaderSize = 8 + 4 + 4 * 4 + 8 + 8;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out += static_cast<char>((v >> (8 * i)) & 0xFF);
    }
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out += static_cast<char>((v >> (8 * i)) & 0xFF);
    }
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    std::uint64_t u64() { return get(8); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

private:
    std::uint64_t get(int width) {
        if (remaining() < static_cast<std::size_t>(width)) {
            throw ModelFormatError("model file is truncated");
        }
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += static_cast<std::size_t>(width);
        return v;
    }

    std::string_view bytes_;
    std::size_t pos_ = 0;
};

std::vector<double> pooled_embedding(const ModelParams& m, const TokenSequence& tokens) {
    const std::size_t d = m.shape.d_embed;
    std::vector<double> pooled(d, 0.0);
    auto add_row = [&](std::size_t id) {
        if (id >= m.shape.vocab) {
            throw TokenizeError("token id " + std::to_string(id) + " outside model vocabulary");
        }
        const double* row = &m.embedding[id * d];
        for (std::size_t k = 0; k < d; ++k) {
            pooled[k] += row[k];
        }
    };
    if (tokens.ids.empty()) {
        add_row(kSeparatorId);
        return pooled;
    }
    for (auto id : tokens.ids) {
        add_row(id);
    }
    const double inv = 1.0 / static_cast<double>(tokens.ids.size());
    for (auto& v : pooled) {
        v *= inv;
    }
    return pooled;
}

std::vector<double> hidden_activation(const ModelParams& m, const std::vector<double>& pooled) {
    const std::size_t d = m.shape.d_embed;
    std::vector<double> hidden(m.shape.d_hidden);
    for (std::size_t h = 0; h < hidden.size(); ++h) {
        double a = m.b_hidden[h];
        const double* w = &m.w_hidden[h * d];
        for (std::size_t k = 0; k < d; ++k) {
            a += w[k] * pooled[k];
        }
        hidden[h] = std::tanh(a);
    }
    return hidden;
}

Logits output_logits(const ModelParams& m, const std::vector<double>& hidden) {
    Logits z{};
    for (std::size_t c = 0; c < 2; ++c) {
        double v = m.b_out[c];
        const double* w = &m.w_out[c * m.shape.d_hidden];
        for (std::size_t h = 0; h < hidden.size(); ++h) {
            v += w[h] * hidden[h];
        }
        z[c] = v;
    }
    return z;
}

} // namespace

void ModelShape::validate() const {
    if (vocab == 0 || d_embed == 0 || d_hidden == 0 || max_seq_len == 0) {
        throw ConfigError("model dimensions and max sequence length must be positive");
    }
}

ModelParams ModelParams::zeros(const ModelShape& shape) {
    shape.validate();
    ModelParams m;
    m.shape = shape;
    m.embedding.assign(shape.vocab * shape.d_embed, 0.0);
    m.w_hidden.assign(shape.d_hidden * shape.d_embed, 0.0);
    m.b_hidden.assign(shape.d_hidden, 0.0);
    m.w_out.assign(2 * shape.d_hidden, 0.0);
    m.b_out.assign(2, 0.0);
    return m;
}

std::size_t ModelParams::parameter_count() const noexcept {
    return embedding.size() + w_hidden.size() + b_hidden.size() + w_out.size() + b_out.size();
}

std::array<std::span<double>, 5> ModelParams::tensors() {
    return {embedding, w_hidden, b_hidden, w_out, b_out};
}

std::array<std::span<const double>, 5> ModelParams::tensors() const {
    return {embedding, w_hidden, b_hidden, w_out, b_out};
}

double& ModelParams::coordinate(std::size_t i) {
    for (auto t : tensors()) {
        if (i < t.size()) {
            return t[i];
        }
        i -= t.size();
    }
    throw std::out_of_range("parameter coordinate out of range");
}

void ModelParams::validate() const {
    shape.validate();
    if (embedding.size() != shape.vocab * shape.d_embed || w_hidden.size() != shape.d_hidden * shape.d_embed ||
        b_hidden.size() != shape.d_hidden || w_out.size() != 2 * shape.d_hidden || b_out.size() != 2) {
        throw ModelFormatError("parameter tensor sizes do not match the model shape");
    }
    for (auto t : tensors()) {
        for (double v : t) {
            if (!std::isfinite(v)) {
                throw ModelFormatError("model contains a non-finite parameter");
            }
        }
    }
}

ModelParams init_model(const ModelShape& shape, std::uint64_t seed) {
    ModelParams m = ModelParams::zeros(shape);
    Rng rng(seed);
    auto fill = [&](std::vector<double>& t, std::size_t fan_in) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (auto& v : t) {
            v = rng.uniform_real(-scale, scale);
        }
    };
    fill(m.embedding, shape.d_embed);
    fill(m.w_hidden, shape.d_embed);
    fill(m.w_out, shape.d_hidden);
    return m;
}

ForwardResult forward(const ModelParams& model, const TokenSequence& tokens) {
    const auto pooled = pooled_embedding(model, tokens);
    const auto hidden = hidden_activation(model, pooled);
    ForwardResult out;
    out.logits = output_logits(model, hidden);
    out.probs = PredictionProbs::from_logits(out.logits);
    return out;
}

void backward(const ModelParams& model, const TokenSequence& tokens, const Logits& dlogits, ModelParams& grad) {
    const std::size_t d = model.shape.d_embed;
    const std::size_t dh = model.shape.d_hidden;
    const auto pooled = pooled_embedding(model, tokens);
    const auto hidden = hidden_activation(model, pooled);

    std::vector<double> da(dh, 0.0);
    for (std::size_t c = 0; c < 2; ++c) {
        grad.b_out[c] += dlogits[c];
        for (std::size_t h = 0; h < dh; ++h) {
            grad.w_out[c * dh + h] += dlogits[c] * hidden[h];
            da[h] += dlogits[c] * model.w_out[c * dh + h];
        }
    }
    std::vector<double> dpooled(d, 0.0);
    for (std::size_t h = 0; h < dh; ++h) {
        da[h] *= 1.0 - hidden[h] * hidden[h];
        grad.b_hidden[h] += da[h];
        for (std::size_t k = 0; k < d; ++k) {
            grad.w_hidden[h * d + k] += da[h] * pooled[k];
            dpooled[k] += da[h] * model.w_hidden[h * d + k];
        }
    }
    auto scatter = [&](std::size_t id, double weight) {
        double* row = &grad.embedding[id * d];
        for (std::size_t k = 0; k < d; ++k) {
            row[k] += weight * dpooled[k];
        }
    };
    if (tokens.ids.empty()) {
        scatter(kSeparatorId, 1.0);
        return;
    }
    const double inv = 1.0 / static_cast<double>(tokens.ids.size());
    for (auto id : tokens.ids) {
        scatter(id, inv);
    }
}

// ─── Serialization ──────────────────────────────────────────

std::string serialize_model(const ModelParams& model) {
    model.validate();
    std::string out(kMagic, sizeof(kMagic));
    put_u32(out, kFormatVersion);
    put_u32(out, static_cast<std::uint32_t>(model.shape.vocab));
    put_u32(out, static_cast<std::uint32_t>(model.shape.d_embed));
    put_u32(out, static_cast<std::uint32_t>(model.shape.d_hidden));
    put_u32(out, static_cast<std::uint32_t>(model.shape.max_seq_len));
    put_u64(out, vocabulary_fingerprint());
    put_u64(out, model.parameter_count());
    out.reserve(kHeaderSize + 8 * model.parameter_count());
    for (auto t : model.tensors()) {
        for (double v : t) {
            put_u64(out, std::bit_cast<std::uint64_t>(v));
        }
    }
    return out;
}

void save_model(const ModelParams& model, const std::filesystem::path& path) {
    write_file_atomic(path, serialize_model(model));
}

ModelParams deserialize_model(std::string_view bytes) {
    if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw ModelFormatError("not a model file (bad magic)");
    }
    Reader in(bytes.substr(sizeof(kMagic)));
    const std::uint32_t version = in.u32();
    if (version != kFormatVersion) {
        throw ModelFormatError("unsupported model format version " + std::to_string(version));
    }
    ModelShape shape;
    shape.vocab = in.u32();
    shape.d_embed = in.u32();
    shape.d_hidden = in.u32();
    shape.max_seq_len = in.u32();
    const std::uint64_t fingerprint = in.u64();
    const std::uint64_t count = in.u64();
    try {
        shape.validate();
    } catch (const ConfigError& e) {
        throw ModelFormatError(std::string("corrupt header: ") + e.what());
    }
    if (fingerprint != vocabulary_fingerprint() || shape.vocab != vocabulary_size()) {
        throw ModelFormatError("model was trained with a different vocabulary");
    }
    ModelParams m = ModelParams::zeros(shape);
    if (count != m.parameter_count()) {
        throw ModelFormatError("parameter count " + std::to_string(count) + " does not match header shape (" +
                               std::to_string(m.parameter_count()) + " expected)");
    }
    if (in.remaining() != 8 * count) {
        throw ModelFormatError(in.remaining() < 8 * count ? "model file is truncated"
                                                          : "trailing bytes after model payload");
    }
    for (auto t : m.tensors()) {
        for (auto& v : t) {
            v = in.f64();
        }
    }
    m.validate();
    return m;
}

ModelParams load_model(const std::filesystem::path& path) {
    return deserialize_model(read_file(path));
}

ModelParams load_model(const std::filesystem::path& path, const ModelShape& expected) {
    ModelParams m = load_model(path);
    if (!(m.shape == expected)) {
        throw ModelFormatError("model shape mismatch: file has d_embed=" + std::to_string(m.shape.d_embed) +
                               " d_hidden=" + std::to_string(m.shape.d_hidden) + ", expected d_embed=" +
                               std::to_string(expected.d_embed) + " d_hidden=" +
                               std::to_string(expected.d_hidden));
    }
    return m;
}

} // namespace causalsem
