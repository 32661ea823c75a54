#pragma once

#include "causalsem/rng.hpp"
#include "causalsem/semantic_loss.hpp"
#include "causalsem/text_codec.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace causalsem {

struct ModelShape {
    std::size_t vocab = vocabulary_size();
    std::size_t d_embed = 16;
    std::size_t d_hidden = 32;
    std::size_t max_seq_len = kDefaultMaxSeqLen;

    void validate() const;
    bool operator==(const ModelShape&) const = default;
};

// Character embedding table, mean pooling, one tanh hidden layer, two logits.
// All tensors are row-major. The same struct doubles as a gradient buffer.
struct ModelParams {
    ModelShape shape;
    std::vector<double> embedding; // vocab x d_embed
    std::vector<double> w_hidden;  // d_hidden x d_embed
    std::vector<double> b_hidden;  // d_hidden
    std::vector<double> w_out;     // 2 x d_hidden, row = Label
    std::vector<double> b_out;     // 2

    static ModelParams zeros(const ModelShape& shape);

    std::size_t parameter_count() const noexcept;
    // Fixed tensor order: embedding, w_hidden, b_hidden, w_out, b_out.
    std::array<std::span<double>, 5> tensors();
    std::array<std::span<const double>, 5> tensors() const;

    // Flat coordinate access in tensor order.
    double& coordinate(std::size_t i);

    // Throws ModelFormatError on shape mismatch or non-finite values.
    void validate() const;

    bool operator==(const ModelParams&) const = default;
};

// Uniform(-1, 1) / sqrt(fan_in) weights, zero biases.
ModelParams init_model(const ModelShape& shape, std::uint64_t seed);

struct ForwardResult {
    Logits logits{};
    PredictionProbs probs;
};

// An empty id list pools the separator embedding alone.
ForwardResult forward(const ModelParams& model, const TokenSequence& tokens);

// Adds dL/dθ into grad given dL/dlogits for this sequence.
void backward(const ModelParams& model, const TokenSequence& tokens, const Logits& dlogits,
              ModelParams& grad);

// Versioned binary container: magic, version, shape echo, vocabulary
// fingerprint, then little-endian IEEE-754 doubles in tensor order.
void save_model(const ModelParams& model, const std::filesystem::path& path);
std::string serialize_model(const ModelParams& model);
ModelParams load_model(const std::filesystem::path& path);
// Also rejects a file whose shape differs from `expected`.
ModelParams load_model(const std::filesystem::path& path, const ModelShape& expected);
ModelParams deserialize_model(std::string_view bytes);

} // namespace causalsem
