#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hurry/model.hpp"

namespace hurry {

// Deterministic weights for a layer: the user-supplied tensor when given,
// otherwise seeded uniform signed integers at bits_w. Layout [k][r] with
// r over the flattened (channel, kh, kw) window (FC: [k][in_feature]).
std::vector<std::int32_t> layer_weights(const LayerSpec& layer, std::uint64_t seed);

// Deterministic input tensor, flattened [c][h][w], signed at input bits.
std::vector<std::int64_t> seeded_input(const ModelGraph& model, std::uint64_t seed);

struct ReferenceResult {
  // Output of every layer, flattened [c][h][w].
  std::vector<std::vector<std::int64_t>> layer_outputs;
  // Populated when the final layer is softmax.
  std::vector<double> probabilities;
};

// Plain-integer reference inference: direct convolution, window max,
// clamped shift requantization, double-precision softmax. This is the
// defining arithmetic the crossbar path must reproduce; it shares no code
// with it.
ReferenceResult reference_inference(const ModelGraph& model, std::span<const std::int64_t> input,
                                    std::uint64_t weight_seed);

// Requantization applied after conv/fc accumulation (and after a fused
// residual add): arithmetic shift right then clamp to signed bits_out.
std::int64_t requantize(std::int64_t raw, int shift, int bits_out);

// Compares simulated per-layer outputs against the reference: integers
// exact, softmax probabilities within softmax_tol per entry. Returns an
// empty string on a match, else a description of the first divergence.
std::string compare_with_reference(const ModelGraph& model, std::span<const std::int64_t> input,
                                   std::uint64_t weight_seed,
                                   const std::vector<std::vector<std::int64_t>>& layer_outputs,
                                   const std::vector<double>& probabilities,
                                   double softmax_tol = 1e-2);

}  // namespace hurry
