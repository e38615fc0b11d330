#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "claimworthy/autograd.hpp"
#include "claimworthy/tensor.hpp"

namespace claimworthy {

struct TinyLMConfig {
  std::size_t vocab_size = 256;  // byte-level
  std::size_t embed_dim = 64;    // e; divisible by n_heads
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t context_len = 256;
  std::uint32_t seed = 1;

  void validate() const;

  bool operator==(const TinyLMConfig&) const = default;
};

// A miniature pre-norm transformer language model: byte embeddings, learned
// positional embeddings, causal multi-head attention, ReLU feed-forward,
// RMS normalization, and a projection to vocab logits. Weights are
// deterministic functions of the config seed and stay frozen during prompt
// tuning; only the prefix matrix supplied by the caller is ever trained.
struct TinyLM {
  TinyLMConfig config;
  Tensor token_embedding;     // vocab x e
  Tensor position_embedding;  // context x e

  struct Block {
    Tensor attn_norm_gain;  // 1 x e
    Tensor wq, wk, wv, wo;  // e x e
    Tensor mlp_norm_gain;   // 1 x e
    Tensor w_up;            // e x 4e
    Tensor w_down;          // 4e x e
  };
  std::vector<Block> blocks;

  Tensor final_norm_gain;    // 1 x e
  Tensor output_projection;  // e x vocab

  static TinyLM init(const TinyLMConfig& config);

  std::size_t parameter_count() const;

  // SHA-256 over the raw bytes of every weight tensor, in declaration
  // order. Used to prove the base stays frozen across training.
  std::string weight_checksum() const;

  // Builds the forward graph on the caller's tape from an already-embedded
  // sequence (rows = positions, cols = embed_dim; positional embeddings are
  // added here). Returns the vocab logits at the final position (1 x vocab).
  autograd::Tape::VarId forward_final_logits(
      autograd::Tape& tape, autograd::Tape::VarId embedded_rows) const;

  // Embeds token ids as a (n x e) tensor of frozen embedding rows.
  Tensor embed_tokens(std::span<const std::size_t> token_ids) const;
};

// UTF-8 bytes of `text` as token ids, truncated to the first max_len bytes.
std::vector<std::size_t> byte_tokenize(std::string_view text,
                                       std::size_t max_len);

}  // namespace claimworthy
