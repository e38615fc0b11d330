#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "claimworthy/autograd.hpp"
#include "claimworthy/corpus.hpp"
#include "claimworthy/tensor.hpp"
#include "claimworthy/tinylm.hpp"

namespace claimworthy {

// Vocab ids whose logits carry the two answers. Defaults are the byte values
// of 'Y' and 'N' under the byte-level tokenizer.
struct VerbalizerTokens {
  std::size_t id_yes = 89;
  std::size_t id_no = 78;
};

// The learnable prefix plus AdamW moment buffers. The prefix matrix is the
// only set of trainable parameters anywhere in the tuning path.
struct SoftPromptState {
  Tensor prefix;  // p x e
  Tensor m;       // first moment, same shape
  Tensor v;       // second moment, same shape
  std::size_t step = 0;

  std::size_t prefix_len() const { return prefix.rows; }
  std::size_t trainable_count() const { return prefix.size(); }
};

struct TrainHyperparams {
  double learning_rate = 3e-5;
  std::size_t epochs = 5;
  std::size_t batch_size = 8;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 0.01;
  double adam_eps = 1e-8;
  std::uint32_t shuffle_seed = 0;

  // learning_rate may be zero (a documented no-op run); everything else
  // must be positive and the betas must sit in [0, 1).
  void validate() const;
};

struct TrainExample {
  std::vector<std::size_t> token_ids;
  Label label = Label::No;
};

struct TrainReport {
  std::vector<double> epoch_mean_losses;
  double final_train_accuracy = 0.0;
  std::string base_checksum_before;
  std::string base_checksum_after;
  std::size_t trainable_count = 0;
  std::uint32_t shuffle_seed = 0;
  std::size_t optimizer_steps = 0;
};

// Prefix entries drawn uniform in [-0.1, 0.1) from the pinned PRNG;
// moments zeroed. Throws on p = 0 or e = 0.
SoftPromptState init_soft_prompt(std::size_t p, std::size_t e,
                                 std::uint32_t seed);

// Concatenates the prefix rows before the embedded tokens and returns the
// vocab logits at the final position. `prefix` is a tape variable so the
// caller decides whether it is a parameter (training) or constant
// (inference). Throws when p + n exceeds the model context.
autograd::Tape::VarId forward_with_prefix(
    autograd::Tape& tape, const TinyLM& lm, autograd::Tape::VarId prefix,
    std::span<const std::size_t> token_ids);

// Same forward with no prefix rows at all. Exists so tests can show a
// zero-valued prefix is not equivalent to an absent one (the prefix holds
// attention positions even when its entries are zero).
autograd::Tape::VarId forward_logits(autograd::Tape& tape, const TinyLM& lm,
                                     std::span<const std::size_t> token_ids);

// Cross-entropy over the 2-way softmax restricted to the two verbalizer
// token logits. Equal logits give ln 2.
autograd::Tape::VarId classification_loss(autograd::Tape& tape,
                                          autograd::Tape::VarId logits,
                                          Label gold,
                                          const VerbalizerTokens& vt = {});

// Argmax over the two verbalizer logits; tie resolves to No.
Label classify(const Tensor& logits, const VerbalizerTokens& vt = {});

// Inference convenience: forward with a constant prefix, classify.
Label classify_with_prefix(const TinyLM& lm, const SoftPromptState& sp,
                           std::span<const std::size_t> token_ids,
                           const VerbalizerTokens& vt = {});

// AdamW on the prefix only; the base model is never touched (its weights
// enter the tape as constants). Shuffles data each epoch from the recorded
// seed, applies batch-mean gradients, and aborts with diagnostics on any
// non-finite loss.
TrainReport train(const TinyLM& lm, SoftPromptState& sp,
                  std::span<const TrainExample> data,
                  const TrainHyperparams& hp, const VerbalizerTokens& vt = {});

// Compares analytic dLoss/dPrefix against central finite differences on a
// random 16-entry subset; returns the max relative error. Entries where
// both gradients are below 1e-8 in magnitude count as zero error.
double grad_check(const TinyLM& lm, const SoftPromptState& sp,
                  const TrainExample& example, double epsilon,
                  const VerbalizerTokens& vt = {},
                  std::uint32_t entry_seed = 1);

// "0.0009%"-style rendering of 100 * trainable / total at four decimals.
std::string format_param_ratio(std::size_t trainable, std::size_t total);

// Checkpoints carry everything needed to resume or serve: model config and
// weights, the prefix and optimizer state, the hyperparameters, and the
// template tag the prefix was trained for. Loading verifies the stored
// weight checksum.
struct Checkpoint {
  TinyLM lm;
  SoftPromptState sp;
  TrainHyperparams hp;
  std::string template_tag;
  std::string base_checksum;
};

void save_checkpoint(const std::filesystem::path& path, const TinyLM& lm,
                     const SoftPromptState& sp, const TrainHyperparams& hp,
                     const std::string& template_tag);

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace claimworthy
