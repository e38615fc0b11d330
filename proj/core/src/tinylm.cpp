#include "claimworthy/tinylm.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "claimworthy/digest.hpp"
#include "claimworthy/error.hpp"
#include "claimworthy/rng.hpp"

namespace claimworthy {

namespace {

// Initialization scales. Embeddings are kept large enough that attention
// patterns are input-dependent from the start; projections use 1/sqrt(fan_in).
constexpr double kEmbeddingScale = 0.5;
constexpr double kPositionScale = 0.1;

Tensor random_tensor(std::size_t rows, std::size_t cols, double scale,
                     rng::Engine& engine) {
  Tensor t(rows, cols);
  for (double& x : t.data) x = scale * rng::normal(engine);
  return t;
}

Tensor ones_row(std::size_t cols) {
  Tensor t(1, cols);
  for (double& x : t.data) x = 1.0;
  return t;
}

}  // namespace

void TinyLMConfig::validate() const {
  if (vocab_size == 0 || embed_dim == 0 || n_layers == 0 || n_heads == 0 ||
      context_len == 0) {
    throw Error(ErrorKind::Config, "tiny LM dimensions must be positive");
  }
  if (embed_dim % n_heads != 0) {
    throw Error(ErrorKind::Config,
                "embed_dim must be divisible by n_heads");
  }
}

TinyLM TinyLM::init(const TinyLMConfig& config) {
  config.validate();
  rng::Engine engine = rng::make_engine(config.seed);
  TinyLM lm;
  lm.config = config;
  const std::size_t e = config.embed_dim;
  const double proj_scale = 1.0 / std::sqrt(static_cast<double>(e));
  const double down_scale = 1.0 / std::sqrt(static_cast<double>(4 * e));

  lm.token_embedding =
      random_tensor(config.vocab_size, e, kEmbeddingScale, engine);
  lm.position_embedding =
      random_tensor(config.context_len, e, kPositionScale, engine);
  lm.blocks.resize(config.n_layers);
  for (Block& block : lm.blocks) {
    block.attn_norm_gain = ones_row(e);
    block.wq = random_tensor(e, e, proj_scale, engine);
    block.wk = random_tensor(e, e, proj_scale, engine);
    block.wv = random_tensor(e, e, proj_scale, engine);
    block.wo = random_tensor(e, e, proj_scale, engine);
    block.mlp_norm_gain = ones_row(e);
    block.w_up = random_tensor(e, 4 * e, proj_scale, engine);
    block.w_down = random_tensor(4 * e, e, down_scale, engine);
  }
  lm.final_norm_gain = ones_row(e);
  lm.output_projection =
      random_tensor(e, config.vocab_size, proj_scale, engine);
  return lm;
}

std::size_t TinyLM::parameter_count() const {
  std::size_t count = token_embedding.size() + position_embedding.size() +
                      final_norm_gain.size() + output_projection.size();
  for (const Block& block : blocks) {
    count += block.attn_norm_gain.size() + block.wq.size() + block.wk.size() +
             block.wv.size() + block.wo.size() + block.mlp_norm_gain.size() +
             block.w_up.size() + block.w_down.size();
  }
  return count;
}

std::string TinyLM::weight_checksum() const {
  std::string bytes;
  auto feed = [&bytes](const Tensor& t) {
    const std::size_t offset = bytes.size();
    bytes.resize(offset + t.data.size() * sizeof(double));
    std::memcpy(bytes.data() + offset, t.data.data(),
                t.data.size() * sizeof(double));
  };
  feed(token_embedding);
  feed(position_embedding);
  for (const Block& block : blocks) {
    feed(block.attn_norm_gain);
    feed(block.wq);
    feed(block.wk);
    feed(block.wv);
    feed(block.wo);
    feed(block.mlp_norm_gain);
    feed(block.w_up);
    feed(block.w_down);
  }
  feed(final_norm_gain);
  feed(output_projection);
  return sha256_hex(bytes);
}

Tensor TinyLM::embed_tokens(std::span<const std::size_t> token_ids) const {
  Tensor rows(token_ids.size(), config.embed_dim);
  for (std::size_t i = 0; i < token_ids.size(); ++i) {
    if (token_ids[i] >= config.vocab_size) {
      std::ostringstream msg;
      msg << "token id " << token_ids[i] << " out of vocab ("
          << config.vocab_size << ")";
      throw Error(ErrorKind::Validation, msg.str());
    }
    for (std::size_t c = 0; c < config.embed_dim; ++c) {
      rows.at(i, c) = token_embedding.at(token_ids[i], c);
    }
  }
  return rows;
}

autograd::Tape::VarId TinyLM::forward_final_logits(
    autograd::Tape& tape, autograd::Tape::VarId embedded_rows) const {
  using VarId = autograd::Tape::VarId;
  const Tensor& input = tape.value(embedded_rows);
  const std::size_t seq_len = input.rows;
  if (seq_len == 0) {
    throw Error(ErrorKind::Validation, "empty input sequence");
  }
  if (seq_len > config.context_len) {
    std::ostringstream msg;
    msg << "sequence length " << seq_len << " exceeds context "
        << config.context_len;
    throw Error(ErrorKind::Validation, msg.str());
  }
  const std::size_t e = config.embed_dim;
  const std::size_t head_dim = e / config.n_heads;
  const double attn_scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  Tensor positions(seq_len, e);
  for (std::size_t r = 0; r < seq_len; ++r) {
    for (std::size_t c = 0; c < e; ++c) {
      positions.at(r, c) = position_embedding.at(r, c);
    }
  }
  VarId x = tape.add(embedded_rows, tape.constant(std::move(positions)));

  for (const Block& block : blocks) {
    // Attention sublayer.
    VarId normed = tape.rmsnorm_rows(x, tape.constant(block.attn_norm_gain));
    VarId q = tape.matmul(normed, tape.constant(block.wq));
    VarId k = tape.matmul(normed, tape.constant(block.wk));
    VarId v = tape.matmul(normed, tape.constant(block.wv));
    std::vector<VarId> head_outputs;
    head_outputs.reserve(config.n_heads);
    for (std::size_t h = 0; h < config.n_heads; ++h) {
      const std::size_t c0 = h * head_dim;
      const std::size_t c1 = c0 + head_dim;
      VarId qh = tape.col_slice(q, c0, c1);
      VarId kh = tape.col_slice(k, c0, c1);
      VarId vh = tape.col_slice(v, c0, c1);
      VarId scores =
          tape.scale(tape.matmul(qh, tape.transpose(kh)), attn_scale);
      VarId weights = tape.causal_softmax_rows(scores);
      head_outputs.push_back(tape.matmul(weights, vh));
    }
    VarId context = tape.concat_cols(head_outputs);
    x = tape.add(x, tape.matmul(context, tape.constant(block.wo)));

    // Feed-forward sublayer.
    VarId ff_in = tape.rmsnorm_rows(x, tape.constant(block.mlp_norm_gain));
    VarId hidden = tape.relu(tape.matmul(ff_in, tape.constant(block.w_up)));
    x = tape.add(x, tape.matmul(hidden, tape.constant(block.w_down)));
  }

  VarId last = tape.row_slice(x, seq_len - 1, seq_len);
  VarId final_normed =
      tape.rmsnorm_rows(last, tape.constant(final_norm_gain));
  return tape.matmul(final_normed, tape.constant(output_projection));
}

std::vector<std::size_t> byte_tokenize(std::string_view text,
                                       std::size_t max_len) {
  std::vector<std::size_t> ids;
  ids.reserve(std::min(text.size(), max_len));
  for (std::size_t i = 0; i < text.size() && i < max_len; ++i) {
    ids.push_back(static_cast<unsigned char>(text[i]));
  }
  return ids;
}

}  // namespace claimworthy
