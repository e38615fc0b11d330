#include "claimworthy/soft_prompt.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "claimworthy/error.hpp"
#include "claimworthy/rng.hpp"

namespace claimworthy {

namespace {

using VarId = autograd::Tape::VarId;
using nlohmann::json;

constexpr double kPrefixInitHalfWidth = 0.1;

void check_context(const TinyLM& lm, std::size_t prefix_len,
                   std::size_t n_tokens) {
  if (prefix_len + n_tokens > lm.config.context_len) {
    std::ostringstream msg;
    msg << "prefix " << prefix_len << " + input " << n_tokens
        << " exceeds context " << lm.config.context_len;
    throw Error(ErrorKind::Validation, msg.str());
  }
}

void adamw_step(SoftPromptState& sp, const Tensor& grad,
                const TrainHyperparams& hp) {
  sp.step += 1;
  const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(sp.step));
  const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(sp.step));
  const double decay = 1.0 - hp.learning_rate * hp.weight_decay;
  for (std::size_t i = 0; i < sp.prefix.data.size(); ++i) {
    const double g = grad.data[i];
    sp.m.data[i] = hp.beta1 * sp.m.data[i] + (1.0 - hp.beta1) * g;
    sp.v.data[i] = hp.beta2 * sp.v.data[i] + (1.0 - hp.beta2) * g * g;
    const double m_hat = sp.m.data[i] / bc1;
    const double v_hat = sp.v.data[i] / bc2;
    // Decoupled weight decay, then the moment-scaled gradient step.
    sp.prefix.data[i] *= decay;
    sp.prefix.data[i] -= hp.learning_rate * m_hat /
                         (std::sqrt(v_hat) + hp.adam_eps);
  }
}

double loss_value_with_prefix(const TinyLM& lm, const Tensor& prefix,
                              const TrainExample& example,
                              const VerbalizerTokens& vt) {
  autograd::Tape tape;
  VarId p = tape.constant(prefix);
  VarId logits = forward_with_prefix(tape, lm, p, example.token_ids);
  VarId loss = classification_loss(tape, logits, example.label, vt);
  return tape.value(loss).at(0, 0);
}

json tensor_to_json(const Tensor& t) {
  return json{{"rows", t.rows}, {"cols", t.cols}, {"data", t.data}};
}

Tensor tensor_from_json(const json& j, const char* what) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") ||
      !j.contains("data") || !j["data"].is_array()) {
    throw Error(ErrorKind::Config,
                std::string("checkpoint: malformed tensor for ") + what);
  }
  Tensor t(j["rows"].get<std::size_t>(), j["cols"].get<std::size_t>());
  const auto& data = j["data"];
  if (data.size() != t.data.size()) {
    std::ostringstream msg;
    msg << "checkpoint: " << what << " holds " << data.size()
        << " values, expected " << t.data.size();
    throw Error(ErrorKind::Config, msg.str());
  }
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    t.data[i] = data[i].get<double>();
  }
  return t;
}

}  // namespace

void TrainHyperparams::validate() const {
  if (learning_rate < 0.0 || !std::isfinite(learning_rate)) {
    throw Error(ErrorKind::Config, "learning rate must be finite and >= 0");
  }
  if (epochs == 0) throw Error(ErrorKind::Config, "epochs must be positive");
  if (batch_size == 0) {
    throw Error(ErrorKind::Config, "batch size must be positive");
  }
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw Error(ErrorKind::Config, "Adam betas must lie in [0, 1)");
  }
  if (weight_decay < 0.0) {
    throw Error(ErrorKind::Config, "weight decay must be >= 0");
  }
  if (adam_eps <= 0.0) {
    throw Error(ErrorKind::Config, "Adam epsilon must be positive");
  }
}

SoftPromptState init_soft_prompt(std::size_t p, std::size_t e,
                                 std::uint32_t seed) {
  if (p == 0 || e == 0) {
    throw Error(ErrorKind::Config, "prefix dimensions must be positive");
  }
  SoftPromptState sp;
  sp.prefix = Tensor(p, e);
  sp.m = Tensor(p, e);
  sp.v = Tensor(p, e);
  rng::Engine engine = rng::make_engine(seed);
  for (double& x : sp.prefix.data) {
    x = -kPrefixInitHalfWidth +
        2.0 * kPrefixInitHalfWidth * rng::unit_real(engine);
  }
  return sp;
}

VarId forward_with_prefix(autograd::Tape& tape, const TinyLM& lm,
                          VarId prefix,
                          std::span<const std::size_t> token_ids) {
  const Tensor& p = tape.value(prefix);
  if (p.cols != lm.config.embed_dim) {
    std::ostringstream msg;
    msg << "prefix width " << p.cols << " does not match embed_dim "
        << lm.config.embed_dim;
    throw Error(ErrorKind::Validation, msg.str());
  }
  check_context(lm, p.rows, token_ids.size());
  if (token_ids.empty()) {
    return lm.forward_final_logits(tape, prefix);
  }
  VarId embedded = tape.constant(lm.embed_tokens(token_ids));
  VarId sequence = tape.concat_rows(prefix, embedded);
  return lm.forward_final_logits(tape, sequence);
}

VarId forward_logits(autograd::Tape& tape, const TinyLM& lm,
                     std::span<const std::size_t> token_ids) {
  if (token_ids.empty()) {
    throw Error(ErrorKind::Validation, "empty input sequence");
  }
  check_context(lm, 0, token_ids.size());
  VarId embedded = tape.constant(lm.embed_tokens(token_ids));
  return lm.forward_final_logits(tape, embedded);
}

VarId classification_loss(autograd::Tape& tape, VarId logits, Label gold,
                          const VerbalizerTokens& vt) {
  const Tensor& values = tape.value(logits);
  if (values.rows != 1 || vt.id_yes >= values.cols ||
      vt.id_no >= values.cols) {
    throw Error(ErrorKind::Validation,
                "verbalizer token ids must index the logit row");
  }
  VarId yes = tape.col_slice(logits, vt.id_yes, vt.id_yes + 1);
  VarId no = tape.col_slice(logits, vt.id_no, vt.id_no + 1);
  std::array<VarId, 2> pair{yes, no};
  VarId two = tape.concat_cols(pair);
  return tape.two_way_cross_entropy(two, gold == Label::Yes ? 0 : 1);
}

Label classify(const Tensor& logits, const VerbalizerTokens& vt) {
  if (logits.rows != 1 || vt.id_yes >= logits.cols ||
      vt.id_no >= logits.cols) {
    throw Error(ErrorKind::Validation,
                "verbalizer token ids must index the logit row");
  }
  return logits.at(0, vt.id_yes) > logits.at(0, vt.id_no) ? Label::Yes
                                                          : Label::No;
}

Label classify_with_prefix(const TinyLM& lm, const SoftPromptState& sp,
                           std::span<const std::size_t> token_ids,
                           const VerbalizerTokens& vt) {
  autograd::Tape tape;
  VarId prefix = tape.constant(sp.prefix);
  VarId logits = forward_with_prefix(tape, lm, prefix, token_ids);
  return classify(tape.value(logits), vt);
}

TrainReport train(const TinyLM& lm, SoftPromptState& sp,
                  std::span<const TrainExample> data,
                  const TrainHyperparams& hp, const VerbalizerTokens& vt) {
  hp.validate();
  if (data.empty()) {
    throw Error(ErrorKind::InsufficientData, "no training examples");
  }
  for (const TrainExample& ex : data) {
    check_context(lm, sp.prefix_len(), ex.token_ids.size());
  }

  TrainReport report;
  report.base_checksum_before = lm.weight_checksum();
  report.trainable_count = sp.trainable_count();
  report.shuffle_seed = hp.shuffle_seed;

  rng::Engine engine = rng::make_engine(hp.shuffle_seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    rng::shuffle(order, engine);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += hp.batch_size) {
      const std::size_t end = std::min(order.size(), start + hp.batch_size);
      Tensor grad_sum(sp.prefix.rows, sp.prefix.cols);
      for (std::size_t i = start; i < end; ++i) {
        const TrainExample& ex = data[order[i]];
        autograd::Tape tape;
        VarId prefix = tape.parameter(sp.prefix);
        VarId logits = forward_with_prefix(tape, lm, prefix, ex.token_ids);
        VarId loss = classification_loss(tape, logits, ex.label, vt);
        const double value = tape.value(loss).at(0, 0);
        if (!std::isfinite(value)) {
          std::ostringstream msg;
          msg << "non-finite loss " << value << " at epoch " << epoch
              << ", optimizer step " << sp.step << ", example "
              << order[i];
          throw Error(ErrorKind::Train, msg.str());
        }
        loss_sum += value;
        tape.backward(loss);
        const Tensor& g = tape.grad(prefix);
        for (std::size_t k = 0; k < grad_sum.data.size(); ++k) {
          grad_sum.data[k] += g.data[k];
        }
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (double& g : grad_sum.data) g *= inv;
      adamw_step(sp, grad_sum, hp);
    }
    report.epoch_mean_losses.push_back(loss_sum /
                                       static_cast<double>(data.size()));
  }

  std::size_t correct = 0;
  for (const TrainExample& ex : data) {
    if (classify_with_prefix(lm, sp, ex.token_ids, vt) == ex.label) {
      ++correct;
    }
  }
  report.final_train_accuracy =
      static_cast<double>(correct) / static_cast<double>(data.size());
  report.base_checksum_after = lm.weight_checksum();
  report.optimizer_steps = sp.step;
  return report;
}

double grad_check(const TinyLM& lm, const SoftPromptState& sp,
                  const TrainExample& example, double epsilon,
                  const VerbalizerTokens& vt, std::uint32_t entry_seed) {
  if (epsilon <= 0.0) {
    throw Error(ErrorKind::Validation, "epsilon must be positive");
  }

  autograd::Tape tape;
  VarId prefix = tape.parameter(sp.prefix);
  VarId logits = forward_with_prefix(tape, lm, prefix, example.token_ids);
  VarId loss = classification_loss(tape, logits, example.label, vt);
  tape.backward(loss);
  const Tensor analytic = tape.grad(prefix);

  const std::size_t total = sp.prefix.data.size();
  const std::size_t n_entries = std::min<std::size_t>(16, total);
  rng::Engine engine = rng::make_engine(entry_seed);

  double max_rel = 0.0;
  for (std::size_t k = 0; k < n_entries; ++k) {
    const std::size_t idx =
        rng::bounded(engine, static_cast<std::uint32_t>(total));
    Tensor perturbed = sp.prefix;
    perturbed.data[idx] += epsilon;
    const double f_plus = loss_value_with_prefix(lm, perturbed, example, vt);
    perturbed.data[idx] -= 2.0 * epsilon;
    const double f_minus = loss_value_with_prefix(lm, perturbed, example, vt);
    const double numeric = (f_plus - f_minus) / (2.0 * epsilon);
    const double a = analytic.data[idx];
    const double denom = std::max(std::fabs(a), std::fabs(numeric));
    if (denom >= 1e-8) {
      max_rel = std::max(max_rel, std::fabs(a - numeric) / denom);
    }
  }
  return max_rel;
}

std::string format_param_ratio(std::size_t trainable, std::size_t total) {
  if (total == 0) {
    throw Error(ErrorKind::Validation, "total parameter count is zero");
  }
  const double percent =
      100.0 * static_cast<double>(trainable) / static_cast<double>(total);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f%%", percent);
  return buf;
}

void save_checkpoint(const std::filesystem::path& path, const TinyLM& lm,
                     const SoftPromptState& sp, const TrainHyperparams& hp,
                     const std::string& template_tag) {
  json j;
  j["version"] = 1;
  j["config"] = {{"vocab_size", lm.config.vocab_size},
                 {"embed_dim", lm.config.embed_dim},
                 {"n_layers", lm.config.n_layers},
                 {"n_heads", lm.config.n_heads},
                 {"context_len", lm.config.context_len},
                 {"seed", lm.config.seed}};
  j["template"] = template_tag;
  j["base_checksum"] = lm.weight_checksum();

  json weights;
  weights["token_embedding"] = tensor_to_json(lm.token_embedding);
  weights["position_embedding"] = tensor_to_json(lm.position_embedding);
  json blocks = json::array();
  for (const TinyLM::Block& block : lm.blocks) {
    blocks.push_back({{"attn_norm_gain", tensor_to_json(block.attn_norm_gain)},
                      {"wq", tensor_to_json(block.wq)},
                      {"wk", tensor_to_json(block.wk)},
                      {"wv", tensor_to_json(block.wv)},
                      {"wo", tensor_to_json(block.wo)},
                      {"mlp_norm_gain", tensor_to_json(block.mlp_norm_gain)},
                      {"w_up", tensor_to_json(block.w_up)},
                      {"w_down", tensor_to_json(block.w_down)}});
  }
  weights["blocks"] = std::move(blocks);
  weights["final_norm_gain"] = tensor_to_json(lm.final_norm_gain);
  weights["output_projection"] = tensor_to_json(lm.output_projection);
  j["weights"] = std::move(weights);

  j["prefix"] = tensor_to_json(sp.prefix);
  j["adam_m"] = tensor_to_json(sp.m);
  j["adam_v"] = tensor_to_json(sp.v);
  j["adam_step"] = sp.step;

  j["hyperparams"] = {{"learning_rate", hp.learning_rate},
                      {"epochs", hp.epochs},
                      {"batch_size", hp.batch_size},
                      {"beta1", hp.beta1},
                      {"beta2", hp.beta2},
                      {"weight_decay", hp.weight_decay},
                      {"adam_eps", hp.adam_eps},
                      {"shuffle_seed", hp.shuffle_seed}};

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorKind::Config,
                "cannot write checkpoint: " + path.string());
  }
  out << j.dump() << '\n';
  out.flush();
  if (!out) {
    throw Error(ErrorKind::Config,
                "checkpoint write failed: " + path.string());
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::Config,
                "cannot open checkpoint: " + path.string());
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, "checkpoint: invalid JSON in " +
                                       path.string() + ": " + e.what());
  }
  if (!j.is_object() || j.value("version", 0) != 1) {
    throw Error(ErrorKind::Config,
                "checkpoint: unsupported version in " + path.string());
  }

  Checkpoint cp;
  try {
    const json& cfg = j.at("config");
    cp.lm.config.vocab_size = cfg.at("vocab_size").get<std::size_t>();
    cp.lm.config.embed_dim = cfg.at("embed_dim").get<std::size_t>();
    cp.lm.config.n_layers = cfg.at("n_layers").get<std::size_t>();
    cp.lm.config.n_heads = cfg.at("n_heads").get<std::size_t>();
    cp.lm.config.context_len = cfg.at("context_len").get<std::size_t>();
    cp.lm.config.seed = cfg.at("seed").get<std::uint32_t>();
    cp.lm.config.validate();

    cp.template_tag = j.at("template").get<std::string>();
    cp.base_checksum = j.at("base_checksum").get<std::string>();

    const json& weights = j.at("weights");
    cp.lm.token_embedding =
        tensor_from_json(weights.at("token_embedding"), "token_embedding");
    cp.lm.position_embedding = tensor_from_json(
        weights.at("position_embedding"), "position_embedding");
    const json& blocks = weights.at("blocks");
    if (!blocks.is_array() || blocks.size() != cp.lm.config.n_layers) {
      throw Error(ErrorKind::Config,
                  "checkpoint: block count does not match config");
    }
    for (const json& b : blocks) {
      TinyLM::Block block;
      block.attn_norm_gain =
          tensor_from_json(b.at("attn_norm_gain"), "attn_norm_gain");
      block.wq = tensor_from_json(b.at("wq"), "wq");
      block.wk = tensor_from_json(b.at("wk"), "wk");
      block.wv = tensor_from_json(b.at("wv"), "wv");
      block.wo = tensor_from_json(b.at("wo"), "wo");
      block.mlp_norm_gain =
          tensor_from_json(b.at("mlp_norm_gain"), "mlp_norm_gain");
      block.w_up = tensor_from_json(b.at("w_up"), "w_up");
      block.w_down = tensor_from_json(b.at("w_down"), "w_down");
      cp.lm.blocks.push_back(std::move(block));
    }
    cp.lm.final_norm_gain =
        tensor_from_json(weights.at("final_norm_gain"), "final_norm_gain");
    cp.lm.output_projection = tensor_from_json(weights.at("output_projection"),
                                               "output_projection");

    cp.sp.prefix = tensor_from_json(j.at("prefix"), "prefix");
    cp.sp.m = tensor_from_json(j.at("adam_m"), "adam_m");
    cp.sp.v = tensor_from_json(j.at("adam_v"), "adam_v");
    cp.sp.step = j.at("adam_step").get<std::size_t>();

    const json& hp = j.at("hyperparams");
    cp.hp.learning_rate = hp.at("learning_rate").get<double>();
    cp.hp.epochs = hp.at("epochs").get<std::size_t>();
    cp.hp.batch_size = hp.at("batch_size").get<std::size_t>();
    cp.hp.beta1 = hp.at("beta1").get<double>();
    cp.hp.beta2 = hp.at("beta2").get<double>();
    cp.hp.weight_decay = hp.at("weight_decay").get<double>();
    cp.hp.adam_eps = hp.at("adam_eps").get<double>();
    cp.hp.shuffle_seed = hp.at("shuffle_seed").get<std::uint32_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, "checkpoint: missing or mistyped field in " +
                                       path.string() + ": " + e.what());
  }

  if (cp.sp.prefix.cols != cp.lm.config.embed_dim) {
    throw Error(ErrorKind::Config,
                "checkpoint: prefix width does not match embed_dim");
  }
  if (!cp.sp.prefix.same_shape(cp.sp.m) || !cp.sp.prefix.same_shape(cp.sp.v)) {
    throw Error(ErrorKind::Config,
                "checkpoint: optimizer buffers do not match prefix shape");
  }
  if (cp.lm.weight_checksum() != cp.base_checksum) {
    throw Error(ErrorKind::Config,
                "checkpoint: weight checksum mismatch in " + path.string());
  }
  return cp;
}

}  // namespace claimworthy
